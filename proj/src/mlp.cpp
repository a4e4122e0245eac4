#include "s2m/mlp.hpp"

#include <cmath>

namespace s2m {

void StackGrads::init(const MLPStack& s) {
    layers.resize(s.layers.size());
    for (size_t j = 0; j < s.layers.size(); ++j) {
        const Layer& l = s.layers[j];
        layers[j].dW.resize(l.out(), l.in());
        layers[j].db.assign(l.out(), 0.0);
        if (l.act == Act::PReLU) layers[j].dslopes.assign(l.out(), 0.0);
    }
}

void StackGrads::zero() {
    for (auto& g : layers) {
        g.dW.zero();
        std::fill(g.db.begin(), g.db.end(), 0.0);
        std::fill(g.dslopes.begin(), g.dslopes.end(), 0.0);
    }
}

void StackGrads::scale_all(double f) {
    for (auto& g : layers) {
        for (auto& v : g.dW.a) v *= f;
        for (auto& v : g.db) v *= f;
        for (auto& v : g.dslopes) v *= f;
    }
}

void StackGrads::add(const StackGrads& o) {
    for (size_t j = 0; j < layers.size(); ++j) {
        for (size_t i = 0; i < layers[j].dW.a.size(); ++i) layers[j].dW.a[i] += o.layers[j].dW.a[i];
        for (size_t i = 0; i < layers[j].db.size(); ++i) layers[j].db[i] += o.layers[j].db[i];
        for (size_t i = 0; i < layers[j].dslopes.size(); ++i)
            layers[j].dslopes[i] += o.layers[j].dslopes[i];
    }
}

void collect_params(MLPStack& s, const std::string& prefix, ParamSet& out) {
    for (size_t j = 0; j < s.layers.size(); ++j) {
        Layer& l = s.layers[j];
        const std::string base = prefix + ".layer" + std::to_string(j);
        out.push_back({base + ".w", l.W.a.data(), l.W.a.size()});
        out.push_back({base + ".b", l.b.data(), l.b.size()});
        if (l.act == Act::PReLU) out.push_back({base + ".slopes", l.slopes.data(), l.slopes.size()});
    }
}

void collect_grads(StackGrads& g, const MLPStack& s, const std::string& prefix, ParamSet& out) {
    for (size_t j = 0; j < s.layers.size(); ++j) {
        LayerGrads& lg = g.layers[j];
        const std::string base = prefix + ".layer" + std::to_string(j);
        out.push_back({base + ".w", lg.dW.a.data(), lg.dW.a.size()});
        out.push_back({base + ".b", lg.db.data(), lg.db.size()});
        if (s.layers[j].act == Act::PReLU)
            out.push_back({base + ".slopes", lg.dslopes.data(), lg.dslopes.size()});
    }
}

size_t param_set_size(const ParamSet& ps) {
    size_t n = 0;
    for (const auto& r : ps) n += r.n;
    return n;
}

void apply_activation(const Layer& l, const Mat& Z, Mat& Y) {
    if (!Y.same_shape(Z)) Y.resize(Z.rows, Z.cols);
    switch (l.act) {
        case Act::Identity:
            Y.a = Z.a;
            break;
        case Act::LeakyReLU:
            for (size_t i = 0; i < Z.a.size(); ++i) {
                const double z = Z.a[i];
                Y.a[i] = z < 0.0 ? l.slope * z : z;
            }
            break;
        case Act::PReLU:
            for (int r = 0; r < Z.rows; ++r) {
                const double* z = Z.row(r);
                double* y = Y.row(r);
                for (int c = 0; c < Z.cols; ++c) y[c] = z[c] < 0.0 ? l.slopes[c] * z[c] : z[c];
            }
            break;
    }
}

static void activation_backward(const Layer& l, const Mat& Z, const Mat& dY, Mat& dZ,
                                LayerGrads* g);

void layer_forward(const Layer& l, const Mat& X, Mat& Z, Mat& Y) {
    affine_forward(X, l.W, l.b, Z);
    apply_activation(l, Z, Y);
}

void layer_backward(const Layer& l, const Mat& X, const Mat& Z, const Mat& dY, LayerGrads* g,
                    Mat* dX) {
    Mat dZ;
    if (l.act == Act::Identity) {
        dZ = dY;
    } else {
        activation_backward(l, Z, dY, dZ, g);
    }
    if (g) {
        affine_backward(X, l.W, dZ, dX, g->dW, g->db);
    } else {
        // frozen layer: propagate input gradient only
        if (dX) {
            for (int r = 0; r < dZ.rows; ++r) {
                const double* dz = dZ.row(r);
                double* dx = dX->row(r);
                for (int o = 0; o < l.out(); ++o)
                    if (dz[o] != 0.0) axpy(dz[o], l.W.row(o), dx, l.in());
            }
        }
    }
}

void stack_forward(const MLPStack& s, const Mat& X, Mat& Y, StackCache* cache) {
    if (s.layers.empty()) throw DimensionError("stack_forward: empty stack");
    if (X.cols != s.input_dim()) throw DimensionError("stack_forward: input dim mismatch");

    if (cache) {
        cache->batch = X.rows;
        cache->x.assign(s.layers.size() + 1, Mat());
        cache->z.assign(s.layers.size(), Mat());
        cache->x[0] = X;
    }

    Mat cur = X;
    Mat z;
    for (size_t j = 0; j < s.layers.size(); ++j) {
        const Layer& l = s.layers[j];
        affine_forward(cur, l.W, l.b, z);
        apply_activation(l, z, cur);
        if (cache) {
            cache->z[j] = z;
            cache->x[j + 1] = cur;
        }
    }
    Y = std::move(cur);
}

static void activation_backward(const Layer& l, const Mat& Z, const Mat& dY, Mat& dZ,
                                LayerGrads* g) {
    dZ.resize(Z.rows, Z.cols);
    switch (l.act) {
        case Act::Identity:
            dZ.a = dY.a;
            break;
        case Act::LeakyReLU:
            for (size_t i = 0; i < Z.a.size(); ++i)
                dZ.a[i] = Z.a[i] < 0.0 ? l.slope * dY.a[i] : dY.a[i];
            break;
        case Act::PReLU:
            for (int r = 0; r < Z.rows; ++r) {
                const double* z = Z.row(r);
                const double* dy = dY.row(r);
                double* dz = dZ.row(r);
                for (int c = 0; c < Z.cols; ++c) {
                    if (z[c] < 0.0) {
                        dz[c] = l.slopes[c] * dy[c];
                        if (g) g->dslopes[c] += z[c] * dy[c];
                    } else {
                        dz[c] = dy[c];
                    }
                }
            }
            break;
    }
}

void stack_backward(const MLPStack& s, const StackCache& cache, const Mat& dY, StackGrads& g,
                    Mat* dX) {
    const int depth = s.depth();
    if (static_cast<int>(cache.z.size()) != depth || static_cast<int>(cache.x.size()) != depth + 1)
        throw DimensionError("stack_backward: cache does not match stack depth");
    if (dY.rows != cache.batch || dY.cols != s.output_dim())
        throw DimensionError("stack_backward: dY shape mismatch");
    if (static_cast<int>(g.layers.size()) != depth)
        throw DimensionError("stack_backward: grads not initialized for this stack");
    for (int j = 0; j < depth; ++j)
        if (cache.x[j].cols != s.layers[j].in())
            throw DimensionError("stack_backward: cache dims do not match stack");

    Mat dcur = dY;
    Mat dz;
    for (int j = depth - 1; j >= 0; --j) {
        const Layer& l = s.layers[j];
        activation_backward(l, cache.z[j], dcur, dz, &g.layers[j]);
        if (j > 0) {
            Mat dprev(cache.batch, l.in(), 0.0);
            affine_backward(cache.x[j], l.W, dz, &dprev, g.layers[j].dW, g.layers[j].db);
            dcur = std::move(dprev);
        } else {
            affine_backward(cache.x[0], l.W, dz, dX, g.layers[j].dW, g.layers[j].db);
        }
    }
}

Vec mlp_forward(const MLPStack& s, const Vec& x, StackCache* cache) {
    if (static_cast<int>(x.size()) != s.input_dim())
        throw DimensionError("mlp_forward: input dim mismatch");
    Mat X(1, static_cast<int>(x.size()));
    std::copy(x.begin(), x.end(), X.row(0));
    Mat Y;
    stack_forward(s, X, Y, cache);
    return Vec(Y.row(0), Y.row(0) + Y.cols);
}

Vec mlp_backward(const MLPStack& s, const StackCache& cache, const Vec& dy, StackGrads& g) {
    if (static_cast<int>(dy.size()) != s.output_dim())
        throw DimensionError("mlp_backward: dy dim mismatch");
    if (cache.batch != 1) throw DimensionError("mlp_backward: cache is not from a single-vector forward");
    Mat dY(1, static_cast<int>(dy.size()));
    std::copy(dy.begin(), dy.end(), dY.row(0));
    Mat dX(1, s.input_dim(), 0.0);
    stack_backward(s, cache, dY, g, &dX);
    return Vec(dX.row(0), dX.row(0) + dX.cols);
}

MLPStack make_stack(const std::vector<int>& dims, Rng& rng, double slope) {
    if (dims.size() < 2) throw DimensionError("make_stack: need at least input and output dims");
    MLPStack s;
    for (size_t j = 0; j + 1 < dims.size(); ++j) {
        Layer l;
        l.W.resize(dims[j + 1], dims[j]);
        l.b.assign(dims[j + 1], 0.0);
        const double bound = std::sqrt(1.0 / dims[j]);
        for (auto& w : l.W.a) w = rng.uniform(-bound, bound);
        for (auto& b : l.b) b = rng.uniform(-bound, bound);
        l.act = (j + 2 < dims.size()) ? Act::LeakyReLU : Act::Identity;
        l.slope = slope;
        s.layers.push_back(std::move(l));
    }
    return s;
}

MLPStack make_zero_stack(int in, int out) {
    MLPStack s;
    Layer l;
    l.W.resize(out, in);
    l.b.assign(out, 0.0);
    l.act = Act::Identity;
    s.layers.push_back(std::move(l));
    return s;
}

}  // namespace s2m
