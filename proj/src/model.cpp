#include "s2m/model.hpp"

#include <cmath>

namespace s2m {

void positional_encode(double x, int bands, double* out) {
    double freq = M_PI;
    for (int l = 0; l < bands; ++l) {
        out[2 * l] = std::sin(freq * x);
        out[2 * l + 1] = std::cos(freq * x);
        freq *= 2.0;
    }
}

ParamSet S2MModel::params() {
    ParamSet ps;
    if (cfg.gsd) collect_params(gsd, "gsd", ps);
    collect_params(axis[0], "axis_x", ps);
    collect_params(axis[1], "axis_y", ps);
    collect_params(axis[2], "axis_z", ps);
    return ps;
}

S2MModel make_s2m_model(const S2MConfig& cfg, const KinematicTree& tree,
                        const DecompositionSpec& spec, uint64_t seed) {
    if (cfg.depth < 2 || cfg.depth > 5)
        throw ConfigError("make_s2m_model: depth must be in [2, 5]");
    for (int k = 0; k < kNumBones; ++k)
        if (spec.per_bone_counts[k] > cfg.out_width)
            throw TemplateError("make_s2m_model: patch " + std::to_string(k) +
                                " exceeds output width");

    S2MModel m;
    m.cfg = cfg;
    m.tree = tree;
    m.spec = spec;

    {
        Rng rng(Rng::derive(seed, 1));
        m.gsd = make_stack({3 * kNumJoints, cfg.hidden, 100}, rng, cfg.leaky_slope);
        // hidden activation carries a learnable slope per channel
        m.gsd.layers[0].act = Act::PReLU;
        m.gsd.layers[0].slopes.assign(cfg.hidden, cfg.leaky_slope);
    }

    std::vector<int> dims;
    dims.push_back(pe_row_dim(cfg.pe) + (cfg.gsd ? 100 : 0));
    for (int j = 0; j < cfg.depth - 1; ++j) dims.push_back(cfg.hidden);
    dims.push_back(cfg.out_width);
    for (int i = 0; i < 3; ++i) {
        Rng rng(Rng::derive(seed, 2 + i));
        m.axis[i] = make_stack(dims, rng, cfg.leaky_slope);
    }
    return m;
}

Mat order_encode_batch(const S2MModel& m, const Skeleton* xs, int S, OECache* cache) {
    const PEConfig& pe = m.cfg.pe;
    const int row_dim = m.oe_dim();
    const int pe_dim = pe_row_dim(pe);
    Mat rows(S * kNumBones, row_dim);

    Mat gsd_in(S, 3 * kNumJoints);
    for (int s = 0; s < S; ++s) {
        const Skeleton& X = xs[s];
        for (int j = 0; j < kNumJoints; ++j)
            for (int c = 0; c < 3; ++c)
                gsd_in(s, 3 * j + c) = (X[j][c] - X[0][c]) / pe.pre_scale;
    }

    Mat g;
    if (m.cfg.gsd) {
        StackCache local;
        StackCache* gc = cache ? &cache->gsd_cache : &local;
        stack_forward(m.gsd, gsd_in, g, gc);
    }
    if (cache) {
        cache->gsd_in = gsd_in;
        cache->g = g;
    }

    for (int s = 0; s < S; ++s) {
        const Skeleton& X = xs[s];
        for (int k = 0; k < kNumBones; ++k) {
            double* row = rows.row(s * kNumBones + k);
            int off = 0;
            const auto [pj, cj] = m.tree.bones[k];
            const double ends[6] = {
                (X[pj][0] - X[0][0]) / pe.pre_scale, (X[pj][1] - X[0][1]) / pe.pre_scale,
                (X[pj][2] - X[0][2]) / pe.pre_scale, (X[cj][0] - X[0][0]) / pe.pre_scale,
                (X[cj][1] - X[0][1]) / pe.pre_scale, (X[cj][2] - X[0][2]) / pe.pre_scale};
            for (double e : ends) {
                positional_encode(e, pe.bone_bands, row + off);
                off += 2 * pe.bone_bands;
            }
            for (int o = 0; o < kNumBones; ++o) {
                positional_encode(o == k ? 1.0 : 0.0, pe.order_bands, row + off);
                off += 2 * pe.order_bands;
            }
            if (m.cfg.gsd) std::copy(g.row(s), g.row(s) + g.cols, row + pe_dim);
        }
    }
    return rows;
}

void s2m_forward_batch(const S2MModel& m, const Skeleton* xs, int S, Mat& patches,
                       S2MCache* cache) {
    Mat oe_rows = order_encode_batch(m, xs, S, cache ? &cache->oe : nullptr);

    std::array<Mat, 3> y;
    for (int i = 0; i < 3; ++i)
        stack_forward(m.axis[i], oe_rows, y[i], cache ? &cache->ax[i] : nullptr);

    const int P = m.spec.p_count;
    patches.resize(S * P, 3);
    std::vector<Vec3> midpoints(static_cast<size_t>(S) * kNumBones);
    for (int s = 0; s < S; ++s) {
        const Skeleton& X = xs[s];
        for (int k = 0; k < kNumBones; ++k) {
            const auto [pj, cj] = m.tree.bones[k];
            const Vec3 mid = scale(add(X[pj], X[cj]), 0.5);
            midpoints[static_cast<size_t>(s) * kNumBones + k] = mid;
            const int r = s * kNumBones + k;
            const int off = m.spec.bone_row_offset[k];
            for (int j = 0; j < m.spec.per_bone_counts[k]; ++j) {
                double* out = patches.row(s * P + off + j);
                out[0] = mid[0] + m.cfg.pe.pre_scale * y[0](r, j);
                out[1] = mid[1] + m.cfg.pe.pre_scale * y[1](r, j);
                out[2] = mid[2] + m.cfg.pe.pre_scale * y[2](r, j);
            }
        }
    }
    if (cache) {
        cache->S = S;
        cache->oe_rows = std::move(oe_rows);
        cache->midpoints = std::move(midpoints);
    }
}

S2MOut s2m_forward(const S2MModel& m, const Skeleton& x) {
    S2MOut out;
    s2m_forward_batch(m, &x, 1, out.patches, nullptr);
    out.mesh = recover_mesh(m.spec, out.patches);
    return out;
}

void S2MGrads::init(const S2MModel& m) {
    gsd.init(m.gsd);
    for (int i = 0; i < 3; ++i) axis[i].init(m.axis[i]);
}

void S2MGrads::zero() {
    gsd.zero();
    for (auto& a : axis) a.zero();
}

void S2MGrads::scale_all(double f) {
    gsd.scale_all(f);
    for (auto& a : axis) a.scale_all(f);
}

ParamSet S2MGrads::refs(S2MModel& m) {
    ParamSet ps;
    if (m.cfg.gsd) collect_grads(gsd, m.gsd, "gsd", ps);
    collect_grads(axis[0], m.axis[0], "axis_x", ps);
    collect_grads(axis[1], m.axis[1], "axis_y", ps);
    collect_grads(axis[2], m.axis[2], "axis_z", ps);
    return ps;
}

void s2m_backward_batch(const S2MModel& m, const S2MCache& cache, const Mat& dPatches,
                        S2MGrads& grads) {
    const int S = cache.S;
    const int P = m.spec.p_count;
    if (dPatches.rows != S * P || dPatches.cols != 3)
        throw DimensionError("s2m_backward_batch: dPatches shape mismatch");

    const int out_w = m.cfg.out_width;
    Mat dOE(S * kNumBones, m.oe_dim(), 0.0);
    for (int i = 0; i < 3; ++i) {
        Mat dY(S * kNumBones, out_w, 0.0);
        for (int s = 0; s < S; ++s)
            for (int k = 0; k < kNumBones; ++k) {
                const int off = m.spec.bone_row_offset[k];
                for (int j = 0; j < m.spec.per_bone_counts[k]; ++j)
                    dY(s * kNumBones + k, j) =
                        m.cfg.pe.pre_scale * dPatches(s * P + off + j, i);
            }
        stack_backward(m.axis[i], cache.ax[i], dY, grads.axis[i], &dOE);
    }

    if (m.cfg.gsd) {
        const int pe_dim = pe_row_dim(m.cfg.pe);
        Mat dG(S, 100, 0.0);
        for (int s = 0; s < S; ++s)
            for (int k = 0; k < kNumBones; ++k)
                axpy(1.0, dOE.row(s * kNumBones + k) + pe_dim, dG.row(s), 100);
        stack_backward(m.gsd, cache.oe.gsd_cache, dG, grads.gsd, nullptr);
    }
}

double patch_l2_loss(const Mat& pred, const Mat& gt, Mat* dPred) {
    if (!pred.same_shape(gt)) throw DimensionError("patch_l2_loss: shape mismatch");
    if (dPred && !dPred->same_shape(pred)) dPred->resize(pred.rows, pred.cols);
    const double inv_n = 1.0 / pred.rows;
    double total = 0.0;
    for (int r = 0; r < pred.rows; ++r) {
        const double* p = pred.row(r);
        const double* g = gt.row(r);
        double d2 = 0.0;
        for (int c = 0; c < pred.cols; ++c) {
            const double d = p[c] - g[c];
            d2 += d * d;
        }
        const double dist = std::sqrt(d2);
        total += dist;
        if (dPred) {
            double* dp = dPred->row(r);
            const double f = dist > 0.0 ? inv_n / dist : 0.0;
            for (int c = 0; c < pred.cols; ++c) dp[c] = f * (p[c] - g[c]);
        }
    }
    return total * inv_n;
}

double stage1_loss(const S2MModel& m, const Skeleton& x, const Mat& v_gt) {
    Mat patches;
    s2m_forward_batch(m, &x, 1, patches, nullptr);
    const Mat gt_patches = decompose_mesh(m.spec, v_gt);
    return patch_l2_loss(patches, gt_patches, nullptr);
}

// ---- counting ----

static long long fc_cost(int out, int in) { return static_cast<long long>(out) * in + out; }

long long count_params_for(const CountConfig& c) {
    const int pe_dim = c.pe ? (6 * 2 * c.pe_bone_bands + kNumBones * 2 * c.pe_order_bands) : 26;
    const int in_dim = pe_dim + (c.gsd ? 100 : 0);
    long long axis = fc_cost(c.hidden, in_dim);
    for (int j = 0; j < c.depth - 2; ++j) axis += fc_cost(c.hidden, c.hidden);
    axis += fc_cost(c.out_width, c.hidden);
    long long total = 3 * axis;
    if (c.gsd) total += fc_cost(c.hidden, 3 * kNumJoints) + c.hidden + fc_cost(100, c.hidden);
    return total;
}

long long count_macs_for(const CountConfig& c) {
    const int pe_dim = c.pe ? (6 * 2 * c.pe_bone_bands + kNumBones * 2 * c.pe_order_bands) : 26;
    const int in_dim = pe_dim + (c.gsd ? 100 : 0);
    long long axis = fc_cost(c.hidden, in_dim);
    for (int j = 0; j < c.depth - 2; ++j) axis += fc_cost(c.hidden, c.hidden);
    axis += fc_cost(c.out_width, c.hidden);
    long long total = kNumBones * 3 * axis;
    if (c.gsd) total += fc_cost(c.hidden, 3 * kNumJoints) + fc_cost(100, c.hidden);
    return total;
}

long long count_params(const S2MModel& m) {
    long long total = 0;
    if (m.cfg.gsd)
        for (const auto& l : m.gsd.layers) total += static_cast<long long>(l.param_count());
    for (const auto& st : m.axis)
        for (const auto& l : st.layers) total += static_cast<long long>(l.param_count());
    return total;
}

long long count_macs(const S2MModel& m) {
    long long axis = 0;
    for (const auto& st : m.axis)
        for (const auto& l : st.layers) axis += fc_cost(l.out(), l.in());
    long long total = kNumBones * axis;
    if (m.cfg.gsd)
        for (const auto& l : m.gsd.layers) total += fc_cost(l.out(), l.in());
    return total;
}

}  // namespace s2m
