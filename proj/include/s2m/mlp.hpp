#pragma once

#include <string>
#include <vector>

#include "s2m/linalg.hpp"

namespace s2m {

enum class Act { Identity, LeakyReLU, PReLU };

/// One fully-connected layer: y = act(W x + b). W is out x in.
/// PReLU carries a learnable slope per output channel; LeakyReLU a fixed one.
struct Layer {
    Mat W;
    Vec b;
    Act act = Act::Identity;
    double slope = 0.01;
    Vec slopes;  // PReLU only, size out()

    int in() const { return W.cols; }
    int out() const { return W.rows; }
    size_t param_count() const {
        return W.size() + b.size() + (act == Act::PReLU ? slopes.size() : 0);
    }
};

struct MLPStack {
    std::vector<Layer> layers;

    int input_dim() const { return layers.empty() ? 0 : layers.front().in(); }
    int output_dim() const { return layers.empty() ? 0 : layers.back().out(); }
    int depth() const { return static_cast<int>(layers.size()); }
    size_t param_count() const {
        size_t n = 0;
        for (const auto& l : layers) n += l.param_count();
        return n;
    }
};

/// Cache from a batched forward pass: the input of each layer plus its
/// pre-activations, enough to run the exact backward pass.
struct StackCache {
    std::vector<Mat> x;  // x[j] = input to layer j; x[depth] = final output
    std::vector<Mat> z;  // z[j] = pre-activation of layer j
    int batch = 0;
};

struct LayerGrads {
    Mat dW;
    Vec db;
    Vec dslopes;  // PReLU only
};

struct StackGrads {
    std::vector<LayerGrads> layers;

    void init(const MLPStack& s);
    void zero();
    void scale_all(double f);
    void add(const StackGrads& o);
};

/// Named view of a flat parameter buffer; Adam and the gradient checker
/// operate on lists of these.
struct ParamRef {
    std::string name;
    double* p = nullptr;
    size_t n = 0;
};
using ParamSet = std::vector<ParamRef>;

void collect_params(MLPStack& s, const std::string& prefix, ParamSet& out);
void collect_grads(StackGrads& g, const MLPStack& s, const std::string& prefix, ParamSet& out);
size_t param_set_size(const ParamSet& ps);

/// Batched forward through the stack. X: B x input_dim. If cache is non-null
/// it is filled for a later backward call.
void stack_forward(const MLPStack& s, const Mat& X, Mat& Y, StackCache* cache);

/// Backward through the stack from dY (B x output_dim). Parameter gradients
/// are accumulated into g; if dX is non-null the input gradient is
/// accumulated there (dX must be pre-sized B x input_dim).
void stack_backward(const MLPStack& s, const StackCache& cache, const Mat& dY, StackGrads& g,
                    Mat* dX);

/// Single-vector convenience wrappers.
Vec mlp_forward(const MLPStack& s, const Vec& x, StackCache* cache = nullptr);
Vec mlp_backward(const MLPStack& s, const StackCache& cache, const Vec& dy, StackGrads& g);

/// Stack builder: dims = {in, h1, ..., out}; LeakyReLU(slope) on all layers
/// except the last (Identity). Weights and biases uniform in
/// +-sqrt(1/fan_in) from the given RNG.
MLPStack make_stack(const std::vector<int>& dims, Rng& rng, double slope = 0.01);

/// A stack whose weights and biases are all exactly zero (no activation).
MLPStack make_zero_stack(int in, int out);

void apply_activation(const Layer& l, const Mat& Z, Mat& Y);

/// Single-layer forward: Z = X W^T + b (cached pre-activation), Y = act(Z).
void layer_forward(const Layer& l, const Mat& X, Mat& Z, Mat& Y);

/// Single-layer backward. Pass g = nullptr to skip parameter gradients
/// (frozen layers); pass dX = nullptr when the input gradient is not needed.
/// dX must be pre-sized (accumulated into).
void layer_backward(const Layer& l, const Mat& X, const Mat& Z, const Mat& dY, LayerGrads* g,
                    Mat* dX);

}  // namespace s2m
