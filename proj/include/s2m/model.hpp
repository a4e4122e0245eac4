#pragma once

#include "s2m/hand.hpp"
#include "s2m/mlp.hpp"

namespace s2m {

/// Frequency-band positional encoding settings. Coordinates are
/// root-centered and divided by pre_scale before encoding so the sin
/// arguments stay in a useful band; network outputs are per-bone vertex
/// offsets in the same units (multiplied back by pre_scale).
struct PEConfig {
    int bone_bands = 5;    // per bone-endpoint scalar
    int order_bands = 2;   // per one-hot scalar
    double pre_scale = 100.0;
};

/// Writes (sin(2^0 pi x), cos(2^0 pi x), ..., sin(2^{L-1} pi x), cos(...)).
void positional_encode(double x, int bands, double* out);

inline int pe_row_dim(const PEConfig& pe) {
    return 6 * 2 * pe.bone_bands + kNumBones * 2 * pe.order_bands;
}

struct S2MConfig {
    int depth = 3;        // FC layers per axis stack (2..5)
    int hidden = 256;
    int out_width = 100;  // per-bone output slots
    PEConfig pe;
    bool gsd = true;
    double leaky_slope = 0.01;
};

/// The skeleton-to-mesh regressor: a global spatial descriptor MLP plus
/// three axis-wise stacks shared across all 20 bones. Outputs per bone are
/// offsets from the bone midpoint, trimmed to the bone's patch size.
struct S2MModel {
    S2MConfig cfg;
    KinematicTree tree;
    DecompositionSpec spec;
    MLPStack gsd;                  // 63 -> hidden (learnable slopes) -> 100
    std::array<MLPStack, 3> axis;  // oe_dim -> hidden^(depth-1) -> out_width

    int oe_dim() const { return pe_row_dim(cfg.pe) + (cfg.gsd ? gsd.output_dim() : 0); }

    ParamSet params();
};

S2MModel make_s2m_model(const S2MConfig& cfg, const KinematicTree& tree,
                        const DecompositionSpec& spec, uint64_t seed);

struct OECache {
    Mat gsd_in;            // S x 63
    StackCache gsd_cache;
    Mat g;                 // S x 100
};

/// Order encoding for a batch of S skeletons: (S*20) x oe_dim rows. Row
/// s*20+k = [PE(b_k), PE(one_hot_k), g_s].
Mat order_encode_batch(const S2MModel& m, const Skeleton* xs, int S, OECache* cache);
inline Mat order_encode(const S2MModel& m, const Skeleton& x) {
    return order_encode_batch(m, &x, 1, nullptr);
}

struct S2MCache {
    int S = 0;
    OECache oe;
    Mat oe_rows;                       // (S*20) x oe_dim
    std::array<StackCache, 3> ax;
    std::vector<Vec3> midpoints;       // S*20
};

/// Forward for a batch: patches is (S * P) x 3, sample-major.
void s2m_forward_batch(const S2MModel& m, const Skeleton* xs, int S, Mat& patches,
                       S2MCache* cache);

struct S2MOut {
    Mat patches;  // P x 3
    Mat mesh;     // V x 3
};
S2MOut s2m_forward(const S2MModel& m, const Skeleton& x);

struct S2MGrads {
    StackGrads gsd;
    std::array<StackGrads, 3> axis;

    void init(const S2MModel& m);
    void zero();
    void scale_all(double f);
    ParamSet refs(S2MModel& m);
};

/// Backward from patch-space gradients ((S*P) x 3) through trimming, the
/// three axis stacks and the GSD.
void s2m_backward_batch(const S2MModel& m, const S2MCache& cache, const Mat& dPatches,
                        S2MGrads& grads);

/// Mean over patch rows of the Euclidean distance between prediction and
/// ground truth (millimeters). Optionally writes d(loss)/d(pred).
double patch_l2_loss(const Mat& pred, const Mat& gt, Mat* dPred);

/// Convenience: forward + loss against a ground-truth mesh (decomposed
/// through the model's spec).
double stage1_loss(const S2MModel& m, const Skeleton& x, const Mat& v_gt);

/// Parameter / multiply-add counts per skeleton. Each FC layer of shape
/// out x in costs out*in + out MACs (bias additions count); activations add
/// parameters only (learnable slopes), never MACs. Axis stacks run once per
/// bone, the GSD once per skeleton.
long long count_params(const S2MModel& m);
long long count_macs(const S2MModel& m);

/// Counting-only variant used by the ablation table (no allocation).
struct CountConfig {
    int depth = 3;
    int hidden = 256;
    int out_width = 100;
    bool pe = true;
    bool gsd = true;
    int pe_bone_bands = 5;
    int pe_order_bands = 2;
};
long long count_params_for(const CountConfig& c);
long long count_macs_for(const CountConfig& c);

}  // namespace s2m
