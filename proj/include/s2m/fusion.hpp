#pragma once

#include "s2m/model.hpp"
#include "s2m/synth.hpp"

namespace s2m {

/// Multi-view geometry features: per keypoint the concatenation of grid
/// samples across views (NC wide), per bone the concatenation of its parent
/// and child keypoint features (2NC wide).
struct BoneFeatureSet {
    Mat gk;  // 21 x N*C
    Mat gb;  // 20 x 2*N*C
};

/// Projects the reference skeleton into every view, grid-samples the
/// feature maps at the reprojections (heatmap-grid coordinates) and
/// concatenates in rig order. A keypoint behind a camera contributes a zero
/// block for that view.
Mat gather_keypoint_features(const std::vector<FeatureMap>& maps, const Skeleton& xbar,
                             const CameraRig& rig, int heatmap_down);
Mat bone_concat(const Mat& gk, const KinematicTree& tree);  // 20 x 2NC
BoneFeatureSet gather_bone_features(const std::vector<FeatureMap>& maps, const Skeleton& xbar,
                                    const CameraRig& rig, const KinematicTree& tree,
                                    int heatmap_down);

/// The feature infuser: trainable copies of the three axis stacks plus one
/// zero-initialized FC per copied layer and one on the feature input. All
/// zero layers start exactly at zero so the fused forward pass reproduces
/// the locked model bit for bit.
struct MFIParams {
    std::array<MLPStack, 3> copy;
    std::array<std::vector<Layer>, 3> zero;  // [0]: 2NC -> in_1, [j]: out_j -> out_j
};

struct MGFPModel {
    S2MModel locked;  // frozen, including the GSD
    MFIParams mfi;
    int n_views = 4;
    int channels = 128;

    int gb_dim() const { return 2 * n_views * channels; }
    ParamSet trainable_params();
};

MGFPModel make_mgfp(const S2MModel& trained, int n_views, int channels);

struct MFIGrads {
    std::array<StackGrads, 3> copy;
    std::array<std::vector<LayerGrads>, 3> zero;

    void init(const MGFPModel& m);
    void zero_all();
    void scale_all(double f);
    ParamSet refs(MGFPModel& m);
};

struct MFICache {
    struct Axis {
        Mat z0;
        std::vector<Mat> copy_x, copy_z, copy_y;
        std::vector<Mat> lock_x, lock_z;
        Mat e_out;
    };
    Mat oe_rows;
    Mat gb;
    std::array<Axis, 3> ax;
    std::vector<Vec3> midpoints;
};

/// Fused forward for one sample: per bone and axis the zero-FC features are
/// added after each locked layer while a trainable copy chain transports
/// them; output assembled exactly like the locked model.
S2MOut mfi_forward(const MGFPModel& m, const Skeleton& xbar, const Mat& gb, MFICache* cache);

/// Backward from patch gradients into the MFI parameters only; locked
/// parameters receive no gradient and are never touched.
void mfi_backward(const MGFPModel& m, const MFICache& cache, const Mat& dPatches, MFIGrads& g);

struct LossWeights {
    double heatmap = 10.0;
    double skeleton2d = 1.0;
    double vertex2d = 0.1;
    double skeleton3d = 1.0;
    double vertex3d = 1.0;
};

struct Stage2Terms {
    double heatmap = 0.0;    // reported 0 with the oracle heatmap source
    double skeleton2d = 0.0;
    double vertex2d = 0.0;
    double skeleton3d = 0.0;
    double vertex3d = 0.0;
    double total = 0.0;
};

/// Weighted stage-2 loss. L2 norms for skeleton terms, L1 for vertex terms;
/// per-view sums, per-point means. When dMesh is non-null it receives the
/// gradient of the weighted total with respect to the predicted mesh (the
/// skeleton terms are constants for a frozen skeleton estimator).
Stage2Terms stage2_loss(const Mat& pred_mesh, const Skeleton& xbar, const Mat& gt_mesh,
                        const Skeleton& gt_skeleton, const CameraRig& rig, const LossWeights& w,
                        Mat* dMesh);

struct ReconResult {
    Skeleton xbar{};
    Mat patches;
    Mat mesh;
    std::vector<Mat> kp2d;  // per view, 21 x 2 (image px)
};

/// Full image-to-mesh pipeline: soft-argmax per view and channel, DLT
/// triangulation, feature gathering, fused forward. With fuse = false the
/// locked cascade runs instead of the infuser (same skeleton path).
ReconResult reconstruct(const MGFPModel& m, const CameraRig& rig,
                        const std::vector<HeatmapStack>& heatmaps,
                        const std::vector<FeatureMap>& features, double softargmax_temp,
                        int heatmap_down, bool fuse = true);

/// Reduced training sample for stage 2: everything reconstruct-side that
/// does not depend on trainable parameters is precomputed once.
struct FusionSample {
    Skeleton gt_skeleton{};
    Mat gt_mesh;
    Skeleton xbar{};
    Mat gk;  // 21 x N*C
    CameraRig rig;
};
FusionSample prepare_fusion_sample(const SyntheticSample& s, const SynthConfig& cfg);

/// Counts under the same conventions as the locked model: locked chain,
/// copy chain and every zero-FC application per bone, GSD once.
long long count_params_mgfp(const MGFPModel& m);
long long count_macs_mgfp(const MGFPModel& m);

}  // namespace s2m
