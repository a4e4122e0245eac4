#pragma once

#include "s2m/model.hpp"
#include "s2m/train.hpp"

namespace s2m {

enum class ErrorMode { Raw, RootRelative };

/// Mean Euclidean distance between matched point sets (rows). RootRelative
/// subtracts the root offset (row 0 of each set) from the prediction first.
double position_error(const Mat& pred, const Mat& gt, ErrorMode mode);

/// Root-relative error with explicit roots (used for meshes, whose root is
/// the predicted/ground-truth wrist joint rather than a mesh row).
double position_error_rooted(const Mat& pred, const Mat& gt, const Vec3& pred_root,
                             const Vec3& gt_root);

Mat skeleton_to_mat(const Skeleton& s);

struct ProcrustesResult {
    Mat aligned;      // pred mapped onto gt
    double error_mm;  // mean distance after alignment
    double scale;     // scale of the pred -> gt similarity
    Mat rotation;     // 3x3 proper rotation
    Vec3 translation;
};

/// Optimal similarity alignment (rotation via SVD of the cross-covariance
/// with a reflection guard, uniform scale, translation). Throws
/// DegenerateError for fewer than 3 or collinear points.
ProcrustesResult procrustes_align(const Mat& pred, const Mat& gt);

struct MetricReport {
    double mpjpe = 0.0, mpvpe = 0.0;
    double rr_j = 0.0, rr_v = 0.0;
    double pa_j = 0.0, pa_v = 0.0;
    int samples = 0;
};

/// Per-sample metric row; aggregate by averaging.
MetricReport sample_metrics(const Skeleton& pred_skel, const Mat& pred_mesh,
                            const Skeleton& gt_skel, const Mat& gt_mesh);
MetricReport aggregate(const std::vector<MetricReport>& rows);

struct SweepRow {
    double sigma_sq = 0.0;
    double ref_mpjpe = 0.0;  // error injected into the input skeletons
    double mpvpe = 0.0;      // resulting mesh error
};

/// Noise-robustness sweep: corrupt ground-truth skeletons with N(0, sigma^2)
/// per coordinate, run the skeleton-to-mesh model, report input Ref-MPJPE
/// and output MPVPE per variance level.
std::vector<SweepRow> robustness_sweep(const S2MModel& model, const std::vector<PairSample>& data,
                                       const std::vector<double>& sigma_sqs, uint64_t seed);

}  // namespace s2m
