#include "s2m/metrics.hpp"

#include <cmath>

#include "s2m/svd.hpp"

namespace s2m {

Mat skeleton_to_mat(const Skeleton& s) {
    Mat m(kNumJoints, 3);
    for (int j = 0; j < kNumJoints; ++j)
        for (int c = 0; c < 3; ++c) m(j, c) = s[j][c];
    return m;
}

double position_error(const Mat& pred, const Mat& gt, ErrorMode mode) {
    if (!pred.same_shape(gt)) throw DimensionError("position_error: point counts differ");
    Vec3 off = {0, 0, 0};
    if (mode == ErrorMode::RootRelative)
        off = {pred(0, 0) - gt(0, 0), pred(0, 1) - gt(0, 1), pred(0, 2) - gt(0, 2)};
    double total = 0.0;
    for (int r = 0; r < pred.rows; ++r) {
        double d2 = 0.0;
        for (int c = 0; c < 3; ++c) {
            const double d = pred(r, c) - off[c] - gt(r, c);
            d2 += d * d;
        }
        total += std::sqrt(d2);
    }
    return total / pred.rows;
}

double position_error_rooted(const Mat& pred, const Mat& gt, const Vec3& pred_root,
                             const Vec3& gt_root) {
    if (!pred.same_shape(gt)) throw DimensionError("position_error_rooted: point counts differ");
    const Vec3 off = sub(pred_root, gt_root);
    double total = 0.0;
    for (int r = 0; r < pred.rows; ++r) {
        double d2 = 0.0;
        for (int c = 0; c < 3; ++c) {
            const double d = pred(r, c) - off[c] - gt(r, c);
            d2 += d * d;
        }
        total += std::sqrt(d2);
    }
    return total / pred.rows;
}

ProcrustesResult procrustes_align(const Mat& pred, const Mat& gt) {
    if (!pred.same_shape(gt) || pred.cols != 3)
        throw DimensionError("procrustes_align: need matching n x 3 sets");
    const int n = pred.rows;
    if (n < 3) throw DegenerateError("procrustes_align: need at least 3 points");

    Vec3 cp = {0, 0, 0}, cg = {0, 0, 0};
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < 3; ++c) {
            cp[c] += pred(r, c) / n;
            cg[c] += gt(r, c) / n;
        }

    // cross covariance H = sum (pred - cp)(gt - cg)^T and pred variance
    Mat H(3, 3, 0.0);
    double var_p = 0.0;
    for (int r = 0; r < n; ++r) {
        const Vec3 x = {pred(r, 0) - cp[0], pred(r, 1) - cp[1], pred(r, 2) - cp[2]};
        const Vec3 y = {gt(r, 0) - cg[0], gt(r, 1) - cg[1], gt(r, 2) - cg[2]};
        var_p += dot3(x, x);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) H(i, j) += x[i] * y[j];
    }
    if (var_p < 1e-12) throw DegenerateError("procrustes_align: degenerate prediction set");

    Mat U, V;
    Vec3 sig;
    svd3(H, U, sig, V);
    if (sig[1] < 1e-9 * std::max(1.0, sig[0]))
        throw DegenerateError("procrustes_align: collinear point set");

    // R maps pred-centered onto gt-centered: R = V D U^T, D guards reflection
    Mat R = matmul(V, transpose(U));
    double det = R(0, 0) * (R(1, 1) * R(2, 2) - R(1, 2) * R(2, 1)) -
                 R(0, 1) * (R(1, 0) * R(2, 2) - R(1, 2) * R(2, 0)) +
                 R(0, 2) * (R(1, 0) * R(2, 1) - R(1, 1) * R(2, 0));
    double d3 = 1.0;
    if (det < 0.0) {
        d3 = -1.0;
        Mat D(3, 3);
        D(0, 0) = 1;
        D(1, 1) = 1;
        D(2, 2) = -1;
        R = matmul(V, matmul(D, transpose(U)));
    }
    const double trace_ds = sig[0] + sig[1] + d3 * sig[2];

    ProcrustesResult res;
    res.scale = trace_ds / var_p;
    res.rotation = R;
    res.translation = sub(cg, rotate(R, s2m::scale(cp, res.scale)));

    res.aligned.resize(n, 3);
    double err = 0.0;
    for (int r = 0; r < n; ++r) {
        const Vec3 x = {pred(r, 0), pred(r, 1), pred(r, 2)};
        const Vec3 y = add(rotate(R, s2m::scale(x, res.scale)), res.translation);
        double d2 = 0.0;
        for (int c = 0; c < 3; ++c) {
            res.aligned(r, c) = y[c];
            const double d = y[c] - gt(r, c);
            d2 += d * d;
        }
        err += std::sqrt(d2);
    }
    res.error_mm = err / n;
    return res;
}

MetricReport sample_metrics(const Skeleton& pred_skel, const Mat& pred_mesh,
                            const Skeleton& gt_skel, const Mat& gt_mesh) {
    MetricReport r;
    r.samples = 1;
    const Mat pj = skeleton_to_mat(pred_skel);
    const Mat gj = skeleton_to_mat(gt_skel);
    r.mpjpe = position_error(pj, gj, ErrorMode::Raw);
    r.rr_j = position_error(pj, gj, ErrorMode::RootRelative);
    r.pa_j = procrustes_align(pj, gj).error_mm;
    r.mpvpe = position_error(pred_mesh, gt_mesh, ErrorMode::Raw);
    r.rr_v = position_error_rooted(pred_mesh, gt_mesh, pred_skel[0], gt_skel[0]);
    r.pa_v = procrustes_align(pred_mesh, gt_mesh).error_mm;
    return r;
}

MetricReport aggregate(const std::vector<MetricReport>& rows) {
    MetricReport agg;
    if (rows.empty()) return agg;
    for (const auto& r : rows) {
        agg.mpjpe += r.mpjpe;
        agg.mpvpe += r.mpvpe;
        agg.rr_j += r.rr_j;
        agg.rr_v += r.rr_v;
        agg.pa_j += r.pa_j;
        agg.pa_v += r.pa_v;
        agg.samples += r.samples;
    }
    const double inv = 1.0 / rows.size();
    agg.mpjpe *= inv;
    agg.mpvpe *= inv;
    agg.rr_j *= inv;
    agg.rr_v *= inv;
    agg.pa_j *= inv;
    agg.pa_v *= inv;
    return agg;
}

std::vector<SweepRow> robustness_sweep(const S2MModel& model, const std::vector<PairSample>& data,
                                       const std::vector<double>& sigma_sqs, uint64_t seed) {
    std::vector<SweepRow> rows;
    for (size_t si = 0; si < sigma_sqs.size(); ++si) {
        SweepRow row;
        row.sigma_sq = sigma_sqs[si];
        double ref = 0.0, mv = 0.0;
        for (size_t i = 0; i < data.size(); ++i) {
            const uint64_t noise_seed = Rng::derive(seed, (si << 32) ^ i);
            const Skeleton noisy = inject_noise(data[i].skeleton, sigma_sqs[si], noise_seed);
            ref += position_error(skeleton_to_mat(noisy), skeleton_to_mat(data[i].skeleton),
                                  ErrorMode::Raw);
            const S2MOut out = s2m_forward(model, noisy);
            mv += position_error(out.mesh, data[i].mesh, ErrorMode::Raw);
        }
        row.ref_mpjpe = data.empty() ? 0.0 : ref / data.size();
        row.mpvpe = data.empty() ? 0.0 : mv / data.size();
        rows.push_back(row);
    }
    return rows;
}

}  // namespace s2m
