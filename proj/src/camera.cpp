#include "s2m/camera.hpp"

#include <cmath>

#include "s2m/svd.hpp"

namespace s2m {

Vec3 CameraView::to_camera(const Vec3& Xw) const {
    Vec3 out;
    for (int i = 0; i < 3; ++i)
        out[i] = T(i, 0) * Xw[0] + T(i, 1) * Xw[1] + T(i, 2) * Xw[2] + T(i, 3);
    return out;
}

Vec3 CameraView::center() const {
    // T = [R | t], center C = -R^T t
    Vec3 c;
    for (int i = 0; i < 3; ++i)
        c[i] = -(T(0, i) * T(0, 3) + T(1, i) * T(1, 3) + T(2, i) * T(2, 3));
    return c;
}

Vec2 project_point(const CameraView& view, const Vec3& X) {
    const Vec3 pc = view.to_camera(X);
    if (pc[2] <= 0.0) throw DegenerateError("project_point: point behind camera");
    const double inv_z = 1.0 / pc[2];
    const double u = view.K(0, 0) * pc[0] * inv_z + view.K(0, 1) * pc[1] * inv_z + view.K(0, 2);
    const double v = view.K(1, 1) * pc[1] * inv_z + view.K(1, 2);
    return {u, v};
}

void project_point_grad(const CameraView& view, const Vec3& X, Vec2& uv, double duv_dX[2][3]) {
    const Vec3 pc = view.to_camera(X);
    if (pc[2] <= 0.0) throw DegenerateError("project_point_grad: point behind camera");
    const double fx = view.K(0, 0), sk = view.K(0, 1), fy = view.K(1, 1);
    const double inv_z = 1.0 / pc[2];
    uv[0] = fx * pc[0] * inv_z + sk * pc[1] * inv_z + view.K(0, 2);
    uv[1] = fy * pc[1] * inv_z + view.K(1, 2);
    // d(uv)/d(pc), then chain through the rotation block of T
    const double du_dpc[3] = {fx * inv_z, sk * inv_z,
                              -(fx * pc[0] + sk * pc[1]) * inv_z * inv_z};
    const double dv_dpc[3] = {0.0, fy * inv_z, -fy * pc[1] * inv_z * inv_z};
    for (int j = 0; j < 3; ++j) {
        duv_dX[0][j] = du_dpc[0] * view.T(0, j) + du_dpc[1] * view.T(1, j) + du_dpc[2] * view.T(2, j);
        duv_dX[1][j] = dv_dpc[0] * view.T(0, j) + dv_dpc[1] * view.T(1, j) + dv_dpc[2] * view.T(2, j);
    }
}

void render_gaussian(const Vec2& p, int height, int width, double sigma_px, double* out) {
    if (sigma_px <= 0.0) throw DimensionError("render_gaussian: sigma must be positive");
    const double inv = 1.0 / (2.0 * sigma_px * sigma_px);
    for (int y = 0; y < height; ++y) {
        const double dy = y - p[1];
        double* row = out + static_cast<size_t>(y) * width;
        for (int x = 0; x < width; ++x) {
            const double dx = x - p[0];
            row[x] = std::exp(-(dx * dx + dy * dy) * inv);
        }
    }
}

Vec2 soft_argmax(const double* values, int height, int width, double temperature) {
    // subtract the max before exponentiating for stability
    double mx = values[0];
    const size_t n = static_cast<size_t>(height) * width;
    for (size_t i = 1; i < n; ++i) mx = std::max(mx, values[i]);

    double den = 0.0, num_u = 0.0, num_v = 0.0;
    size_t i = 0;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x, ++i) {
            const double w = std::exp(temperature * (values[i] - mx));
            den += w;
            num_u += w * x;
            num_v += w * y;
        }
    }
    return {num_u / den, num_v / den};
}

void soft_argmax_backward(const double* values, int height, int width, double temperature,
                          const Vec2& upstream, double* d_values) {
    double mx = values[0];
    const size_t n = static_cast<size_t>(height) * width;
    for (size_t i = 1; i < n; ++i) mx = std::max(mx, values[i]);

    double den = 0.0, num_u = 0.0, num_v = 0.0;
    std::vector<double> w(n);
    size_t i = 0;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x, ++i) {
            w[i] = std::exp(temperature * (values[i] - mx));
            den += w[i];
            num_u += w[i] * x;
            num_v += w[i] * y;
        }
    const double eu = num_u / den, ev = num_v / den;
    // d(E[c])/d(values_i) = temperature * softmax_i * (c_i - E[c])
    i = 0;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x, ++i) {
            const double si = w[i] / den;
            d_values[i] += temperature * si * (upstream[0] * (x - eu) + upstream[1] * (y - ev));
        }
}

Vec3 dlt_triangulate_point(const std::vector<Vec2>& obs, const CameraRig& rig, int keypoint_index) {
    const int N = rig.size();
    if (static_cast<int>(obs.size()) != N || N < 2)
        throw DimensionError("dlt_triangulate_point: need one observation per view, N >= 2");

    Mat A(2 * N, 4);
    for (int n = 0; n < N; ++n) {
        const CameraView& view = rig.views[n];
        // P = K * T (3x4)
        double P[3][4];
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 4; ++c)
                P[r][c] = view.K(r, 0) * view.T(0, c) + view.K(r, 1) * view.T(1, c) +
                          view.K(r, 2) * view.T(2, c);
        const double u = obs[n][0], v = obs[n][1];
        for (int c = 0; c < 4; ++c) {
            A(2 * n, c) = u * P[2][c] - P[0][c];
            A(2 * n + 1, c) = v * P[2][c] - P[1][c];
        }
    }

    Vec h = svd_smallest(A);
    if (std::abs(h[3]) < 1e-12)
        throw DegenerateError("dlt_triangulate: degenerate system for keypoint " +
                              std::to_string(keypoint_index));
    // Rank check: a well-posed system has exactly one small singular value.
    // Compare residuals of the two smallest directions via A^T A eigenvalues.
    {
        Mat G(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = i; j < 4; ++j) {
                double acc = 0.0;
                for (int r = 0; r < A.rows; ++r) acc += A(r, i) * A(r, j);
                G(i, j) = acc;
                G(j, i) = acc;
            }
        Mat V;
        Vec lam;
        sym_eig(G, V, lam);
        const double scale = std::max(1.0, lam[3]);
        if (lam[1] / scale < 1e-18)
            throw DegenerateError("dlt_triangulate: rank-deficient system for keypoint " +
                                  std::to_string(keypoint_index));
    }
    const double inv_w = 1.0 / h[3];
    return {h[0] * inv_w, h[1] * inv_w, h[2] * inv_w};
}

std::vector<Vec3> dlt_triangulate(const std::vector<std::vector<Vec2>>& obs_per_view,
                                  const CameraRig& rig) {
    const int N = rig.size();
    if (static_cast<int>(obs_per_view.size()) != N)
        throw DimensionError("dlt_triangulate: observation count != view count");
    const size_t K = obs_per_view.empty() ? 0 : obs_per_view[0].size();
    std::vector<Vec3> out(K);
    std::vector<Vec2> obs(N);
    for (size_t k = 0; k < K; ++k) {
        for (int n = 0; n < N; ++n) obs[n] = obs_per_view[n][k];
        out[k] = dlt_triangulate_point(obs, rig, static_cast<int>(k));
    }
    return out;
}

void grid_sample(const FeatureMap& f, const Vec2& p, double* out) {
    const int W = f.width, H = f.height;
    const int x0 = static_cast<int>(std::floor(p[0]));
    const int y0 = static_cast<int>(std::floor(p[1]));
    const double fx = p[0] - x0, fy = p[1] - y0;
    const double w00 = (1 - fx) * (1 - fy), w10 = fx * (1 - fy);
    const double w01 = (1 - fx) * fy, w11 = fx * fy;

    auto in_bounds = [&](int x, int y) { return x >= 0 && x < W && y >= 0 && y < H; };
    for (int c = 0; c < f.channels; ++c) {
        const double* ch = f.channel(c);
        double acc = 0.0;
        if (in_bounds(x0, y0)) acc += w00 * ch[static_cast<size_t>(y0) * W + x0];
        if (in_bounds(x0 + 1, y0)) acc += w10 * ch[static_cast<size_t>(y0) * W + x0 + 1];
        if (in_bounds(x0, y0 + 1)) acc += w01 * ch[static_cast<size_t>(y0 + 1) * W + x0];
        if (in_bounds(x0 + 1, y0 + 1)) acc += w11 * ch[static_cast<size_t>(y0 + 1) * W + x0 + 1];
        out[c] = acc;
    }
}

void grid_sample_backward(const FeatureMap& f, const Vec2& p, const double* upstream,
                          std::vector<double>* d_values, Vec2* dp) {
    const int W = f.width, H = f.height;
    const int x0 = static_cast<int>(std::floor(p[0]));
    const int y0 = static_cast<int>(std::floor(p[1]));
    const double fx = p[0] - x0, fy = p[1] - y0;
    auto in_bounds = [&](int x, int y) { return x >= 0 && x < W && y >= 0 && y < H; };

    double du = 0.0, dv = 0.0;
    for (int c = 0; c < f.channels; ++c) {
        const double* ch = f.channel(c);
        const size_t base = static_cast<size_t>(c) * H * W;
        const double g = upstream[c];
        double v00 = 0, v10 = 0, v01 = 0, v11 = 0;
        if (in_bounds(x0, y0)) {
            v00 = ch[static_cast<size_t>(y0) * W + x0];
            if (d_values) (*d_values)[base + static_cast<size_t>(y0) * W + x0] += g * (1 - fx) * (1 - fy);
        }
        if (in_bounds(x0 + 1, y0)) {
            v10 = ch[static_cast<size_t>(y0) * W + x0 + 1];
            if (d_values) (*d_values)[base + static_cast<size_t>(y0) * W + x0 + 1] += g * fx * (1 - fy);
        }
        if (in_bounds(x0, y0 + 1)) {
            v01 = ch[static_cast<size_t>(y0 + 1) * W + x0];
            if (d_values) (*d_values)[base + static_cast<size_t>(y0 + 1) * W + x0] += g * (1 - fx) * fy;
        }
        if (in_bounds(x0 + 1, y0 + 1)) {
            v11 = ch[static_cast<size_t>(y0 + 1) * W + x0 + 1];
            if (d_values) (*d_values)[base + static_cast<size_t>(y0 + 1) * W + x0 + 1] += g * fx * fy;
        }
        du += g * ((v10 - v00) * (1 - fy) + (v11 - v01) * fy);
        dv += g * ((v01 - v00) * (1 - fx) + (v11 - v10) * fx);
    }
    if (dp) {
        (*dp)[0] += du;
        (*dp)[1] += dv;
    }
}

}  // namespace s2m
