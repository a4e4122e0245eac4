#include <cmath>

#include "doctest.h"
#include "s2m/camera.hpp"
#include "s2m/hand.hpp"

using namespace s2m;

static CameraView axis_camera(double focal, double cx, double cy, const Vec3& center) {
    CameraView v;
    v.width = 128;
    v.height = 128;
    v.K.resize(3, 3);
    v.K(0, 0) = focal;
    v.K(1, 1) = focal;
    v.K(0, 2) = cx;
    v.K(1, 2) = cy;
    v.K(2, 2) = 1.0;
    v.T.resize(4, 4);
    for (int i = 0; i < 3; ++i) v.T(i, i) = 1.0;
    v.T(3, 3) = 1.0;
    for (int i = 0; i < 3; ++i) v.T(i, 3) = -center[i];
    return v;
}

TEST_CASE("projection hits the principal point on the optical axis") {
    const CameraView v = axis_camera(100, 64, 64, {0, 0, 0});
    const Vec2 uv = project_point(v, {0, 0, 5});
    CHECK(uv[0] == doctest::Approx(64.0));
    CHECK(uv[1] == doctest::Approx(64.0));
}

TEST_CASE("projection examples with focal 100") {
    const CameraView v0 = axis_camera(100, 64, 64, {0, 0, 0});
    const Vec2 a = project_point(v0, {0, 0, 2});
    CHECK(a[0] == doctest::Approx(64.0));
    CHECK(a[1] == doctest::Approx(64.0));

    const CameraView v1 = axis_camera(100, 64, 64, {1, 0, 0});
    const Vec2 b = project_point(v1, {0, 0, 2});
    CHECK(b[0] == doctest::Approx(14.0));
    CHECK(b[1] == doctest::Approx(64.0));
}

TEST_CASE("points behind the camera are rejected") {
    const CameraView v = axis_camera(100, 64, 64, {0, 0, 0});
    CHECK_THROWS_AS(project_point(v, {0, 0, -1}), DegenerateError);
    CHECK_THROWS_AS(project_point(v, {0, 0, 0}), DegenerateError);
}

TEST_CASE("projection jacobian matches finite differences") {
    const CameraView v = axis_camera(120, 60, 50, {5, -3, -10});
    const Vec3 X = {1.0, 2.0, 30.0};
    Vec2 uv;
    double J[2][3];
    project_point_grad(v, X, uv, J);
    const double h = 1e-6;
    for (int c = 0; c < 3; ++c) {
        Vec3 Xp = X, Xm = X;
        Xp[c] += h;
        Xm[c] -= h;
        const Vec2 up = project_point(v, Xp);
        const Vec2 um = project_point(v, Xm);
        CHECK(J[0][c] == doctest::Approx((up[0] - um[0]) / (2 * h)).epsilon(1e-5));
        CHECK(J[1][c] == doctest::Approx((up[1] - um[1]) / (2 * h)).epsilon(1e-5));
    }
}

TEST_CASE("gaussian heatmap peaks at the center with value 1") {
    std::vector<double> h(64 * 64);
    render_gaussian({10, 20}, 64, 64, 2.0, h.data());
    CHECK(h[20 * 64 + 10] == doctest::Approx(1.0));
    // value at distance sigma is exp(-1/2)
    CHECK(h[20 * 64 + 12] == doctest::Approx(std::exp(-0.5)));
    CHECK(h[22 * 64 + 10] == doctest::Approx(std::exp(-0.5)));
}

TEST_CASE("gaussian heatmap off-image stays finite and bounded") {
    std::vector<double> h(32 * 32);
    render_gaussian({-5.0, -7.0}, 32, 32, 2.0, h.data());
    const double bound = std::exp(-(5.0 * 5.0 + 7.0 * 7.0) / (2 * 4.0));
    for (double v : h) {
        CHECK(std::isfinite(v));
        CHECK(v <= bound + 1e-15);
    }
}

TEST_CASE("soft_argmax on a delta at high temperature returns the pixel") {
    std::vector<double> h(64 * 64, 0.0);
    h[20 * 64 + 10] = 1.0;
    const Vec2 p = soft_argmax(h.data(), 64, 64, 200.0);
    CHECK(p[0] == doctest::Approx(10.0).epsilon(1e-3));
    CHECK(p[1] == doctest::Approx(20.0).epsilon(1e-3));
}

TEST_CASE("soft_argmax of a uniform map is the grid center") {
    std::vector<double> h(48 * 32, 0.7);
    const Vec2 p = soft_argmax(h.data(), 32, 48, 1.0);
    CHECK(p[0] == doctest::Approx((48 - 1) / 2.0));
    CHECK(p[1] == doctest::Approx((32 - 1) / 2.0));
}

TEST_CASE("soft_argmax of two equal peaks lands midway") {
    std::vector<double> h(64 * 64, 0.0);
    h[10 * 64 + 10] = 1.0;
    h[10 * 64 + 30] = 1.0;
    const Vec2 p = soft_argmax(h.data(), 64, 64, 50.0);
    CHECK(p[0] == doctest::Approx(20.0).epsilon(1e-6));
    CHECK(p[1] == doctest::Approx(10.0).epsilon(1e-6));
}

TEST_CASE("soft_argmax stays inside the pixel hull") {
    Rng rng(3);
    std::vector<double> h(16 * 16);
    for (int t = 0; t < 20; ++t) {
        for (auto& v : h) v = rng.uniform(0, 5);
        const Vec2 p = soft_argmax(h.data(), 16, 16, rng.uniform(0.1, 30));
        CHECK(p[0] >= 0.0);
        CHECK(p[0] <= 15.0);
        CHECK(p[1] >= 0.0);
        CHECK(p[1] <= 15.0);
    }
}

TEST_CASE("soft_argmax backward matches finite differences") {
    Rng rng(5);
    const int H = 8, W = 9;
    std::vector<double> h(H * W);
    for (auto& v : h) v = rng.uniform(0, 1);
    const double temp = 3.0;
    const Vec2 up = {0.7, -1.3};

    std::vector<double> grad(H * W, 0.0);
    soft_argmax_backward(h.data(), H, W, temp, up, grad.data());

    const double step = 1e-6;
    for (int i = 0; i < H * W; ++i) {
        const double saved = h[i];
        h[i] = saved + step;
        const Vec2 pp = soft_argmax(h.data(), H, W, temp);
        h[i] = saved - step;
        const Vec2 pm = soft_argmax(h.data(), H, W, temp);
        h[i] = saved;
        const double fd =
            (up[0] * (pp[0] - pm[0]) + up[1] * (pp[1] - pm[1])) / (2 * step);
        CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-4));
    }
}

TEST_CASE("two-view DLT recovers the probe point exactly") {
    CameraRig rig;
    rig.views.push_back(axis_camera(100, 64, 64, {0, 0, 0}));
    rig.views.push_back(axis_camera(100, 64, 64, {1, 0, 0}));
    const Vec3 X = {0, 0, 2};
    std::vector<Vec2> obs = {project_point(rig.views[0], X), project_point(rig.views[1], X)};
    const Vec3 rec = dlt_triangulate_point(obs, rig, 0);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(rec[c] - X[c]) < 1e-6);
}

TEST_CASE("noiseless DLT round trip on random rigs (N = 2, 4, 8)") {
    Rng rng(7);
    for (int N : {2, 4, 8}) {
        const CameraRig rig = make_rig(N, 600.0, {0, 0, 0}, 240.0, 256, 256, rng.next_u64());
        for (int t = 0; t < 40; ++t) {
            const Vec3 X = {rng.uniform(-100, 100), rng.uniform(-100, 100),
                            rng.uniform(-100, 100)};
            std::vector<Vec2> obs;
            for (const auto& v : rig.views) obs.push_back(project_point(v, X));
            const Vec3 rec = dlt_triangulate_point(obs, rig, 0);
            const double err = norm3(sub(rec, X));
            CHECK(err < 1e-6);
            // reprojection consistency
            for (int n = 0; n < N; ++n) {
                const Vec2 uv = project_point(rig.views[n], rec);
                CHECK(std::abs(uv[0] - obs[n][0]) < 1e-4);
                CHECK(std::abs(uv[1] - obs[n][1]) < 1e-4);
            }
        }
    }
}

TEST_CASE("pixel noise propagates less with more views") {
    Rng rng(11);
    double mean_err[3] = {0, 0, 0};
    const int views[3] = {2, 4, 8};
    const int trials = 150;
    for (int vi = 0; vi < 3; ++vi) {
        const CameraRig rig = make_rig(views[vi], 600.0, {0, 0, 0}, 240.0, 256, 256, 99);
        Rng noise(1234 + vi);
        for (int t = 0; t < trials; ++t) {
            const Vec3 X = {rng.uniform(-80, 80), rng.uniform(-80, 80), rng.uniform(-80, 80)};
            std::vector<Vec2> obs;
            for (const auto& v : rig.views) {
                Vec2 uv = project_point(v, X);
                uv[0] += noise.normal();
                uv[1] += noise.normal();
                obs.push_back(uv);
            }
            mean_err[vi] += norm3(sub(dlt_triangulate_point(obs, rig, 0), X)) / trials;
        }
        CHECK(mean_err[vi] > 0.0);
    }
    CHECK(mean_err[1] < mean_err[0]);
    CHECK(mean_err[2] < mean_err[1]);
}

TEST_CASE("degenerate triangulation names the keypoint") {
    // point on the baseline of two cameras
    CameraRig rig;
    rig.views.push_back(axis_camera(100, 64, 64, {0, 0, -10}));
    rig.views.push_back(axis_camera(100, 64, 64, {0, 0, -20}));
    const std::vector<Vec2> obs = {{64, 64}, {64, 64}};
    CHECK_THROWS_WITH_AS(dlt_triangulate_point(obs, rig, 7), doctest::Contains("keypoint 7"),
                         DegenerateError);
}

TEST_CASE("grid_sample exact on integer pixels, averages midway, zero outside") {
    FeatureMap f;
    f.resize(2, 4, 4);
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < 16; ++i) f.channel(c)[i] = c * 100 + i;

    double out[2];
    grid_sample(f, {2.0, 1.0}, out);
    CHECK(out[0] == doctest::Approx(6.0));
    CHECK(out[1] == doctest::Approx(106.0));

    grid_sample(f, {1.5, 1.0}, out);
    CHECK(out[0] == doctest::Approx(5.5));

    grid_sample(f, {-10.0, -10.0}, out);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
}

TEST_CASE("grid_sample stays within neighbor bounds in-bounds") {
    Rng rng(13);
    FeatureMap f;
    f.resize(1, 6, 6);
    for (auto& v : f.v) v = rng.uniform(-3, 3);
    for (int t = 0; t < 50; ++t) {
        const Vec2 p = {rng.uniform(0, 5), rng.uniform(0, 5)};
        double out;
        grid_sample(f, p, &out);
        const int x0 = static_cast<int>(p[0]), y0 = static_cast<int>(p[1]);
        double lo = 1e300, hi = -1e300;
        for (int dy = 0; dy <= 1; ++dy)
            for (int dx = 0; dx <= 1; ++dx) {
                const int x = std::min(x0 + dx, 5), y = std::min(y0 + dy, 5);
                lo = std::min(lo, f.channel(0)[y * 6 + x]);
                hi = std::max(hi, f.channel(0)[y * 6 + x]);
            }
        CHECK(out >= lo - 1e-12);
        CHECK(out <= hi + 1e-12);
    }
}

TEST_CASE("grid_sample backward matches finite differences") {
    Rng rng(17);
    FeatureMap f;
    f.resize(3, 5, 5);
    for (auto& v : f.v) v = rng.uniform(-1, 1);
    const Vec2 p = {2.3, 1.7};
    const double up[3] = {1.0, -0.5, 0.25};

    std::vector<double> dv(f.v.size(), 0.0);
    Vec2 dp = {0, 0};
    grid_sample_backward(f, p, up, &dv, &dp);

    const double h = 1e-6;
    std::vector<double> out_p(3), out_m(3);
    for (size_t i = 0; i < f.v.size(); ++i) {
        const double saved = f.v[i];
        f.v[i] = saved + h;
        grid_sample(f, p, out_p.data());
        f.v[i] = saved - h;
        grid_sample(f, p, out_m.data());
        f.v[i] = saved;
        double fd = 0;
        for (int c = 0; c < 3; ++c) fd += up[c] * (out_p[c] - out_m[c]) / (2 * h);
        CHECK(dv[i] == doctest::Approx(fd).epsilon(1e-6));
    }
    for (int c = 0; c < 2; ++c) {
        Vec2 pp = p, pm = p;
        pp[c] += h;
        pm[c] -= h;
        grid_sample(f, pp, out_p.data());
        grid_sample(f, pm, out_m.data());
        double fd = 0;
        for (int ch = 0; ch < 3; ++ch) fd += up[ch] * (out_p[ch] - out_m[ch]) / (2 * h);
        CHECK(dp[c] == doctest::Approx(fd).epsilon(1e-5));
    }
}
