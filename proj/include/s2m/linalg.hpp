#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "s2m/errors.hpp"

namespace s2m {

using Vec = std::vector<double>;
using Vec2 = std::array<double, 2>;
using Vec3 = std::array<double, 3>;

/// Dense row-major matrix of doubles. All model weights, activations and
/// gradients live in this type; training math is 64-bit throughout.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill) {}

    double& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
    double* row(int r) { return a.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return a.data() + static_cast<size_t>(r) * cols; }
    size_t size() const { return a.size(); }

    void resize(int r, int c) {
        rows = r;
        cols = c;
        a.assign(static_cast<size_t>(r) * c, 0.0);
    }
    void zero() { std::fill(a.begin(), a.end(), 0.0); }

    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

bool all_finite(const double* p, size_t n);
bool all_finite(const Mat& m);

/// Y = X * W^T + b, with X: BxI, W: OxI (row o = weights of output o), b: O.
/// Y is resized to BxO. Summation order is fixed (4-lane accumulators), so
/// results are identical between the SIMD and portable code paths.
void affine_forward(const Mat& X, const Mat& W, const Vec& b, Mat& Y);

/// Gradients of affine_forward. dY: BxO.
///   dW += dY^T * X,  db += column sums of dY,  and if dX != nullptr: dX += dY * W.
void affine_backward(const Mat& X, const Mat& W, const Mat& dY, Mat* dX, Mat& dW, Vec& db);

/// C = A * B (plain row-major product, used by small geometry code).
Mat matmul(const Mat& A, const Mat& B);
Mat transpose(const Mat& A);

double dot(const double* x, const double* y, int n);
void axpy(double a, const double* x, double* y, int n);  // y += a*x

// ---- small fixed-size helpers for geometry ----

inline Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 add(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 scale(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
inline double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double norm3(const Vec3& a);
Vec3 normalized(const Vec3& a);

/// 3x3 rotation applied to a vector; R stored as Mat(3,3).
Vec3 rotate(const Mat& R, const Vec3& v);
Mat rot_x(double rad);
Mat rot_y(double rad);
Mat rot_z(double rad);
/// Euler XYZ convention: R = Rz * Ry * Rx.
Mat euler_xyz(const Vec3& angles_rad);

/// Deterministic RNG (xoshiro256++ seeded via splitmix64). Identical streams
/// on every platform; the standard-library distributions are not portable.
struct Rng {
    std::array<uint64_t, 4> s;

    explicit Rng(uint64_t seed);
    uint64_t next_u64();
    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi);
    /// Standard normal via Box-Muller (caches the second deviate).
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Derive an independent stream seed, e.g. per sample or per purpose.
    static uint64_t derive(uint64_t base, uint64_t stream);

  private:
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace s2m
