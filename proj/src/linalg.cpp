#include "s2m/linalg.hpp"

#include <cmath>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define S2M_HAVE_AVX2 1
#endif

namespace s2m {

bool all_finite(const double* p, size_t n) {
    for (size_t i = 0; i < n; ++i)
        if (!std::isfinite(p[i])) return false;
    return true;
}

bool all_finite(const Mat& m) { return all_finite(m.a.data(), m.a.size()); }

double dot(const double* x, const double* y, int n) {
    // 4-lane accumulation; must stay in sync with the AVX2 path in
    // affine_forward so both produce bitwise-identical sums.
    double a0 = 0, a1 = 0, a2 = 0, a3 = 0;
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        a0 += x[i] * y[i];
        a1 += x[i + 1] * y[i + 1];
        a2 += x[i + 2] * y[i + 2];
        a3 += x[i + 3] * y[i + 3];
    }
    double acc = (a0 + a1) + (a2 + a3);
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy(double a, const double* x, double* y, int n) {
    for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

#ifdef S2M_HAVE_AVX2
static inline double hsum_pairwise(__m256d v) {
    double t[4];
    _mm256_storeu_pd(t, v);
    return (t[0] + t[1]) + (t[2] + t[3]);
}
#endif

void affine_forward(const Mat& X, const Mat& W, const Vec& b, Mat& Y) {
    const int B = X.rows, I = X.cols, O = W.rows;
    if (W.cols != I) throw DimensionError("affine_forward: W cols != input dim");
    if (static_cast<int>(b.size()) != O) throw DimensionError("affine_forward: bias size != output dim");
    if (Y.rows != B || Y.cols != O) Y.resize(B, O);

    for (int r = 0; r < B; ++r) {
        const double* x = X.row(r);
        double* y = Y.row(r);
        int o = 0;
#ifdef S2M_HAVE_AVX2
        for (; o + 4 <= O; o += 4) {
            const double* w0 = W.row(o);
            const double* w1 = W.row(o + 1);
            const double* w2 = W.row(o + 2);
            const double* w3 = W.row(o + 3);
            __m256d s0 = _mm256_setzero_pd(), s1 = s0, s2 = s0, s3 = s0;
            int i = 0;
            for (; i + 4 <= I; i += 4) {
                __m256d xv = _mm256_loadu_pd(x + i);
                s0 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(w0 + i), s0);
                s1 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(w1 + i), s1);
                s2 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(w2 + i), s2);
                s3 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(w3 + i), s3);
            }
            double a0 = hsum_pairwise(s0);
            double a1 = hsum_pairwise(s1);
            double a2 = hsum_pairwise(s2);
            double a3 = hsum_pairwise(s3);
            for (; i < I; ++i) {
                a0 += x[i] * w0[i];
                a1 += x[i] * w1[i];
                a2 += x[i] * w2[i];
                a3 += x[i] * w3[i];
            }
            y[o] = a0 + b[o];
            y[o + 1] = a1 + b[o + 1];
            y[o + 2] = a2 + b[o + 2];
            y[o + 3] = a3 + b[o + 3];
        }
#endif
        for (; o < O; ++o) y[o] = dot(x, W.row(o), I) + b[o];
    }
}

void affine_backward(const Mat& X, const Mat& W, const Mat& dY, Mat* dX, Mat& dW, Vec& db) {
    const int B = X.rows, I = X.cols, O = W.rows;
    if (dY.rows != B || dY.cols != O) throw DimensionError("affine_backward: dY shape mismatch");
    if (dW.rows != O || dW.cols != I) throw DimensionError("affine_backward: dW shape mismatch");
    if (static_cast<int>(db.size()) != O) throw DimensionError("affine_backward: db size mismatch");
    if (dX && (dX->rows != B || dX->cols != I)) throw DimensionError("affine_backward: dX shape mismatch");

    for (int r = 0; r < B; ++r) {
        const double* x = X.row(r);
        const double* dy = dY.row(r);
        for (int o = 0; o < O; ++o) {
            const double g = dy[o];
            if (g != 0.0) axpy(g, x, dW.row(o), I);
            db[o] += g;
        }
        if (dX) {
            double* dx = dX->row(r);
            for (int o = 0; o < O; ++o) {
                const double g = dy[o];
                if (g != 0.0) axpy(g, W.row(o), dx, I);
            }
        }
    }
}

Mat matmul(const Mat& A, const Mat& B) {
    if (A.cols != B.rows) throw DimensionError("matmul: inner dims differ");
    Mat C(A.rows, B.cols, 0.0);
    for (int i = 0; i < A.rows; ++i) {
        for (int k = 0; k < A.cols; ++k) {
            const double aik = A(i, k);
            if (aik == 0.0) continue;
            axpy(aik, B.row(k), C.row(i), B.cols);
        }
    }
    return C;
}

Mat transpose(const Mat& A) {
    Mat T(A.cols, A.rows);
    for (int i = 0; i < A.rows; ++i)
        for (int j = 0; j < A.cols; ++j) T(j, i) = A(i, j);
    return T;
}

double norm3(const Vec3& a) { return std::sqrt(dot3(a, a)); }

Vec3 normalized(const Vec3& a) {
    double n = norm3(a);
    if (n == 0.0) throw DegenerateError("normalized: zero vector");
    return scale(a, 1.0 / n);
}

Vec3 rotate(const Mat& R, const Vec3& v) {
    return {R(0, 0) * v[0] + R(0, 1) * v[1] + R(0, 2) * v[2],
            R(1, 0) * v[0] + R(1, 1) * v[1] + R(1, 2) * v[2],
            R(2, 0) * v[0] + R(2, 1) * v[1] + R(2, 2) * v[2]};
}

Mat rot_x(double rad) {
    Mat R(3, 3);
    double c = std::cos(rad), s = std::sin(rad);
    R(0, 0) = 1;
    R(1, 1) = c;
    R(1, 2) = -s;
    R(2, 1) = s;
    R(2, 2) = c;
    return R;
}

Mat rot_y(double rad) {
    Mat R(3, 3);
    double c = std::cos(rad), s = std::sin(rad);
    R(1, 1) = 1;
    R(0, 0) = c;
    R(0, 2) = s;
    R(2, 0) = -s;
    R(2, 2) = c;
    return R;
}

Mat rot_z(double rad) {
    Mat R(3, 3);
    double c = std::cos(rad), s = std::sin(rad);
    R(2, 2) = 1;
    R(0, 0) = c;
    R(0, 1) = -s;
    R(1, 0) = s;
    R(1, 1) = c;
    return R;
}

Mat euler_xyz(const Vec3& ang) { return matmul(rot_z(ang[2]), matmul(rot_y(ang[1]), rot_x(ang[0]))); }

// ---- RNG ----

static uint64_t splitmix64(uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

Rng::Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& w : s) w = splitmix64(x);
}

static inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

uint64_t Rng::next_u64() {
    const uint64_t result = rotl(s[0] + s[3], 23) + s[0];
    const uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
}

double Rng::uniform() {
    // 53 random bits -> [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double th = 2.0 * M_PI * u2;
    spare_ = r * std::sin(th);
    has_spare_ = true;
    return r * std::cos(th);
}

uint64_t Rng::derive(uint64_t base, uint64_t stream) {
    uint64_t x = base ^ (0x632be59bd9b4e019ull * (stream + 1));
    uint64_t a = splitmix64(x);
    uint64_t b = splitmix64(x);
    return a ^ rotl(b, 32);
}

}  // namespace s2m
