#include <cmath>

#include "doctest.h"
#include "s2m/svd.hpp"

using namespace s2m;

TEST_CASE("svd_smallest finds the known null vector of diag(2,1,0)") {
    Mat A(3, 3);
    A(0, 0) = 2;
    A(1, 1) = 1;
    A(2, 2) = 0;
    const Vec v = svd_smallest(A);
    CHECK(std::abs(v[2]) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(v[0]) < 1e-12);
    CHECK(std::abs(v[1]) < 1e-12);
}

TEST_CASE("svd_smallest on the identity returns some unit vector") {
    Mat A(2, 2);
    A(0, 0) = 1;
    A(1, 1) = 1;
    const Vec v = svd_smallest(A);
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1]);
    CHECK(n == doctest::Approx(1.0).epsilon(1e-12));
    // |Av| = 1 for any unit v
    CHECK(std::sqrt(v[0] * v[0] + v[1] * v[1]) == doctest::Approx(1.0));
}

TEST_CASE("svd_smallest recovers a planted null vector") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        // unit n, A = B (I - n n^T) has null vector n
        Vec n(4);
        double nn = 0;
        for (auto& x : n) {
            x = rng.normal();
        }
        for (double x : n) nn += x * x;
        nn = std::sqrt(nn);
        for (auto& x : n) x /= nn;

        Mat P(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) P(i, j) = (i == j ? 1.0 : 0.0) - n[i] * n[j];
        Mat B(8, 4);
        for (auto& x : B.a) x = rng.normal();
        const Mat A = matmul(B, P);

        const Vec v = svd_smallest(A);
        double dot_nv = 0, vnorm = 0;
        for (int i = 0; i < 4; ++i) {
            dot_nv += n[i] * v[i];
            vnorm += v[i] * v[i];
        }
        CHECK(std::sqrt(vnorm) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(std::abs(dot_nv) - 1.0) < 1e-8);
    }
}

TEST_CASE("svd_smallest validates input shape") {
    Mat A(3, 1);
    CHECK_THROWS_AS(svd_smallest(A), DimensionError);
}

TEST_CASE("svd_smallest minimizes |Av| against random unit probes") {
    Rng rng(9);
    Mat A(6, 4);
    for (auto& x : A.a) x = rng.normal();
    const Vec v = svd_smallest(A);
    auto resid = [&](const Vec& u) {
        double r = 0;
        for (int i = 0; i < A.rows; ++i) {
            double acc = 0;
            for (int j = 0; j < 4; ++j) acc += A(i, j) * u[j];
            r += acc * acc;
        }
        return std::sqrt(r);
    };
    const double rv = resid(v);
    for (int t = 0; t < 200; ++t) {
        Vec u(4);
        double un = 0;
        for (auto& x : u) x = rng.normal();
        for (double x : u) un += x * x;
        un = std::sqrt(un);
        for (auto& x : u) x /= un;
        CHECK(rv <= resid(u) + 1e-9);
    }
}

TEST_CASE("svd3 reconstructs and orthogonality holds") {
    Rng rng(13);
    for (int t = 0; t < 20; ++t) {
        Mat A(3, 3);
        for (auto& x : A.a) x = rng.normal();
        Mat U, V;
        Vec3 s;
        svd3(A, U, s, V);
        CHECK(s[0] >= s[1]);
        CHECK(s[1] >= s[2]);
        // A = U S V^T
        Mat S(3, 3);
        for (int i = 0; i < 3; ++i) S(i, i) = s[i];
        const Mat R = matmul(U, matmul(S, transpose(V)));
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) CHECK(R(i, j) == doctest::Approx(A(i, j)).epsilon(1e-9));
        const Mat UtU = matmul(transpose(U), U);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(UtU(i, j) == doctest::Approx(i == j ? 1 : 0).epsilon(1e-9));
    }
}
