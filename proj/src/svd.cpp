#include "s2m/svd.hpp"

#include <algorithm>
#include <cmath>

namespace s2m {

void sym_eig(const Mat& S, Mat& V, Vec& lam) {
    const int n = S.rows;
    if (S.cols != n || n < 1) throw DimensionError("sym_eig: matrix must be square");
    Mat A = S;
    V.resize(n, n);
    for (int i = 0; i < n; ++i) V(i, i) = 1.0;

    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
        if (off < 1e-300) break;

        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = A(p, q);
                if (apq == 0.0) continue;
                const double app = A(p, p), aqq = A(q, q);
                // classic Jacobi rotation
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (int k = 0; k < n; ++k) {
                    const double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = V(k, p), vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    lam.resize(n);
    for (int i = 0; i < n; ++i) lam[i] = A(i, i);

    // sort ascending, permuting eigenvector columns along
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return lam[a] < lam[b]; });
    Vec lam_sorted(n);
    Mat V_sorted(n, n);
    for (int j = 0; j < n; ++j) {
        lam_sorted[j] = lam[idx[j]];
        for (int i = 0; i < n; ++i) V_sorted(i, j) = V(i, idx[j]);
    }
    lam = std::move(lam_sorted);
    V = std::move(V_sorted);
}

Vec svd_smallest(const Mat& A) {
    if (A.rows < 1 || A.cols < 2) throw DimensionError("svd_smallest: need rows >= 1 and cols >= 2");
    const int n = A.cols;
    Mat G(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double acc = 0.0;
            for (int r = 0; r < A.rows; ++r) acc += A(r, i) * A(r, j);
            G(i, j) = acc;
            G(j, i) = acc;
        }
    Mat V;
    Vec lam;
    sym_eig(G, V, lam);
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = V(i, 0);
    double nv = std::sqrt(dot(v.data(), v.data(), n));
    for (auto& x : v) x /= nv;
    return v;
}

void svd3(const Mat& A, Mat& U, Vec3& sigma, Mat& V) {
    if (A.rows != 3 || A.cols != 3) throw DimensionError("svd3: matrix must be 3x3");
    Mat G = matmul(transpose(A), A);
    Mat Ve;
    Vec lam;
    sym_eig(G, Ve, lam);
    // descending singular values
    V.resize(3, 3);
    for (int j = 0; j < 3; ++j) {
        sigma[j] = std::sqrt(std::max(0.0, lam[2 - j]));
        for (int i = 0; i < 3; ++i) V(i, j) = Ve(i, 2 - j);
    }
    U.resize(3, 3);
    // U columns: A*v / sigma; complete degenerate columns orthonormally.
    const double tol = 1e-12 * std::max(1.0, sigma[0]);
    for (int j = 0; j < 3; ++j) {
        Vec3 vj = {V(0, j), V(1, j), V(2, j)};
        Vec3 uj = rotate(A, vj);
        if (sigma[j] > tol) {
            uj = scale(uj, 1.0 / sigma[j]);
        } else {
            // orthonormal completion against previous columns
            Vec3 c0 = {U(0, 0), U(1, 0), U(2, 0)};
            if (j == 0) {
                uj = {1, 0, 0};
            } else if (j == 1) {
                Vec3 t = std::abs(c0[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
                uj = normalized(cross(c0, t));
            } else {
                Vec3 c1 = {U(0, 1), U(1, 1), U(2, 1)};
                uj = cross(c0, c1);
            }
        }
        for (int i = 0; i < 3; ++i) U(i, j) = uj[i];
    }
}

}  // namespace s2m
