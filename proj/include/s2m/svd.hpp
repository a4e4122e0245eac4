#pragma once

#include "s2m/linalg.hpp"

namespace s2m {

/// Jacobi eigendecomposition of a symmetric matrix S (n x n).
/// On return: eigenvalues ascending in `lam`, matching eigenvectors in the
/// columns of `V`.
void sym_eig(const Mat& S, Mat& V, Vec& lam);

/// Unit vector v minimizing ||A v||, computed from the eigenvector of A^T A
/// with the smallest eigenvalue. Requires rows >= 1 and cols >= 2; for a
/// multi-dimensional null space any null vector may be returned.
Vec svd_smallest(const Mat& A);

/// Full SVD of a 3x3 matrix: A = U * diag(sigma) * V^T with sigma descending
/// and U, V orthogonal (not necessarily rotations).
void svd3(const Mat& A, Mat& U, Vec3& sigma, Mat& V);

}  // namespace s2m
