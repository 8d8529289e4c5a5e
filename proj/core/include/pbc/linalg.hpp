#pragma once

// Small dense linear algebra used across the library. All systems handled here
// are small (n <= 10 states, m <= 3 inputs), so the vector and matrix types are
// dynamically sized but capped, which keeps every temporary on the stack.

#include <Eigen/Dense>

#include <string_view>

namespace pbc {

inline constexpr int kMaxDim = 24;

using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

/// Extreme eigenvalues of a symmetric matrix.
struct EigenRange {
    double min = 0.0;
    double max = 0.0;
};

/// Eigenvalue range of the symmetric part of `a`.
EigenRange symmetric_eigen_range(const Matrix& a);

/// Smallest eigenvalue of the symmetric part of `a`.
double min_eigenvalue(const Matrix& a);

/// True when `a` is exactly symmetric (bitwise equal to its transpose).
bool is_exactly_symmetric(const Matrix& a);

/// True when `a` is exactly skew-symmetric (a + a^T == 0 bitwise).
bool is_exactly_skew(const Matrix& a);

/// Positive definiteness with the library-wide roundoff threshold:
/// lambda_min > rel_tol * max(|lambda_max|, tiny).
bool is_positive_definite(const Matrix& a, double rel_tol = 1e-12);

/// Positive semidefiniteness (lambda_min >= -rel_tol * |lambda_max|).
bool is_positive_semidefinite(const Matrix& a, double rel_tol = 1e-12);

/// Moore-Penrose left pseudo-inverse of a tall matrix with full column rank.
/// Singular values below `rank_tol` times the largest one raise SingularityError.
Matrix left_pseudo_inverse(const Matrix& g, double rank_tol = 1e-10);

/// Orthonormal basis (as columns) of the left null space of `g`, i.e. of ker g^T.
Matrix left_null_space(const Matrix& g, double rank_tol = 1e-10);

/// Numerical rank with the same relative tolerance convention.
int numerical_rank(const Matrix& g, double rank_tol = 1e-10);

/// Block diagonal [a 0; 0 b].
Matrix block_diag(const Matrix& a, const Matrix& b);

/// Throws DimensionError when `v` does not have `expected` rows.
void require_size(const Vector& v, int expected, std::string_view what);

/// Throws DimensionError when `a` is not rows x cols.
void require_shape(const Matrix& a, int rows, int cols, std::string_view what);

}  // namespace pbc
