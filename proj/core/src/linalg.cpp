#include "pbc/linalg.hpp"

#include "pbc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace pbc {

namespace {

Eigen::JacobiSVD<Matrix> full_svd(const Matrix& g) {
    return Eigen::JacobiSVD<Matrix>(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
}

}  // namespace

EigenRange symmetric_eigen_range(const Matrix& a) {
    if (a.rows() != a.cols()) {
        throw DimensionError("eigenvalue range requested for a non-square matrix");
    }
    if (a.rows() == 0) return {};
    const Matrix sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
    const auto& ev = solver.eigenvalues();
    return {ev.minCoeff(), ev.maxCoeff()};
}

double min_eigenvalue(const Matrix& a) { return symmetric_eigen_range(a).min; }

bool is_exactly_symmetric(const Matrix& a) {
    return a.rows() == a.cols() && a == a.transpose();
}

bool is_exactly_skew(const Matrix& a) {
    if (a.rows() != a.cols()) return false;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = i; j < a.cols(); ++j) {
            if (a(i, j) + a(j, i) != 0.0) return false;
        }
    }
    return true;
}

bool is_positive_definite(const Matrix& a, double rel_tol) {
    const EigenRange r = symmetric_eigen_range(a);
    const double scale = std::max(std::abs(r.max), std::numeric_limits<double>::min());
    return r.min > rel_tol * scale;
}

bool is_positive_semidefinite(const Matrix& a, double rel_tol) {
    const EigenRange r = symmetric_eigen_range(a);
    return r.min >= -rel_tol * std::abs(r.max);
}

int numerical_rank(const Matrix& g, double rank_tol) {
    if (g.size() == 0) return 0;
    const auto svd = Eigen::JacobiSVD<Matrix>(g);
    const auto& s = svd.singularValues();
    const double smax = s.size() ? s(0) : 0.0;
    if (smax == 0.0) return 0;
    int rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > rank_tol * smax) ++rank;
    }
    return rank;
}

Matrix left_pseudo_inverse(const Matrix& g, double rank_tol) {
    const auto svd = Eigen::JacobiSVD<Matrix>(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    const Eigen::Index k = s.size();
    if (k == 0 || s(0) == 0.0 || s(k - 1) <= rank_tol * s(0) || k < g.cols()) {
        throw SingularityError("input matrix is rank deficient (smallest/largest singular value " +
                               std::to_string(k ? s(k - 1) / std::max(s(0), 1e-300) : 0.0) + ")");
    }
    Matrix sinv = Matrix::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) sinv(i, i) = 1.0 / s(i);
    return svd.matrixV() * sinv * svd.matrixU().transpose();
}

Matrix left_null_space(const Matrix& g, double rank_tol) {
    const Eigen::Index n = g.rows();
    if (g.cols() == 0) return Matrix::Identity(n, n);
    const auto svd = full_svd(g);
    const auto& s = svd.singularValues();
    const double smax = s.size() ? s(0) : 0.0;
    Eigen::Index rank = 0;
    if (smax > 0.0) {
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            if (s(i) > rank_tol * smax) ++rank;
        }
    }
    return svd.matrixU().rightCols(n - rank);
}

Matrix block_diag(const Matrix& a, const Matrix& b) {
    Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
    out.topLeftCorner(a.rows(), a.cols()) = a;
    out.bottomRightCorner(b.rows(), b.cols()) = b;
    return out;
}

void require_size(const Vector& v, int expected, std::string_view what) {
    if (v.size() != expected) {
        throw DimensionError(std::string(what) + ": expected length " + std::to_string(expected) +
                             ", got " + std::to_string(v.size()));
    }
}

void require_shape(const Matrix& a, int rows, int cols, std::string_view what) {
    if (a.rows() != rows || a.cols() != cols) {
        throw DimensionError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                             std::to_string(cols) + ", got " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()));
    }
}

}  // namespace pbc
