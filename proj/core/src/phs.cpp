#include "pbc/phs.hpp"

#include "pbc/errors.hpp"

#include <string>
#include <utility>

namespace pbc {

PHSystem::PHSystem(Matrix Q, Matrix R, Matrix J0, std::vector<Matrix> J, Vector E)
    : n_(static_cast<int>(Q.rows())),
      m_(static_cast<int>(J.size())),
      Q_(std::move(Q)),
      R_(std::move(R)),
      J0_(std::move(J0)),
      J_(std::move(J)),
      E_(std::move(E)) {
    validate_and_cache();
}

Matrix PHSystem::skew_from_upper(const Matrix& upper) {
    if (upper.rows() != upper.cols()) {
        throw DimensionError("skew_from_upper: matrix is not square");
    }
    const Eigen::Index n = upper.rows();
    Matrix out = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            out(i, j) = upper(i, j);
            out(j, i) = -upper(i, j);
        }
    }
    return out;
}

void PHSystem::validate_and_cache() {
    if (n_ <= 0 || n_ > kMaxDim) {
        throw DimensionError("state dimension must be in [1, " + std::to_string(kMaxDim) + "]");
    }
    if (m_ <= 0 || m_ > n_) {
        throw DimensionError("number of inputs must be in [1, n]");
    }
    require_shape(Q_, n_, n_, "Q");
    require_shape(R_, n_, n_, "R");
    require_shape(J0_, n_, n_, "J0");
    for (int i = 0; i < m_; ++i) {
        require_shape(J_[static_cast<std::size_t>(i)], n_, n_, "J" + std::to_string(i + 1));
    }
    require_size(E_, n_, "E");

    if (!is_exactly_symmetric(Q_)) throw InvalidModelError("Q must be symmetric");
    if (!is_exactly_symmetric(R_)) throw InvalidModelError("R must be symmetric");
    if (!is_positive_definite(Q_)) throw InvalidModelError("Q must be positive definite");
    if (!is_positive_definite(R_)) throw InvalidModelError("R must be positive definite");
    if (!is_exactly_skew(J0_)) throw InvalidModelError("J0 must be skew-symmetric");
    J0_ = skew_from_upper(J0_);
    for (int i = 0; i < m_; ++i) {
        auto& Ji = J_[static_cast<std::size_t>(i)];
        if (!is_exactly_skew(Ji)) {
            throw InvalidModelError("J" + std::to_string(i + 1) + " must be skew-symmetric");
        }
        Ji = skew_from_upper(Ji);
    }
    if (!E_.allFinite()) throw InvalidModelError("E must be finite");

    Q_inv_ = Q_.inverse();
    A0_ = (J0_ - R_) * Q_;
    JQ_.clear();
    JQ_.reserve(J_.size());
    for (const auto& Ji : J_) JQ_.push_back(Ji * Q_);
}

PHSystem PHSystem::with_sources(Vector E) const {
    PHSystem copy = *this;
    require_size(E, n_, "E");
    if (!E.allFinite()) throw InvalidModelError("E must be finite");
    copy.E_ = std::move(E);
    return copy;
}

PHSystem PHSystem::with_dissipation(Matrix R) const {
    PHSystem copy = *this;
    require_shape(R, n_, n_, "R");
    if (!is_exactly_symmetric(R)) throw InvalidModelError("R must be symmetric");
    if (!is_positive_definite(R)) throw InvalidModelError("R must be positive definite");
    copy.R_ = std::move(R);
    copy.A0_ = (copy.J0_ - copy.R_) * copy.Q_;
    return copy;
}

double hamiltonian(const PHSystem& sys, const Vector& x) {
    require_size(x, sys.n(), "state");
    return 0.5 * x.dot(sys.Q() * x);
}

Vector drift(const PHSystem& sys, const Vector& x) {
    require_size(x, sys.n(), "state");
    return sys.drift_matrix() * x + sys.E();
}

Matrix input_matrix(const PHSystem& sys, const Vector& x) {
    require_size(x, sys.n(), "state");
    Matrix g(sys.n(), sys.m());
    for (int i = 0; i < sys.m(); ++i) g.col(i) = sys.input_matrix_factor(i) * x;
    return g;
}

Vector dynamics(const PHSystem& sys, const Vector& x, const Vector& u) {
    require_size(x, sys.n(), "state");
    require_size(u, sys.m(), "input");
    Vector xdot = sys.drift_matrix() * x + sys.E();
    for (int i = 0; i < sys.m(); ++i) xdot.noalias() += u(i) * (sys.input_matrix_factor(i) * x);
    return xdot;
}

Vector passive_output(const PHSystem& sys, const Vector& x_ref, const Vector& x) {
    require_size(x, sys.n(), "state");
    return input_matrix(sys, x_ref).transpose() * (sys.Q() * x);
}

PowerBalance power_balance(const PHSystem& sys, const Vector& x, const Vector& u) {
    require_size(u, sys.m(), "input");
    const Vector Qx = sys.Q() * x;
    PowerBalance pb;
    pb.dissipated = Qx.dot(sys.R() * Qx);
    pb.control = Qx.dot(input_matrix(sys, x) * u);
    pb.supplied = Qx.dot(sys.E());
    pb.stored = Qx.dot(dynamics(sys, x, u));
    return pb;
}

}  // namespace pbc
