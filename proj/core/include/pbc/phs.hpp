#pragma once

// Bilinear port-Hamiltonian converter models
//
//     xdot = (J0 + sum_i Ji u_i - R) Q x + E
//
// with energy variables x (inductor fluxes, capacitor charges), Hamiltonian
// H(x) = x^T Q x / 2, constant interconnection J0, input-modulated
// interconnections Ji, dissipation R and constant sources E.

#include "pbc/linalg.hpp"

#include <vector>

namespace pbc {

class PHSystem {
public:
    /// Validates and stores the model. Q and R must be exactly symmetric and
    /// positive definite; J0 and every Ji must be exactly skew-symmetric.
    /// Skew matrices are rebuilt from their strict upper triangle, so the
    /// stored copies satisfy J + J^T == 0 bitwise.
    PHSystem(Matrix Q, Matrix R, Matrix J0, std::vector<Matrix> J, Vector E);

    /// Skew-symmetric matrix whose strict upper triangle is taken from `upper`
    /// (lower triangle and diagonal of `upper` are ignored).
    static Matrix skew_from_upper(const Matrix& upper);

    [[nodiscard]] int n() const noexcept { return n_; }
    [[nodiscard]] int m() const noexcept { return m_; }

    [[nodiscard]] const Matrix& Q() const noexcept { return Q_; }
    [[nodiscard]] const Matrix& R() const noexcept { return R_; }
    [[nodiscard]] const Matrix& J0() const noexcept { return J0_; }
    [[nodiscard]] const std::vector<Matrix>& J() const noexcept { return J_; }
    [[nodiscard]] const Matrix& J(int i) const { return J_.at(static_cast<std::size_t>(i)); }
    [[nodiscard]] const Vector& E() const noexcept { return E_; }

    /// Inverse of Q (the inertia matrix P: inductances and capacitances).
    [[nodiscard]] const Matrix& Q_inverse() const noexcept { return Q_inv_; }

    /// (J0 - R) Q, cached.
    [[nodiscard]] const Matrix& drift_matrix() const noexcept { return A0_; }

    /// Ji Q, cached.
    [[nodiscard]] const Matrix& input_matrix_factor(int i) const {
        return JQ_.at(static_cast<std::size_t>(i));
    }

    /// True when the structure matches rank g(x) = n - 1 for generic x
    /// (one fewer input than states), in which case the assignable set
    /// reduces to the scalar power-flow equation.
    [[nodiscard]] bool has_scalar_power_flow() const noexcept { return m_ == n_ - 1; }

    /// Copy with a different source vector.
    [[nodiscard]] PHSystem with_sources(Vector E) const;

    /// Copy with a different dissipation matrix.
    [[nodiscard]] PHSystem with_dissipation(Matrix R) const;

private:
    void validate_and_cache();

    int n_ = 0;
    int m_ = 0;
    Matrix Q_;
    Matrix R_;
    Matrix J0_;
    std::vector<Matrix> J_;
    Vector E_;
    Matrix Q_inv_;
    Matrix A0_;
    std::vector<Matrix> JQ_;
};

/// Terms of the power balance dH/dt = -dissipated + control + supplied, in watts.
struct PowerBalance {
    double stored = 0.0;
    double dissipated = 0.0;
    double control = 0.0;
    double supplied = 0.0;
};

/// Stored energy x^T Q x / 2 (joule).
double hamiltonian(const PHSystem& sys, const Vector& x);

/// Drift f(x) = (J0 - R) Q x + E.
Vector drift(const PHSystem& sys, const Vector& x);

/// Input matrix g(x); column i is Ji Q x.
Matrix input_matrix(const PHSystem& sys, const Vector& x);

/// Right-hand side f(x) + g(x) u.
Vector dynamics(const PHSystem& sys, const Vector& x, const Vector& u);

/// Passive output g(x_ref)^T Q x. Equals g(x_ref)^T Q (x - x_ref) because
/// g(x_ref)^T Q x_ref vanishes identically.
Vector passive_output(const PHSystem& sys, const Vector& x_ref, const Vector& x);

/// Power balance of the model at (x, u).
PowerBalance power_balance(const PHSystem& sys, const Vector& x, const Vector& u);

}  // namespace pbc
