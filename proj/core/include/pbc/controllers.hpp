#pragma once

// PID-PBC, leaky PID-PBC (PLID) and the monotone anti-windup variant.
//
//   y    = g(x*)^T Q x
//   x_c' = -y                                   PID
//   x_c' = -y - K_L K_I (x_c - x_c*)            PLID
//   x_c' = -y - K_L [w(K_I x_c) - w(K_I x_c*)]  mPLID
//   v    = -K_P y + K_I x_c - K_D g(x*)^T Q x'
//   u    = v  or  w(v)

#include "pbc/monotone.hpp"
#include "pbc/phs.hpp"

#include <optional>

namespace pbc {

enum class ControllerVariant { Pid, Plid, Mpid, Mplid };

const char* to_string(ControllerVariant v);

struct Gains {
    Matrix K_P;
    Matrix K_I;
    Matrix K_D;
    std::optional<Matrix> K_L;

    /// Scalar gains for single-input systems, or diagonal c*I for m inputs.
    static Gains diagonal(int m, double kp, double ki, double kd,
                          std::optional<double> kl = std::nullopt);

    /// K_I symmetric positive definite, K_P and K_D symmetric positive
    /// semidefinite, K_L symmetric positive semidefinite.
    void validate(int m) const;
};

class ControllerConfig {
public:
    /// Builds the controller around the reference x*, which must be assignable
    /// under the design (estimated) model. x_c* = K_I^-1 u(x*) and the monotone
    /// map, if any, is re-centred on u(x*).
    ControllerConfig(const PHSystem& design, Gains gains, Vector x_star,
                     std::optional<MonotoneMap> monotone = std::nullopt);

    [[nodiscard]] ControllerVariant variant() const noexcept;
    [[nodiscard]] int m() const noexcept { return static_cast<int>(u_star_.size()); }

    [[nodiscard]] const Gains& gains() const noexcept { return gains_; }
    [[nodiscard]] const Vector& x_star() const noexcept { return x_star_; }
    [[nodiscard]] const Vector& u_star() const noexcept { return u_star_; }
    [[nodiscard]] const Vector& x_c_star() const noexcept { return x_c_star_; }
    [[nodiscard]] const std::optional<MonotoneMap>& monotone() const noexcept { return monotone_; }

    /// g(x*) and g(x*)^T Q.
    [[nodiscard]] const Matrix& g_star() const noexcept { return g_star_; }
    [[nodiscard]] const Matrix& output_map() const noexcept { return Y_star_; }

    [[nodiscard]] ControllerConfig with_reference(const PHSystem& design, Vector x_star) const;
    [[nodiscard]] ControllerConfig with_gains(const PHSystem& design, Gains gains) const;

    /// Replaces the leakage reference (the default is K_I^-1 u(x*)).
    void set_x_c_star(Vector x_c_star);

private:
    Gains gains_;
    Vector x_star_;
    Vector u_star_;
    Vector x_c_star_;
    std::optional<MonotoneMap> monotone_;
    Matrix g_star_;
    Matrix Y_star_;
    Matrix K_I_inv_;
};

struct ControlEval {
    Vector u;
    Vector v;  // argument of the monotone map (equals u without one)
};

/// Control at (x, x_c). The derivative action is resolved exactly: without a
/// monotone map through (I + K_D g*^T Q g(x)) u = -K_P y + K_I x_c - K_D g*^T Q f(x);
/// with one by Newton iteration on v = c - K_D g*^T Q g(x) w(v).
/// `v_hint` warm-starts the iteration.
ControlEval control_output(const ControllerConfig& cfg, const PHSystem& sys, const Vector& x,
                           const Vector& x_c, const Vector* v_hint = nullptr);

/// Integrator right-hand side x_c'.
Vector integrator_rhs(const ControllerConfig& cfg, const Vector& x, const Vector& x_c);

/// Droop slope K_P + K_L^-1. Throws InvalidModelError without a leakage gain
/// and SingularityError when K_L is singular.
Matrix droop_slope(const ControllerConfig& cfg);

struct ClosedLoopEval {
    Vector x_dot;
    Vector x_c_dot;
    ControlEval control;
};

ClosedLoopEval closed_loop(const ControllerConfig& cfg, const PHSystem& sys, const Vector& x,
                           const Vector& x_c, const Vector* v_hint = nullptr);

/// Jacobian of the closed-loop vector field with respect to (x, x_c), given
/// the control already solved at that point.
Matrix closed_loop_jacobian(const ControllerConfig& cfg, const PHSystem& sys, const Vector& x,
                            const Vector& x_c, const ControlEval& control);

}  // namespace pbc
