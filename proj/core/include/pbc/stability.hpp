#pragma once

// Stability certificates for the three controller families and the matching
// Lyapunov functions.

#include "pbc/apps.hpp"
#include "pbc/controllers.hpp"
#include "pbc/phs.hpp"

#include <string>
#include <vector>

namespace pbc {

struct Margin {
    std::string name;
    double min_eigenvalue = 0.0;
    double threshold = 0.0;  // roundoff floor used for the pass decision
    [[nodiscard]] bool positive() const { return min_eigenvalue > threshold; }
};

struct StabilityCertificate {
    ControllerVariant variant = ControllerVariant::Pid;
    bool satisfied = false;
    std::vector<Margin> margins;
    double epsilon = 0.0;
    double alpha = 0.0;  // 1/s
    std::string failure;  // empty, or the first violated condition
};

struct InputBox {
    Vector lo;
    Vector hi;
};

/// Searches the cross-term weight epsilon that maximizes the certified rate
/// 2 lambda_min(D_eps) / lambda_max(Q_eps) for the PID-PBC around x_bar, with
/// D_eps checked at every vertex of the input box.
/// Throws InfeasibleError when x_bar is not assignable under `sys`.
StabilityCertificate pid_certificate(const PHSystem& sys, const ControllerConfig& cfg,
                                     const Vector& x_bar, const InputBox& u_box);

/// Same matrices at a fixed epsilon (minimum of lambda_min(D) over the box vertices).
StabilityCertificate pid_certificate_at(const PHSystem& sys, const ControllerConfig& cfg,
                                        const Vector& x_bar, const InputBox& u_box,
                                        double epsilon);

/// Leaky PID-PBC conditions at the closed-loop equilibrium x_bar with
/// reference x_star (taken from cfg).
StabilityCertificate plid_certificate(const PHSystem& sys, const ControllerConfig& cfg,
                                      const Vector& x_bar);

/// Monotone leaky PID-PBC conditions. x_c_bar is the integrator equilibrium.
/// M2 singular is reported with failure = "M2 singular".
StabilityCertificate mplid_certificate(const PHSystem& sys, const ControllerConfig& cfg,
                                       const Vector& x_bar, const Vector& x_c_bar);

/// Integrator state at a closed-loop equilibrium x_bar of the plant `sys`,
/// recovered from u_bar = u(x_bar): K_I x_c = w^-1(u_bar) + K_P y(x_bar).
Vector equilibrium_controller_state(const PHSystem& sys, const ControllerConfig& cfg,
                                    const Vector& x_bar);

struct ClosedLoopEquilibrium {
    Vector x;
    Vector x_c;
    Vector u;
    int iterations = 0;
};

/// Newton solve of the closed-loop equilibrium starting from (x_guess, x_c_guess).
/// Throws ConvergenceError.
ClosedLoopEquilibrium closed_loop_equilibrium(const PHSystem& sys, const ControllerConfig& cfg,
                                              const Vector& x_guess, const Vector& x_c_guess);

/// Tries x*, then gamma x* (gamma of the actual model) as starting points.
ClosedLoopEquilibrium closed_loop_equilibrium(const PHSystem& sys, const ControllerConfig& cfg);

/// Lyapunov function of a given variant, centred on (x_bar, x_c_bar).
///   PID:   V_eps = z^T Q_eps z / 2, z = (Q x~, K_I x_c~)
///   PLID:  x~^T Q (Q^-1 + K_D') Q x~ / 2 + x_c~^T K_I x_c~ / 2
///   mPLID: H(x~) + x~^T Q Kbar_D Q x~ / 2 + int_0^{x_c~} [w(K_I s + K_I x_c_bar) - w(K_I x_c_bar)] ds
class LyapunovFunction {
public:
    LyapunovFunction(ControllerVariant variant, const PHSystem& sys, const ControllerConfig& cfg,
                     Vector x_bar, Vector x_c_bar, double epsilon = 0.0);

    [[nodiscard]] double operator()(const Vector& x, const Vector& x_c) const;
    [[nodiscard]] ControllerVariant variant() const noexcept { return variant_; }

private:
    ControllerVariant variant_;
    Vector x_bar_;
    Vector x_c_bar_;
    Matrix Q_;
    Matrix P_;  // quadratic weight in the variant's coordinates
    Matrix K_I_;
    std::optional<MonotoneMap> w_;
};

/// Largest tolerable underestimate of V2 according to the conservative display
/// [R |i*|^2 + G v1*^2] / (sigma v1*), sigma = 1^T R_T^-1 1.
double vsc_margin(const apps::VscParams& p, const Vector& x_star);

/// The exact gamma > 0 boundary [R |i*|^2 + (G + sigma) v1*^2] / (sigma v1*),
/// assuming x* lies on the estimated power flow.
double vsc_margin_exact(const apps::VscParams& p, const Vector& x_star);

/// Leakage lower bound for the boost with K_P = K_D = 0:
/// [R (i_L* - i_L_bar)^2 + G (v_C* - v_C_bar)^2] / (4 R G).
double boost_leakage_bound(const apps::BoostParams& p, const Vector& x_star, const Vector& x_bar);

}  // namespace pbc
