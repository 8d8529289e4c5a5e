#pragma once

// Assignable equilibria, equilibrium controls and the robustness scalar gamma.

#include "pbc/apps.hpp"
#include "pbc/phs.hpp"

#include <array>

namespace pbc {

struct EquilibriumPoint {
    Vector x_bar;
    Vector u_bar;
    double residual = 0.0;
};

struct PowerFlowReport {
    double p_loss = 0.0;   // W, x*^T Q R Q x*
    double p_net = 0.0;    // W, E^T Q x*
    double gamma = 0.0;
    double delta_x = 0.0;  // |gamma - 1|, deviation per unit of the reference
    /// |gamma - 1| / gamma: the same deviation expressed per unit of the
    /// reached steady state x_bar = gamma x*.
    double delta_x_bar = 0.0;
    bool stable = false;   // gamma > 0
};

struct ZeroDynamics {
    double H_star = 0.0;
    double p_loss = 0.0;
    double p_net = 0.0;
};

/// u_bar = -g^+(x_bar) f(x_bar). Throws SingularityError when g(x_bar) is rank deficient.
Vector equilibrium_control(const PHSystem& sys, const Vector& x_bar);

/// Distance of x from the assignable set. With one input fewer than states this
/// is the power-flow mismatch |-x^T Q R Q x + E^T Q x| (W); otherwise the norm
/// of the projection of f(x) on the left null space of g(x).
double assignability_residual(const PHSystem& sys, const Vector& x);

/// Equilibrium point with control and residual. Throws InfeasibleError when the
/// residual exceeds `tol`.
EquilibriumPoint make_equilibrium(const PHSystem& sys, const Vector& x_bar, double tol);

/// Loss and net supplied power of the actual model at the reference x*, and
/// gamma = p_net / p_loss. Throws InvalidModelError when x* = 0.
PowerFlowReport gamma_report(const PHSystem& sys_actual, const Vector& x_star);

/// Coefficients of H(x*) zeta' = -p_loss zeta + p_net.
ZeroDynamics zero_dynamics_coeffs(const PHSystem& sys, const Vector& x_star);

/// True when equilibrium_control(gamma x*) lies inside [u_min, u_max].
bool input_feasibility(const PHSystem& sys, double gamma, const Vector& x_star,
                       const Vector& u_min, const Vector& u_max);

/// Inductor current of the boost at output voltage v_C (low-current root of the
/// power-flow quadratic) under the selected load model.
/// Throws InfeasibleError when the discriminant is negative.
double solve_boost_powerflow(const apps::BoostParams& p, double v_C,
                             apps::Model which = apps::Model::Estimated);

/// Full boost reference x* = (L i_L*, C v_C*) on the selected power flow.
Vector boost_reference(const apps::BoostParams& p, double v_C,
                       apps::Model which = apps::Model::Estimated);

struct VscPowerFlow {
    double v1 = 0.0;
    std::array<double, 3> i_T{};
};

/// dc voltage (root nearest V2) and line currents for given (i_d, i_q).
VscPowerFlow solve_vsc_powerflow(const apps::VscParams& p, double i_d, double i_q,
                                 apps::Model which = apps::Model::Estimated);

/// Full VSC reference vector on the selected power flow.
Vector vsc_reference(const apps::VscParams& p, double i_d, double i_q,
                     apps::Model which = apps::Model::Estimated);

/// Scalar VSC power-flow mismatch (W) at the state x.
double vsc_powerflow_residual(const apps::VscParams& p, const Vector& x,
                              apps::Model which = apps::Model::Estimated);

struct VscGammaReport {
    PowerFlowReport report;
    double delta_x_approx = 0.0;  // |V2 - V2_hat| / v1*
};

/// gamma of the VSC terminal against the actual V2, from the closed form of the
/// (i_dq, v1) components.
VscGammaReport vsc_gamma(const apps::VscParams& p, const Vector& x_star);

}  // namespace pbc
