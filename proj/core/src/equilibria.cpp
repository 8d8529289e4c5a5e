#include "pbc/equilibria.hpp"

#include "pbc/errors.hpp"

#include <cmath>
#include <sstream>

namespace pbc {

Vector equilibrium_control(const PHSystem& sys, const Vector& x_bar) {
    const Matrix g = input_matrix(sys, x_bar);
    return -(left_pseudo_inverse(g) * drift(sys, x_bar));
}

double assignability_residual(const PHSystem& sys, const Vector& x) {
    require_size(x, sys.n(), "state");
    if (sys.has_scalar_power_flow()) {
        const Vector Qx = sys.Q() * x;
        return std::abs(-Qx.dot(sys.R() * Qx) + sys.E().dot(Qx));
    }
    const Matrix N = left_null_space(input_matrix(sys, x));
    if (N.cols() == 0) return 0.0;
    return (N.transpose() * drift(sys, x)).norm();
}

EquilibriumPoint make_equilibrium(const PHSystem& sys, const Vector& x_bar, double tol) {
    EquilibriumPoint eq;
    eq.x_bar = x_bar;
    eq.residual = assignability_residual(sys, x_bar);
    if (!(eq.residual <= tol)) {
        std::ostringstream msg;
        msg << "state is not an assignable equilibrium (residual " << eq.residual
            << " > " << tol << ")";
        throw InfeasibleError(msg.str());
    }
    eq.u_bar = equilibrium_control(sys, x_bar);
    return eq;
}

PowerFlowReport gamma_report(const PHSystem& sys_actual, const Vector& x_star) {
    require_size(x_star, sys_actual.n(), "reference");
    const Vector Qx = sys_actual.Q() * x_star;
    PowerFlowReport r;
    r.p_loss = Qx.dot(sys_actual.R() * Qx);
    r.p_net = sys_actual.E().dot(Qx);
    if (!(r.p_loss > 0.0)) throw InvalidModelError("gamma: reference has zero dissipated power");
    r.gamma = r.p_net / r.p_loss;
    r.delta_x = std::abs(r.gamma - 1.0);
    r.stable = r.gamma > 0.0;
    r.delta_x_bar = r.stable ? r.delta_x / r.gamma : INFINITY;
    return r;
}

ZeroDynamics zero_dynamics_coeffs(const PHSystem& sys, const Vector& x_star) {
    const Vector Qx = sys.Q() * x_star;
    return {hamiltonian(sys, x_star), Qx.dot(sys.R() * Qx), sys.E().dot(Qx)};
}

bool input_feasibility(const PHSystem& sys, double gamma, const Vector& x_star,
                       const Vector& u_min, const Vector& u_max) {
    require_size(u_min, sys.m(), "u_min");
    require_size(u_max, sys.m(), "u_max");
    const Vector u = equilibrium_control(sys, gamma * x_star);
    for (int i = 0; i < sys.m(); ++i) {
        if (!(u(i) >= u_min(i) && u(i) <= u_max(i))) return false;
    }
    return true;
}

double solve_boost_powerflow(const apps::BoostParams& p, double v_C, apps::Model which) {
    p.validate();
    const bool actual = which == apps::Model::Actual;
    const double G0 = actual ? p.G0_actual : p.G0_hat;
    const double i0 = actual ? p.i0_actual : p.i0_hat;
    // -R i^2 + v0 i - c = 0
    const double c = (p.G + G0) * v_C * v_C + i0 * v_C;
    const double disc = p.v0 * p.v0 - 4.0 * p.R * c;
    if (disc < 0.0) {
        std::ostringstream msg;
        msg << "boost: output voltage " << v_C << " V is not reachable (discriminant " << disc
            << ")";
        throw InfeasibleError(msg.str());
    }
    // Low root, written without cancellation.
    return 2.0 * c / (p.v0 + std::sqrt(disc));
}

Vector boost_reference(const apps::BoostParams& p, double v_C, apps::Model which) {
    return apps::boost_state(p, solve_boost_powerflow(p, v_C, which), v_C);
}

VscPowerFlow solve_vsc_powerflow(const apps::VscParams& p, double i_d, double i_q,
                                 apps::Model which) {
    p.validate();
    const double V2 = which == apps::Model::Actual ? p.V2_actual : p.V2_hat;
    const double sigma = p.line_conductance();
    // (G + sigma) v1^2 - sigma V2 v1 + R |i|^2 + V_d i_d = 0
    const double a = p.G + sigma;
    const double b = sigma * V2;
    const double c = p.R * (i_d * i_d + i_q * i_q) + p.V_d * i_d;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) {
        std::ostringstream msg;
        msg << "vsc: currents (" << i_d << ", " << i_q << ") A admit no dc voltage (discriminant "
            << disc << ")";
        throw InfeasibleError(msg.str());
    }
    VscPowerFlow pf;
    pf.v1 = (b + std::sqrt(disc)) / (2.0 * a);
    for (std::size_t k = 0; k < 3; ++k) pf.i_T[k] = (V2 - pf.v1) / p.R_T[k];
    return pf;
}

Vector vsc_reference(const apps::VscParams& p, double i_d, double i_q, apps::Model which) {
    const VscPowerFlow pf = solve_vsc_powerflow(p, i_d, i_q, which);
    return apps::vsc_state(p, i_d, i_q, pf.v1, pf.i_T);
}

double vsc_powerflow_residual(const apps::VscParams& p, const Vector& x, apps::Model which) {
    require_size(x, 6, "vsc state");
    const double V2 = which == apps::Model::Actual ? p.V2_actual : p.V2_hat;
    const double sigma = p.line_conductance();
    const double i_d = x(0) / p.L;
    const double i_q = x(1) / p.L;
    const double v1 = x(2) / p.C;
    return std::abs(-p.R * (i_d * i_d + i_q * i_q) - (p.G + sigma) * v1 * v1 - p.V_d * i_d +
                    sigma * v1 * V2);
}

VscGammaReport vsc_gamma(const apps::VscParams& p, const Vector& x_star) {
    require_size(x_star, 6, "vsc reference");
    const double sigma = p.line_conductance();
    const double i_d = x_star(0) / p.L;
    const double i_q = x_star(1) / p.L;
    const double v1 = x_star(2) / p.C;
    VscGammaReport out;
    PowerFlowReport& r = out.report;
    r.p_loss = p.R * (i_d * i_d + i_q * i_q) + (p.G + sigma) * v1 * v1;
    r.p_net = -p.V_d * i_d + sigma * v1 * p.V2_actual;
    if (!(r.p_loss > 0.0)) throw InvalidModelError("vsc_gamma: reference has zero losses");
    r.gamma = r.p_net / r.p_loss;
    r.delta_x = std::abs(r.gamma - 1.0);
    r.stable = r.gamma > 0.0;
    r.delta_x_bar = r.stable ? r.delta_x / r.gamma : INFINITY;
    out.delta_x_approx = std::abs(p.V2_actual - p.V2_hat) / v1;
    return out;
}

}  // namespace pbc
