#include "pbc/io/report.hpp"

#include <sstream>

namespace pbc::io {

std::string certificate_statement(ControllerVariant variant) {
    switch (variant) {
        case ControllerVariant::Pid:
            return "For some eps > 0: Q_eps = [Q^-1 + g K_D g^T, -eps g; -eps g^T, K_I^-1] > 0 and\n"
                   "D_eps(u) > 0 for every u in the input box; then V_eps decays at least as\n"
                   "exp(-alpha t) with alpha = 2 lambda_min(D_eps) / lambda_max(Q_eps).";
        case ControllerVariant::Plid:
            return "R + K_P' > 0, Q^-1 + K_D' > 0 and\n"
                   "K_L > 1/4 (g(x*) - g(x_bar))^T (R + K_P')^-1 (g(x*) - g(x_bar)),\n"
                   "with K' = (g(x_bar) K g(x*)^T + g(x*) K g(x_bar)^T) / 2.";
        case ControllerVariant::Mpid:
        case ControllerVariant::Mplid:
            return "M2 = w'(K_I x_c_bar) nonsingular, R + Kbar_P > 0, Q^-1 + Kbar_D > 0 and\n"
                   "M2 K_L M2 > 1/4 (g(x*) M2 - g(x_bar) M1)^T (R + Kbar_P)^-1 (g(x*) M2 - g(x_bar) M1),\n"
                   "with M1 = w'(-K_P y_bar + K_I x_c_bar).";
    }
    return {};
}

std::string format_certificate(const StabilityCertificate& c) {
    std::ostringstream out;
    out.precision(6);
    out << "certificate: " << to_string(c.variant) << '\n';
    out << certificate_statement(c.variant) << "\n\n";
    for (const Margin& m : c.margins) {
        out << "[" << (m.positive() ? "pass" : "FAIL") << "] " << m.name << '\n';
        out << "    lambda_min = " << m.min_eigenvalue << "  (threshold " << m.threshold << ")\n";
    }
    if (c.variant == ControllerVariant::Pid) out << "epsilon = " << c.epsilon << '\n';
    out << "alpha = " << c.alpha << " 1/s\n";
    out << "verdict: " << (c.satisfied ? "satisfied" : "not satisfied");
    if (!c.failure.empty()) out << " (" << c.failure << ")";
    out << '\n';
    return out.str();
}

std::string format_power_flow(const PowerFlowReport& r) {
    std::ostringstream out;
    out.precision(10);
    out << "p_loss_W = " << r.p_loss << '\n'
        << "p_net_W = " << r.p_net << '\n'
        << "gamma = " << r.gamma << '\n'
        << "delta_x = " << r.delta_x << '\n'
        << "delta_x_bar = " << r.delta_x_bar << '\n'
        << "stable = " << (r.stable ? "yes" : "no") << '\n';
    return out.str();
}

}  // namespace pbc::io
