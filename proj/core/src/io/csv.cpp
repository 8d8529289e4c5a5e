#include "pbc/io/csv.hpp"

#include <cmath>
#include <ostream>

namespace pbc::io {

std::vector<std::string> csv_header(const std::vector<std::string>& labels, int m,
                                    bool with_lyapunov) {
    std::vector<std::string> h{"time_s"};
    h.insert(h.end(), labels.begin(), labels.end());
    for (int i = 1; i <= m; ++i) h.push_back("u_" + std::to_string(i));
    for (int i = 1; i <= m; ++i) h.push_back("y_" + std::to_string(i));
    h.push_back("hamiltonian_J");
    if (with_lyapunov) h.push_back("lyapunov_J");
    return h;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const PHSystem& sys,
                          const std::vector<std::string>& labels) {
    bool lyap = false;
    for (double v : traj.lyapunov) lyap = lyap || std::isfinite(v);
    const auto header = csv_header(labels, sys.m(), lyap);
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    const auto old_prec = out.precision(12);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        out << traj.times[k];
        const Vector co = sys.Q() * traj.states[k];
        for (Eigen::Index i = 0; i < co.size(); ++i) out << ',' << co(i);
        for (Eigen::Index i = 0; i < traj.controls[k].size(); ++i) out << ',' << traj.controls[k](i);
        for (Eigen::Index i = 0; i < traj.outputs[k].size(); ++i) out << ',' << traj.outputs[k](i);
        out << ',' << traj.hamiltonian[k];
        if (lyap) out << ',' << traj.lyapunov[k];
        out << '\n';
    }
    out.precision(old_prec);
}

}  // namespace pbc::io
