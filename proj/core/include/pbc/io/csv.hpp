#pragma once

#include "pbc/phs.hpp"
#include "pbc/sim.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace pbc::io {

/// Header: time_s, the co-energy labels, u_1..u_m, y_1..y_m, hamiltonian_J and,
/// when any Lyapunov value was tracked, lyapunov_J.
std::vector<std::string> csv_header(const std::vector<std::string>& co_energy_labels, int m,
                                    bool with_lyapunov);

/// One row per stored sample. States are converted to co-energy variables with
/// the model's Q.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const PHSystem& sys,
                          const std::vector<std::string>& co_energy_labels);

}  // namespace pbc::io
