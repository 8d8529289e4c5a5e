#pragma once

// Application models: a dc/dc boost converter feeding a ZI load and a
// two-level VSC terminal attached to a three-branch HVDC line.

#include "pbc/phs.hpp"

#include <array>
#include <string>
#include <vector>

namespace pbc::apps {

/// Which parameter set a model is built from. Controllers are designed on the
/// estimated twin; the plant runs on the actual one.
enum class Model { Estimated, Actual };

struct BoostParams {
    double L = 1.12e-3;     // H
    double C = 6.8e-3;      // F
    double R = 10e-3;       // ohm
    double G = 50e-3;       // S
    double v0 = 278.0;      // V
    double G0_hat = 40e-3;  // S
    double G0_actual = 40e-3;
    double i0_hat = 20.0;   // A
    double i0_actual = 20.0;
    double u_min = 0.1;
    double u_max = 0.9;

    void validate() const;
};

struct VscParams {
    double L = 78.2e-3;         // H
    double C = 37.32e-6;        // F
    double R = 0.65;            // ohm
    double G = 1e-6;            // S
    double omega = 2.0 * 3.14159265358979323846 * 50.0;  // rad/s
    double V_d = 310.27e3;      // V
    double V2_hat = 775e3;      // V
    double V2_actual = 775e3;
    std::array<double, 3> R_T{530.96, 24.35, 3.20};           // ohm
    std::array<double, 3> L_T{120.3e-3, 60.4e-3, 559.6e-3};   // H
    double u_bound = 2.0 / 3.0;

    void validate() const;

    /// Sum of the line branch conductances, 1^T R_T^-1 1.
    [[nodiscard]] double line_conductance() const;
};

PHSystem build_boost(const BoostParams& p, Model which = Model::Actual);
PHSystem build_vsc(const VscParams& p, Model which = Model::Actual);

/// Energy variables from co-energy variables.
Vector boost_state(const BoostParams& p, double i_L, double v_C);
Vector vsc_state(const VscParams& p, double i_d, double i_q, double v1,
                 const std::array<double, 3>& i_T);

/// Co-energy variables Qx (currents and voltages).
Vector co_energy(const PHSystem& sys, const Vector& x);

/// Column labels of the co-energy variables, with units.
std::vector<std::string> boost_labels();
std::vector<std::string> vsc_labels();

/// Active power P = 3/2 V_d i_d inverted for i_d (and likewise Q for i_q).
double vsc_current_from_power(const VscParams& p, double power_W);

}  // namespace pbc::apps
