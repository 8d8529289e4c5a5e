#include "pbc/apps.hpp"

#include "pbc/errors.hpp"

#include <cmath>

namespace pbc::apps {

namespace {

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw InvalidModelError(std::string(name) + " must be positive and finite");
    }
}

// Elementary 6x6 skew matrix with (i,k) = 1, (k,i) = -1 (1-based indices).
Matrix elementary(int i, int k) {
    Matrix J = Matrix::Zero(6, 6);
    J(i - 1, k - 1) = 1.0;
    J(k - 1, i - 1) = -1.0;
    return J;
}

}  // namespace

void BoostParams::validate() const {
    require_positive(L, "L");
    require_positive(C, "C");
    require_positive(R, "R");
    require_positive(G, "G");
    require_positive(v0, "v0");
    if (G0_hat < 0.0 || G0_actual < 0.0) throw InvalidModelError("G0 must be non-negative");
    if (!std::isfinite(i0_hat) || !std::isfinite(i0_actual)) {
        throw InvalidModelError("i0 must be finite");
    }
    if (!(0.0 <= u_min && u_min < u_max && u_max <= 1.0)) {
        throw InvalidModelError("modulation bounds must satisfy 0 <= u_min < u_max <= 1");
    }
}

void VscParams::validate() const {
    require_positive(L, "L");
    require_positive(C, "C");
    require_positive(R, "R");
    require_positive(G, "G");
    require_positive(omega, "omega");
    require_positive(V_d, "V_d");
    require_positive(V2_hat, "V2_hat");
    require_positive(V2_actual, "V2_actual");
    for (int k = 0; k < 3; ++k) {
        require_positive(R_T[static_cast<std::size_t>(k)], "R_T");
        require_positive(L_T[static_cast<std::size_t>(k)], "L_T");
    }
    require_positive(u_bound, "u_bound");
}

double VscParams::line_conductance() const {
    return 1.0 / R_T[0] + 1.0 / R_T[1] + 1.0 / R_T[2];
}

PHSystem build_boost(const BoostParams& p, Model which) {
    p.validate();
    const bool actual = which == Model::Actual;
    const double G0 = actual ? p.G0_actual : p.G0_hat;
    const double i0 = actual ? p.i0_actual : p.i0_hat;

    Matrix Q = Matrix::Zero(2, 2);
    Q(0, 0) = 1.0 / p.L;
    Q(1, 1) = 1.0 / p.C;
    Matrix R = Matrix::Zero(2, 2);
    R(0, 0) = p.R;
    R(1, 1) = p.G + G0;
    Matrix J0 = Matrix::Zero(2, 2);
    J0(0, 1) = -1.0;
    J0(1, 0) = 1.0;
    Matrix J1 = -J0;
    Vector E(2);
    E << p.v0, -i0;
    return PHSystem(Q, R, J0, {J1}, E);
}

PHSystem build_vsc(const VscParams& p, Model which) {
    p.validate();
    const double V2 = which == Model::Actual ? p.V2_actual : p.V2_hat;

    Matrix Q = Matrix::Zero(6, 6);
    Q(0, 0) = 1.0 / p.L;
    Q(1, 1) = 1.0 / p.L;
    Q(2, 2) = 1.0 / p.C;
    Matrix R = Matrix::Zero(6, 6);
    R(0, 0) = p.R;
    R(1, 1) = p.R;
    R(2, 2) = p.G;
    for (int k = 0; k < 3; ++k) {
        Q(3 + k, 3 + k) = 1.0 / p.L_T[static_cast<std::size_t>(k)];
        R(3 + k, 3 + k) = p.R_T[static_cast<std::size_t>(k)];
    }
    // Line coupling: the dc node receives +i_T, each branch sees -v1.
    Matrix J0 = p.L * p.omega * elementary(2, 1) + elementary(3, 4) + elementary(3, 5) +
                elementary(3, 6);
    Vector E = Vector::Zero(6);
    E(0) = -p.V_d;
    E(3) = V2;
    E(4) = V2;
    E(5) = V2;
    return PHSystem(Q, R, J0, {elementary(1, 3), elementary(2, 3)}, E);
}

Vector boost_state(const BoostParams& p, double i_L, double v_C) {
    Vector x(2);
    x << p.L * i_L, p.C * v_C;
    return x;
}

Vector vsc_state(const VscParams& p, double i_d, double i_q, double v1,
                 const std::array<double, 3>& i_T) {
    Vector x(6);
    x << p.L * i_d, p.L * i_q, p.C * v1, p.L_T[0] * i_T[0], p.L_T[1] * i_T[1],
        p.L_T[2] * i_T[2];
    return x;
}

Vector co_energy(const PHSystem& sys, const Vector& x) {
    require_size(x, sys.n(), "state");
    return sys.Q() * x;
}

std::vector<std::string> boost_labels() { return {"i_L_A", "v_C_V"}; }

std::vector<std::string> vsc_labels() {
    return {"i_d_A", "i_q_A", "v1_V", "i_T1_A", "i_T2_A", "i_T3_A"};
}

double vsc_current_from_power(const VscParams& p, double power_W) {
    return 2.0 * power_W / (3.0 * p.V_d);
}

}  // namespace pbc::apps
