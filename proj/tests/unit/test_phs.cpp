#include "pbc/apps.hpp"
#include "pbc/errors.hpp"
#include "pbc/phs.hpp"

#include "../support/oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace pbc;
using Catch::Approx;

namespace {

PHSystem tiny_system() {
    Matrix Q = Matrix::Identity(2, 2);
    Matrix R = Matrix::Identity(2, 2);
    Matrix J0 = Matrix::Zero(2, 2);
    Matrix J1(2, 2);
    J1 << 0, 1, -1, 0;
    Vector E = Vector::Zero(2);
    return PHSystem(Q, R, J0, {J1}, E);
}

}  // namespace

TEST_CASE("construction rejects malformed models", "[phs]") {
    Matrix Q = Matrix::Identity(2, 2);
    Matrix R = Matrix::Identity(2, 2);
    Matrix J0 = Matrix::Zero(2, 2);
    Matrix J1(2, 2);
    J1 << 0, 1, -1, 0;
    Vector E = Vector::Zero(2);

    SECTION("asymmetric Q") {
        Matrix Qb = Q;
        Qb(0, 1) = 1e-3;
        CHECK_THROWS_AS(PHSystem(Qb, R, J0, {J1}, E), InvalidModelError);
    }
    SECTION("indefinite R") {
        Matrix Rb = R;
        Rb(1, 1) = -1.0;
        CHECK_THROWS_AS(PHSystem(Q, Rb, J0, {J1}, E), InvalidModelError);
    }
    SECTION("singular R") {
        Matrix Rb = R;
        Rb(1, 1) = 0.0;
        CHECK_THROWS_AS(PHSystem(Q, Rb, J0, {J1}, E), InvalidModelError);
    }
    SECTION("non-skew J") {
        Matrix Jb = J1;
        Jb(1, 0) = -0.5;
        CHECK_THROWS_AS(PHSystem(Q, R, J0, {Jb}, E), InvalidModelError);
    }
    SECTION("wrong source length") {
        CHECK_THROWS_AS(PHSystem(Q, R, J0, {J1}, Vector::Zero(3)), DimensionError);
    }
    SECTION("no inputs") {
        CHECK_THROWS_AS(PHSystem(Q, R, J0, {}, E), DimensionError);
    }
}

TEST_CASE("stored interconnections are exactly skew", "[phs]") {
    const PHSystem vsc = apps::build_vsc(apps::VscParams{});
    CHECK((vsc.J0() + vsc.J0().transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (const Matrix& J : vsc.J()) {
        CHECK((J + J.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("hamiltonian", "[phs]") {
    const apps::BoostParams p;
    const PHSystem sys = apps::build_boost(p);
    CHECK(hamiltonian(sys, Vector::Zero(2)) == 0.0);

    const Vector x = apps::boost_state(p, 74.3, 380.0);
    // 0.5 (1.12e-3 * 74.3^2 + 6.8e-3 * 380^2)
    CHECK(hamiltonian(sys, x) == Approx(494.0514744).epsilon(1e-12));
    CHECK(hamiltonian(sys, 2.0 * x) == Approx(4.0 * hamiltonian(sys, x)).epsilon(1e-15));
    CHECK_THROWS_AS(hamiltonian(sys, Vector::Zero(3)), DimensionError);
}

TEST_CASE("drift and input matrix", "[phs]") {
    const apps::BoostParams p;
    const PHSystem sys = apps::build_boost(p);
    CHECK(drift(sys, Vector::Zero(2)) == sys.E());

    const Vector x = apps::boost_state(p, 50.0, 300.0);
    const Matrix g = input_matrix(sys, x);
    CHECK(g(0, 0) == Approx(300.0).epsilon(1e-14));
    CHECK(g(1, 0) == Approx(-50.0).epsilon(1e-14));
    CHECK(input_matrix(sys, Vector::Zero(2)).isZero(0.0));

    const PHSystem t = tiny_system();
    Matrix Rz = Matrix::Identity(2, 2);
    CHECK(drift(t, Vector::Ones(2)) == -Vector::Ones(2));
    CHECK_NOTHROW(t.with_dissipation(2.0 * Rz));
}

TEST_CASE("boost model reproduces the circuit equations", "[phs]") {
    apps::BoostParams p;
    p.i0_actual = 31.0;
    p.G0_actual = 0.02;
    const PHSystem sys = apps::build_boost(p);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> di(0.0, 200.0), dv(50.0, 500.0), du(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        const double i = di(rng), v = dv(rng), u = du(rng);
        const Vector xd = dynamics(sys, apps::boost_state(p, i, v), Vector::Constant(1, u));
        const auto ref = oracle::boost_rates(p, i, v, u);
        // xdot = (L di/dt, C dv/dt)
        CHECK(xd(0) / p.L == Approx(ref[0]).epsilon(1e-12).margin(1e-9));
        CHECK(xd(1) / p.C == Approx(ref[1]).epsilon(1e-12).margin(1e-9));
    }
}

TEST_CASE("vsc model reproduces the terminal and line equations", "[phs]") {
    apps::VscParams p;
    p.V2_actual = 0.97 * p.V2_hat;
    const PHSystem sys = apps::build_vsc(p);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> cur(-3000.0, 3000.0), volt(6e5, 9e5), u(-0.7, 0.7);
    for (int k = 0; k < 50; ++k) {
        const std::array<double, 6> c{cur(rng), cur(rng), volt(rng), cur(rng), cur(rng), cur(rng)};
        const double ud = u(rng), uq = u(rng);
        const Vector x = apps::vsc_state(p, c[0], c[1], c[2], {c[3], c[4], c[5]});
        Vector uu(2);
        uu << ud, uq;
        const Vector xd = dynamics(sys, x, uu);
        const auto ref = oracle::vsc_rates(p, c, ud, uq);
        const double scale[6] = {p.L, p.L, p.C, p.L_T[0], p.L_T[1], p.L_T[2]};
        for (int j = 0; j < 6; ++j) {
            CHECK(xd(j) / scale[j] == Approx(ref[static_cast<std::size_t>(j)]).epsilon(1e-11).margin(1e-6));
        }
    }
    // input matrix rows (v1 I2; -i_dq^T; 0)
    const Vector x = apps::vsc_state(p, 10.0, -4.0, 7e5, {1.0, 2.0, 3.0});
    const Matrix g = input_matrix(sys, x);
    CHECK(g(0, 0) == Approx(7e5));
    CHECK(g(1, 1) == Approx(7e5));
    CHECK(g(0, 1) == 0.0);
    CHECK(g(2, 0) == Approx(-10.0));
    CHECK(g(2, 1) == Approx(4.0));
    CHECK(g.bottomRows(3).isZero(0.0));
}

TEST_CASE("passive output vanishes at the reference", "[phs]") {
    const apps::VscParams p;
    const PHSystem sys = apps::build_vsc(p);
    const Vector xr = apps::vsc_state(p, 2500.0, 100.0, 7.7e5, {1.0, 20.0, 150.0});
    const Vector y = passive_output(sys, xr, xr);
    CHECK(std::abs(y(0)) <= 1e-12 * 2500.0 * 7.7e5);
    CHECK(std::abs(y(1)) <= 1e-12 * 2500.0 * 7.7e5);

    // (v1* i_d - i_d* v1, v1* i_q - i_q* v1)
    const Vector x = apps::vsc_state(p, 2000.0, -50.0, 7.5e5, {0, 0, 0});
    const Vector y2 = passive_output(sys, xr, x);
    CHECK(y2(0) == Approx(7.7e5 * 2000.0 - 2500.0 * 7.5e5).epsilon(1e-12));
    CHECK(y2(1) == Approx(7.7e5 * -50.0 - 100.0 * 7.5e5).epsilon(1e-12));

    const apps::BoostParams b;
    const PHSystem bs = apps::build_boost(b);
    const Vector yb = passive_output(bs, apps::boost_state(b, 74.0, 380.0), apps::boost_state(b, 60.0, 350.0));
    CHECK(yb(0) == Approx(380.0 * 60.0 - 74.0 * 350.0).epsilon(1e-12));
}

TEST_CASE("power balance closes and the control term vanishes", "[phs]") {
    const apps::BoostParams p;
    const PHSystem sys = apps::build_boost(p);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        const Vector x = apps::boost_state(p, 100.0 * d(rng), 400.0 * d(rng));
        const Vector u = Vector::Constant(1, d(rng));
        const PowerBalance pb = power_balance(sys, x, u);
        CHECK(std::abs(pb.control) <= 1e-12 * (std::abs(pb.dissipated) + std::abs(pb.supplied) + 1.0));
        CHECK(pb.stored == Approx(-pb.dissipated + pb.control + pb.supplied).epsilon(1e-10).margin(1e-9));
    }
    const PowerBalance zero = power_balance(sys, Vector::Zero(2), Vector::Zero(1));
    CHECK(zero.stored == 0.0);
    CHECK(zero.dissipated == 0.0);
    CHECK(zero.control == 0.0);
    CHECK(zero.supplied == 0.0);
}

TEST_CASE("dynamics is affine in the input", "[phs]") {
    const apps::VscParams p;
    const PHSystem sys = apps::build_vsc(p);
    const Vector x = apps::vsc_state(p, 1500.0, 300.0, 7.6e5, {-2.0, -50.0, -400.0});
    Vector u1(2), u2(2);
    u1 << 0.3, -0.1;
    u2 << -0.5, 0.6;
    const double a = 0.37;
    const Vector lhs = dynamics(sys, x, a * u1 + (1 - a) * u2);
    const Vector rhs = a * dynamics(sys, x, u1) + (1 - a) * dynamics(sys, x, u2);
    CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
}
