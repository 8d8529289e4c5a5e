#include "pbc/apps.hpp"
#include "pbc/equilibria.hpp"
#include "pbc/errors.hpp"
#include "pbc/stability.hpp"

#include "../support/oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

using namespace pbc;
using Catch::Approx;

namespace {

InputBox boost_box() { return {Vector::Constant(1, 0.0), Vector::Constant(1, 1.0)}; }

double eig_min(const Eigen::Matrix3d& a) { return Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(a).eigenvalues().minCoeff(); }
double eig_max(const Eigen::Matrix3d& a) { return Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(a).eigenvalues().maxCoeff(); }

// Boost PID certificate matrices restated in circuit terms with fixed-size Eigen:
// g = (v_C, -i_L) for the averaged boost, Q = diag(1/L, 1/C).
double boost_pid_rate(const apps::BoostParams& p, double iL, double vC, double kp, double ki, double kd,
                      double eps) {
    const Eigen::Vector2d g(vC, -iL);
    const Eigen::Matrix2d Q = Eigen::Vector2d(1 / p.L, 1 / p.C).asDiagonal();
    const Eigen::Matrix2d R = Eigen::Vector2d(p.R, p.G + p.G0_actual).asDiagonal();
    Eigen::Matrix3d Qe;
    Qe.topLeftCorner<2, 2>() = Q.inverse() + kd * g * g.transpose();
    Qe.topRightCorner<2, 1>() = -eps * g;
    Qe.bottomLeftCorner<1, 2>() = -eps * g.transpose();
    Qe(2, 2) = 1 / ki;
    const Eigen::Matrix2d A = Q * (Eigen::Matrix2d::Identity() + kd * g * g.transpose() * Q);
    const Eigen::Matrix2d B = Q * A.inverse() * Q;
    double dmin = 1e300;
    for (double u : {0.0, 1.0}) {
        Eigen::Matrix2d b;
        b << -p.R, -(1 - u), (1 - u), -(p.G + p.G0_actual);
        b -= kp * g * g.transpose();
        Eigen::Matrix3d D;
        D.topLeftCorner<2, 2>() = R + kp * g * g.transpose() - eps * ki * g * g.transpose();
        const Eigen::Vector2d cross = 0.5 * eps * b.transpose() * B * g;
        D.topRightCorner<2, 1>() = cross;
        D.bottomLeftCorner<1, 2>() = cross.transpose();
        D(2, 2) = eps * g.dot(B * g);
        dmin = std::min(dmin, eig_min(0.5 * (D + D.transpose())));
    }
    return 2 * dmin / eig_max(Qe);
}

}  // namespace

TEST_CASE("PID certificate for the nominal boost", "[stability]") {
    const apps::BoostParams p;
    const PHSystem sys = apps::build_boost(p);
    const Vector xs = boost_reference(p, 380.0);
    const ControllerConfig cfg(sys, Gains::diagonal(1, 1e-6, 1e-4, 1e-7), xs);
    const StabilityCertificate c = pid_certificate(sys, cfg, xs, boost_box());
    CHECK(c.satisfied);
    CHECK(c.failure.empty());
    CHECK(c.epsilon > 0.0);
    CHECK(c.alpha > 0.0);
    const Vector co = apps::co_energy(sys, xs);
    CHECK(c.alpha == Approx(boost_pid_rate(p, co(0), co(1), 1e-6, 1e-4, 1e-7, c.epsilon)).epsilon(1e-8));
    // the search is at least as good as any grid point
    for (double e : {1e-9, 1e-8, 1e-7, 1e-6, 1e-4, 1e-2, 1.0}) {
        CHECK(c.alpha >= pid_certificate_at(sys, cfg, xs, boost_box(), e).alpha * (1 - 1e-12));
    }
}

TEST_CASE("PID certificate at zero cross weight is not strict", "[stability]") {
    const apps::BoostParams p;
    const PHSystem sys = apps::build_boost(p);
    const Vector xs = boost_reference(p, 380.0);
    const ControllerConfig cfg(sys, Gains::diagonal(1, 1e-6, 1e-4, 1e-7), xs);
    const StabilityCertificate c = pid_certificate_at(sys, cfg, xs, boost_box(), 0.0);
    CHECK_FALSE(c.satisfied);
    CHECK(c.alpha == 0.0);
    CHECK(c.failure == "D_eps positive definite on the input box");
}

TEST_CASE("certificates reject non-assignable points", "[stability]") {
    const apps::BoostParams p;
    const PHSystem sys = apps::build_boost(p);
    const Vector xs = boost_reference(p, 380.0);
    const ControllerConfig cfg(sys, Gains::diagonal(1, 1e-6, 1e-4, 1e-7), xs);
    CHECK_THROWS_AS(pid_certificate(sys, cfg, apps::boost_state(p, 10.0, 380.0), boost_box()), InfeasibleError);
}

TEST_CASE("closed-loop equilibrium under a load change", "[stability]") {
    apps::BoostParams p;
    const PHSystem design = apps::build_boost(p, apps::Model::Estimated);
    const Vector xs = boost_reference(p, 380.0);
    p.i0_actual = 40.0;
    const PHSystem plant = apps::build_boost(p);
    const ControllerConfig cfg(design, Gains::diagonal(1, 1e-6, 1e-4, 1e-7), xs);
    const ClosedLoopEquilibrium eq = closed_loop_equilibrium(plant, cfg);
    // PID equilibria keep y = 0, i.e. they lie on the ray through x*
    CHECK(eq.x(0) / xs(0) == Approx(0.41767728074442984).epsilon(1e-10));
    CHECK(eq.x(1) / xs(1) == Approx(0.41767728074442984).epsilon(1e-10));
    const Vector xc = equilibrium_controller_state(plant, cfg, eq.x);
    CHECK(xc(0) == Approx(eq.x_c(0)).epsilon(1e-9));
    const Vector co = apps::co_energy(plant, eq.x);
    CHECK(eq.u(0) == Approx(oracle::boost_u_closed_form(p, co(0), co(1))).epsilon(1e-10));
}

TEST_CASE("PLID certificate", "[stability]") {
    apps::BoostParams p;
    const PHSystem design = apps::build_boost(p, apps::Model::Estimated);
    const Vector xs = boost_reference(p, 380.0);
    const ControllerConfig cfg(design, Gains::diagonal(1, 1e-6, 1e-4, 1e-7, 5e8), xs);
    const StabilityCertificate at_ref = plid_certificate(design, cfg, xs);
    CHECK(at_ref.satisfied);
    CHECK(at_ref.alpha > 0.0);

    // zero leakage fails as soon as the equilibrium moves off the reference
    p.i0_actual = 40.0;
    const PHSystem plant = apps::build_boost(p);
    const ControllerConfig pid(design, Gains::diagonal(1, 1e-6, 1e-4, 1e-7, 0.0), xs);
    const ClosedLoopEquilibrium eq = closed_loop_equilibrium(plant, pid);
    const StabilityCertificate off = plid_certificate(plant, pid, eq.x);
    CHECK_FALSE(off.satisfied);
    CHECK(off.failure == "K_L above the equilibrium-mismatch bound");
}

TEST_CASE("boost leakage bound", "[stability]") {
    const apps::BoostParams p;
    const Vector xs = apps::boost_state(p, 74.0, 380.0);
    const Vector xb = apps::boost_state(p, 80.0, 370.0);
    const double expected = (p.R * 36.0 + p.G * 100.0) / (4 * p.R * p.G);
    CHECK(boost_leakage_bound(p, xs, xb) == Approx(expected).epsilon(1e-14));
    CHECK(boost_leakage_bound(p, xs, xs) == 0.0);
}

TEST_CASE("mPLID certificate", "[stability]") {
    apps::BoostParams p;
    const PHSystem design = apps::build_boost(p, apps::Model::Estimated);
    const Vector xs = boost_reference(p, 380.0);
    const MonotoneMap w(Vector::Constant(1, 0.1), Vector::Constant(1, 0.9), Vector::Constant(1, 0.5));
    const ControllerConfig cfg(design, Gains::diagonal(1, 1e-6, 1e-4, 1e-7, 5e8), xs, w);
    const StabilityCertificate ok = mplid_certificate(design, cfg, xs, cfg.x_c_star());
    CHECK(ok.satisfied);

    // deep in saturation the integrator map has zero slope
    const StabilityCertificate sat = mplid_certificate(design, cfg, xs, Vector::Constant(1, 1e6));
    CHECK_FALSE(sat.satisfied);
    CHECK(sat.failure == "M2 singular");

    const ControllerConfig plain(design, Gains::diagonal(1, 1e-6, 1e-4, 1e-7, 5e8), xs);
    CHECK_THROWS_AS(mplid_certificate(design, plain, xs, plain.x_c_star()), InvalidModelError);
}

TEST_CASE("Lyapunov functions vanish at the centre and are positive elsewhere", "[stability]") {
    const apps::BoostParams p;
    const PHSystem sys = apps::build_boost(p);
    const Vector xs = boost_reference(p, 380.0);
    const MonotoneMap w(Vector::Constant(1, 0.1), Vector::Constant(1, 0.9), Vector::Constant(1, 0.5));
    const ControllerConfig pid(sys, Gains::diagonal(1, 1e-6, 1e-4, 1e-7), xs);
    const ControllerConfig mono(sys, Gains::diagonal(1, 1e-6, 1e-4, 1e-7, 5e8), xs, w);
    const double eps = pid_certificate(sys, pid, xs, boost_box()).epsilon;
    const LyapunovFunction V(ControllerVariant::Pid, sys, pid, xs, pid.x_c_star(), eps);
    const LyapunovFunction Vp(ControllerVariant::Plid, sys, mono, xs, mono.x_c_star());
    const LyapunovFunction W(ControllerVariant::Mplid, sys, mono, xs, mono.x_c_star());
    for (const LyapunovFunction* f : {&V, &Vp, &W}) {
        CHECK((*f)(xs, pid.x_c_star()) == 0.0);
        CHECK((*f)(apps::boost_state(p, 70.0, 385.0), pid.x_c_star()) > 0.0);
        CHECK((*f)(xs, pid.x_c_star() * 1.2) > 0.0);
        CHECK((*f)(xs, pid.x_c_star() * 0.8) > 0.0);
    }
    // the PLID form at K_D = 0 is H(x~) + x_c~^T K_I x_c~ / 2
    const ControllerConfig nokd(sys, Gains::diagonal(1, 0.0, 1e-4, 0.0, 5e8), xs);
    const LyapunovFunction V0(ControllerVariant::Plid, sys, nokd, xs, nokd.x_c_star());
    const Vector x = apps::boost_state(p, 60.0, 390.0);
    const Vector d = x - xs;
    const double expected = 0.5 * d.dot(sys.Q() * d) + 0.5 * 1e-4 * 100.0 * 100.0;
    CHECK(V0(x, nokd.x_c_star() + Vector::Constant(1, 100.0)) == Approx(expected).epsilon(1e-12));
}

TEST_CASE("mPLID integrator term matches the closed form", "[stability]") {
    const apps::BoostParams p;
    const PHSystem sys = apps::build_boost(p);
    const Vector xs = boost_reference(p, 380.0);
    const MonotoneMap w(Vector::Constant(1, 0.1), Vector::Constant(1, 0.9), Vector::Constant(1, 0.5));
    const ControllerConfig cfg(sys, Gains::diagonal(1, 1e-6, 1e-4, 1e-7, 5e8), xs, w);
    const MonotoneMap& wc = *cfg.monotone();
    const double xcb = cfg.x_c_star()(0);
    const LyapunovFunction W(ControllerVariant::Mplid, sys, cfg, xs, cfg.x_c_star());
    for (double h : {-1500.0, -20.0, 3.0, 400.0, 5000.0}) {
        const double exact =
            oracle::tanh_increment_integral(0.4, wc.lambda()(0), wc.u0()(0), 1e-4, 1e-4 * xcb, h);
        CHECK(W(xs, Vector::Constant(1, xcb + h)) == Approx(exact).epsilon(1e-8));
    }
}

TEST_CASE("VSC voltage margin", "[stability]") {
    const apps::VscParams p;
    const Vector xs = vsc_reference(p, apps::vsc_current_from_power(p, 1200e6), 0.0);
    const double margin = vsc_margin(p, xs);
    CHECK(margin == Approx(17.918388876736594).epsilon(1e-10));
    const double v1 = apps::co_energy(apps::build_vsc(p), xs)(2);
    CHECK(vsc_margin_exact(p, xs) == Approx(margin + v1).epsilon(1e-14));

    apps::VscParams q = p;
    q.V2_actual = p.V2_hat - 0.5 * margin;
    CHECK(vsc_gamma(q, xs).report.gamma > 0.0);
    q.V2_actual = p.V2_hat - vsc_margin_exact(p, xs);
    CHECK(std::abs(vsc_gamma(q, xs).report.gamma) < 1e-9);
}
