#include "pbc/controllers.hpp"

#include "pbc/equilibria.hpp"
#include "pbc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace pbc {

const char* to_string(ControllerVariant v) {
    switch (v) {
        case ControllerVariant::Pid: return "PID";
        case ControllerVariant::Plid: return "PLID";
        case ControllerVariant::Mpid: return "mPID";
        case ControllerVariant::Mplid: return "mPLID";
    }
    return "?";
}

Gains Gains::diagonal(int m, double kp, double ki, double kd, std::optional<double> kl) {
    Gains g;
    g.K_P = kp * Matrix::Identity(m, m);
    g.K_I = ki * Matrix::Identity(m, m);
    g.K_D = kd * Matrix::Identity(m, m);
    if (kl) g.K_L = *kl * Matrix::Identity(m, m);
    return g;
}

void Gains::validate(int m) const {
    require_shape(K_P, m, m, "K_P");
    require_shape(K_I, m, m, "K_I");
    require_shape(K_D, m, m, "K_D");
    if (!is_exactly_symmetric(K_P) || !is_positive_semidefinite(K_P)) {
        throw InvalidModelError("K_P must be symmetric positive semidefinite");
    }
    if (!is_exactly_symmetric(K_I) || !is_positive_definite(K_I)) {
        throw InvalidModelError("K_I must be symmetric positive definite");
    }
    if (!is_exactly_symmetric(K_D) || !is_positive_semidefinite(K_D)) {
        throw InvalidModelError("K_D must be symmetric positive semidefinite");
    }
    if (K_L) {
        require_shape(*K_L, m, m, "K_L");
        if (!is_exactly_symmetric(*K_L) || !is_positive_semidefinite(*K_L)) {
            throw InvalidModelError("K_L must be symmetric positive semidefinite");
        }
    }
}

ControllerConfig::ControllerConfig(const PHSystem& design, Gains gains, Vector x_star,
                                   std::optional<MonotoneMap> monotone)
    : gains_(std::move(gains)), x_star_(std::move(x_star)), monotone_(std::move(monotone)) {
    gains_.validate(design.m());
    require_size(x_star_, design.n(), "reference");
    g_star_ = input_matrix(design, x_star_);
    Y_star_ = g_star_.transpose() * design.Q();
    u_star_ = equilibrium_control(design, x_star_);
    K_I_inv_ = gains_.K_I.inverse();
    x_c_star_ = K_I_inv_ * u_star_;
    if (monotone_) {
        if (monotone_->size() != design.m()) throw DimensionError("monotone map: wrong channel count");
        monotone_ = monotone_->recentered(u_star_);
    }
}

ControllerVariant ControllerConfig::variant() const noexcept {
    const bool leak = gains_.K_L.has_value();
    if (monotone_) return leak ? ControllerVariant::Mplid : ControllerVariant::Mpid;
    return leak ? ControllerVariant::Plid : ControllerVariant::Pid;
}

ControllerConfig ControllerConfig::with_reference(const PHSystem& design, Vector x_star) const {
    return ControllerConfig(design, gains_, std::move(x_star), monotone_);
}

ControllerConfig ControllerConfig::with_gains(const PHSystem& design, Gains gains) const {
    return ControllerConfig(design, std::move(gains), x_star_, monotone_);
}

void ControllerConfig::set_x_c_star(Vector x_c_star) {
    require_size(x_c_star, m(), "x_c*");
    x_c_star_ = std::move(x_c_star);
}

namespace {

// Scalar loop v = c - k w(v) with k >= 0: F(v) = v - c + k w(v) is strictly
// increasing and changes sign on [c - k u_max, c - k u_min].
double solve_scalar_loop(const MonotoneMap& w, double c, double k, double hint) {
    Vector s(1);
    auto F = [&](double v) {
        s(0) = v;
        return v - c + k * w.eval(s)(0);
    };
    double lo = c - k * w.u_max()(0);
    double hi = c - k * w.u_min()(0);
    double v = std::clamp(hint, lo, hi);
    const double scale = std::max({std::abs(c), std::abs(lo), std::abs(hi), 1e-300});
    for (int it = 0; it < 200; ++it) {
        const double f = F(v);
        if (std::abs(f) <= 1e-14 * scale) return v;
        if (f > 0.0) hi = v; else lo = v;
        s(0) = v;
        const double df = 1.0 + k * w.derivative(s)(0, 0);
        double next = v - f / df;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * scale) return next;
        v = next;
    }
    throw ConvergenceError("monotone loop: bracketed Newton did not converge");
}

Vector solve_loop(const MonotoneMap& w, const Vector& c, const Matrix& K, const Vector& hint) {
    const int m = static_cast<int>(c.size());
    if (m == 1 && K(0, 0) >= 0.0) {
        Vector v(1);
        v(0) = solve_scalar_loop(w, c(0), K(0, 0), hint(0));
        return v;
    }
    Vector v = hint;
    auto residual = [&](const Vector& z) -> Vector { return z - c + K * w.eval(z); };
    Vector F = residual(v);
    const double scale = std::max(c.lpNorm<Eigen::Infinity>(), 1e-300);
    for (int it = 0; it < 100; ++it) {
        if (F.lpNorm<Eigen::Infinity>() <= 1e-14 * scale) return v;
        const Matrix Jf = Matrix::Identity(m, m) + K * w.derivative(v);
        const Vector step = Jf.partialPivLu().solve(F);
        double t = 1.0;
        Vector trial = v - step;
        Vector Ft = residual(trial);
        while (Ft.norm() >= F.norm() && t > 1e-8) {
            t *= 0.5;
            trial = v - t * step;
            Ft = residual(trial);
        }
        v = trial;
        F = Ft;
    }
    if (F.lpNorm<Eigen::Infinity>() <= 1e-10 * scale) return v;
    throw ConvergenceError("monotone loop: Newton iteration did not converge");
}

}  // namespace

ControlEval control_output(const ControllerConfig& cfg, const PHSystem& sys, const Vector& x,
                           const Vector& x_c, const Vector* v_hint) {
    require_size(x, sys.n(), "state");
    require_size(x_c, cfg.m(), "controller state");
    const Gains& k = cfg.gains();
    const Matrix& Y = cfg.output_map();
    const Vector y = Y * x;
    const bool has_kd = !k.K_D.isZero(0.0);

    Vector c = -k.K_P * y + k.K_I * x_c;
    Matrix K;
    if (has_kd) {
        c.noalias() -= k.K_D * (Y * drift(sys, x));
        K = k.K_D * (Y * input_matrix(sys, x));
    }

    ControlEval out;
    if (!cfg.monotone() || cfg.monotone()->is_identity()) {
        if (has_kd) {
            const Matrix A = Matrix::Identity(cfg.m(), cfg.m()) + K;
            Eigen::FullPivLU<Matrix> lu(A);
            if (!lu.isInvertible()) throw SingularityError("derivative loop matrix is singular");
            out.u = lu.solve(c);
        } else {
            out.u = c;
        }
        out.v = out.u;
        return out;
    }
    const MonotoneMap& w = *cfg.monotone();
    out.v = has_kd ? solve_loop(w, c, K, v_hint ? *v_hint : c) : c;
    out.u = w.eval(out.v);
    return out;
}

Vector integrator_rhs(const ControllerConfig& cfg, const Vector& x, const Vector& x_c) {
    require_size(x_c, cfg.m(), "controller state");
    Vector rhs = -(cfg.output_map() * x);
    const Gains& k = cfg.gains();
    if (!k.K_L) return rhs;
    if (cfg.monotone()) {
        const MonotoneMap& w = *cfg.monotone();
        rhs.noalias() -= *k.K_L * (w.eval(k.K_I * x_c) - w.eval(k.K_I * cfg.x_c_star()));
    } else {
        rhs.noalias() -= *k.K_L * (k.K_I * (x_c - cfg.x_c_star()));
    }
    return rhs;
}

Matrix droop_slope(const ControllerConfig& cfg) {
    const Gains& k = cfg.gains();
    if (!k.K_L) throw InvalidModelError("droop slope needs a leakage gain");
    Eigen::FullPivLU<Matrix> lu(*k.K_L);
    if (!lu.isInvertible()) throw SingularityError("K_L is singular");
    return k.K_P + lu.inverse();
}

ClosedLoopEval closed_loop(const ControllerConfig& cfg, const PHSystem& sys, const Vector& x,
                           const Vector& x_c, const Vector* v_hint) {
    ClosedLoopEval e;
    e.control = control_output(cfg, sys, x, x_c, v_hint);
    e.x_dot = dynamics(sys, x, e.control.u);
    e.x_c_dot = integrator_rhs(cfg, x, x_c);
    return e;
}

Matrix closed_loop_jacobian(const ControllerConfig& cfg, const PHSystem& sys, const Vector& x,
                            const Vector& x_c, const ControlEval& control) {
    const int n = sys.n();
    const int m = cfg.m();
    const Gains& k = cfg.gains();
    const Matrix& Y = cfg.output_map();
    const Matrix g = input_matrix(sys, x);

    // d(f + g u)/dx at frozen u
    Matrix Ax = sys.drift_matrix();
    for (int i = 0; i < m; ++i) Ax += control.u(i) * sys.input_matrix_factor(i);

    const bool mono = cfg.monotone() && !cfg.monotone()->is_identity();
    const Matrix Wp = mono ? cfg.monotone()->derivative(control.v) : Matrix::Identity(m, m);

    // (I + K_D Y g W') dv = -(K_P Y + K_D Y Ax) dx + K_I dx_c
    const Matrix lhs = Matrix::Identity(m, m) + k.K_D * Y * g * Wp;
    Eigen::FullPivLU<Matrix> lu(lhs);
    if (!lu.isInvertible()) throw SingularityError("derivative loop matrix is singular");
    const Matrix dv_dx = lu.solve(Matrix(-(k.K_P * Y + k.K_D * Y * Ax)));
    const Matrix dv_dxc = lu.solve(k.K_I);
    const Matrix du_dx = Wp * dv_dx;
    const Matrix du_dxc = Wp * dv_dxc;

    Matrix J = Matrix::Zero(n + m, n + m);
    J.topLeftCorner(n, n) = Ax + g * du_dx;
    J.topRightCorner(n, m) = g * du_dxc;
    J.bottomLeftCorner(m, n) = -Y;
    if (k.K_L) {
        if (cfg.monotone()) {
            J.bottomRightCorner(m, m) =
                -(*k.K_L) * cfg.monotone()->derivative(k.K_I * x_c) * k.K_I;
        } else {
            J.bottomRightCorner(m, m) = -(*k.K_L) * k.K_I;
        }
    }
    return J;
}

}  // namespace pbc
