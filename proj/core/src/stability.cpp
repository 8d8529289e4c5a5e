#include "pbc/stability.hpp"

#include "pbc/equilibria.hpp"
#include "pbc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace pbc {

namespace {

constexpr double kRelThreshold = 1e-12;

Margin make_margin(std::string name, const Matrix& a) {
    const EigenRange r = symmetric_eigen_range(a);
    const double scale = std::max(std::abs(r.min), std::abs(r.max));
    return {std::move(name), r.min, kRelThreshold * std::max(scale, 1e-300)};
}

void finish(StabilityCertificate& c) {
    c.satisfied = true;
    for (const auto& m : c.margins) {
        if (!m.positive()) {
            c.satisfied = false;
            if (c.failure.empty()) c.failure = m.name;
        }
    }
    if (!c.satisfied) c.alpha = 0.0;
}

void require_assignable(const PHSystem& sys, const Vector& x_bar) {
    const Vector Qx = sys.Q() * x_bar;
    double scale = 0.0;
    if (sys.has_scalar_power_flow()) {
        scale = Qx.dot(sys.R() * Qx) + std::abs(sys.E().dot(Qx));
    } else {
        scale = (sys.drift_matrix() * x_bar).norm() + sys.E().norm();
    }
    const double res = assignability_residual(sys, x_bar);
    if (!(res <= 1e-8 * std::max(scale, 1e-300))) {
        std::ostringstream msg;
        msg << "certificate: x_bar is not an assignable equilibrium (residual " << res
            << ", scale " << scale << ")";
        throw InfeasibleError(msg.str());
    }
}

std::vector<Vector> box_vertices(const InputBox& box) {
    const int m = static_cast<int>(box.lo.size());
    std::vector<Vector> out;
    for (int mask = 0; mask < (1 << m); ++mask) {
        Vector u(m);
        for (int i = 0; i < m; ++i) u(i) = (mask >> i) & 1 ? box.hi(i) : box.lo(i);
        out.push_back(u);
    }
    return out;
}

// Matrices of the PID certificate that do not depend on epsilon.
struct PidParts {
    Matrix Qinv_plus;  // Q^-1 + g K_D g^T
    Matrix g;
    Matrix KI_inv;
    Matrix top;        // R + g K_P g^T
    Matrix gKIg;       // g K_I g^T
    Matrix B;          // Q A^-1 Q
    std::vector<Matrix> b;  // b(u) at the box vertices
};

PidParts pid_parts(const PHSystem& sys, const ControllerConfig& cfg, const Vector& x_bar,
                   const InputBox& box) {
    const Gains& k = cfg.gains();
    const int n = sys.n();
    require_size(box.lo, sys.m(), "input box");
    require_size(box.hi, sys.m(), "input box");
    PidParts p;
    p.g = input_matrix(sys, x_bar);
    const Matrix gKDg = p.g * k.K_D * p.g.transpose();
    p.Qinv_plus = sys.Q_inverse() + gKDg;
    p.KI_inv = k.K_I.inverse();
    const Matrix gKPg = p.g * k.K_P * p.g.transpose();
    p.top = sys.R() + gKPg;
    p.gKIg = p.g * k.K_I * p.g.transpose();
    const Matrix A = sys.Q() * (Matrix::Identity(n, n) + gKDg * sys.Q());
    Matrix B = sys.Q() * A.partialPivLu().solve(sys.Q());
    p.B = 0.5 * (B + B.transpose());
    for (const Vector& u : box_vertices(box)) {
        Matrix b = sys.J0() - sys.R() - gKPg;
        for (int i = 0; i < sys.m(); ++i) b += u(i) * sys.J(i);
        p.b.push_back(b);
    }
    return p;
}

struct PidEval {
    double q_min = 0.0;
    double q_max = 0.0;
    double d_min = 0.0;
    double q_thr = 0.0;
    double d_thr = 0.0;
    [[nodiscard]] double alpha() const {
        if (q_min <= q_thr || d_min <= d_thr) return 0.0;
        return 2.0 * d_min / q_max;
    }
    // Search objective: negative values still rank infeasible epsilons.
    [[nodiscard]] double score() const { return 2.0 * d_min / q_max; }
};

Matrix pid_Q_eps(const PidParts& p, double eps) {
    const int n = static_cast<int>(p.g.rows());
    const int m = static_cast<int>(p.g.cols());
    Matrix Qe(n + m, n + m);
    Qe.topLeftCorner(n, n) = p.Qinv_plus;
    Qe.topRightCorner(n, m) = -eps * p.g;
    Qe.bottomLeftCorner(m, n) = -eps * p.g.transpose();
    Qe.bottomRightCorner(m, m) = p.KI_inv;
    return Qe;
}

Matrix pid_D_eps(const PidParts& p, const Matrix& b, double eps) {
    const int n = static_cast<int>(p.g.rows());
    const int m = static_cast<int>(p.g.cols());
    Matrix D(n + m, n + m);
    D.topLeftCorner(n, n) = p.top - eps * p.gKIg;
    const Matrix cross = 0.5 * eps * b.transpose() * p.B * p.g;
    D.topRightCorner(n, m) = cross;
    D.bottomLeftCorner(m, n) = cross.transpose();
    D.bottomRightCorner(m, m) = eps * p.g.transpose() * p.B * p.g;
    return 0.5 * (D + D.transpose());
}

PidEval pid_eval(const PidParts& p, double eps) {
    PidEval e;
    const EigenRange rq = symmetric_eigen_range(pid_Q_eps(p, eps));
    e.q_min = rq.min;
    e.q_max = rq.max;
    e.q_thr = kRelThreshold * std::max(std::abs(rq.max), 1e-300);
    e.d_min = INFINITY;
    double d_scale = 0.0;
    for (const Matrix& b : p.b) {
        const EigenRange rd = symmetric_eigen_range(pid_D_eps(p, b, eps));
        e.d_min = std::min(e.d_min, rd.min);
        d_scale = std::max({d_scale, std::abs(rd.min), std::abs(rd.max)});
    }
    e.d_thr = kRelThreshold * std::max(d_scale, 1e-300);
    return e;
}

StabilityCertificate pid_from_eval(const PidEval& e, double eps) {
    StabilityCertificate c;
    c.variant = ControllerVariant::Pid;
    c.epsilon = eps;
    c.margins.push_back({"Q_eps positive definite", e.q_min, e.q_thr});
    c.margins.push_back({"D_eps positive definite on the input box", e.d_min, e.d_thr});
    c.alpha = e.alpha();
    finish(c);
    return c;
}

}  // namespace

StabilityCertificate pid_certificate_at(const PHSystem& sys, const ControllerConfig& cfg,
                                        const Vector& x_bar, const InputBox& u_box,
                                        double epsilon) {
    require_assignable(sys, x_bar);
    const PidParts parts = pid_parts(sys, cfg, x_bar, u_box);
    return pid_from_eval(pid_eval(parts, epsilon), epsilon);
}

StabilityCertificate pid_certificate(const PHSystem& sys, const ControllerConfig& cfg,
                                     const Vector& x_bar, const InputBox& u_box) {
    require_assignable(sys, x_bar);
    const PidParts parts = pid_parts(sys, cfg, x_bar, u_box);

    constexpr int kGrid = 40;
    const double lo = -9.0;
    const double hi = 0.0;
    std::vector<double> grid(kGrid);
    int best = 0;
    double best_score = -INFINITY;
    for (int i = 0; i < kGrid; ++i) {
        grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (kGrid - 1);
        const double s = pid_eval(parts, std::pow(10.0, grid[static_cast<std::size_t>(i)])).score();
        if (s > best_score) {
            best_score = s;
            best = i;
        }
    }
    // Golden-section refinement in log10(eps) between the neighbours of the best node.
    double a = grid[static_cast<std::size_t>(std::max(best - 1, 0))];
    double b = grid[static_cast<std::size_t>(std::min(best + 1, kGrid - 1))];
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    auto f = [&](double t) { return pid_eval(parts, std::pow(10.0, t)).score(); };
    double c1 = b - phi * (b - a);
    double c2 = a + phi * (b - a);
    double f1 = f(c1);
    double f2 = f(c2);
    for (int it = 0; it < 60 && b - a > 1e-10; ++it) {
        if (f1 > f2) {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - phi * (b - a);
            f1 = f(c1);
        } else {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + phi * (b - a);
            f2 = f(c2);
        }
    }
    double t = f1 > f2 ? c1 : c2;
    if (std::max(f1, f2) < best_score) t = grid[static_cast<std::size_t>(best)];
    const double eps = std::pow(10.0, t);
    return pid_from_eval(pid_eval(parts, eps), eps);
}

StabilityCertificate plid_certificate(const PHSystem& sys, const ControllerConfig& cfg,
                                      const Vector& x_bar) {
    const Gains& k = cfg.gains();
    const int n = sys.n();
    const int m = sys.m();
    const Matrix gb = input_matrix(sys, x_bar);
    const Matrix gs = input_matrix(sys, cfg.x_star());
    const Matrix KP = 0.5 * (gb * k.K_P * gs.transpose() + gs * k.K_P * gb.transpose());
    const Matrix KD = 0.5 * (gb * k.K_D * gs.transpose() + gs * k.K_D * gb.transpose());
    const Matrix KL = k.K_L ? *k.K_L : Matrix::Zero(m, m);
    const Matrix top = sys.R() + KP;
    const Matrix dg = gs - gb;

    StabilityCertificate c;
    c.variant = ControllerVariant::Plid;
    c.margins.push_back(make_margin("R + K_P' positive definite", top));
    c.margins.push_back(make_margin("Q^-1 + K_D' positive definite", sys.Q_inverse() + KD));
    Eigen::LDLT<Matrix> ldlt(top);
    Matrix schur = KL;
    if (c.margins[0].positive()) schur -= 0.25 * dg.transpose() * ldlt.solve(dg);
    c.margins.push_back(make_margin("K_L above the equilibrium-mismatch bound", schur));

    Matrix D(n + m, n + m);
    D.topLeftCorner(n, n) = top;
    D.topRightCorner(n, m) = 0.5 * dg;
    D.bottomLeftCorner(m, n) = 0.5 * dg.transpose();
    D.bottomRightCorner(m, m) = KL;
    const Matrix Qc = block_diag(sys.Q_inverse() + KD, k.K_I.inverse());
    const double dmin = min_eigenvalue(D);
    const double qmax = symmetric_eigen_range(Qc).max;
    c.alpha = dmin > 0.0 ? 2.0 * dmin / qmax : 0.0;
    finish(c);
    return c;
}

StabilityCertificate mplid_certificate(const PHSystem& sys, const ControllerConfig& cfg,
                                       const Vector& x_bar, const Vector& x_c_bar) {
    if (!cfg.monotone()) throw InvalidModelError("mplid_certificate: controller has no monotone map");
    const MonotoneMap& w = *cfg.monotone();
    const Gains& k = cfg.gains();
    const int m = sys.m();
    const Matrix gb = input_matrix(sys, x_bar);
    const Matrix gs = input_matrix(sys, cfg.x_star());
    const Vector ybar = cfg.output_map() * x_bar;
    const Matrix M1 = w.derivative(-k.K_P * ybar + k.K_I * x_c_bar);
    const Matrix M2 = w.derivative(k.K_I * x_c_bar);
    const Matrix KP = 0.5 * (gb * M1 * k.K_P * gs.transpose() + gs * k.K_P * M1 * gb.transpose());
    const Matrix KD = 0.5 * (gb * M1 * k.K_D * gs.transpose() + gs * k.K_D * M1 * gb.transpose());
    const Matrix KL = k.K_L ? *k.K_L : Matrix::Zero(m, m);
    const Matrix top = sys.R() + KP;

    StabilityCertificate c;
    c.variant = cfg.variant();
    c.margins.push_back(make_margin("M2 nonsingular (strong monotonicity)", M2));
    if (!c.margins.back().positive()) {
        c.failure = "M2 singular";
    }
    c.margins.push_back(make_margin("R + Kbar_P positive definite", top));
    c.margins.push_back(make_margin("Q^-1 + Kbar_D positive definite", sys.Q_inverse() + KD));
    const Matrix cross = gs * M2 - gb * M1;
    Matrix schur = M2 * KL * M2;
    if (c.margins[1].positive()) schur -= 0.25 * cross.transpose() * Eigen::LDLT<Matrix>(top).solve(cross);
    c.margins.push_back(make_margin("M2 K_L M2 above the equilibrium-mismatch bound", schur));
    finish(c);
    return c;
}

Vector equilibrium_controller_state(const PHSystem& sys, const ControllerConfig& cfg,
                                    const Vector& x_bar) {
    Vector v = equilibrium_control(sys, x_bar);
    if (cfg.monotone()) v = cfg.monotone()->inverse(v);
    const Vector rhs = v + cfg.gains().K_P * (cfg.output_map() * x_bar);
    return cfg.gains().K_I.partialPivLu().solve(rhs);
}

ClosedLoopEquilibrium closed_loop_equilibrium(const PHSystem& sys, const ControllerConfig& cfg,
                                              const Vector& x_guess, const Vector& x_c_guess) {
    const int n = sys.n();
    const int m = cfg.m();
    Vector z(n + m);
    z << x_guess, x_c_guess;
    Vector v_hint;
    for (int it = 1; it <= 100; ++it) {
        const Vector x = z.head(n);
        const Vector xc = z.tail(m);
        const ClosedLoopEval e = closed_loop(cfg, sys, x, xc, v_hint.size() ? &v_hint : nullptr);
        v_hint = e.control.v;
        Vector F(n + m);
        F << e.x_dot, e.x_c_dot;
        const Matrix J = closed_loop_jacobian(cfg, sys, x, xc, e.control);
        Eigen::FullPivLU<Matrix> lu(J);
        if (!lu.isInvertible()) throw ConvergenceError("closed-loop equilibrium: singular Jacobian");
        const Vector dz = lu.solve(F);
        z -= dz;
        if (!z.allFinite()) break;
        bool small = true;
        for (int i = 0; i < n + m; ++i) {
            if (std::abs(dz(i)) > 1e-13 * std::abs(z(i)) + 1e-300) small = false;
        }
        if (small || dz.norm() <= 1e-14 * z.norm()) {
            ClosedLoopEquilibrium out;
            out.x = z.head(n);
            out.x_c = z.tail(m);
            out.u = control_output(cfg, sys, out.x, out.x_c, &v_hint).u;
            out.iterations = it;
            return out;
        }
    }
    throw ConvergenceError("closed-loop equilibrium: Newton iteration did not converge");
}

ClosedLoopEquilibrium closed_loop_equilibrium(const PHSystem& sys, const ControllerConfig& cfg) {
    try {
        return closed_loop_equilibrium(sys, cfg, cfg.x_star(), cfg.x_c_star());
    } catch (const ConvergenceError&) {
    } catch (const InvalidModelError&) {
    }
    const double gamma = gamma_report(sys, cfg.x_star()).gamma;
    const Vector x0 = gamma * cfg.x_star();
    Vector xc0 = cfg.x_c_star();
    try {
        xc0 = equilibrium_controller_state(sys, cfg, x0);
    } catch (const Error&) {
    }
    return closed_loop_equilibrium(sys, cfg, x0, xc0);
}

LyapunovFunction::LyapunovFunction(ControllerVariant variant, const PHSystem& sys,
                                   const ControllerConfig& cfg, Vector x_bar, Vector x_c_bar,
                                   double epsilon)
    : variant_(variant), x_bar_(std::move(x_bar)), x_c_bar_(std::move(x_c_bar)), Q_(sys.Q()),
      K_I_(cfg.gains().K_I) {
    const Gains& k = cfg.gains();
    const int n = sys.n();
    const int m = sys.m();
    require_size(x_bar_, n, "x_bar");
    require_size(x_c_bar_, m, "x_c_bar");
    const Matrix gb = input_matrix(sys, x_bar_);
    const Matrix gs = cfg.g_star();
    switch (variant_) {
        case ControllerVariant::Pid: {
            P_.resize(n + m, n + m);
            P_.topLeftCorner(n, n) = sys.Q_inverse() + gb * k.K_D * gb.transpose();
            P_.topRightCorner(n, m) = -epsilon * gb;
            P_.bottomLeftCorner(m, n) = -epsilon * gb.transpose();
            P_.bottomRightCorner(m, m) = k.K_I.inverse();
            break;
        }
        case ControllerVariant::Plid: {
            const Matrix KD = 0.5 * (gb * k.K_D * gs.transpose() + gs * k.K_D * gb.transpose());
            P_ = block_diag(sys.Q_inverse() + KD, k.K_I.inverse());
            break;
        }
        case ControllerVariant::Mpid:
        case ControllerVariant::Mplid: {
            if (!cfg.monotone()) throw InvalidModelError("Lyapunov function needs the monotone map");
            w_ = cfg.monotone();
            const Vector ybar = cfg.output_map() * x_bar_;
            const Matrix M1 = w_->derivative(-k.K_P * ybar + k.K_I * x_c_bar_);
            const Matrix KD =
                0.5 * (gb * M1 * k.K_D * gs.transpose() + gs * k.K_D * M1 * gb.transpose());
            P_ = sys.Q_inverse() + KD;
            break;
        }
    }
}

double LyapunovFunction::operator()(const Vector& x, const Vector& x_c) const {
    const Vector dx = Q_ * (x - x_bar_);
    const Vector dxc = x_c - x_c_bar_;
    if (!w_) {
        Vector z(dx.size() + dxc.size());
        z << dx, K_I_ * dxc;
        return 0.5 * z.dot(P_ * z);
    }
    // Straight-line path integral of w(K_I s + K_I x_c_bar) - w(K_I x_c_bar).
    const double w2 = dxc.dot(w_->mean_increment(K_I_ * x_c_bar_, K_I_ * dxc));
    return 0.5 * dx.dot(P_ * dx) + w2;
}

double vsc_margin(const apps::VscParams& p, const Vector& x_star) {
    require_size(x_star, 6, "vsc reference");
    const double i_d = x_star(0) / p.L;
    const double i_q = x_star(1) / p.L;
    const double v1 = x_star(2) / p.C;
    return (p.R * (i_d * i_d + i_q * i_q) + p.G * v1 * v1) / (p.line_conductance() * v1);
}

double vsc_margin_exact(const apps::VscParams& p, const Vector& x_star) {
    const double v1 = x_star(2) / p.C;
    return vsc_margin(p, x_star) + v1;
}

double boost_leakage_bound(const apps::BoostParams& p, const Vector& x_star, const Vector& x_bar) {
    require_size(x_star, 2, "boost reference");
    require_size(x_bar, 2, "boost equilibrium");
    const double di = (x_star(0) - x_bar(0)) / p.L;
    const double dv = (x_star(1) - x_bar(1)) / p.C;
    return (p.R * di * di + p.G * dv * dv) / (4.0 * p.R * p.G);
}

}  // namespace pbc
