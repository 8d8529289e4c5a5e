#include "pbc/sim.hpp"

#include "pbc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pbc {

const char* to_string(Integrator i) {
    return i == Integrator::Rk4 ? "rk4" : "radau2a";
}

void Scenario::validate(int n, int m) const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidModelError("scenario: dt must be positive");
    if (!(duration > 0.0) || !std::isfinite(duration)) {
        throw InvalidModelError("scenario: duration must be positive");
    }
    if (decimate < 1) throw InvalidModelError("scenario: decimate must be >= 1");
    require_size(x0, n, "initial state");
    require_size(x_c0, m, "initial controller state");
    double prev = -INFINITY;
    for (const Event& e : events) {
        if (!(e.time > prev)) throw InvalidModelError("scenario: event times must increase strictly");
        if (e.time < 0.0 || e.time > duration) {
            throw InvalidModelError("scenario: event time outside [0, duration]");
        }
        prev = e.time;
    }
}

namespace {

struct Deriv {
    Vector dz;
    ControlEval control;
};

Deriv eval_field(const PHSystem& sys, const ControllerConfig& cfg, const Vector& z,
                 const Vector* v_hint) {
    const int n = sys.n();
    const int m = cfg.m();
    const ClosedLoopEval e = closed_loop(cfg, sys, z.head(n), z.tail(m), v_hint);
    Deriv d;
    d.dz.resize(n + m);
    d.dz << e.x_dot, e.x_c_dot;
    d.control = e.control;
    return d;
}

Vector stack(const Vector& x, const Vector& x_c) {
    Vector z(x.size() + x_c.size());
    z << x, x_c;
    return z;
}

constexpr double kA[2][2] = {{5.0 / 12.0, -1.0 / 12.0}, {3.0 / 4.0, 1.0 / 4.0}};
constexpr double kC[2] = {1.0 / 3.0, 1.0};

// Stage values W = (Y1 - z, Y2 - z) with their fields and the collocation residual.
struct RadauStages {
    Vector W;
    Vector F[2];
    ControlEval control[2];
    Vector G;
    double norm = INFINITY;
};

void radau_residual(const PHSystem& sys, const ControllerConfig& cfg, const Vector& z, double dt,
                    const Vector& scale, const Vector hint[2], RadauStages& st) {
    const int N = static_cast<int>(z.size());
    for (int s = 0; s < 2; ++s) {
        const Deriv d = eval_field(sys, cfg, z + st.W.segment(s * N, N), &hint[s]);
        st.F[s] = d.dz;
        st.control[s] = d.control;
    }
    st.G.resize(2 * N);
    st.norm = 0.0;
    for (int r = 0; r < 2; ++r) {
        st.G.segment(r * N, N) = st.W.segment(r * N, N) - dt * (kA[r][0] * st.F[0] + kA[r][1] * st.F[1]);
        for (int i = 0; i < N; ++i) st.norm = std::max(st.norm, std::abs(st.G(r * N + i)) / scale(i));
    }
    if (!std::isfinite(st.norm)) st.norm = INFINITY;
}

// One Radau IIA step on z by damped Newton on the stage equations; returns false
// when the iteration stalls. The backtracking keeps Newton from cycling when the
// monotone map is deep in saturation and the field is nearly discontinuous.
bool radau_try(const PHSystem& sys, const ControllerConfig& cfg, const Vector& z, double dt,
               Vector& z_next, Vector& v_hint) {
    const int N = static_cast<int>(z.size());
    const int n = sys.n();
    const int m = cfg.m();
    Vector scale(N);
    const double floor = 1e-6 * std::max(z.lpNorm<Eigen::Infinity>(), 1e-300);
    for (int i = 0; i < N; ++i) scale(i) = std::abs(z(i)) + floor;

    const Deriv d0 = eval_field(sys, cfg, z, v_hint.size() ? &v_hint : nullptr);
    RadauStages st;
    st.W.resize(2 * N);
    st.W.head(N) = kC[0] * dt * d0.dz;
    st.W.tail(N) = kC[1] * dt * d0.dz;
    Vector hint[2] = {d0.control.v, d0.control.v};
    radau_residual(sys, cfg, z, dt, scale, hint, st);

    for (int it = 0; it < 30; ++it) {
        Matrix M = Matrix::Identity(2 * N, 2 * N);
        for (int s = 0; s < 2; ++s) {
            const Vector Y = z + st.W.segment(s * N, N);
            const Matrix J = closed_loop_jacobian(cfg, sys, Y.head(n), Y.tail(m), st.control[s]);
            for (int r = 0; r < 2; ++r) M.block(r * N, s * N, N, N) -= dt * kA[r][s] * J;
        }
        const Vector dW = M.partialPivLu().solve(st.G);
        if (!dW.allFinite()) return false;
        hint[0] = st.control[0].v;
        hint[1] = st.control[1].v;

        RadauStages trial;
        double t = 1.0;
        for (int k = 0; k < 20; ++k, t *= 0.5) {
            trial.W = st.W - t * dW;
            radau_residual(sys, cfg, z, dt, scale, hint, trial);
            if (trial.norm < st.norm) break;
        }
        if (!(trial.norm < st.norm) && st.norm > 1e-13) return false;

        double err = 0.0;
        for (int i = 0; i < N; ++i) {
            err = std::max({err, t * std::abs(dW(i)) / scale(i), t * std::abs(dW(N + i)) / scale(i)});
        }
        if (trial.norm < st.norm) st = std::move(trial);
        if (err <= 1e-12 || st.norm <= 1e-15) {
            z_next = z + st.W.tail(N);
            v_hint = st.control[1].v;
            return true;
        }
    }
    return false;
}

void radau_advance(const PHSystem& sys, const ControllerConfig& cfg, Vector& z, double dt,
                   Vector& v_hint, int depth) {
    Vector z_next;
    if (radau_try(sys, cfg, z, dt, z_next, v_hint)) {
        z = z_next;
        return;
    }
    if (depth >= 12) throw ConvergenceError("radau: stage iteration failed after step halving");
    radau_advance(sys, cfg, z, 0.5 * dt, v_hint, depth + 1);
    radau_advance(sys, cfg, z, 0.5 * dt, v_hint, depth + 1);
}

}  // namespace

StepResult step_rk4(const PHSystem& sys, const ControllerConfig& cfg, const Vector& x,
                    const Vector& x_c, double dt, const Vector* v_hint) {
    const int n = sys.n();
    const int m = cfg.m();
    const Vector z = stack(x, x_c);
    const Deriv k1 = eval_field(sys, cfg, z, v_hint);
    const Deriv k2 = eval_field(sys, cfg, z + 0.5 * dt * k1.dz, &k1.control.v);
    const Deriv k3 = eval_field(sys, cfg, z + 0.5 * dt * k2.dz, &k2.control.v);
    const Deriv k4 = eval_field(sys, cfg, z + dt * k3.dz, &k3.control.v);
    const Vector zn = z + (dt / 6.0) * (k1.dz + 2.0 * k2.dz + 2.0 * k3.dz + k4.dz);
    return {zn.head(n), zn.tail(m), k1.control.u, k4.control.v};
}

StepResult step_radau(const PHSystem& sys, const ControllerConfig& cfg, const Vector& x,
                      const Vector& x_c, double dt, const Vector* v_hint) {
    const int n = sys.n();
    const int m = cfg.m();
    Vector z = stack(x, x_c);
    const ControlEval u0 = control_output(cfg, sys, x, x_c, v_hint);
    Vector hint = u0.v;
    radau_advance(sys, cfg, z, dt, hint, 0);
    return {z.head(n), z.tail(m), u0.u, hint};
}

Trajectory run_scenario(const PHSystem& plant_in, const PHSystem& design_in, ControllerConfig cfg,
                        const Scenario& sc) {
    PHSystem plant = plant_in;
    PHSystem design = design_in;
    sc.validate(plant.n(), cfg.m());
    if (design.n() != plant.n() || design.m() != plant.m()) {
        throw DimensionError("design and plant models differ in size");
    }

    const auto steps = static_cast<long>(std::llround(sc.duration / sc.dt));
    std::vector<std::pair<long, const Event*>> schedule;
    for (const Event& e : sc.events) schedule.emplace_back(std::llround(e.time / sc.dt), &e);

    Vector x = sc.x0;
    Vector x_c = sc.x_c0;
    Vector v_hint;
    const double x0_norm = std::max(x.norm(), 1e-300);
    int segment = 0;
    std::size_t next_event = 0;
    std::optional<LyapunovFunction> lyap;

    auto rebuild_lyapunov = [&]() {
        lyap.reset();
        if (!sc.lyapunov) return;
        try {
            const ClosedLoopEquilibrium eq = closed_loop_equilibrium(plant, cfg);
            lyap.emplace(sc.lyapunov->variant, plant, cfg, eq.x, eq.x_c, sc.lyapunov->epsilon);
        } catch (const Error&) {
        }
    };

    auto apply_events = [&](long k) {
        bool changed = false;
        while (next_event < schedule.size() && schedule[next_event].first == k) {
            const Event& e = *schedule[next_event].second;
            if (e.E_actual) plant = plant.with_sources(*e.E_actual);
            if (e.R_actual) plant = plant.with_dissipation(*e.R_actual);
            if (e.E_design) design = design.with_sources(*e.E_design);
            if (e.gains) cfg = cfg.with_gains(design, *e.gains);
            if (e.x_star) cfg = cfg.with_reference(design, *e.x_star);
            ++segment;
            ++next_event;
            changed = true;
        }
        return changed;
    };

    Trajectory traj;
    const std::size_t expected = static_cast<std::size_t>(steps / sc.decimate + 2);
    traj.times.reserve(expected);
    traj.states.reserve(expected);
    traj.controller_states.reserve(expected);
    traj.controls.reserve(expected);
    traj.outputs.reserve(expected);

    auto record = [&](long k, const Vector& u) {
        traj.times.push_back(static_cast<double>(k) * sc.dt);
        traj.states.push_back(x);
        traj.controller_states.push_back(x_c);
        traj.controls.push_back(u);
        traj.outputs.push_back(cfg.output_map() * x);
        traj.hamiltonian.push_back(hamiltonian(plant, x));
        traj.lyapunov.push_back(lyap ? (*lyap)(x, x_c) : std::numeric_limits<double>::quiet_NaN());
        traj.segment.push_back(segment);
    };

    apply_events(0);
    rebuild_lyapunov();
    for (long k = 0; k < steps; ++k) {
        if (k > 0 && apply_events(k)) rebuild_lyapunov();
        StepResult r = sc.integrator == Integrator::Rk4
                           ? step_rk4(plant, cfg, x, x_c, sc.dt, v_hint.size() ? &v_hint : nullptr)
                           : step_radau(plant, cfg, x, x_c, sc.dt, v_hint.size() ? &v_hint : nullptr);
        if (k % sc.decimate == 0) record(k, r.u);
        x = std::move(r.x);
        x_c = std::move(r.x_c);
        v_hint = std::move(r.v);
        if (!x.allFinite() || !x_c.allFinite() || x.norm() > 1e6 * x0_norm) {
            std::ostringstream msg;
            msg << "simulation diverged at t = " << static_cast<double>(k + 1) * sc.dt << " s";
            throw DivergenceError(msg.str(), static_cast<double>(k + 1) * sc.dt);
        }
    }
    apply_events(steps);
    record(steps, control_output(cfg, plant, x, x_c, v_hint.size() ? &v_hint : nullptr).u);
    return traj;
}

namespace {

std::optional<Vector> steady_of(const Trajectory& traj, const std::vector<Vector>& series,
                                double window, double tol, std::optional<double> t_end) {
    if (traj.size() == 0) return std::nullopt;
    const double end = t_end.value_or(traj.times.back());
    const double start = end - window;
    Vector lo;
    Vector hi;
    Vector sum;
    int count = 0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double t = traj.times[i];
        if (t < start - 1e-12 || t > end + 1e-12) continue;
        const Vector& s = series[i];
        if (!s.allFinite()) return std::nullopt;
        if (count == 0) {
            lo = hi = sum = s;
        } else {
            lo = lo.cwiseMin(s);
            hi = hi.cwiseMax(s);
            sum += s;
        }
        ++count;
    }
    if (count < 2) return std::nullopt;
    const Vector mean = sum / count;
    const double floor = 1e-6 * std::max(mean.lpNorm<Eigen::Infinity>(), 1e-300);
    for (int j = 0; j < mean.size(); ++j) {
        if (hi(j) - lo(j) > tol * std::max(std::abs(mean(j)), floor)) return std::nullopt;
    }
    return mean;
}

}  // namespace

std::optional<Vector> steady_state(const Trajectory& traj, double window, double tol,
                                   std::optional<double> t_end) {
    return steady_of(traj, traj.states, window, tol, t_end);
}

std::optional<Vector> steady_controller_state(const Trajectory& traj, double window, double tol,
                                              std::optional<double> t_end) {
    return steady_of(traj, traj.controller_states, window, tol, t_end);
}

EnvelopeCheck exponential_envelope(const std::vector<double>& times,
                                   const std::vector<double>& values, double alpha, double slack) {
    EnvelopeCheck out;
    if (times.empty() || times.size() != values.size()) return out;
    const double v0 = values.front();
    const double t0 = times.front();
    out.ok = true;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double bound = v0 * std::exp(-alpha * (times[i] - t0));
        const double ratio = bound > 0.0 ? values[i] / bound : (values[i] > 0.0 ? INFINITY : 0.0);
        out.worst_ratio = std::max(out.worst_ratio, ratio);
        if (!(values[i] <= bound * (1.0 + slack))) out.ok = false;
    }
    return out;
}

}  // namespace pbc
