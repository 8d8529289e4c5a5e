#pragma once

// Fixed-step closed-loop simulation with piecewise-constant event schedules.

#include "pbc/controllers.hpp"
#include "pbc/phs.hpp"
#include "pbc/stability.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pbc {

enum class Integrator { Rk4, Radau2A };

const char* to_string(Integrator i);

/// Parameter or reference change applied atomically at `time`. Every present
/// field is applied; x and x_c stay continuous.
struct Event {
    double time = 0.0;
    std::string label;
    std::optional<Vector> x_star;    // new reference (x_c* recomputed on the design model)
    std::optional<Vector> E_actual;  // plant sources
    std::optional<Vector> E_design;  // design-model sources (known changes)
    std::optional<Matrix> R_actual;  // plant dissipation
    std::optional<Gains> gains;
};

struct LyapunovTracking {
    ControllerVariant variant = ControllerVariant::Pid;
    double epsilon = 0.0;
};

struct Scenario {
    double duration = 1.0;
    double dt = 1e-5;
    int decimate = 1;
    Integrator integrator = Integrator::Rk4;
    Vector x0;
    Vector x_c0;
    std::vector<Event> events;
    std::optional<LyapunovTracking> lyapunov;

    void validate(int n, int m) const;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;
    std::vector<Vector> controller_states;
    std::vector<Vector> controls;
    std::vector<Vector> outputs;
    std::vector<double> hamiltonian;
    std::vector<double> lyapunov;  // NaN when not tracked
    std::vector<int> segment;      // number of events applied so far

    [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
};

struct StepResult {
    Vector x;
    Vector x_c;
    Vector u;  // control at the start of the step
    Vector v;  // monotone-map argument at the end of the step (warm start)
};

StepResult step_rk4(const PHSystem& sys, const ControllerConfig& cfg, const Vector& x,
                    const Vector& x_c, double dt, const Vector* v_hint = nullptr);

/// Two-stage Radau IIA (order 3, L-stable). Falls back to recursive step
/// halving when the stage Newton iteration stalls.
StepResult step_radau(const PHSystem& sys, const ControllerConfig& cfg, const Vector& x,
                      const Vector& x_c, double dt, const Vector* v_hint = nullptr);

/// Runs the closed loop. `plant` is the actual model, `design` the estimated one
/// used for references. Throws DivergenceError when the state leaves the
/// admissible range (non-finite or |x| > 1e6 |x0|).
Trajectory run_scenario(const PHSystem& plant, const PHSystem& design, ControllerConfig cfg,
                        const Scenario& scenario);

/// Mean state over the trailing `window` seconds ending at `t_end` (default: the
/// last sample) when every component varies by less than `tol` relative to its
/// magnitude; nullopt otherwise.
std::optional<Vector> steady_state(const Trajectory& traj, double window, double tol,
                                   std::optional<double> t_end = std::nullopt);

/// Same test on the controller states.
std::optional<Vector> steady_controller_state(const Trajectory& traj, double window, double tol,
                                              std::optional<double> t_end = std::nullopt);

struct EnvelopeCheck {
    bool ok = false;
    double worst_ratio = 0.0;  // max V(t) / (V(0) exp(-alpha t))
};

/// V(t) <= V(0) exp(-alpha (t - t0)) (1 + slack) over the given samples.
EnvelopeCheck exponential_envelope(const std::vector<double>& times,
                                   const std::vector<double>& values, double alpha, double slack);

}  // namespace pbc
