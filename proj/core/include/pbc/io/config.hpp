#pragma once

// System and scenario files. Both are YAML documents carrying a
// `format_version` field; every physical quantity is keyed with its unit
// (L_mH, v0_V, V2_hat_kV, ...).

#include "pbc/apps.hpp"
#include "pbc/controllers.hpp"
#include "pbc/sim.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pbc::io {

inline constexpr int kFormatVersion = 1;

enum class SystemKind { Boost, Vsc };

const char* to_string(SystemKind k);

/// Gain matrices as written in the file. Missing K_L means no leakage.
struct ControllerSpec {
    Matrix K_P;
    Matrix K_I;
    Matrix K_D;
    std::optional<Matrix> K_L;
    bool monotone = false;
    double lambda = MonotoneMap::kDefaultLambda;
};

/// Reference quantities keyed as in the file: v_C_V for the boost;
/// P_MW and Q_MW, or i_d_A and i_q_A, for the VSC.
using Quantities = std::map<std::string, double>;

struct SystemConfig {
    SystemKind kind = SystemKind::Boost;
    apps::BoostParams boost;
    apps::VscParams vsc;
    ControllerSpec controller;
    Quantities reference;

    [[nodiscard]] int inputs() const { return kind == SystemKind::Boost ? 1 : 2; }
};

struct EventSpec {
    double time_s = 0.0;
    std::string label;
    Quantities reference;  // empty: unchanged
    Quantities plant;      // i0_actual_A, G0_actual_mS, V2_ratio, V2_actual_kV
    std::optional<ControllerSpec> gains;
};

struct VariantSpec {
    std::string name;
    ControllerSpec controller;
};

struct ScenarioConfig {
    SystemConfig system;
    double duration_s = 1.0;
    double dt_s = 1e-5;
    int decimate = 1;
    Integrator integrator = Integrator::Rk4;
    Quantities initial;  // empty: start at the reference equilibrium
    std::optional<LyapunovTracking> lyapunov;
    std::vector<VariantSpec> variants;  // empty: the system's controller only
    std::vector<EventSpec> events;
};

/// Parsing throws ParseError with the 1-based line and column of the offending node.
SystemConfig parse_system(const std::string& text);
SystemConfig load_system(const std::string& path);
ScenarioConfig parse_scenario(const std::string& text, const std::string& base_dir = ".");
ScenarioConfig load_scenario(const std::string& path);

std::string serialize(const SystemConfig& cfg);
std::string serialize(const ScenarioConfig& cfg);

/// Plant (actual) and design (estimated) models with the reference and controller.
struct BuiltSystem {
    PHSystem plant;
    PHSystem design;
    Vector x_star;
    ControllerConfig controller;
    Vector u_min;
    Vector u_max;
};

BuiltSystem build(const SystemConfig& cfg);
BuiltSystem build(const SystemConfig& cfg, const ControllerSpec& controller);

/// Reference state from file quantities on the design power flow.
Vector reference_state(const SystemConfig& cfg, const Quantities& q);

/// Applies plant quantities to a copy of the system parameters.
SystemConfig with_plant_changes(const SystemConfig& cfg, const Quantities& plant);

struct BuiltScenario {
    BuiltSystem system;
    Scenario scenario;
};

/// Simulation-ready scenario for one controller variant (index into
/// `variants`, or -1 for the system's own controller).
BuiltScenario build_scenario(const ScenarioConfig& cfg, int variant = -1);

Gains to_gains(const ControllerSpec& spec);

}  // namespace pbc::io
