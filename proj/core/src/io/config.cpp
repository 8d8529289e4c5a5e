#include "pbc/io/config.hpp"

#include "pbc/equilibria.hpp"
#include "pbc/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace pbc::io {

namespace {

constexpr double kPi = 3.14159265358979323846;

[[noreturn]] void fail(const YAML::Node& node, const std::string& what) {
    const YAML::Mark mark = node.Mark();
    if (mark.is_null()) throw ParseError(what, 0, 0);
    throw ParseError(what, mark.line + 1, mark.column + 1);
}

double as_double(const YAML::Node& node, const std::string& key) {
    if (!node.IsScalar()) fail(node, "'" + key + "' must be a number");
    try {
        const double v = node.as<double>();
        if (!std::isfinite(v)) fail(node, "'" + key + "' must be finite");
        return v;
    } catch (const YAML::Exception&) {
        fail(node, "'" + key + "' must be a number, got '" + node.Scalar() + "'");
    }
}

double require(const YAML::Node& map, const std::string& key) {
    const YAML::Node v = map[key];
    if (!v) fail(map, "missing key '" + key + "'");
    return as_double(v, key);
}

double optional_or(const YAML::Node& map, const std::string& key, double fallback) {
    const YAML::Node v = map[key];
    return v ? as_double(v, key) : fallback;
}

void check_keys(const YAML::Node& map, const std::set<std::string>& allowed,
                const std::string& where) {
    if (!map.IsMap()) fail(map, where + " must be a mapping");
    for (const auto& kv : map) {
        const std::string key = kv.first.as<std::string>();
        if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + where);
    }
}

std::array<double, 3> triple(const YAML::Node& map, const std::string& key) {
    const YAML::Node v = map[key];
    if (!v) fail(map, "missing key '" + key + "'");
    if (!v.IsSequence() || v.size() != 3) fail(v, "'" + key + "' must be a list of 3 numbers");
    std::array<double, 3> out{};
    for (std::size_t i = 0; i < 3; ++i) out[i] = as_double(v[i], key);
    return out;
}

// Scalar c -> c I, list -> diagonal, list of lists -> full matrix.
Matrix gain_matrix(const YAML::Node& node, const std::string& key, int m) {
    if (node.IsScalar()) return as_double(node, key) * Matrix::Identity(m, m);
    if (!node.IsSequence() || static_cast<int>(node.size()) != m) {
        fail(node, "'" + key + "' must be a number or a list of " + std::to_string(m));
    }
    Matrix out = Matrix::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        const YAML::Node row = node[static_cast<std::size_t>(i)];
        if (row.IsScalar()) {
            out(i, i) = as_double(row, key);
        } else {
            if (!row.IsSequence() || static_cast<int>(row.size()) != m) {
                fail(row, "'" + key + "' rows must have " + std::to_string(m) + " entries");
            }
            for (int j = 0; j < m; ++j) out(i, j) = as_double(row[static_cast<std::size_t>(j)], key);
        }
    }
    return out;
}

bool is_null_scalar(const YAML::Node& n) {
    return n.IsNull() || (n.IsScalar() && (n.Scalar() == "none" || n.Scalar() == "null"));
}

void merge_controller(const YAML::Node& node, int m, ControllerSpec& spec) {
    check_keys(node, {"K_P", "K_I", "K_D", "K_L", "monotone", "lambda"}, "controller");
    if (node["K_P"]) spec.K_P = gain_matrix(node["K_P"], "K_P", m);
    if (node["K_I"]) spec.K_I = gain_matrix(node["K_I"], "K_I", m);
    if (node["K_D"]) spec.K_D = gain_matrix(node["K_D"], "K_D", m);
    if (const YAML::Node kl = node["K_L"]) {
        if (is_null_scalar(kl)) spec.K_L.reset();
        else spec.K_L = gain_matrix(kl, "K_L", m);
    }
    if (const YAML::Node mono = node["monotone"]) {
        try {
            spec.monotone = mono.as<bool>();
        } catch (const YAML::Exception&) {
            fail(mono, "'monotone' must be true or false");
        }
    }
    if (node["lambda"]) spec.lambda = as_double(node["lambda"], "lambda");
}

ControllerSpec parse_controller(const YAML::Node& node, int m) {
    if (!node) throw ParseError("missing 'controller' section", 0, 0);
    ControllerSpec spec;
    spec.K_P = Matrix::Zero(m, m);
    spec.K_D = Matrix::Zero(m, m);
    if (!node["K_I"]) fail(node, "missing key 'K_I'");
    merge_controller(node, m, spec);
    return spec;
}

Quantities parse_quantities(const YAML::Node& node, const std::set<std::string>& allowed,
                            const std::string& where) {
    check_keys(node, allowed, where);
    Quantities q;
    for (const auto& kv : node) {
        const std::string key = kv.first.as<std::string>();
        q[key] = as_double(kv.second, key);
    }
    return q;
}

const std::set<std::string> kBoostRef{"v_C_V"};
const std::set<std::string> kVscRef{"P_MW", "Q_MW", "i_d_A", "i_q_A"};
const std::set<std::string> kBoostPlant{"i0_actual_A", "G0_actual_mS"};
const std::set<std::string> kVscPlant{"V2_ratio", "V2_actual_kV"};

apps::BoostParams parse_boost(const YAML::Node& p) {
    check_keys(p,
               {"L_mH", "C_mF", "R_mOhm", "G_mS", "v0_V", "G0_hat_mS", "G0_actual_mS", "i0_hat_A",
                "i0_actual_A", "u_min", "u_max"},
               "boost parameters");
    apps::BoostParams b;
    b.L = require(p, "L_mH") * 1e-3;
    b.C = require(p, "C_mF") * 1e-3;
    b.R = require(p, "R_mOhm") * 1e-3;
    b.G = require(p, "G_mS") * 1e-3;
    b.v0 = require(p, "v0_V");
    b.G0_hat = require(p, "G0_hat_mS") * 1e-3;
    b.G0_actual = p["G0_actual_mS"] ? require(p, "G0_actual_mS") * 1e-3 : b.G0_hat;
    b.i0_hat = require(p, "i0_hat_A");
    b.i0_actual = optional_or(p, "i0_actual_A", b.i0_hat);
    b.u_min = require(p, "u_min");
    b.u_max = require(p, "u_max");
    try {
        b.validate();
    } catch (const InvalidModelError& e) {
        fail(p, e.what());
    }
    return b;
}

apps::VscParams parse_vsc(const YAML::Node& p) {
    check_keys(p,
               {"L_mH", "C_uF", "R_Ohm", "G_mS", "f_Hz", "V_d_kV", "V2_hat_kV", "V2_actual_kV",
                "R_T_Ohm", "L_T_mH", "u_bound"},
               "vsc parameters");
    apps::VscParams v;
    v.L = require(p, "L_mH") * 1e-3;
    v.C = require(p, "C_uF") * 1e-6;
    v.R = require(p, "R_Ohm");
    v.G = require(p, "G_mS") * 1e-3;
    v.omega = 2.0 * kPi * require(p, "f_Hz");
    v.V_d = require(p, "V_d_kV") * 1e3;
    v.V2_hat = require(p, "V2_hat_kV") * 1e3;
    v.V2_actual = p["V2_actual_kV"] ? require(p, "V2_actual_kV") * 1e3 : v.V2_hat;
    v.R_T = triple(p, "R_T_Ohm");
    const auto lt = triple(p, "L_T_mH");
    for (std::size_t k = 0; k < 3; ++k) v.L_T[k] = lt[k] * 1e-3;
    v.u_bound = optional_or(p, "u_bound", 2.0 / 3.0);
    try {
        v.validate();
    } catch (const InvalidModelError& e) {
        fail(p, e.what());
    }
    return v;
}

void check_version(const YAML::Node& root) {
    const YAML::Node v = root["format_version"];
    if (!v) fail(root, "missing 'format_version'");
    int version = 0;
    try {
        version = v.as<int>();
    } catch (const YAML::Exception&) {
        fail(v, "'format_version' must be an integer");
    }
    if (version != kFormatVersion) {
        fail(v, "unsupported format_version " + std::to_string(version));
    }
}

SystemConfig parse_system_node(const YAML::Node& root) {
    check_keys(root, {"format_version", "system", "parameters", "controller", "reference"},
               "system file");
    check_version(root);
    SystemConfig cfg;
    const YAML::Node kind = root["system"];
    if (!kind) fail(root, "missing 'system'");
    const std::string k = kind.as<std::string>();
    if (k == "boost") cfg.kind = SystemKind::Boost;
    else if (k == "vsc") cfg.kind = SystemKind::Vsc;
    else fail(kind, "unknown system '" + k + "' (expected boost or vsc)");

    const YAML::Node params = root["parameters"];
    if (!params) fail(root, "missing 'parameters'");
    if (cfg.kind == SystemKind::Boost) cfg.boost = parse_boost(params);
    else cfg.vsc = parse_vsc(params);

    const YAML::Node ctrl = root["controller"];
    if (!ctrl) fail(root, "missing 'controller'");
    cfg.controller = parse_controller(ctrl, cfg.inputs());

    const YAML::Node ref = root["reference"];
    if (!ref) fail(root, "missing 'reference'");
    cfg.reference = parse_quantities(ref, cfg.kind == SystemKind::Boost ? kBoostRef : kVscRef,
                                     "reference");
    try {
        (void)reference_state(cfg, cfg.reference);
    } catch (const Error& e) {
        fail(ref, e.what());
    }
    return cfg;
}

YAML::Node load_yaml(const std::string& text) {
    try {
        return YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ParseError(e.msg, e.mark.line + 1, e.mark.column + 1);
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

const char* to_string(SystemKind k) { return k == SystemKind::Boost ? "boost" : "vsc"; }

SystemConfig parse_system(const std::string& text) { return parse_system_node(load_yaml(text)); }

SystemConfig load_system(const std::string& path) {
    const std::string text = read_file(path);
    try {
        return parse_system(text);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + std::string(e.what()), 0, 0);
    }
}

ScenarioConfig parse_scenario(const std::string& text, const std::string& base_dir) {
    const YAML::Node root = load_yaml(text);
    check_keys(root, {"format_version", "system", "simulation", "variants", "events"},
               "scenario file");
    check_version(root);
    ScenarioConfig sc;

    const YAML::Node sys = root["system"];
    if (!sys) fail(root, "missing 'system'");
    if (sys.IsScalar()) {
        const std::filesystem::path p = std::filesystem::path(base_dir) / sys.as<std::string>();
        std::string sub;
        try {
            sub = read_file(p.string());
        } catch (const Error& e) {
            fail(sys, e.what());
        }
        try {
            sc.system = parse_system(sub);
        } catch (const ParseError& e) {
            fail(sys, p.string() + ": " + e.what());
        }
    } else {
        sc.system = parse_system_node(sys);
    }
    const int m = sc.system.inputs();
    const bool boost = sc.system.kind == SystemKind::Boost;

    const YAML::Node sim = root["simulation"];
    if (!sim) fail(root, "missing 'simulation'");
    check_keys(sim, {"duration_s", "dt_s", "decimate", "integrator", "initial", "lyapunov"},
               "simulation");
    sc.duration_s = require(sim, "duration_s");
    sc.dt_s = optional_or(sim, "dt_s", 1e-5);
    if (!(sc.duration_s > 0.0)) fail(sim["duration_s"], "duration_s must be positive");
    if (!(sc.dt_s > 0.0)) fail(sim["dt_s"], "dt_s must be positive");
    if (const YAML::Node d = sim["decimate"]) {
        try {
            sc.decimate = d.as<int>();
        } catch (const YAML::Exception&) {
            fail(d, "'decimate' must be an integer");
        }
        if (sc.decimate < 1) fail(d, "'decimate' must be >= 1");
    }
    if (const YAML::Node integ = sim["integrator"]) {
        const std::string s = integ.as<std::string>();
        if (s == "rk4") sc.integrator = Integrator::Rk4;
        else if (s == "radau2a") sc.integrator = Integrator::Radau2A;
        else fail(integ, "unknown integrator '" + s + "' (expected rk4 or radau2a)");
    }
    if (const YAML::Node init = sim["initial"]) {
        if (init.IsScalar() && init.Scalar() == "equilibrium") {
            sc.initial.clear();
        } else {
            const std::set<std::string> keys =
                boost ? std::set<std::string>{"i_L_A", "v_C_V", "x_c"}
                      : std::set<std::string>{"i_d_A", "i_q_A", "v1_V", "i_T1_A", "i_T2_A",
                                              "i_T3_A", "x_c_d", "x_c_q"};
            sc.initial = parse_quantities(init, keys, "initial");
        }
    }
    if (const YAML::Node ly = sim["lyapunov"]) {
        check_keys(ly, {"variant", "epsilon"}, "lyapunov");
        LyapunovTracking t;
        const std::string v = ly["variant"] ? ly["variant"].as<std::string>() : "PID";
        if (v == "PID") t.variant = ControllerVariant::Pid;
        else if (v == "PLID") t.variant = ControllerVariant::Plid;
        else if (v == "mPID") t.variant = ControllerVariant::Mpid;
        else if (v == "mPLID") t.variant = ControllerVariant::Mplid;
        else fail(ly["variant"], "unknown Lyapunov variant '" + v + "'");
        t.epsilon = optional_or(ly, "epsilon", 0.0);
        sc.lyapunov = t;
    }

    if (const YAML::Node vars = root["variants"]) {
        if (!vars.IsSequence()) fail(vars, "'variants' must be a list");
        for (const YAML::Node& v : vars) {
            check_keys(v, {"name", "controller"}, "variant");
            VariantSpec spec;
            spec.name = v["name"] ? v["name"].as<std::string>() : "variant" + std::to_string(sc.variants.size());
            spec.controller = sc.system.controller;
            if (v["controller"]) merge_controller(v["controller"], m, spec.controller);
            sc.variants.push_back(spec);
        }
    }

    if (const YAML::Node evs = root["events"]) {
        if (!evs.IsSequence()) fail(evs, "'events' must be a list");
        double prev = -INFINITY;
        for (const YAML::Node& e : evs) {
            check_keys(e, {"time_s", "label", "reference", "plant", "gains"}, "event");
            EventSpec ev;
            ev.time_s = require(e, "time_s");
            if (!(ev.time_s > prev)) fail(e["time_s"], "event times must increase strictly");
            if (ev.time_s < 0.0 || ev.time_s > sc.duration_s) {
                fail(e["time_s"], "event time outside the simulated span");
            }
            prev = ev.time_s;
            if (e["label"]) ev.label = e["label"].as<std::string>();
            if (e["reference"]) {
                ev.reference = parse_quantities(e["reference"], boost ? kBoostRef : kVscRef, "reference");
            }
            if (e["plant"]) {
                ev.plant = parse_quantities(e["plant"], boost ? kBoostPlant : kVscPlant, "plant");
            }
            if (e["gains"]) {
                ControllerSpec g = sc.system.controller;
                merge_controller(e["gains"], m, g);
                ev.gains = g;
            }
            sc.events.push_back(ev);
        }
    }
    return sc;
}

ScenarioConfig load_scenario(const std::string& path) {
    const std::string text = read_file(path);
    const std::string dir = std::filesystem::path(path).parent_path().string();
    try {
        return parse_scenario(text, dir.empty() ? "." : dir);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + std::string(e.what()), 0, 0);
    }
}

namespace {

void emit_matrix(YAML::Emitter& out, const Matrix& a) {
    out << YAML::Flow << YAML::BeginSeq;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        out << YAML::Flow << YAML::BeginSeq;
        for (Eigen::Index j = 0; j < a.cols(); ++j) out << a(i, j);
        out << YAML::EndSeq;
    }
    out << YAML::EndSeq;
}

// Shortest decimal in file units that the parser maps back onto `si` exactly.
template <class ToSi>
std::string in_units(double si, double file_value, ToSi to_si) {
    char buf[40];
    for (int p = 1; p <= 17; ++p) {
        std::snprintf(buf, sizeof buf, "%.*g", p, file_value);
        if (to_si(std::strtod(buf, nullptr)) == si) return buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", file_value);
    return buf;
}

std::string scaled(double si, double file_to_si) {
    return in_units(si, si / file_to_si, [=](double f) { return f * file_to_si; });
}

void emit_controller(YAML::Emitter& out, const ControllerSpec& c) {
    out << YAML::BeginMap;
    out << YAML::Key << "K_P" << YAML::Value;
    emit_matrix(out, c.K_P);
    out << YAML::Key << "K_I" << YAML::Value;
    emit_matrix(out, c.K_I);
    out << YAML::Key << "K_D" << YAML::Value;
    emit_matrix(out, c.K_D);
    if (c.K_L) {
        out << YAML::Key << "K_L" << YAML::Value;
        emit_matrix(out, *c.K_L);
    }
    out << YAML::Key << "monotone" << YAML::Value << c.monotone;
    out << YAML::Key << "lambda" << YAML::Value << c.lambda;
    out << YAML::EndMap;
}

void emit_quantities(YAML::Emitter& out, const Quantities& q) {
    out << YAML::BeginMap;
    for (const auto& [k, v] : q) out << YAML::Key << k << YAML::Value << v;
    out << YAML::EndMap;
}

void emit_system(YAML::Emitter& out, const SystemConfig& cfg) {
    out << YAML::BeginMap;
    out << YAML::Key << "format_version" << YAML::Value << kFormatVersion;
    out << YAML::Key << "system" << YAML::Value << to_string(cfg.kind);
    out << YAML::Key << "parameters" << YAML::Value << YAML::BeginMap;
    if (cfg.kind == SystemKind::Boost) {
        const auto& b = cfg.boost;
        out << YAML::Key << "L_mH" << YAML::Value << scaled(b.L, 1e-3);
        out << YAML::Key << "C_mF" << YAML::Value << scaled(b.C, 1e-3);
        out << YAML::Key << "R_mOhm" << YAML::Value << scaled(b.R, 1e-3);
        out << YAML::Key << "G_mS" << YAML::Value << scaled(b.G, 1e-3);
        out << YAML::Key << "v0_V" << YAML::Value << b.v0;
        out << YAML::Key << "G0_hat_mS" << YAML::Value << scaled(b.G0_hat, 1e-3);
        out << YAML::Key << "G0_actual_mS" << YAML::Value << scaled(b.G0_actual, 1e-3);
        out << YAML::Key << "i0_hat_A" << YAML::Value << b.i0_hat;
        out << YAML::Key << "i0_actual_A" << YAML::Value << b.i0_actual;
        out << YAML::Key << "u_min" << YAML::Value << b.u_min;
        out << YAML::Key << "u_max" << YAML::Value << b.u_max;
    } else {
        const auto& v = cfg.vsc;
        out << YAML::Key << "L_mH" << YAML::Value << scaled(v.L, 1e-3);
        out << YAML::Key << "C_uF" << YAML::Value << scaled(v.C, 1e-6);
        out << YAML::Key << "R_Ohm" << YAML::Value << v.R;
        out << YAML::Key << "G_mS" << YAML::Value << scaled(v.G, 1e-3);
        out << YAML::Key << "f_Hz" << YAML::Value << in_units(v.omega, v.omega / (2.0 * kPi), [](double f) { return 2.0 * kPi * f; });
        out << YAML::Key << "V_d_kV" << YAML::Value << scaled(v.V_d, 1e3);
        out << YAML::Key << "V2_hat_kV" << YAML::Value << scaled(v.V2_hat, 1e3);
        out << YAML::Key << "V2_actual_kV" << YAML::Value << scaled(v.V2_actual, 1e3);
        out << YAML::Key << "R_T_Ohm" << YAML::Value << YAML::Flow << YAML::BeginSeq << v.R_T[0]
            << v.R_T[1] << v.R_T[2] << YAML::EndSeq;
        out << YAML::Key << "L_T_mH" << YAML::Value << YAML::Flow << YAML::BeginSeq
            << scaled(v.L_T[0], 1e-3) << scaled(v.L_T[1], 1e-3) << scaled(v.L_T[2], 1e-3) << YAML::EndSeq;
        out << YAML::Key << "u_bound" << YAML::Value << v.u_bound;
    }
    out << YAML::EndMap;
    out << YAML::Key << "controller" << YAML::Value;
    emit_controller(out, cfg.controller);
    out << YAML::Key << "reference" << YAML::Value;
    emit_quantities(out, cfg.reference);
    out << YAML::EndMap;
}

}  // namespace

std::string serialize(const SystemConfig& cfg) {
    YAML::Emitter out;
    out.SetDoublePrecision(std::numeric_limits<double>::max_digits10);
    emit_system(out, cfg);
    return std::string(out.c_str()) + "\n";
}

std::string serialize(const ScenarioConfig& sc) {
    YAML::Emitter out;
    out.SetDoublePrecision(std::numeric_limits<double>::max_digits10);
    out << YAML::BeginMap;
    out << YAML::Key << "format_version" << YAML::Value << kFormatVersion;
    out << YAML::Key << "system" << YAML::Value;
    emit_system(out, sc.system);
    out << YAML::Key << "simulation" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "duration_s" << YAML::Value << sc.duration_s;
    out << YAML::Key << "dt_s" << YAML::Value << sc.dt_s;
    out << YAML::Key << "decimate" << YAML::Value << sc.decimate;
    out << YAML::Key << "integrator" << YAML::Value << to_string(sc.integrator);
    out << YAML::Key << "initial" << YAML::Value;
    if (sc.initial.empty()) out << "equilibrium";
    else emit_quantities(out, sc.initial);
    if (sc.lyapunov) {
        out << YAML::Key << "lyapunov" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "variant" << YAML::Value << to_string(sc.lyapunov->variant);
        out << YAML::Key << "epsilon" << YAML::Value << sc.lyapunov->epsilon;
        out << YAML::EndMap;
    }
    out << YAML::EndMap;
    if (!sc.variants.empty()) {
        out << YAML::Key << "variants" << YAML::Value << YAML::BeginSeq;
        for (const auto& v : sc.variants) {
            out << YAML::BeginMap << YAML::Key << "name" << YAML::Value << v.name;
            out << YAML::Key << "controller" << YAML::Value;
            emit_controller(out, v.controller);
            out << YAML::EndMap;
        }
        out << YAML::EndSeq;
    }
    if (!sc.events.empty()) {
        out << YAML::Key << "events" << YAML::Value << YAML::BeginSeq;
        for (const auto& e : sc.events) {
            out << YAML::BeginMap << YAML::Key << "time_s" << YAML::Value << e.time_s;
            if (!e.label.empty()) out << YAML::Key << "label" << YAML::Value << e.label;
            if (!e.reference.empty()) {
                out << YAML::Key << "reference" << YAML::Value;
                emit_quantities(out, e.reference);
            }
            if (!e.plant.empty()) {
                out << YAML::Key << "plant" << YAML::Value;
                emit_quantities(out, e.plant);
            }
            if (e.gains) {
                out << YAML::Key << "gains" << YAML::Value;
                emit_controller(out, *e.gains);
            }
            out << YAML::EndMap;
        }
        out << YAML::EndSeq;
    }
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

Gains to_gains(const ControllerSpec& spec) {
    Gains g;
    g.K_P = spec.K_P;
    g.K_I = spec.K_I;
    g.K_D = spec.K_D;
    g.K_L = spec.K_L;
    return g;
}

Vector reference_state(const SystemConfig& cfg, const Quantities& q) {
    auto get = [&](const std::string& k) -> std::optional<double> {
        const auto it = q.find(k);
        if (it == q.end()) return std::nullopt;
        return it->second;
    };
    if (cfg.kind == SystemKind::Boost) {
        const auto v = get("v_C_V");
        if (!v) throw InvalidModelError("boost reference needs v_C_V");
        return boost_reference(cfg.boost, *v, apps::Model::Estimated);
    }
    double i_d = 0.0;
    double i_q = 0.0;
    if (get("P_MW") || get("Q_MW")) {
        if (get("i_d_A") || get("i_q_A")) {
            throw InvalidModelError("vsc reference: give either P_MW/Q_MW or i_d_A/i_q_A");
        }
        i_d = apps::vsc_current_from_power(cfg.vsc, get("P_MW").value_or(0.0) * 1e6);
        i_q = apps::vsc_current_from_power(cfg.vsc, get("Q_MW").value_or(0.0) * 1e6);
    } else {
        i_d = get("i_d_A").value_or(0.0);
        i_q = get("i_q_A").value_or(0.0);
    }
    return vsc_reference(cfg.vsc, i_d, i_q, apps::Model::Estimated);
}

SystemConfig with_plant_changes(const SystemConfig& cfg, const Quantities& plant) {
    SystemConfig out = cfg;
    for (const auto& [k, v] : plant) {
        if (k == "i0_actual_A") out.boost.i0_actual = v;
        else if (k == "G0_actual_mS") out.boost.G0_actual = v * 1e-3;
        else if (k == "V2_ratio") out.vsc.V2_actual = v * cfg.vsc.V2_hat;
        else if (k == "V2_actual_kV") out.vsc.V2_actual = v * 1e3;
        else throw InvalidModelError("unknown plant quantity '" + k + "'");
    }
    return out;
}

BuiltSystem build(const SystemConfig& cfg) { return build(cfg, cfg.controller); }

BuiltSystem build(const SystemConfig& cfg, const ControllerSpec& spec) {
    const bool boost = cfg.kind == SystemKind::Boost;
    PHSystem plant = boost ? apps::build_boost(cfg.boost, apps::Model::Actual)
                           : apps::build_vsc(cfg.vsc, apps::Model::Actual);
    PHSystem design = boost ? apps::build_boost(cfg.boost, apps::Model::Estimated)
                            : apps::build_vsc(cfg.vsc, apps::Model::Estimated);
    const int m = plant.m();
    Vector u_min(m);
    Vector u_max(m);
    if (boost) {
        u_min(0) = cfg.boost.u_min;
        u_max(0) = cfg.boost.u_max;
    } else {
        u_min.setConstant(-cfg.vsc.u_bound);
        u_max.setConstant(cfg.vsc.u_bound);
    }
    Vector x_star = reference_state(cfg, cfg.reference);
    std::optional<MonotoneMap> w;
    if (spec.monotone) {
        w = MonotoneMap(u_min, u_max, equilibrium_control(design, x_star), spec.lambda);
    }
    ControllerConfig ctrl(design, to_gains(spec), x_star, w);
    return {std::move(plant), std::move(design), std::move(x_star), std::move(ctrl), u_min, u_max};
}

BuiltScenario build_scenario(const ScenarioConfig& sc, int variant) {
    if (variant >= static_cast<int>(sc.variants.size())) {
        throw InvalidModelError("scenario variant index out of range");
    }
    const ControllerSpec& spec =
        variant < 0 ? sc.system.controller : sc.variants[static_cast<std::size_t>(variant)].controller;
    BuiltScenario out{build(sc.system, spec), Scenario{}};
    const BuiltSystem& bs = out.system;
    Scenario& s = out.scenario;
    s.duration = sc.duration_s;
    s.dt = sc.dt_s;
    s.decimate = sc.decimate;
    s.integrator = sc.integrator;
    s.lyapunov = sc.lyapunov;

    const bool boost = sc.system.kind == SystemKind::Boost;
    if (sc.initial.empty()) {
        s.x0 = bs.x_star;
        s.x_c0 = bs.controller.x_c_star();
    } else {
        auto get = [&](const std::string& k, double fallback) {
            const auto it = sc.initial.find(k);
            return it == sc.initial.end() ? fallback : it->second;
        };
        const Vector co = bs.design.Q() * bs.x_star;
        if (boost) {
            s.x0 = apps::boost_state(sc.system.boost, get("i_L_A", co(0)), get("v_C_V", co(1)));
            s.x_c0 = Vector::Constant(1, get("x_c", bs.controller.x_c_star()(0)));
        } else {
            s.x0 = apps::vsc_state(sc.system.vsc, get("i_d_A", co(0)), get("i_q_A", co(1)),
                                   get("v1_V", co(2)),
                                   {get("i_T1_A", co(3)), get("i_T2_A", co(4)), get("i_T3_A", co(5))});
            s.x_c0.resize(2);
            s.x_c0 << get("x_c_d", bs.controller.x_c_star()(0)),
                get("x_c_q", bs.controller.x_c_star()(1));
        }
    }

    SystemConfig current = sc.system;
    for (const EventSpec& e : sc.events) {
        Event ev;
        ev.time = e.time_s;
        ev.label = e.label;
        if (!e.plant.empty()) {
            current = with_plant_changes(current, e.plant);
            const PHSystem p = boost ? apps::build_boost(current.boost, apps::Model::Actual)
                                     : apps::build_vsc(current.vsc, apps::Model::Actual);
            ev.E_actual = p.E();
            ev.R_actual = p.R();
        }
        if (!e.reference.empty()) ev.x_star = reference_state(current, e.reference);
        if (e.gains) ev.gains = to_gains(*e.gains);
        s.events.push_back(std::move(ev));
    }
    return out;
}

}  // namespace pbc::io
