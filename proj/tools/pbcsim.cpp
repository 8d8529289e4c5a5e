// pbcsim: command-line front end for the converter control library.

#include "pbc/apps.hpp"
#include "pbc/equilibria.hpp"
#include "pbc/errors.hpp"
#include "pbc/io/config.hpp"
#include "pbc/io/csv.hpp"
#include "pbc/io/report.hpp"
#include "pbc/sim.hpp"
#include "pbc/stability.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

using namespace pbc;

namespace {

enum Exit { kOk = 0, kFailed = 1, kBadInput = 2, kInfeasible = 3 };

struct SimOverrides {
    std::optional<double> dt;
    std::optional<double> duration;
    std::optional<int> decimate;
};

void apply(io::ScenarioConfig& sc, const SimOverrides& o) {
    if (o.dt) sc.dt_s = *o.dt;
    if (o.duration) {
        // a shortened run drops the events it no longer reaches
        sc.duration_s = *o.duration;
        std::erase_if(sc.events, [&](const io::EventSpec& e) { return e.time_s > sc.duration_s; });
    }
    if (o.decimate) sc.decimate = *o.decimate;
}

std::vector<std::string> labels(const io::SystemConfig& s) {
    return s.kind == io::SystemKind::Boost ? apps::boost_labels() : apps::vsc_labels();
}

std::string join_vector(const Vector& v, int precision = 8) {
    std::ostringstream out;
    out.precision(precision);
    for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v(i);
    return out.str();
}

std::string variant_name(const io::ScenarioConfig& sc, int v) {
    return v < 0 ? std::string("default") : sc.variants[static_cast<std::size_t>(v)].name;
}

// "-" for stdout; otherwise `out` itself, or out with the variant name spliced in
// before the extension when several variants are written.
std::string output_path(const std::string& out, const std::string& variant, bool several) {
    if (out == "-" || !several) return out;
    const std::filesystem::path p(out);
    return (p.parent_path() / (p.stem().string() + "_" + variant + p.extension().string())).string();
}

struct RunSummary {
    std::string name;
    bool ok = false;
    std::string error;
    double seconds = 0.0;
    Vector final_co;
    double u_min = 0.0;
    double u_max = 0.0;
    bool settled = false;
};

RunSummary summarize(const std::string& name, const Trajectory& t, const PHSystem& sys, double secs) {
    RunSummary r;
    r.name = name;
    r.ok = true;
    r.seconds = secs;
    r.final_co = apps::co_energy(sys, t.states.back());
    r.u_min = INFINITY;
    r.u_max = -INFINITY;
    for (const Vector& u : t.controls) {
        r.u_min = std::min(r.u_min, u.minCoeff());
        r.u_max = std::max(r.u_max, u.maxCoeff());
    }
    r.settled = steady_state(t, 0.1, 1e-3).has_value();
    return r;
}

RunSummary run_variant(const io::ScenarioConfig& sc, int v, Trajectory* keep) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const io::BuiltScenario b = io::build_scenario(sc, v);
        Trajectory t = run_scenario(b.system.plant, b.system.design, b.system.controller, b.scenario);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        RunSummary r = summarize(variant_name(sc, v), t, b.system.plant, secs);
        if (keep) *keep = std::move(t);
        return r;
    } catch (const Error& e) {
        RunSummary r;
        r.name = variant_name(sc, v);
        r.error = e.what();
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return r;
    }
}

void print_summary(std::ostream& out, const std::vector<RunSummary>& rows, const std::vector<std::string>& lab) {
    out << "variant\tstatus\tsettled\tu_min\tu_max\twall_s";
    for (const auto& l : lab) out << '\t' << l;
    out << '\n';
    for (const RunSummary& r : rows) {
        out << r.name << '\t' << (r.ok ? "ok" : "error") << '\t' << (r.ok ? (r.settled ? "yes" : "no") : "-");
        if (r.ok) {
            out << '\t' << r.u_min << '\t' << r.u_max << '\t' << r.seconds;
            for (Eigen::Index i = 0; i < r.final_co.size(); ++i) out << '\t' << r.final_co(i);
        } else {
            out << "\t-\t-\t" << r.seconds << "\t" << r.error;
        }
        out << '\n';
    }
}

int cmd_simulate(const std::string& file, const std::string& variant, const std::string& out,
                 const SimOverrides& o) {
    io::ScenarioConfig sc = io::load_scenario(file);
    apply(sc, o);
    std::vector<int> which;
    if (sc.variants.empty()) {
        which.push_back(-1);
    } else if (variant == "all") {
        for (int i = 0; i < static_cast<int>(sc.variants.size()); ++i) which.push_back(i);
    } else {
        for (int i = 0; i < static_cast<int>(sc.variants.size()); ++i) {
            if (sc.variants[static_cast<std::size_t>(i)].name == variant) which.push_back(i);
        }
        if (which.empty()) {
            std::cerr << "error: no variant named '" << variant << "'\n";
            return kBadInput;
        }
    }
    if (out == "-" && which.size() > 1) {
        std::cerr << "error: several variants selected; pass --out <file.csv> or --variant <name>\n";
        return kBadInput;
    }
    std::ostream& report = out == "-" ? std::cerr : std::cout;
    std::vector<RunSummary> rows;
    for (int v : which) {
        Trajectory t;
        RunSummary r = run_variant(sc, v, &t);
        if (r.ok) {
            const io::BuiltScenario b = io::build_scenario(sc, v);
            const std::string path = output_path(out, r.name, which.size() > 1);
            if (path == "-") {
                io::write_trajectory_csv(std::cout, t, b.system.plant, labels(sc.system));
            } else {
                std::ofstream f(path);
                if (!f) throw Error("cannot write " + path);
                io::write_trajectory_csv(f, t, b.system.plant, labels(sc.system));
                report << "wrote " << path << " (" << t.size() << " rows)\n";
            }
        }
        rows.push_back(std::move(r));
    }
    print_summary(report, rows, labels(sc.system));
    for (const RunSummary& r : rows) {
        if (!r.ok) return kFailed;
    }
    return kOk;
}

int cmd_certify(const std::string& file) {
    const io::SystemConfig cfg = io::load_system(file);
    const io::BuiltSystem b = io::build(cfg);
    const ControllerConfig& c = b.controller;
    std::cout << "system: " << io::to_string(cfg.kind) << ", controller " << to_string(c.variant()) << '\n';
    std::cout << "x_star (co-energy): " << join_vector(apps::co_energy(b.design, b.x_star)) << '\n';
    std::cout << "u_star: " << join_vector(c.u_star()) << "\n\n";
    std::cout << "power flow of the actual plant at x_star:\n"
              << io::format_power_flow(gamma_report(b.plant, b.x_star)) << '\n';

    ClosedLoopEquilibrium eq;
    try {
        eq = closed_loop_equilibrium(b.plant, c);
    } catch (const Error& e) {
        std::cerr << "error: closed-loop equilibrium: " << e.what() << '\n';
        return kInfeasible;
    }
    std::cout << "closed-loop equilibrium (co-energy): " << join_vector(apps::co_energy(b.plant, eq.x)) << '\n';
    std::cout << "x_c_bar: " << join_vector(eq.x_c) << ", u_bar: " << join_vector(eq.u) << "\n\n";

    StabilityCertificate cert;
    switch (c.variant()) {
        case ControllerVariant::Pid:
            cert = pid_certificate(b.plant, c, eq.x, {b.u_min, b.u_max});
            break;
        case ControllerVariant::Plid:
            cert = plid_certificate(b.plant, c, eq.x);
            break;
        case ControllerVariant::Mpid:
        case ControllerVariant::Mplid:
            cert = mplid_certificate(b.plant, c, eq.x, eq.x_c);
            break;
    }
    std::cout << io::format_certificate(cert);

    const Gains& g = c.gains();
    if (cfg.kind == io::SystemKind::Boost && g.K_L && g.K_P.norm() == 0.0 && g.K_D.norm() == 0.0) {
        const double bound = boost_leakage_bound(cfg.boost, b.x_star, eq.x);
        const double kl = (*g.K_L)(0, 0);
        std::cout << "\nleakage bound with K_P = K_D = 0:\n"
                  << "    K_L > [R (i_L* - i_L_bar)^2 + G (v_C* - v_C_bar)^2] / (4 R G) = " << bound << '\n'
                  << "    K_L = " << kl << ": " << (kl > bound ? "pass" : "FAIL") << '\n';
    }
    if (g.K_L) std::cout << "droop slope K_P + K_L^-1: " << join_vector(droop_slope(c).diagonal()) << '\n';
    return kOk;
}

struct RefFlags {
    std::optional<double> vref, idref, iqref, pref, qref;
};

int cmd_equilibrium(const std::string& file, const RefFlags& f) {
    io::SystemConfig cfg = io::load_system(file);
    io::Quantities q = cfg.reference;
    if (cfg.kind == io::SystemKind::Boost) {
        if (f.idref || f.iqref || f.pref || f.qref) {
            std::cerr << "error: the boost takes --vref only\n";
            return kBadInput;
        }
        if (f.vref) q["v_C_V"] = *f.vref;
    } else {
        if (f.vref) {
            std::cerr << "error: the VSC takes --idref/--iqref or --pref/--qref\n";
            return kBadInput;
        }
        if ((f.idref || f.iqref) && (f.pref || f.qref)) {
            std::cerr << "error: give currents or powers, not both\n";
            return kBadInput;
        }
        if (f.idref || f.iqref) {
            q.clear();
            q["i_d_A"] = f.idref.value_or(0.0);
            q["i_q_A"] = f.iqref.value_or(0.0);
        } else if (f.pref || f.qref) {
            q.clear();
            q["P_MW"] = f.pref.value_or(0.0);
            q["Q_MW"] = f.qref.value_or(0.0);
        }
    }
    Vector xs;
    try {
        xs = io::reference_state(cfg, q);
    } catch (const InfeasibleError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInfeasible;
    }
    cfg.reference = q;
    const io::BuiltSystem b = io::build(cfg);
    const std::vector<std::string> lab = labels(cfg);
    const Vector co = apps::co_energy(b.design, xs);
    std::cout.precision(10);
    std::cout << "reference x_star on the estimated power flow:\n";
    for (Eigen::Index i = 0; i < co.size(); ++i) std::cout << "    " << lab[static_cast<std::size_t>(i)] << " = " << co(i) << '\n';
    const Vector u = equilibrium_control(b.design, xs);
    const bool inside = (u.array() > b.u_min.array()).all() && (u.array() < b.u_max.array()).all();
    std::cout << "u_star = " << join_vector(u, 10) << (inside ? "  (inside the input box)" : "  (OUTSIDE the input box)")
              << '\n';
    std::cout << "assignability residual = " << assignability_residual(b.design, xs) << "\n\n";
    if (cfg.kind == io::SystemKind::Boost) {
        std::cout << "actual plant (i0 = " << cfg.boost.i0_actual << " A, G0 = " << cfg.boost.G0_actual * 1e3 << " mS):\n";
        const PowerFlowReport r = gamma_report(b.plant, xs);
        std::cout << io::format_power_flow(r);
        std::cout << "u_bar(gamma x_star) inside the box: "
                  << (input_feasibility(b.plant, r.gamma, xs, b.u_min, b.u_max) ? "yes" : "no") << '\n';
    } else {
        std::cout << "actual plant (V2 = " << cfg.vsc.V2_actual * 1e-3 << " kV):\n";
        const VscGammaReport r = vsc_gamma(cfg.vsc, xs);
        std::cout << io::format_power_flow(r.report);
        std::cout << "delta_x_approx = " << r.delta_x_approx << '\n';
        std::cout << "V2 underestimate margin (display form) = " << vsc_margin(cfg.vsc, xs) << " V\n";
        std::cout << "V2 underestimate at which gamma reaches 0 (exact) = " << vsc_margin_exact(cfg.vsc, xs) << " V\n";
    }
    if (!inside) {
        std::cerr << "error: equilibrium control outside the input box\n";
        return kInfeasible;
    }
    return kOk;
}

// Parses "K_P=1e-6,1e-5" into a key and its values.
std::pair<std::string, std::vector<double>> parse_sweep(const std::string& s) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Error("sweep parameter must look like KEY=v1,v2,...: " + s);
    const std::string key = s.substr(0, eq);
    if (key != "K_P" && key != "K_I" && key != "K_D" && key != "K_L") {
        throw Error("sweep key must be one of K_P, K_I, K_D, K_L: " + key);
    }
    std::vector<double> values;
    std::stringstream in(s.substr(eq + 1));
    std::string item;
    while (std::getline(in, item, ',')) values.push_back(std::stod(item));
    if (values.empty()) throw Error("no values for " + key);
    return {key, values};
}

int cmd_sweep(const std::string& file, const std::vector<std::string>& params, int workers, const SimOverrides& o) {
    io::ScenarioConfig base = io::load_scenario(file);
    apply(base, o);
    if (base.variants.empty()) base.variants.push_back({"default", base.system.controller});

    // Cartesian product of the scenario variants with every swept gain.
    std::vector<io::VariantSpec> jobs = base.variants;
    for (const std::string& p : params) {
        const auto [key, values] = parse_sweep(p);
        std::vector<io::VariantSpec> next;
        for (const io::VariantSpec& v : jobs) {
            for (double x : values) {
                io::VariantSpec w = v;
                const Matrix m = x * Matrix::Identity(base.system.inputs(), base.system.inputs());
                if (key == "K_P") w.controller.K_P = m;
                if (key == "K_I") w.controller.K_I = m;
                if (key == "K_D") w.controller.K_D = m;
                if (key == "K_L") w.controller.K_L = m;
                std::ostringstream name;
                name << v.name << "/" << key << "=" << x;
                w.name = name.str();
                next.push_back(std::move(w));
            }
        }
        jobs = std::move(next);
    }
    base.variants = jobs;

    std::vector<RunSummary> rows(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            rows[i] = run_variant(base, static_cast<int>(i), nullptr);
        }
    };
    const int n = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    print_summary(std::cout, rows, labels(base.system));
    for (const RunSummary& r : rows) {
        if (!r.ok) return kFailed;
    }
    return kOk;
}

// Randomized property checks on the two application models.
int cmd_verify(unsigned seed, int samples) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    const apps::BoostParams bp;
    const apps::VscParams vp;
    const PHSystem boost = apps::build_boost(bp);
    const PHSystem vsc = apps::build_vsc(vp);
    double skew = 0.0;
    double equilibrium = 0.0;
    double reduction = 0.0;
    const Vector xs_vsc = vsc_reference(vp, 2000.0, 0.0);
    Gains gl = Gains::diagonal(2, 1e-3, 1e-3, 1e-9);
    Gains g0 = gl;
    g0.K_L = Matrix::Zero(2, 2);
    const ControllerConfig pid(vsc, Gains::diagonal(2, 1e-3, 1e-3, 1e-9), xs_vsc);
    const ControllerConfig plid0(vsc, g0, xs_vsc);
    for (int k = 0; k < samples; ++k) {
        const Vector xb = apps::boost_state(bp, 300 * d(rng), 800 * d(rng));
        const PowerBalance pb = power_balance(boost, xb, Vector::Constant(1, d(rng)));
        skew = std::max(skew, std::abs(pb.control) / (std::abs(pb.dissipated) + std::abs(pb.supplied)));
        const Vector xv = apps::vsc_state(vp, 3000 * d(rng), 3000 * d(rng), 7.7e5 * (1 + 0.1 * d(rng)),
                                          {1000 * d(rng), 1000 * d(rng), 1000 * d(rng)});
        Vector u(2);
        u << d(rng), d(rng);
        const PowerBalance pv = power_balance(vsc, xv, u);
        skew = std::max(skew, std::abs(pv.control) / (std::abs(pv.dissipated) + std::abs(pv.supplied)));

        const Vector xe = boost_reference(bp, 300.0 + 150.0 * (0.5 + 0.5 * d(rng)));
        const Vector ue = equilibrium_control(boost, xe);
        const double scale = (boost.drift_matrix() * xe).norm() + boost.E().norm();
        equilibrium = std::max(equilibrium, dynamics(boost, xe, ue).norm() / scale);

        const Vector xc = pid.x_c_star() + 100.0 * Vector::Constant(2, d(rng));
        const Vector a = control_output(pid, vsc, xv, xc).u;
        reduction = std::max(reduction, (a - control_output(plid0, vsc, xv, xc).u).norm() / a.norm());
    }
    std::printf("seed %u, %d samples\n", seed, samples);
    std::printf("interconnection power / (dissipated + supplied): %.3g\n", skew);
    std::printf("equilibrium residual, relative:                  %.3g\n", equilibrium);
    std::printf("PLID(K_L = 0) vs PID control, relative:          %.3g\n", reduction);
    const bool ok = skew <= 1e-12 && equilibrium <= 1e-9 && reduction <= 1e-12;
    std::printf("%s\n", ok ? "ok" : "FAILED");
    return ok ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Passivity-based PID control of power converters: simulation and certificates"};
    app.require_subcommand(1);

    SimOverrides o;
    std::string file;
    std::string out = "-";
    std::string variant = "all";
    auto* simulate = app.add_subcommand("simulate", "Run a scenario and write the trajectory as CSV");
    simulate->add_option("scenario", file, "Scenario file")->required()->check(CLI::ExistingFile);
    simulate->add_option("--variant", variant, "Variant name, or 'all'");
    simulate->add_option("--out", out, "CSV path ('-' for stdout)");
    for (CLI::App* c : {simulate}) {
        c->add_option("--dt", o.dt, "Step size in seconds")->check(CLI::PositiveNumber);
        c->add_option("--duration", o.duration, "Simulated time in seconds")->check(CLI::PositiveNumber);
        c->add_option("--decimate", o.decimate, "Keep every k-th sample")->check(CLI::PositiveNumber);
    }

    auto* certify = app.add_subcommand("certify", "Check the stability conditions for a system file");
    certify->add_option("system", file, "System file")->required()->check(CLI::ExistingFile);

    RefFlags refs;
    auto* equilibrium = app.add_subcommand("equilibrium", "Complete a reference and report gamma and delta_x");
    equilibrium->add_option("system", file, "System file")->required()->check(CLI::ExistingFile);
    equilibrium->add_option("--vref", refs.vref, "Boost output voltage (V)");
    equilibrium->add_option("--idref", refs.idref, "VSC d-axis current (A)");
    equilibrium->add_option("--iqref", refs.iqref, "VSC q-axis current (A)");
    equilibrium->add_option("--pref", refs.pref, "VSC active power (MW)");
    equilibrium->add_option("--qref", refs.qref, "VSC reactive power (MW)");

    std::vector<std::string> sweep_params;
    int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    auto* sweep = app.add_subcommand("sweep", "Run every variant (times swept gains) in parallel");
    sweep->add_option("scenario", file, "Scenario file")->required()->check(CLI::ExistingFile);
    sweep->add_option("--set", sweep_params, "Gain sweep, e.g. K_L=5e6,5e7,5e8 (repeatable)");
    sweep->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    sweep->add_option("--dt", o.dt, "Step size in seconds")->check(CLI::PositiveNumber);
    sweep->add_option("--duration", o.duration, "Simulated time in seconds")->check(CLI::PositiveNumber);
    sweep->add_option("--decimate", o.decimate, "Keep every k-th sample")->check(CLI::PositiveNumber);

    unsigned seed = 1;
    int samples = 1000;
    auto* verify = app.add_subcommand("verify", "Randomized property checks on the built-in models");
    verify->add_option("--seed", seed, "Random seed");
    verify->add_option("--samples", samples, "Samples per property")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) return cmd_simulate(file, variant, out, o);
        if (*certify) return cmd_certify(file);
        if (*equilibrium) return cmd_equilibrium(file, refs);
        if (*sweep) return cmd_sweep(file, sweep_params, workers, o);
        if (*verify) return cmd_verify(seed, samples);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBadInput;
    } catch (const InfeasibleError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInfeasible;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailed;
    }
    return kOk;
}
