#include "pbc/apps.hpp"
#include "pbc/controllers.hpp"
#include "pbc/equilibria.hpp"
#include "pbc/sim.hpp"
#include "pbc/stability.hpp"

#include <benchmark/benchmark.h>

using namespace pbc;

namespace {

void BM_Rk4BoostStep(benchmark::State& state) {
    const apps::BoostParams p;
    const PHSystem sys = apps::build_boost(p);
    const ControllerConfig cfg(sys, Gains::diagonal(1, 1e-6, 1e-4, 1e-7), boost_reference(p, 380.0));
    Vector x = apps::boost_state(p, 60.0, 360.0);
    Vector xc = cfg.x_c_star();
    for (auto _ : state) {
        const StepResult r = step_rk4(sys, cfg, x, xc, 1e-5);
        benchmark::DoNotOptimize(r.x.data());
    }
}
BENCHMARK(BM_Rk4BoostStep);

void BM_RadauVscStep(benchmark::State& state) {
    const apps::VscParams p;
    const PHSystem sys = apps::build_vsc(p);
    const Vector xs = vsc_reference(p, apps::vsc_current_from_power(p, 1200e6), 0.0);
    const Vector bound = Vector::Constant(2, 2.0 / 3.0);
    const ControllerConfig cfg(sys, Gains::diagonal(2, 1e-3, 1e-3, 0.0), xs,
                               MonotoneMap(-bound, bound, equilibrium_control(sys, xs)));
    const PHSystem perturbed = sys.with_sources(apps::build_vsc([&] {
                                                    apps::VscParams q = p;
                                                    q.V2_actual *= 0.95;
                                                    return q;
                                                }()).E());
    Vector x = xs;
    Vector xc = cfg.x_c_star();
    for (auto _ : state) {
        const StepResult r = step_radau(perturbed, cfg, x, xc, 1e-5);
        benchmark::DoNotOptimize(r.x.data());
    }
}
BENCHMARK(BM_RadauVscStep);

void BM_PidCertificate(benchmark::State& state) {
    const apps::BoostParams p;
    const PHSystem sys = apps::build_boost(p);
    const Vector xs = boost_reference(p, 380.0);
    const ControllerConfig cfg(sys, Gains::diagonal(1, 1e-6, 1e-4, 1e-7), xs);
    const InputBox box{Vector::Constant(1, p.u_min), Vector::Constant(1, p.u_max)};
    for (auto _ : state) {
        const StabilityCertificate c = pid_certificate(sys, cfg, xs, box);
        benchmark::DoNotOptimize(c.alpha);
    }
}
BENCHMARK(BM_PidCertificate);

void BM_MplidControlOutput(benchmark::State& state) {
    const apps::BoostParams p;
    const PHSystem sys = apps::build_boost(p);
    const Vector xs = boost_reference(p, 380.0);
    Gains g = Gains::diagonal(1, 1e-6, 1e-4, 1e-7);
    g.K_L = Matrix::Constant(1, 1, 5e8);
    const ControllerConfig cfg(sys, g, xs,
                               MonotoneMap(Vector::Constant(1, p.u_min), Vector::Constant(1, p.u_max),
                                           equilibrium_control(sys, xs)));
    const Vector x = apps::boost_state(p, 90.0, 400.0);
    const Vector xc = cfg.x_c_star();
    for (auto _ : state) {
        const ControlEval u = control_output(cfg, sys, x, xc);
        benchmark::DoNotOptimize(u.u.data());
    }
}
BENCHMARK(BM_MplidControlOutput);

}  // namespace

BENCHMARK_MAIN();
