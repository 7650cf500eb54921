// Serial vs OpenMP timings for the data-parallel kernels.
#include "qbd/collective.hpp"
#include "qbd/control.hpp"
#include "qbd/engine.hpp"
#include "qbd/lindblad.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace qbd;

namespace {

Exec policy(const benchmark::State& state) { return state.range(0) == 0 ? Exec::serial : Exec::openmp; }

void BM_Dissipator(benchmark::State& state) {
  const auto spec = collective::charging_spec({3, 1.5, 1.0, 2.0, 0.01}, collective::Process::collective);
  for (auto _ : state) benchmark::DoNotOptimize(lindblad::dissipator(spec, policy(state)));
}

void BM_Gradient(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> alphas(100);
  for (double& a : alphas) a = u(rng);
  const control::DriveParams p{1.5, 0.5, 1.0};
  const Mat rho0 = qubit::thermal(1.5, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(control::objective_gradient(alphas, 0.04, p, rho0, 1e-6, policy(state)));
  }
}

void BM_CycleSweep(benchmark::State& state) {
  std::vector<engine::CycleSpec> specs;
  for (double wh : {1.5, 2.0, 3.0, 4.0}) {
    for (double bh : {0.1, 0.2}) {
      engine::CycleSpec s;
      s.omega_h = wh;
      s.beta_h = bh;
      specs.push_back(s);
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(engine::run_cycles(specs, policy(state)));
}

}  // namespace

BENCHMARK(BM_Dissipator)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Gradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CycleSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
