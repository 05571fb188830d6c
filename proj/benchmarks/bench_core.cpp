#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "donorspin/dynamics.hpp"
#include "donorspin/fitting.hpp"
#include "donorspin/phonon_oracle.hpp"
#include "donorspin/quadrature.hpp"

using namespace donorspin;

namespace {

const MaterialParameters kMat{};
const DerivedDonorParameters kDonor = derive_donor(kMat);

void BM_GoldenRuleRate(benchmark::State& state) {
  const QuadratureRule rule = sphere_product_rule(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(golden_rule_rate(Geometry::Voigt, 5.0, kMat, kDonor, rule));
  }
  state.counters["nodes"] = static_cast<double>(rule.nodes.size());
}
BENCHMARK(BM_GoldenRuleRate)->Arg(5)->Arg(16)->Arg(64);

PulseSequence op_sequence() {
  PulseSequence seq;
  seq.segments = {ScrambleSegment{}, PumpSegment{Drive{Line::HDown, 1e6}, 2e-3, true}};
  seq.bin_width = 5e-6;
  return seq;
}

void BM_EvolveExact(benchmark::State& state) {
  const auto sys = build_level_system(Geometry::Voigt, 5.0, 1.5, kMat, kDonor);
  EnsembleSpec ens;
  ens.sub_ensembles = static_cast<int>(state.range(0));
  const PulseSequence seq = op_sequence();
  for (auto _ : state) benchmark::DoNotOptimize(evolve(sys, seq, ens, {}, 1));
}
BENCHMARK(BM_EvolveExact)->Arg(1)->Arg(21)->Arg(101)->Unit(benchmark::kMillisecond);

void BM_EvolveFixedStep(benchmark::State& state) {
  const auto sys = build_level_system(Geometry::Voigt, 5.0, 1.5, kMat, kDonor);
  EnsembleSpec ens;
  ens.sub_ensembles = 1;
  PulseSequence seq = op_sequence();
  std::get<PumpSegment>(seq.segments[1]).duration = 1e-4;
  const SolverOptions solver{SolverKind::FixedStep, 1e-9};
  for (auto _ : state) benchmark::DoNotOptimize(evolve(sys, seq, ens, solver, 1));
}
BENCHMARK(BM_EvolveFixedStep)->Unit(benchmark::kMillisecond);

void BM_RecoveryFit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> tau(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    tau[i] = 0.05 * static_cast<double>(i) / static_cast<double>(n - 1);
    y[i] = 1000.0 * (1.0 - std::exp(-tau[i] / 0.0078)) + 50.0 + 3.0 * std::sin(17.0 * i);
  }
  for (auto _ : state) benchmark::DoNotOptimize(fit_exponential_recovery(tau, y));
}
BENCHMARK(BM_RecoveryFit)->Arg(21)->Arg(201)->Arg(2001);

}  // namespace
BENCHMARK_MAIN();
