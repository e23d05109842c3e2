#include <benchmark/benchmark.h>

#include "test_common.hpp"
#include "v2vdep/analytic.hpp"
#include "v2vdep/montecarlo.hpp"
#include "v2vdep/optimizer.hpp"

using namespace v2vdep;

namespace {

const ValidatedScenario& scenario() {
  static const ValidatedScenario scen = validate(table1_config(0.03));
  return scen;
}

void BM_PppIntegral(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(analytic::ppp_integral(0.63, 0.0, 3.0));
}
BENCHMARK(BM_PppIntegral);

void BM_JointPppIntegral(benchmark::State& state) {
  const std::vector<double> coeffs{383.0, 43.5};
  const std::vector<double> rx{0.0, 10.0};
  for (auto _ : state)
    benchmark::DoNotOptimize(analytic::joint_ppp_integral(coeffs, rx, 3.0));
}
BENCHMARK(BM_JointPppIntegral);

void BM_MarginalCdf(benchmark::State& state) {
  const auto& scen = scenario();
  const auto& powers = scen.config().allocation.tx_powers_watts;
  for (auto _ : state)
    benchmark::DoNotOptimize(analytic::marginal_cdf(0, 13.9e-3, powers, scen).value);
}
BENCHMARK(BM_MarginalCdf);

void BM_MarginalMedian(benchmark::State& state) {
  const auto& scen = scenario();
  const auto& powers = scen.config().allocation.tx_powers_watts;
  for (auto _ : state)
    benchmark::DoNotOptimize(analytic::marginal_median(0, powers, scen).delay_s);
}
BENCHMARK(BM_MarginalMedian);

void BM_BlomqvistBeta(benchmark::State& state) {
  const auto& scen = scenario();
  const auto& powers = scen.config().allocation.tx_powers_watts;
  for (auto _ : state)
    benchmark::DoNotOptimize(analytic::blomqvist_beta(powers, scen).beta);
}
BENCHMARK(BM_BlomqvistBeta);

void BM_TrialEnsembleBuild(benchmark::State& state) {
  const auto& scen = scenario();
  for (auto _ : state) {
    mc::TrialEnsemble ensemble(scen, static_cast<std::size_t>(state.range(0)), 1);
    benchmark::DoNotOptimize(ensemble.trials());
  }
}
BENCHMARK(BM_TrialEnsembleBuild)->Arg(1000)->Arg(10000);

void BM_DelaysFor(benchmark::State& state) {
  const auto& scen = scenario();
  const mc::TrialEnsemble ensemble(scen, 10000, 1);
  const auto& powers = scen.config().allocation.tx_powers_watts;
  for (auto _ : state)
    benchmark::DoNotOptimize(ensemble.delays_for(powers, mc::LinkMode::sir));
}
BENCHMARK(BM_DelaysFor);

void BM_DirectSearch(benchmark::State& state) {
  const auto& scen = scenario();
  for (auto _ : state) {
    auto result = opt::direct_search(scen);
    benchmark::DoNotOptimize(result.best_beta);
  }
}
BENCHMARK(BM_DirectSearch);

}  // namespace

BENCHMARK_MAIN();
