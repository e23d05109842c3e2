#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "test_common.hpp"
#include "v2vdep/analytic.hpp"
#include "v2vdep/montecarlo.hpp"
#include "v2vdep/parallel.hpp"

using namespace v2vdep;
using namespace v2vdep::mc;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

struct ThreadGuard {
  explicit ThreadGuard(unsigned n) { set_max_threads(n); }
  ~ThreadGuard() { set_max_threads(0); }
};
}  // namespace

TEST_CASE("empty field yields no interferers") {
  InterfererField field;
  field.density_per_m = 0.0;
  field.power_watts = 1.0;
  field.road_length_m = 20000.0;
  for (std::uint64_t t = 0; t < 50; ++t) {
    CounterRng rng(7, t);
    CHECK(sample_interferers(field, rng).empty());
  }
}

TEST_CASE("interferer counts follow the Poisson law") {
  InterfererField field;
  field.power_watts = 1.0;
  field.road_length_m = 20000.0;

  field.density_per_m = 0.01;  // mean 200
  double sum = 0.0;
  const int draws = 10000;
  for (int t = 0; t < draws; ++t) {
    CounterRng rng(11, static_cast<std::uint64_t>(t));
    sum += static_cast<double>(sample_interferers(field, rng).size());
  }
  const double mean = sum / draws;
  CHECK(std::fabs(mean - 200.0) <= 3.0 * std::sqrt(200.0 / draws));

  field.density_per_m = 0.03;  // mean 600, variance 600 under equidispersion
  double s1 = 0.0;
  double s2 = 0.0;
  for (int t = 0; t < draws; ++t) {
    CounterRng rng(13, static_cast<std::uint64_t>(t));
    const double n = static_cast<double>(sample_interferers(field, rng).size());
    s1 += n;
    s2 += n * n;
  }
  const double m1 = s1 / draws;
  const double var = s2 / draws - m1 * m1;
  CHECK(std::fabs(var - 600.0) <= 0.05 * 600.0);
}

TEST_CASE("positions stay inside the sampled window") {
  InterfererField field;
  field.density_per_m = 0.05;
  field.power_watts = 1.0;
  field.road_length_m = 1000.0;
  CounterRng rng(3, 0);
  const auto positions = sample_interferers(field, rng);
  REQUIRE(!positions.empty());
  for (const double x : positions) {
    CHECK(x >= -500.0);
    CHECK(x < 500.0);
  }
}

TEST_CASE("trials are reproducible from their keys") {
  const auto scen = validate(table1_config(0.02));
  const auto powers = scen.config().allocation.tx_powers_watts;
  const auto a = simulate_trial(scen, powers, LinkMode::sir, 123, 45);
  const auto b = simulate_trial(scen, powers, LinkMode::sir, 123, 45);
  CHECK(a.interferer_positions_m == b.interferer_positions_m);
  CHECK(a.cross_gains == b.cross_gains);
  CHECK(a.interferer_gains == b.interferer_gains);
  CHECK(a.delays_s == b.delays_s);
  const auto c = simulate_trial(scen, powers, LinkMode::sir, 123, 46);
  CHECK(a.interferer_positions_m != c.interferer_positions_m);
}

TEST_CASE("degenerate limits in SIR mode") {
  auto cfg = table1_config(0.0);
  cfg.allocation.tx_powers_watts[1] = 0.0;
  const auto scen = validate(cfg);
  const auto sample =
      simulate_trial(scen, cfg.allocation.tx_powers_watts, LinkMode::sir, 1, 0);
  CHECK(sample.delays_s[0] == 0.0);       // zero interference, unbounded rate
  CHECK(std::isinf(sample.delays_s[1]));  // silent link never delivers
}

TEST_CASE("estimate is bit-identical across thread counts") {
  const auto scen = validate(table1_config(0.01));
  const auto powers = scen.config().allocation.tx_powers_watts;
  const auto targets = scen.config().requirements.targets_s;
  EmpiricalReport reports[3];
  const unsigned threads[3] = {1, 3, 8};
  for (int k = 0; k < 3; ++k) {
    ThreadGuard guard(threads[k]);
    reports[k] = estimate(scen, powers, targets, 4000, LinkMode::sir, 77);
  }
  for (int k = 1; k < 3; ++k) {
    CHECK(reports[k].joint_reliability == reports[0].joint_reliability);
    CHECK(reports[k].empirical_beta == reports[0].empirical_beta);
    CHECK(reports[k].marginal_reliabilities == reports[0].marginal_reliabilities);
    CHECK(reports[k].empirical_medians_s == reports[0].empirical_medians_s);
  }
}

TEST_CASE("noise-limited delay distribution matches the closed form") {
  auto cfg = table1_config(0.0);
  cfg.allocation.tx_powers_watts[1] = 0.0;
  const auto scen = validate(cfg);
  const auto powers = cfg.allocation.tx_powers_watts;

  const std::size_t trials = 100000;
  const TrialEnsemble ensemble(scen, trials, 5);
  const auto delays = ensemble.delays_for(powers, LinkMode::sinr);
  std::vector<double> t1(trials);
  for (std::size_t t = 0; t < trials; ++t) t1[t] = delays[t * 2];
  std::sort(t1.begin(), t1.end());

  // P(t <= v) = exp(-theta(v) * noise * d^alpha / P) for an exponential gain
  const double noise = cfg.radio.bandwidth_hz * cfg.radio.noise_psd_watts_per_hz;
  const double d3 = std::pow(5.0, 3.0);
  double ks = 0.0;
  for (std::size_t k = 0; k < trials; ++k) {
    const double v = t1[k];
    const double analytic_cdf =
        std::exp(-analytic::sir_threshold(v, cfg.radio) * noise * d3 / powers[0]);
    const double lo = static_cast<double>(k) / trials;
    const double hi = static_cast<double>(k + 1) / trials;
    ks = std::max(ks, std::max(std::fabs(analytic_cdf - lo), std::fabs(analytic_cdf - hi)));
  }
  CHECK(ks <= 0.01);
}

TEST_CASE("infinite targets give certain delivery") {
  const auto scen = validate(table1_config(0.03));
  const auto powers = scen.config().allocation.tx_powers_watts;
  const std::vector<double> targets{kInf, kInf};
  const auto report = estimate(scen, powers, targets, 2000, LinkMode::sir, 9);
  CHECK(report.joint_reliability == 1.0);
}

TEST_CASE("joint reliability never exceeds a marginal") {
  for (const std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const auto scen = validate(table1_config(0.04));
    const auto powers = scen.config().allocation.tx_powers_watts;
    const auto report = estimate(scen, powers, scen.config().requirements.targets_s, 5000,
                                 LinkMode::sir, seed);
    for (const double marginal : report.marginal_reliabilities)
      CHECK(report.joint_reliability <= marginal);
  }
}

TEST_CASE("raising own power never slows a link on common randomness") {
  const auto scen = validate(table1_config(0.02));
  const TrialEnsemble ensemble(scen, 3000, 31);
  const double p_max = scen.config().allocation.p_max_watts;
  const auto low = ensemble.delays_for(std::vector<double>{0.25 * p_max, p_max}, LinkMode::sir);
  const auto high = ensemble.delays_for(std::vector<double>{p_max, p_max}, LinkMode::sir);
  for (std::size_t t = 0; t < ensemble.trials(); ++t)
    CHECK(high[t * 2] <= low[t * 2]);
}

TEST_CASE("noise only adds delay on common randomness") {
  const auto scen = validate(table1_config(0.02));
  const auto powers = scen.config().allocation.tx_powers_watts;
  const TrialEnsemble ensemble(scen, 3000, 17);
  const auto sir = ensemble.delays_for(powers, LinkMode::sir);
  const auto sinr = ensemble.delays_for(powers, LinkMode::sinr);
  for (std::size_t k = 0; k < sir.size(); ++k) CHECK(sinr[k] >= sir[k]);
}

TEST_CASE("empirical curves track the analytic distribution") {
  const auto scen = validate(table1_config(0.01));
  const auto powers = scen.config().allocation.tx_powers_watts;
  const std::size_t trials = 100000;
  const TrialEnsemble ensemble(scen, trials, 404);
  const auto delays = ensemble.delays_for(powers, LinkMode::sir);

  std::vector<double> t1(trials), t2(trials), tmax(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    t1[t] = delays[t * 2];
    t2[t] = delays[t * 2 + 1];
    tmax[t] = std::max(t1[t], t2[t]);
  }
  std::sort(t1.begin(), t1.end());
  std::sort(t2.begin(), t2.end());
  std::sort(tmax.begin(), tmax.end());
  auto ecdf = [trials](const std::vector<double>& sorted, double v) {
    return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), v) -
                               sorted.begin()) /
           static_cast<double>(trials);
  };
  double dev = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double v = 1e-6 * std::pow(10.0, 5.0 * k / 99.0);
    dev = std::max(dev, std::fabs(ecdf(t1, v) - analytic::marginal_cdf(0, v, powers, scen).value));
    dev = std::max(dev, std::fabs(ecdf(t2, v) - analytic::marginal_cdf(1, v, powers, scen).value));
    dev = std::max(dev, std::fabs(ecdf(tmax, v) -
                                  analytic::joint_cdf(std::vector<double>{v, v}, powers, scen).value));
  }
  CHECK(dev <= 0.01);

  // concordance agreement within combined uncertainty
  const auto report =
      estimate_from(ensemble, powers, scen.config().requirements.targets_s, LinkMode::sir);
  const double analytic_beta = analytic::blomqvist_beta(powers, scen).beta;
  CHECK(std::fabs(report.empirical_beta - analytic_beta) <= 3.0 * report.empirical_beta_stderr);
}
