#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "test_common.hpp"
#include "v2vdep/analytic.hpp"
#include "v2vdep/montecarlo.hpp"

using namespace v2vdep;
using namespace v2vdep::analytic;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

ScenarioConfig symmetric_config(double density = 0.01) {
  auto cfg = table1_config(density);
  // mirror-symmetric layout: both links span 5 m, both cross distances 10 m
  cfg.geometry.tx_positions_m = {5.0, 10.0};
  cfg.geometry.rx_positions_m = {0.0, 15.0};
  return cfg;
}
}  // namespace

TEST_CASE("sir threshold values and limits") {
  const auto cfg = table1_config();
  // 3200 bits over 20 MHz in 16 us needs 2^10 - 1
  CHECK(sir_threshold(16e-6, cfg.radio) == doctest::Approx(1023.0).epsilon(1e-12));
  // high-precision reference for the 13.9 ms target
  CHECK(sir_threshold(13.9e-3, cfg.radio) ==
        doctest::Approx(0.00801058701186781316).epsilon(1e-12));
  CHECK(sir_threshold(1e9, cfg.radio) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(std::isinf(sir_threshold(1e-12, cfg.radio)));
  double prev = kInf;
  for (double v = 1e-5; v < 1.0; v *= 1.6) {
    const double theta = sir_threshold(v, cfg.radio);
    CHECK(theta < prev);
    prev = theta;
  }
}

TEST_CASE("marginal CDF with an empty interferer field") {
  auto cfg = table1_config(0.0);
  cfg.allocation.tx_powers_watts[1] = 0.0;
  const auto scen = validate(cfg);
  const auto powers = cfg.allocation.tx_powers_watts;
  // the only interferer is silent, so link 1 always delivers
  for (const double v : {1e-7, 1e-4, 1.0})
    CHECK(marginal_cdf(0, v, powers, scen).value == 1.0);
  // the silent link itself never delivers
  const auto silent = marginal_cdf(1, 1.0, powers, scen);
  CHECK(silent.value == 0.0);
  CHECK(silent.silent_link);
}

TEST_CASE("empty field leaves only the cross-interference product") {
  const auto cfg = table1_config(0.0);
  const auto scen = validate(cfg);
  const auto powers = cfg.allocation.tx_powers_watts;
  const double v = 1e-4;
  const double theta = sir_threshold(v, cfg.radio);
  for (std::size_t i = 0; i < 2; ++i) {
    const double signal = powers[i] * scen.path_gain(i, i);
    double cross = 1.0;
    for (std::size_t j = 0; j < 2; ++j)
      if (j != i) cross /= 1.0 + theta * powers[j] * scen.path_gain(j, i) / signal;
    CHECK(marginal_cdf(i, v, powers, scen).value == cross);  // factor is exactly 1
  }
}

TEST_CASE("marginal CDF is monotone and spans (0, 1)") {
  const auto scen = validate(table1_config(0.01));
  const auto powers = scen.config().allocation.tx_powers_watts;
  double prev = -1.0;
  for (int k = 0; k < 1000; ++k) {
    const double v = 1e-7 * std::pow(10.0, 6.0 * k / 999.0);  // 1e-7 .. 0.1 s
    const double f = marginal_cdf(0, v, powers, scen).value;
    CHECK(f >= prev);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    prev = f;
  }
  CHECK(marginal_cdf(0, 1e-7, powers, scen).value < 1e-6);
  // the exposure coefficient decays like the cube root of the threshold, so
  // the limit F -> 1 is approached slowly
  CHECK(marginal_cdf(0, 1e9, powers, scen).value > 0.999);
}

TEST_CASE("marginal median against the high-precision reference") {
  const auto scen = validate(table1_config(0.01));
  const auto powers = scen.config().allocation.tx_powers_watts;
  const auto m1 = marginal_median(0, powers, scen);
  const auto m2 = marginal_median(1, powers, scen);
  CHECK_FALSE(m1.degenerate);
  CHECK(m1.delay_s == doctest::Approx(4.013726515864065e-05).epsilon(1e-9));
  CHECK(m2.delay_s == doctest::Approx(1.859991027498491e-04).epsilon(1e-9));
  CHECK(std::fabs(marginal_cdf(0, m1.delay_s, powers, scen).value - 0.5) <= 1e-9);
}

TEST_CASE("symmetric links have equal medians") {
  const auto scen = validate(symmetric_config());
  const auto powers = scen.config().allocation.tx_powers_watts;
  const auto m1 = marginal_median(0, powers, scen);
  const auto m2 = marginal_median(1, powers, scen);
  CHECK(m1.delay_s == doctest::Approx(m2.delay_s).epsilon(1e-9));
}

TEST_CASE("median edge cases") {
  auto cfg = table1_config(0.0);
  cfg.allocation.tx_powers_watts[1] = 0.0;
  const auto scen = validate(cfg);
  const auto powers = cfg.allocation.tx_powers_watts;
  // interference-free link: the CDF jumps to 1, the floor is returned
  const auto m1 = marginal_median(0, powers, scen);
  CHECK(m1.degenerate);
  CHECK(m1.delay_s == doctest::Approx(1e-8));
  // a silent link never reaches 1/2
  CHECK_THROWS_AS((void)marginal_median(1, powers, scen), MedianError);
}

TEST_CASE("median matches the Monte Carlo percentile") {
  const auto scen = validate(table1_config(0.01));
  const auto powers = scen.config().allocation.tx_powers_watts;
  const double median = marginal_median(0, powers, scen).delay_s;
  const mc::TrialEnsemble ensemble(scen, 100000, 99);
  const auto delays = ensemble.delays_for(powers, mc::LinkMode::sir);
  std::size_t below = 0;
  for (std::size_t t = 0; t < ensemble.trials(); ++t) below += delays[t * 2] <= median;
  const double frac = static_cast<double>(below) / static_cast<double>(ensemble.trials());
  CHECK(std::fabs(frac - 0.5) <= 4.0 * 0.5 / std::sqrt(100000.0));
}

TEST_CASE("joint CDF limits and consistency") {
  const auto scen = validate(table1_config(0.01));
  const auto powers = scen.config().allocation.tx_powers_watts;
  CHECK(joint_cdf(std::vector<double>{0.0, 1.0}, powers, scen).value == 0.0);
  // padding a link with +inf reduces to the marginal
  const double v = 2e-4;
  CHECK(joint_cdf(std::vector<double>{v, kInf}, powers, scen).value ==
        doctest::Approx(marginal_cdf(0, v, powers, scen).value).epsilon(1e-12));
  CHECK(joint_cdf(std::vector<double>{kInf, v}, powers, scen).value ==
        doctest::Approx(marginal_cdf(1, v, powers, scen).value).epsilon(1e-12));
  // high-precision reference at the delay target
  CHECK(joint_cdf(std::vector<double>{13.9e-3, 13.9e-3}, powers, scen).value ==
        doctest::Approx(0.95146663844631826).epsilon(1e-10));
}

TEST_CASE("silent link forces the joint CDF to zero") {
  auto cfg = table1_config(0.0);
  cfg.allocation.tx_powers_watts[1] = 0.0;
  const auto scen = validate(cfg);
  const auto r = joint_cdf(std::vector<double>{1.0, 1.0}, cfg.allocation.tx_powers_watts, scen);
  CHECK(r.value == 0.0);
  CHECK(r.silent_link);
}

TEST_CASE("joint CDF carries the silent flag only for power") {
  const auto scen03 = validate(table1_config(0.03));
  const auto powers03 = scen03.config().allocation.tx_powers_watts;
  // extreme thresholds saturate without numerical failure
  CHECK(joint_cdf(std::vector<double>{1e-6, 1e-6}, powers03, scen03).value == 0.0);
  CHECK_FALSE(joint_cdf(std::vector<double>{1e-6, 1e-6}, powers03, scen03).silent_link);
}

TEST_CASE("joint CDF is monotone and below every marginal") {
  const auto scen = validate(table1_config(0.03));
  const auto powers = scen.config().allocation.tx_powers_watts;
  double prev = -1.0;
  for (int k = 0; k < 200; ++k) {
    const double v = 1e-6 * std::pow(10.0, 5.0 * k / 199.0);
    const double h = joint_cdf(std::vector<double>{v, v}, powers, scen).value;
    const double f1 = marginal_cdf(0, v, powers, scen).value;
    const double f2 = marginal_cdf(1, v, powers, scen).value;
    CHECK(h >= prev - 1e-14);
    CHECK(h <= std::min(f1, f2) + 1e-12);
    prev = h;
  }
  // monotone in each coordinate separately
  const double h = joint_cdf(std::vector<double>{2e-4, 3e-4}, powers, scen).value;
  CHECK(joint_cdf(std::vector<double>{3e-4, 3e-4}, powers, scen).value >= h);
  CHECK(joint_cdf(std::vector<double>{2e-4, 4e-4}, powers, scen).value >= h);
}

TEST_CASE("joint survival matches the two-link identity") {
  const auto scen = validate(table1_config(0.02));
  const auto powers = scen.config().allocation.tx_powers_watts;
  const std::vector<double> s{1e-4, 2.5e-4};
  const double f1 = marginal_cdf(0, s[0], powers, scen).value;
  const double f2 = marginal_cdf(1, s[1], powers, scen).value;
  const double h = joint_cdf(s, powers, scen).value;
  const auto survival = joint_survival_at(s, powers, scen);
  CHECK(survival.value == doctest::Approx(1.0 - f1 - f2 + h).epsilon(1e-12));
  CHECK(survival.clamped_magnitude == 0.0);
}

TEST_CASE("survival at the medians collapses to the joint CDF term") {
  const auto scen = validate(table1_config(0.01));
  const auto powers = scen.config().allocation.tx_powers_watts;
  const auto report = blomqvist_beta(powers, scen);
  CHECK(report.joint_survival_at_medians ==
        doctest::Approx(report.joint_cdf_at_medians).epsilon(1e-9));
}

TEST_CASE("three-link survival against Monte Carlo") {
  ScenarioConfig cfg;
  cfg.geometry.tx_positions_m = {4.0, 14.0, 23.0};
  cfg.geometry.rx_positions_m = {0.0, 10.0, 20.0};
  cfg.interferers.density_per_m = 0.005;
  cfg.interferers.power_watts = dbm_to_watts(25.0);
  cfg.interferers.road_length_m = 4000.0;
  cfg.radio.path_loss_exponent = 3.0;
  cfg.radio.bandwidth_hz = 20e6;
  cfg.radio.noise_psd_watts_per_hz = dbm_to_watts(-174.0);
  cfg.radio.packet_bits = 3200;
  cfg.requirements.targets_s = {1e-4, 1e-4, 1e-4};
  cfg.allocation.p_max_watts = dbm_to_watts(27.0);
  cfg.allocation.tx_powers_watts.assign(3, dbm_to_watts(27.0));
  const auto scen = validate(cfg);
  const auto powers = cfg.allocation.tx_powers_watts;

  const std::vector<double> thresholds{6e-5, 1.1e-4, 9e-5};
  const auto analytic_value = joint_survival_at(thresholds, powers, scen);

  const std::size_t trials = 300000;
  const mc::TrialEnsemble ensemble(scen, trials, 2024);
  const auto delays = ensemble.delays_for(powers, mc::LinkMode::sir);
  std::size_t survived = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    bool all_above = true;
    for (std::size_t i = 0; i < 3; ++i)
      all_above = all_above && delays[t * 3 + i] > thresholds[i];
    survived += all_above;
  }
  const double empirical = static_cast<double>(survived) / static_cast<double>(trials);
  const double se = std::sqrt(empirical * (1.0 - empirical) / static_cast<double>(trials));
  CHECK(std::fabs(analytic_value.value - empirical) <= 3.0 * se + 1e-9);
}

TEST_CASE("concordance normalization is exact") {
  for (std::size_t m = 2; m <= 5; ++m) {
    // comonotone: both copula terms are 1/2
    CHECK(beta_from_terms(0.5, 0.5, m) == 1.0);
    // independence: both terms are 2^-M
    const double indep = std::ldexp(1.0, -static_cast<int>(m));
    CHECK(beta_from_terms(indep, indep, m) == 0.0);
  }
  CHECK_THROWS_AS((void)beta_from_terms(0.5, 0.5, 1), std::invalid_argument);
}

TEST_CASE("two-link beta equals 4C - 1") {
  const auto scen = validate(table1_config(0.01));
  const auto report = blomqvist_beta(scen.config().allocation.tx_powers_watts, scen);
  CHECK(report.beta == doctest::Approx(4.0 * report.joint_cdf_at_medians - 1.0).epsilon(1e-9));
  CHECK(report.joint_cdf_at_medians >= 0.0);
  CHECK(report.joint_cdf_at_medians <= 1.0);
  CHECK(report.joint_survival_at_medians >= 0.0);
  CHECK(report.joint_survival_at_medians <= 1.0);
  CHECK(report.beta <= 1.0);
}

TEST_CASE("beta regression values for the reference scenario") {
  // pinned against an independent high-precision evaluation of the same
  // expressions (agreement to ~1e-12)
  const auto scen01 = validate(table1_config(0.01));
  CHECK(blomqvist_beta(scen01.config().allocation.tx_powers_watts, scen01).beta ==
        doctest::Approx(0.05451053588715354).epsilon(1e-9));
  const auto scen03 = validate(table1_config(0.03));
  CHECK(blomqvist_beta(scen03.config().allocation.tx_powers_watts, scen03).beta ==
        doctest::Approx(0.09000162213832362).epsilon(1e-9));
}

TEST_CASE("beta increases with the cross distance") {
  double prev = -2.0;
  for (const double d12 : {1.0, 2.0, 3.0, 4.0, 5.0}) {
    const auto cfg = with_cross_distance(table1_config(0.01), d12);
    const auto scen = validate(cfg);
    const double beta = blomqvist_beta(cfg.allocation.tx_powers_watts, scen).beta;
    CHECK(beta > prev);
    prev = beta;
  }
}

TEST_CASE("beta requires positive powers") {
  const auto scen = validate(table1_config(0.01));
  CHECK_THROWS_AS((void)blomqvist_beta(std::vector<double>{0.5, 0.0}, scen),
                  std::invalid_argument);
}

TEST_CASE("scale invariance of the interference-ratio model") {
  const auto base_cfg = table1_config(0.03);
  const auto base = validate(base_cfg);
  const auto base_powers = base_cfg.allocation.tx_powers_watts;
  const auto base_report = blomqvist_beta(base_powers, base);
  const double base_f = marginal_cdf(0, 1e-4, base_powers, base).value;
  const double base_h = joint_cdf(std::vector<double>{1e-4, 2e-4}, base_powers, base).value;

  for (const double k : {1e-3, 7.0, 1e3}) {
    auto cfg = base_cfg;
    cfg.interferers.power_watts *= k;
    cfg.allocation.p_max_watts *= k;
    for (auto& p : cfg.allocation.tx_powers_watts) p *= k;
    const auto scen = validate(cfg);
    const auto powers = cfg.allocation.tx_powers_watts;
    CHECK(marginal_cdf(0, 1e-4, powers, scen).value == doctest::Approx(base_f).epsilon(1e-10));
    CHECK(joint_cdf(std::vector<double>{1e-4, 2e-4}, powers, scen).value ==
          doctest::Approx(base_h).epsilon(1e-10));
    const auto report = blomqvist_beta(powers, scen);
    CHECK(report.medians_s[0] == doctest::Approx(base_report.medians_s[0]).epsilon(1e-10));
    CHECK(report.medians_s[1] == doctest::Approx(base_report.medians_s[1]).epsilon(1e-10));
    CHECK(report.beta == doctest::Approx(base_report.beta).epsilon(1e-10));
  }
}
