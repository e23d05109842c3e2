#include "v2vdep/montecarlo.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "v2vdep/analytic.hpp"
#include "v2vdep/parallel.hpp"

namespace v2vdep::mc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double pow_alpha(double t, double alpha) {
  if (alpha == 3.0) return t * t * t;
  if (alpha == 2.0) return t * t;
  if (alpha == 4.0) {
    const double s = t * t;
    return s * s;
  }
  return std::pow(t, alpha);
}

double delay_from(double signal, double interference, double noise_watts, double bandwidth_hz,
                  double packet_bits, LinkMode mode) {
  if (signal <= 0.0) return kInf;  // zero power or zero gain: the link never delivers
  const double denom = mode == LinkMode::sinr ? interference + noise_watts : interference;
  if (denom <= 0.0) return 0.0;  // interference-free SIR: rate is unbounded
  const double rate = bandwidth_hz * std::log1p(signal / denom) / std::numbers::ln2;
  return packet_bits / rate;
}

}  // namespace

std::vector<double> sample_interferers(const InterfererField& field, CounterRng& rng) {
  const double mean = field.density_per_m * field.road_length_m;
  const std::uint64_t count = rng.next_poisson(mean);
  std::vector<double> positions(count);
  const double half = 0.5 * field.road_length_m;
  for (auto& x : positions) x = rng.next_uniform(-half, half);
  return positions;
}

TrialSample simulate_trial(const ValidatedScenario& scenario, std::span<const double> powers_watts,
                           LinkMode mode, std::uint64_t seed, std::uint64_t trial_index) {
  const std::size_t m = scenario.link_count();
  if (powers_watts.size() != m) throw std::invalid_argument("one power per link required");
  const auto& cfg = scenario.config();
  const double alpha = cfg.radio.path_loss_exponent;

  TrialSample sample;
  CounterRng pos_rng(seed, trial_index, kStreamInterferers);
  sample.interferer_positions_m = sample_interferers(cfg.interferers, pos_rng);
  const std::size_t n = sample.interferer_positions_m.size();

  CounterRng ig_rng(seed, trial_index, kStreamInterfererGains);
  sample.interferer_gains.resize(n * m);
  for (auto& g : sample.interferer_gains) g = ig_rng.next_exponential();

  CounterRng lg_rng(seed, trial_index, kStreamLinkGains);
  sample.cross_gains.resize(m * m);
  for (auto& g : sample.cross_gains) g = lg_rng.next_exponential();

  sample.delays_s.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double signal =
        powers_watts[i] * sample.cross_gains[i * m + i] * scenario.path_gain(i, i);
    double cross = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      cross += powers_watts[j] * sample.cross_gains[j * m + i] * scenario.path_gain(j, i);
    }
    double common = 0.0;
    const double rx = cfg.geometry.rx_positions_m[i];
    for (std::size_t k = 0; k < n; ++k) {
      const double dist = std::fabs(sample.interferer_positions_m[k] - rx);
      common += sample.interferer_gains[k * m + i] / pow_alpha(dist, alpha);
    }
    const double interference = cross + cfg.interferers.power_watts * common;
    sample.delays_s[i] =
        delay_from(signal, interference, cfg.radio.bandwidth_hz * cfg.radio.noise_psd_watts_per_hz,
                   cfg.radio.bandwidth_hz, static_cast<double>(cfg.radio.packet_bits), mode);
  }
  return sample;
}

TrialEnsemble::TrialEnsemble(const ValidatedScenario& scenario, std::size_t trials,
                             std::uint64_t seed)
    : trials_(trials),
      m_(scenario.link_count()),
      seed_(seed),
      p_c_(scenario.config().interferers.power_watts),
      bandwidth_hz_(scenario.config().radio.bandwidth_hz),
      noise_watts_(scenario.config().radio.bandwidth_hz *
                   scenario.config().radio.noise_psd_watts_per_hz),
      packet_bits_(static_cast<double>(scenario.config().radio.packet_bits)) {
  own_.resize(trials_ * m_);
  cross_.resize(trials_ * m_ * m_);
  common_.resize(trials_ * m_);

  const auto& cfg = scenario.config();
  const double alpha = cfg.radio.path_loss_exponent;
  parallel_for(trials_, [&](std::size_t begin, std::size_t end) {
    std::vector<double> rx_weight(m_);
    for (std::size_t t = begin; t < end; ++t) {
      CounterRng pos_rng(seed_, t, kStreamInterferers);
      const auto positions = sample_interferers(cfg.interferers, pos_rng);

      CounterRng ig_rng(seed_, t, kStreamInterfererGains);
      std::fill(rx_weight.begin(), rx_weight.end(), 0.0);
      for (const double x : positions) {
        for (std::size_t i = 0; i < m_; ++i) {
          const double dist = std::fabs(x - cfg.geometry.rx_positions_m[i]);
          rx_weight[i] += ig_rng.next_exponential() / pow_alpha(dist, alpha);
        }
      }
      for (std::size_t i = 0; i < m_; ++i) common_[t * m_ + i] = rx_weight[i];

      CounterRng lg_rng(seed_, t, kStreamLinkGains);
      for (std::size_t j = 0; j < m_; ++j) {
        for (std::size_t i = 0; i < m_; ++i) {
          const double g = lg_rng.next_exponential();
          const double w = g * scenario.path_gain(j, i);
          cross_[(t * m_ + j) * m_ + i] = w;
          if (j == i) own_[t * m_ + i] = w;
        }
      }
    }
  });
}

std::vector<double> TrialEnsemble::delays_for(std::span<const double> powers_watts,
                                              LinkMode mode) const {
  if (powers_watts.size() != m_) throw std::invalid_argument("one power per link required");
  std::vector<double> delays(trials_ * m_);
  parallel_for(trials_, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      for (std::size_t i = 0; i < m_; ++i) {
        const double signal = powers_watts[i] * own_[t * m_ + i];
        double cross = 0.0;
        for (std::size_t j = 0; j < m_; ++j) {
          if (j == i) continue;
          cross += powers_watts[j] * cross_[(t * m_ + j) * m_ + i];
        }
        const double interference = cross + p_c_ * common_[t * m_ + i];
        delays[t * m_ + i] =
            delay_from(signal, interference, noise_watts_, bandwidth_hz_, packet_bits_, mode);
      }
    }
  });
  return delays;
}

EmpiricalReport estimate_from(const TrialEnsemble& ensemble, std::span<const double> powers_watts,
                              std::span<const double> targets_s, LinkMode mode) {
  const std::size_t m = ensemble.link_count();
  const std::size_t n = ensemble.trials();
  if (targets_s.size() != m) throw std::invalid_argument("one delay target per link required");
  if (n < 1) throw std::invalid_argument("at least one trial required");

  const auto delays = ensemble.delays_for(powers_watts, mode);

  EmpiricalReport report;
  report.trials = n;
  report.marginal_reliabilities.assign(m, 0.0);
  report.marginal_stderrs.assign(m, 0.0);

  std::size_t joint = 0;
  std::vector<std::size_t> marginal(m, 0);
  for (std::size_t t = 0; t < n; ++t) {
    bool all = true;
    for (std::size_t i = 0; i < m; ++i) {
      const bool ok = delays[t * m + i] <= targets_s[i];
      marginal[i] += ok;
      all = all && ok;
    }
    joint += all;
  }
  auto binom_stderr = [n](double p) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); };
  report.joint_reliability = static_cast<double>(joint) / static_cast<double>(n);
  report.joint_reliability_stderr = binom_stderr(report.joint_reliability);
  for (std::size_t i = 0; i < m; ++i) {
    report.marginal_reliabilities[i] = static_cast<double>(marginal[i]) / static_cast<double>(n);
    report.marginal_stderrs[i] = binom_stderr(report.marginal_reliabilities[i]);
  }

  // Empirical concordance: medians per link, then the fraction of trials with
  // every delay below (resp. above) its median, combined like the analytic
  // measure.
  report.empirical_medians_s.resize(m);
  std::vector<double> column(n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t t = 0; t < n; ++t) column[t] = delays[t * m + i];
    auto nth = column.begin() + static_cast<std::ptrdiff_t>((n - 1) / 2);
    std::nth_element(column.begin(), nth, column.end());
    report.empirical_medians_s[i] = *nth;
  }
  std::size_t all_below = 0;
  std::size_t all_above = 0;
  for (std::size_t t = 0; t < n; ++t) {
    bool below = true;
    bool above = true;
    for (std::size_t i = 0; i < m; ++i) {
      const bool b = delays[t * m + i] <= report.empirical_medians_s[i];
      below = below && b;
      above = above && !b;
    }
    all_below += below;
    all_above += above;
  }
  const double c_term = static_cast<double>(all_below) / static_cast<double>(n);
  const double s_term = static_cast<double>(all_above) / static_cast<double>(n);
  report.empirical_beta = analytic::beta_from_terms(c_term, s_term, m);
  const double pow2 = std::ldexp(1.0, static_cast<int>(m) - 1);
  report.empirical_beta_stderr =
      pow2 / (pow2 - 1.0) * std::sqrt(binom_stderr(c_term) * binom_stderr(c_term) +
                                      binom_stderr(s_term) * binom_stderr(s_term));
  return report;
}

EmpiricalReport estimate(const ValidatedScenario& scenario, std::span<const double> powers_watts,
                         std::span<const double> targets_s, std::size_t trials, LinkMode mode,
                         std::uint64_t seed) {
  const TrialEnsemble ensemble(scenario, trials, seed);
  return estimate_from(ensemble, powers_watts, targets_s, mode);
}

void write_trial_dump(std::ostream& out, const ValidatedScenario& scenario,
                      std::span<const double> powers_watts, LinkMode mode, std::uint64_t seed,
                      std::size_t trials) {
  const std::size_t m = scenario.link_count();
  out << "trial,interferer_count";
  for (std::size_t i = 0; i < m; ++i) out << ",delay" << i + 1 << "_s";
  out << "\n";
  char buf[64];
  for (std::size_t t = 0; t < trials; ++t) {
    const auto sample = simulate_trial(scenario, powers_watts, mode, seed, t);
    out << t << "," << sample.interferer_positions_m.size();
    for (const double d : sample.delays_s) {
      const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), d);
      out << "," << std::string_view(buf, end);
    }
    out << "\n";
  }
}

}  // namespace v2vdep::mc
