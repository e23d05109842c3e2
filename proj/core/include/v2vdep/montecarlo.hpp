#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "v2vdep/rng.hpp"
#include "v2vdep/scenario.hpp"

namespace v2vdep::mc {

// Ground-truth simulator for the delay model: interferer positions from a
// Poisson point process on the road window, unit-mean exponential power
// gains on every channel, per-link delay packet_bits / rate. Every trial
// draws from counter-based substreams keyed by (seed, trial index, purpose),
// so results are bit-identical at any level of parallelism.

enum class LinkMode { sir, sinr };

// Substream purpose tags.
enum : std::uint64_t {
  kStreamInterferers = 0,
  kStreamInterfererGains = 1,
  kStreamLinkGains = 2,
};

struct TrialSample {
  std::vector<double> interferer_positions_m;
  // Row-major M x M link gains; entry (j, i) is the channel tx_j -> rx_i and
  // the diagonal holds the in-link gains.
  std::vector<double> cross_gains;
  // Row-major N x M gains from interferer k to the receiver of link i.
  std::vector<double> interferer_gains;
  std::vector<double> delays_s;  // +inf when the link cannot deliver
};

struct EmpiricalReport {
  std::size_t trials = 0;
  double joint_reliability = 0.0;
  double joint_reliability_stderr = 0.0;
  std::vector<double> marginal_reliabilities;
  std::vector<double> marginal_stderrs;
  double empirical_beta = 0.0;
  double empirical_beta_stderr = 0.0;
  std::vector<double> empirical_medians_s;
};

// Poisson(density * road_length) interferers, i.i.d. uniform on the window.
std::vector<double> sample_interferers(const InterfererField& field, CounterRng& rng);

TrialSample simulate_trial(const ValidatedScenario& scenario, std::span<const double> powers_watts,
                           LinkMode mode, std::uint64_t seed, std::uint64_t trial_index);

// Per-trial interference statistics that are sufficient to recompute delays
// under any power allocation: the simulation is drawn once and can then be
// re-evaluated cheaply with common random numbers (used for paired
// comparisons and baseline averaging).
class TrialEnsemble {
 public:
  TrialEnsemble(const ValidatedScenario& scenario, std::size_t trials, std::uint64_t seed);

  std::size_t trials() const { return trials_; }
  std::size_t link_count() const { return m_; }
  std::uint64_t seed() const { return seed_; }

  // Row-major trials x M delay matrix for the given allocation.
  std::vector<double> delays_for(std::span<const double> powers_watts, LinkMode mode) const;

 private:
  std::size_t trials_ = 0;
  std::size_t m_ = 0;
  std::uint64_t seed_ = 0;
  double p_c_ = 0.0;
  double bandwidth_hz_ = 0.0;
  double noise_watts_ = 0.0;
  double packet_bits_ = 0.0;
  // Per trial: M own-link gain*path terms, M*M cross gain*path terms,
  // M summed interferer gain*path terms (without the interferer power).
  std::vector<double> own_;
  std::vector<double> cross_;
  std::vector<double> common_;
};

EmpiricalReport estimate_from(const TrialEnsemble& ensemble, std::span<const double> powers_watts,
                              std::span<const double> targets_s, LinkMode mode);

// Convenience wrapper: builds the ensemble and evaluates one allocation.
EmpiricalReport estimate(const ValidatedScenario& scenario, std::span<const double> powers_watts,
                         std::span<const double> targets_s, std::size_t trials, LinkMode mode,
                         std::uint64_t seed);

// Debug dump, one record per trial: index, interferer count, per-link
// delays. Deterministic for a fixed seed.
void write_trial_dump(std::ostream& out, const ValidatedScenario& scenario,
                      std::span<const double> powers_watts, LinkMode mode, std::uint64_t seed,
                      std::size_t trials);

}  // namespace v2vdep::mc
