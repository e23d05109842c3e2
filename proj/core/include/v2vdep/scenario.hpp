#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace v2vdep {

// Static description of the network. All values are linear units (watts,
// seconds, meters); dBm and milliseconds exist only at the config-file and
// report boundaries.

struct LinkGeometry {
  std::vector<double> tx_positions_m;  // 1-D transmitter coordinates
  std::vector<double> rx_positions_m;  // 1-D receiver coordinates

  std::size_t link_count() const { return tx_positions_m.size(); }
};

struct InterfererField {
  double density_per_m = 0.0;      // intensity of the interfering-vehicle point process
  double power_watts = 0.0;        // common transmit power of interfering vehicles
  double road_length_m = 20000.0;  // Monte Carlo sampling window, centered at the origin
};

struct RadioParams {
  double path_loss_exponent = 0.0;        // must exceed 1 (interference integral diverges otherwise)
  double bandwidth_hz = 0.0;
  double noise_psd_watts_per_hz = 0.0;
  std::int64_t packet_bits = 0;
};

struct DelayRequirements {
  std::vector<double> targets_s;  // per-link delay targets
};

struct PowerAllocation {
  std::vector<double> tx_powers_watts;
  double p_max_watts = 0.0;
};

struct ScenarioConfig {
  LinkGeometry geometry;
  InterfererField interferers;
  RadioParams radio;
  DelayRequirements requirements;
  PowerAllocation allocation;
};

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

struct ValidationIssue {
  std::string field;
  std::string message;
};

// Every violated invariant, with the offending field. Empty means valid.
std::vector<ValidationIssue> check(const ScenarioConfig& config);

class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<ValidationIssue> issues);
  const std::vector<ValidationIssue>& issues() const { return issues_; }

 private:
  std::vector<ValidationIssue> issues_;
};

// Distances d(i,j) = |tx_i - rx_j| as a row-major matrix.
std::vector<double> distance_matrix(const LinkGeometry& geometry);

// A scenario that passed every invariant check, with distances and path
// gains precomputed. Immutable; safe to share across threads.
class ValidatedScenario {
 public:
  const ScenarioConfig& config() const { return config_; }
  std::size_t link_count() const { return m_; }

  double distance(std::size_t tx_link, std::size_t rx_link) const {
    return distance_[tx_link * m_ + rx_link];
  }
  // d(i,j)^(-alpha) for the tx of link i into the rx of link j.
  double path_gain(std::size_t tx_link, std::size_t rx_link) const {
    return path_gain_[tx_link * m_ + rx_link];
  }
  std::span<const double> rx_positions() const { return config_.geometry.rx_positions_m; }

 private:
  friend ValidatedScenario validate(const ScenarioConfig&);
  ScenarioConfig config_;
  std::size_t m_ = 0;
  std::vector<double> distance_;
  std::vector<double> path_gain_;
};

// Throws ScenarioError carrying the full issue list when any invariant fails.
// Validating the config of a ValidatedScenario reproduces it exactly.
ValidatedScenario validate(const ScenarioConfig& config);

// Repositions link 2 of a two-link scenario so that the distance from the
// transmitter of link 1 to the receiver of link 2 equals d12, preserving the
// in-link distance of link 2 and the side it sits on. Used by the
// concordance-vs-distance sweep.
ScenarioConfig with_cross_distance(const ScenarioConfig& config, double d12_m);

}  // namespace v2vdep
