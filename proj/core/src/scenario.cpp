#include "v2vdep/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace v2vdep {

namespace {

std::string join_issues(const std::vector<ValidationIssue>& issues) {
  std::ostringstream os;
  os << "invalid scenario configuration:";
  for (const auto& issue : issues) os << "\n  " << issue.field << ": " << issue.message;
  return os.str();
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

ScenarioError::ScenarioError(std::vector<ValidationIssue> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

std::vector<double> distance_matrix(const LinkGeometry& geometry) {
  const std::size_t m = geometry.link_count();
  std::vector<double> d(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      d[i * m + j] = std::fabs(geometry.tx_positions_m[i] - geometry.rx_positions_m[j]);
  return d;
}

std::vector<ValidationIssue> check(const ScenarioConfig& config) {
  std::vector<ValidationIssue> issues;
  auto add = [&issues](const std::string& field, const std::string& message) {
    issues.push_back({field, message});
  };

  const auto& g = config.geometry;
  const std::size_t m = g.tx_positions_m.size();
  if (g.rx_positions_m.size() != m)
    add("scenario.rx_positions_m", "transmitter and receiver position lists differ in length");
  if (m < 2)
    add("scenario.tx_positions_m",
        "at least two links required; the concordance measure is undefined for M = 1");
  for (std::size_t i = 0; i < m; ++i) {
    if (!finite(g.tx_positions_m[i])) add("scenario.tx_positions_m", "non-finite position");
    if (i < g.rx_positions_m.size() && !finite(g.rx_positions_m[i]))
      add("scenario.rx_positions_m", "non-finite position");
  }
  if (g.rx_positions_m.size() == m) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const double d = std::fabs(g.tx_positions_m[i] - g.rx_positions_m[j]);
        if (d <= 0.0) {
          std::ostringstream os;
          if (i == j)
            os << "coincident transceiver: link " << i + 1 << " has zero tx-rx distance";
          else
            os << "zero distance between tx of link " << i + 1 << " and rx of link " << j + 1;
          add("scenario.positions", os.str());
        }
      }
    }
  }

  const auto& f = config.interferers;
  if (!(f.density_per_m >= 0.0) || !finite(f.density_per_m))
    add("interferer.density_per_m", "density must be finite and >= 0");
  if (!(f.power_watts > 0.0) || !finite(f.power_watts))
    add("interferer.power", "interferer power must be finite and > 0");
  if (!(f.road_length_m > 0.0) || !finite(f.road_length_m))
    add("interferer.road_length_m", "road length must be finite and > 0");
  else {
    double extent = 0.0;
    for (double x : g.tx_positions_m) extent = std::max(extent, std::fabs(x));
    for (double x : g.rx_positions_m) extent = std::max(extent, std::fabs(x));
    if (f.road_length_m < 2.0 * extent)
      add("interferer.road_length_m", "links must lie inside the sampled road window");
  }

  const auto& r = config.radio;
  if (!(r.path_loss_exponent > 1.0) || !finite(r.path_loss_exponent))
    add("radio.path_loss_exponent",
        "path loss exponent must exceed 1 for the interference integral to converge");
  if (!(r.bandwidth_hz > 0.0) || !finite(r.bandwidth_hz))
    add("radio.bandwidth_hz", "bandwidth must be finite and > 0");
  if (!(r.noise_psd_watts_per_hz > 0.0) || !finite(r.noise_psd_watts_per_hz))
    add("radio.noise_psd", "noise power spectral density must be finite and > 0");
  if (r.packet_bits < 1) add("radio.packet_bits", "packet size must be a positive bit count");

  const auto& q = config.requirements;
  if (q.targets_s.size() != m)
    add("requirements.delay_targets", "one delay target required per link");
  for (double t : q.targets_s)
    if (!(t > 0.0) || !finite(t)) add("requirements.delay_targets", "delay targets must be > 0");

  const auto& p = config.allocation;
  if (!(p.p_max_watts > 0.0) || !finite(p.p_max_watts))
    add("power.p_max", "maximum transmit power must be finite and > 0");
  if (p.tx_powers_watts.size() != m)
    add("power.tx_powers", "one transmit power required per link");
  for (double w : p.tx_powers_watts) {
    if (!finite(w) || w < 0.0) add("power.tx_powers", "transmit power must be finite and >= 0");
    else if (p.p_max_watts > 0.0 && w > p.p_max_watts)
      add("power.tx_powers", "transmit power exceeds p_max");
  }

  return issues;
}

ValidatedScenario validate(const ScenarioConfig& config) {
  auto issues = check(config);
  if (!issues.empty()) throw ScenarioError(std::move(issues));
  ValidatedScenario v;
  v.config_ = config;
  v.m_ = config.geometry.link_count();
  v.distance_ = distance_matrix(config.geometry);
  v.path_gain_.resize(v.distance_.size());
  for (std::size_t k = 0; k < v.distance_.size(); ++k)
    v.path_gain_[k] = std::pow(v.distance_[k], -config.radio.path_loss_exponent);
  return v;
}

ScenarioConfig with_cross_distance(const ScenarioConfig& config, double d12_m) {
  if (config.geometry.link_count() != 2)
    throw std::invalid_argument("with_cross_distance requires a two-link scenario");
  if (!(d12_m > 0.0)) throw std::invalid_argument("cross distance must be > 0");
  ScenarioConfig out = config;
  const double x1t = config.geometry.tx_positions_m[0];
  const double old_rx2 = config.geometry.rx_positions_m[1];
  const double old_tx2 = config.geometry.tx_positions_m[1];
  const double side = old_rx2 >= x1t ? 1.0 : -1.0;
  out.geometry.rx_positions_m[1] = x1t + side * d12_m;
  out.geometry.tx_positions_m[1] = out.geometry.rx_positions_m[1] + (old_tx2 - old_rx2);
  return out;
}

}  // namespace v2vdep
