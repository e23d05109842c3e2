#include "v2vdep/analytic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

namespace v2vdep::analytic {

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

// Reduced single-receiver exposure integral K(alpha) = int_0^inf dt/(1+t^a).
// The tangent substitution makes the single-receiver integrand scale-free,
// so the full integral is 2 c^(1/alpha) K(alpha); K is cached per exponent.
double reduced_tail_integral(double alpha) {
  struct Last {
    double alpha = -1.0;
    double value = 0.0;
  };
  thread_local Last last;
  if (last.alpha == alpha) return last.value;

  static std::mutex mu;
  static std::map<double, double> cache;
  {
    std::scoped_lock lock(mu);
    if (auto it = cache.find(alpha); it != cache.end()) {
      last = {alpha, it->second};
      return it->second;
    }
  }
  auto f = [alpha](double u) {
    const double c = std::cos(u);
    const double t = std::tan(u);
    return 1.0 / ((1.0 + pow_alpha(t, alpha)) * c * c);
  };
  quad::QuadOptions opt;
  opt.abs_tol = 1e-13;
  const double k = quad::adaptive_gk15(f, 0.0, std::numbers::pi / 2.0, opt).value;
  std::scoped_lock lock(mu);
  cache[alpha] = k;
  last = {alpha, k};
  return k;
}

double fast_single_integral(double coeff, double alpha) {
  if (coeff == 0.0) return 0.0;
  return 2.0 * std::pow(coeff, 1.0 / alpha) * reduced_tail_integral(alpha);
}

// 1 - prod_i 1/(1 + c_i |x - r_i|^-alpha), evaluated as -expm1(-sum log1p(.))
// so that both vanishing and saturating factors keep full precision.
struct JointShadow {
  std::span<const double> coeffs;
  std::span<const double> positions;
  double alpha;

  double operator()(double x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      if (coeffs[i] == 0.0) continue;
      const double t = std::fabs(x - positions[i]);
      const double tp = pow_alpha(t, alpha);
      if (tp == 0.0) return 1.0;  // on top of a receiver the product is zero
      s += std::log1p(coeffs[i] / tp);
      if (std::isinf(s)) return 1.0;
    }
    return -std::expm1(-s);
  }
};

struct Piece {
  double value = 0.0;
};

template <class G>
double integrate_tail(const G& g, double origin, double direction, double scale,
                      const quad::QuadOptions& opt) {
  auto f = [&g, origin, direction, scale](double u) {
    const double c = std::cos(u);
    const double x = origin + direction * scale * std::tan(u);
    return g(x) * scale / (c * c);
  };
  return quad::adaptive_gk15(f, 0.0, std::numbers::pi / 2.0, opt).value;
}

void check_exponent(double alpha) {
  if (!(alpha > 1.0))
    throw std::invalid_argument("path loss exponent must exceed 1");
}

}  // namespace

double sir_threshold(double delay_s, const RadioParams& radio) {
  if (!(delay_s > 0.0)) throw std::invalid_argument("delay threshold must be > 0");
  const double exponent =
      static_cast<double>(radio.packet_bits) / (radio.bandwidth_hz * delay_s);
  if (exponent >= 1020.0) return kInf;  // 2^exponent would overflow; forces CDF to 0
  return std::expm1(exponent * std::numbers::ln2);
}

double ppp_integral(double coeff, double rx_position_m, double path_loss_exponent,
                    const quad::QuadOptions& opt) {
  check_exponent(path_loss_exponent);
  if (coeff < 0.0) throw std::invalid_argument("exposure coefficient must be >= 0");
  if (coeff == 0.0) return 0.0;
  const double alpha = path_loss_exponent;
  auto g = [coeff, rx_position_m, alpha](double x) {
    const double t = std::fabs(x - rx_position_m);
    const double tp = pow_alpha(t, alpha);
    return coeff / (tp + coeff);
  };
  const double scale = std::pow(coeff, 1.0 / alpha);
  quad::QuadOptions half = opt;
  half.abs_tol = 0.5 * opt.abs_tol;
  return integrate_tail(g, rx_position_m, -1.0, scale, half) +
         integrate_tail(g, rx_position_m, +1.0, scale, half);
}

double joint_ppp_integral(std::span<const double> coeffs, std::span<const double> rx_positions_m,
                          double path_loss_exponent, const quad::QuadOptions& opt) {
  check_exponent(path_loss_exponent);
  if (coeffs.size() != rx_positions_m.size())
    throw std::invalid_argument("coefficient and position counts differ");
  double scale = 0.0;
  std::vector<double> splits;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (coeffs[i] < 0.0) throw std::invalid_argument("exposure coefficient must be >= 0");
    if (coeffs[i] > 0.0) {
      scale = std::max(scale, std::pow(coeffs[i], 1.0 / path_loss_exponent));
      splits.push_back(rx_positions_m[i]);
    }
  }
  if (splits.empty()) return 0.0;
  std::sort(splits.begin(), splits.end());
  splits.erase(std::unique(splits.begin(), splits.end()), splits.end());

  const JointShadow g{coeffs, rx_positions_m, path_loss_exponent};
  const std::size_t pieces = splits.size() + 1;
  quad::QuadOptions share = opt;
  share.abs_tol = opt.abs_tol / static_cast<double>(pieces);

  double total = integrate_tail(g, splits.front(), -1.0, scale, share);
  for (std::size_t k = 0; k + 1 < splits.size(); ++k)
    total += quad::adaptive_gk15(g, splits[k], splits[k + 1], share).value;
  total += integrate_tail(g, splits.back(), +1.0, scale, share);
  return total;
}

namespace {

// True when nothing interferes with the link: no field and every other
// transmitter silent. The link then delivers instantly in the ratio model.
bool interference_free(std::size_t link_index, std::span<const double> powers_watts,
                       const ValidatedScenario& scenario) {
  if (scenario.config().interferers.density_per_m != 0.0) return false;
  for (std::size_t j = 0; j < powers_watts.size(); ++j)
    if (j != link_index && powers_watts[j] != 0.0) return false;
  return true;
}

}  // namespace

CdfValue marginal_cdf(std::size_t link_index, double delay_s, std::span<const double> powers_watts,
                      const ValidatedScenario& scenario) {
  const std::size_t m = scenario.link_count();
  if (link_index >= m) throw std::out_of_range("link index out of range");
  if (powers_watts.size() != m) throw std::invalid_argument("one power per link required");
  const double p_own = powers_watts[link_index];
  if (p_own == 0.0) return {0.0, true};
  if (!(delay_s > 0.0)) return {0.0, false};
  if (interference_free(link_index, powers_watts, scenario)) return {1.0, false};

  const double theta = sir_threshold(delay_s, scenario.config().radio);
  if (theta == 0.0) return {1.0, false};
  if (std::isinf(theta)) return {0.0, false};

  const double signal = p_own * scenario.path_gain(link_index, link_index);
  double cross = 1.0;
  for (std::size_t j = 0; j < m; ++j) {
    if (j == link_index) continue;
    cross /= 1.0 + theta * powers_watts[j] * scenario.path_gain(j, link_index) / signal;
  }
  const double lambda = scenario.config().interferers.density_per_m;
  if (lambda == 0.0) return {cross, false};  // empty field: exposure factor exactly 1
  const double coeff = theta * scenario.config().interferers.power_watts / signal;
  const double exposure =
      fast_single_integral(coeff, scenario.config().radio.path_loss_exponent);
  return {cross * std::exp(-lambda * exposure), false};
}

CdfValue marginal_cdf(const MarginalCdfQuery& query, const ValidatedScenario& scenario) {
  return marginal_cdf(query.link_index, query.delay_threshold_s,
                      query.allocation.tx_powers_watts, scenario);
}

MedianResult marginal_median(std::size_t link_index, std::span<const double> powers_watts,
                             const ValidatedScenario& scenario) {
  if (link_index >= scenario.link_count()) throw std::out_of_range("link index out of range");
  if (powers_watts[link_index] == 0.0)
    throw MedianError("median unreachable: link transmits zero power");
  auto f = [&](double v) { return marginal_cdf(link_index, v, powers_watts, scenario).value; };

  double lo = 1e-8;
  double hi = 1e2;
  if (f(lo) >= 0.5) return {lo, true};  // CDF saturates below the bracket floor
  while (f(hi) < 0.5) {
    hi *= 10.0;
    if (hi > 1e12)
      throw MedianError("median unreachable: delay CDF stays below 1/2");
  }
  for (int it = 0; it < 200 && (hi - lo) > 1e-11 * (0.5 * (lo + hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.5)
      lo = mid;
    else
      hi = mid;
  }
  const double median = 0.5 * (lo + hi);
  if (std::fabs(f(median) - 0.5) > 1e-9)
    throw MedianError("median bisection failed to meet tolerance");
  return {median, false};
}

CdfValue joint_cdf(std::span<const double> delays_s, std::span<const double> powers_watts,
                   const ValidatedScenario& scenario) {
  const std::size_t m = scenario.link_count();
  if (delays_s.size() != m) throw std::invalid_argument("one delay threshold per link required");
  if (powers_watts.size() != m) throw std::invalid_argument("one power per link required");

  std::vector<double> theta(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (std::isinf(delays_s[i])) continue;  // +inf drops the link from the event
    if (!(delays_s[i] > 0.0)) return {0.0, false};
    if (powers_watts[i] == 0.0) return {0.0, true};
    if (interference_free(i, powers_watts, scenario)) continue;  // certain event
    theta[i] = sir_threshold(delays_s[i], scenario.config().radio);
    if (std::isinf(theta[i])) return {0.0, false};
  }

  double cross = 1.0;
  std::vector<double> coeffs(m, 0.0);
  const double p_c = scenario.config().interferers.power_watts;
  for (std::size_t i = 0; i < m; ++i) {
    if (theta[i] == 0.0) continue;
    const double signal = powers_watts[i] * scenario.path_gain(i, i);
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      cross /= 1.0 + theta[i] * powers_watts[j] * scenario.path_gain(j, i) / signal;
    }
    coeffs[i] = theta[i] * p_c / signal;
  }

  const double lambda = scenario.config().interferers.density_per_m;
  if (lambda == 0.0) return {cross, false};

  const double alpha = scenario.config().radio.path_loss_exponent;
  std::size_t active = 0;
  std::size_t active_index = 0;
  double exposure_floor = 0.0;  // the joint integral dominates each component
  for (std::size_t i = 0; i < m; ++i) {
    if (coeffs[i] > 0.0) {
      ++active;
      active_index = i;
      exposure_floor = std::max(exposure_floor, fast_single_integral(coeffs[i], alpha));
    }
  }
  if (cross == 0.0 || lambda * exposure_floor > 745.0) return {0.0, false};  // exp underflows
  double exposure = exposure_floor;
  if (active == 1)
    exposure = fast_single_integral(coeffs[active_index], alpha);
  else if (active > 1)
    exposure = joint_ppp_integral(coeffs, scenario.rx_positions(), alpha);
  return {cross * std::exp(-lambda * exposure), false};
}

CdfValue joint_cdf(const JointCdfQuery& query, const ValidatedScenario& scenario) {
  return joint_cdf(query.delay_thresholds_s, query.allocation.tx_powers_watts, scenario);
}

SurvivalValue joint_survival_at(std::span<const double> thresholds_s,
                                std::span<const double> powers_watts,
                                const ValidatedScenario& scenario) {
  const std::size_t m = scenario.link_count();
  if (thresholds_s.size() != m) throw std::invalid_argument("one threshold per link required");
  if (m > 24) throw std::invalid_argument("inclusion-exclusion limited to 24 links");

  SurvivalValue out;
  double sum = 0.0;
  std::vector<double> subset(m);
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    for (std::size_t i = 0; i < m; ++i)
      subset[i] = (mask >> i) & 1u ? thresholds_s[i] : kInf;
    const CdfValue term = joint_cdf(subset, powers_watts, scenario);
    out.silent_link = out.silent_link || term.silent_link;
    sum += (std::popcount(mask) % 2 == 0 ? 1.0 : -1.0) * term.value;
  }
  out.value = std::clamp(sum, 0.0, 1.0);
  out.clamped_magnitude = std::fabs(sum - out.value);
  return out;
}

double beta_from_terms(double joint_cdf_at_medians, double joint_survival_at_medians,
                       std::size_t link_count) {
  if (link_count < 2)
    throw std::invalid_argument("concordance measure undefined for fewer than two links");
  const double pow2 = std::ldexp(1.0, static_cast<int>(link_count) - 1);
  return (pow2 * (joint_cdf_at_medians + joint_survival_at_medians) - 1.0) / (pow2 - 1.0);
}

BetaReport blomqvist_beta(std::span<const double> powers_watts,
                          const ValidatedScenario& scenario) {
  const std::size_t m = scenario.link_count();
  if (m < 2) throw std::invalid_argument("concordance requires at least two links");
  for (double p : powers_watts)
    if (!(p > 0.0))
      throw std::invalid_argument("concordance undefined with a silent link (zero power)");

  BetaReport report;
  report.medians_s.resize(m);
  for (std::size_t i = 0; i < m; ++i)
    report.medians_s[i] = marginal_median(i, powers_watts, scenario).delay_s;
  report.joint_cdf_at_medians = joint_cdf(report.medians_s, powers_watts, scenario).value;
  report.joint_survival_at_medians =
      joint_survival_at(report.medians_s, powers_watts, scenario).value;
  report.beta = beta_from_terms(report.joint_cdf_at_medians, report.joint_survival_at_medians, m);
  return report;
}

}  // namespace v2vdep::analytic
