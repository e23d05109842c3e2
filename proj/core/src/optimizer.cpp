#include "v2vdep/optimizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "v2vdep/parallel.hpp"

namespace v2vdep::opt {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

bool lex_greater(std::span<const double> a, std::span<const double> b) {
  return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

std::size_t BetaObjective::KeyHash::operator()(const std::vector<std::uint64_t>& key) const {
  std::size_t h = 1469598103934665603ull;
  for (std::uint64_t x : key) {
    h ^= x;
    h *= 1099511628211ull;
  }
  return h;
}

BetaObjective::BetaObjective(ValidatedScenario scenario) : scenario_(std::move(scenario)) {}

double BetaObjective::operator()(std::span<const double> powers_watts) const {
  std::vector<std::uint64_t> key(powers_watts.size());
  for (std::size_t i = 0; i < key.size(); ++i) key[i] = std::bit_cast<std::uint64_t>(powers_watts[i]);
  {
    std::scoped_lock lock(mu_);
    ++calls_;
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  const double beta = analytic::blomqvist_beta(powers_watts, scenario_).beta;
  std::scoped_lock lock(mu_);
  ++misses_;
  cache_.emplace(std::move(key), beta);
  return beta;
}

long BetaObjective::calls() const {
  std::scoped_lock lock(mu_);
  return calls_;
}

long BetaObjective::distinct_evaluations() const {
  std::scoped_lock lock(mu_);
  return misses_;
}

double lagrangian(std::span<const double> powers_watts, std::span<const double> theta,
                  std::span<const double> vartheta, const ValidatedScenario& scenario) {
  const double p_max = scenario.config().allocation.p_max_watts;
  double value = analytic::blomqvist_beta(powers_watts, scenario).beta;
  for (std::size_t i = 0; i < powers_watts.size(); ++i) {
    value += theta[i] * powers_watts[i];
    value += vartheta[i] * (p_max - powers_watts[i]);
  }
  return value;
}

Subgradient subgradient(std::span<const double> inner_optimum, double p_max_watts) {
  Subgradient g;
  g.d_theta.assign(inner_optimum.begin(), inner_optimum.end());
  g.d_vartheta.resize(inner_optimum.size());
  for (std::size_t i = 0; i < inner_optimum.size(); ++i)
    g.d_vartheta[i] = p_max_watts - inner_optimum[i];
  return g;
}

InnerResult maximize_over_box(const Objective& objective, std::size_t dims, double p_max_watts,
                              const InnerOptions& options) {
  const double floor = kPowerFloorRel * p_max_watts;
  const double fd_step = options.fd_step_rel * p_max_watts;
  auto project = [&](double x) { return std::clamp(x, floor, p_max_watts); };

  const int per_dim = std::max(2, options.starts_per_dim);
  std::vector<double> levels(per_dim);
  for (int k = 0; k < per_dim; ++k)
    levels[k] = floor + (p_max_watts - floor) * static_cast<double>(k) / (per_dim - 1);
  std::size_t n_starts = 1;
  for (std::size_t d = 0; d < dims; ++d) n_starts *= levels.size();

  struct StartOutcome {
    std::vector<double> x;
    double value = -std::numeric_limits<double>::infinity();
    bool line_search_failed = false;
    long evaluations = 0;
  };
  std::vector<StartOutcome> outcomes(n_starts);

  parallel_for(n_starts, [&](std::size_t begin, std::size_t end) {
    std::vector<double> x(dims), xp(dims), grad(dims), y(dims);
    for (std::size_t s = begin; s < end; ++s) {
      std::size_t code = s;
      for (std::size_t d = 0; d < dims; ++d) {
        x[d] = levels[code % levels.size()];
        code /= levels.size();
      }
      StartOutcome& out = outcomes[s];
      long evals = 0;
      double fx = objective(x);
      ++evals;
      bool first_search_failed = false;
      for (int iter = 0; iter < options.max_iterations; ++iter) {
        // Central finite differences with the stencil clamped to the box.
        double gnorm2 = 0.0;
        for (std::size_t d = 0; d < dims; ++d) {
          const double hi = project(x[d] + fd_step);
          const double lo = project(x[d] - fd_step);
          if (hi <= lo) {
            grad[d] = 0.0;
            continue;
          }
          xp = x;
          xp[d] = hi;
          const double fhi = objective(xp);
          xp[d] = lo;
          const double flo = objective(xp);
          evals += 2;
          grad[d] = (fhi - flo) / (hi - lo);
          gnorm2 += grad[d] * grad[d];
        }
        const double gnorm = std::sqrt(gnorm2);
        if (gnorm == 0.0) break;  // flat point: nothing to ascend

        bool accepted = false;
        double t = 0.25 * p_max_watts / gnorm;
        for (int bt = 0; bt < options.max_backtracks; ++bt, t *= 0.5) {
          double moved = 0.0;
          double slope = 0.0;
          for (std::size_t d = 0; d < dims; ++d) {
            y[d] = project(x[d] + t * grad[d]);
            moved = std::max(moved, std::fabs(y[d] - x[d]));
            slope += grad[d] * (y[d] - x[d]);
          }
          if (moved == 0.0) continue;
          const double fy = objective(y);
          ++evals;
          if (fy >= fx + options.armijo_sigma * slope) {
            const bool small_step = moved < options.step_tol_rel * p_max_watts;
            x = y;
            fx = fy;
            accepted = true;
            if (small_step) iter = options.max_iterations;  // converged
            break;
          }
        }
        if (!accepted) {
          if (iter == 0) first_search_failed = true;
          break;
        }
      }
      out.x = x;
      out.value = fx;
      out.line_search_failed = first_search_failed;
      out.evaluations = evals;
    }
  });

  InnerResult best;
  bool all_failed = true;
  for (std::size_t s = 0; s < n_starts; ++s) {
    const auto& o = outcomes[s];
    best.evaluations += o.evaluations;
    all_failed = all_failed && o.line_search_failed;
    if (best.powers_watts.empty() || o.value > best.value ||
        (o.value == best.value && lex_greater(o.x, best.powers_watts))) {
      best.powers_watts = o.x;
      best.value = o.value;
    }
  }
  best.converged = !all_failed;
  return best;
}

InnerResult inner_maximize(std::span<const double> theta, std::span<const double> vartheta,
                           const BetaObjective& objective, double p_max_watts,
                           const InnerOptions& options) {
  const std::size_t m = objective.scenario().link_count();
  if (theta.size() != m || vartheta.size() != m)
    throw std::invalid_argument("one multiplier pair per link required");
  auto lagr = [&](std::span<const double> p) {
    double value = objective(p);
    for (std::size_t i = 0; i < m; ++i)
      value += theta[i] * p[i] + vartheta[i] * (p_max_watts - p[i]);
    return value;
  };
  return maximize_over_box(lagr, m, p_max_watts, options);
}

PowerAllocation inner_maximize(std::span<const double> theta, std::span<const double> vartheta,
                               const ValidatedScenario& scenario, const InnerOptions& options) {
  BetaObjective objective(scenario);
  const double p_max = scenario.config().allocation.p_max_watts;
  auto result = inner_maximize(theta, vartheta, objective, p_max, options);
  return {std::move(result.powers_watts), p_max};
}

void ellipsoid_cut(std::vector<double>& center, std::vector<double>& shape,
                   std::span<const double> direction) {
  const std::size_t n = center.size();
  std::vector<double> ah(n, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) ah[r] += shape[r * n + c] * direction[c];
  const double hah = dot(direction, ah);
  if (!(hah > 0.0)) throw std::runtime_error("ellipsoid shape matrix lost positive definiteness");
  const double scale = 1.0 / std::sqrt(hah);
  const double nn = static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) center[r] -= ah[r] * scale / (nn + 1.0);
  const double mult = nn * nn / (nn * nn - 1.0);
  const double rank1 = 2.0 / (nn + 1.0) / hah;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      shape[r * n + c] = mult * (shape[r * n + c] - rank1 * ah[r] * ah[c]);
  // Keep the matrix exactly symmetric against drift.
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = r + 1; c < n; ++c) {
      const double avg = 0.5 * (shape[r * n + c] + shape[c * n + r]);
      shape[r * n + c] = avg;
      shape[c * n + r] = avg;
    }
}

OptimizationResult dual_ellipsoid_solve(const ValidatedScenario& scenario, double eta,
                                        const DualOptions& options) {
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
  const std::size_t m = scenario.link_count();
  const std::size_t n = 2 * m;
  const double p_max = scenario.config().allocation.p_max_watts;

  BetaObjective objective(scenario);
  auto run_inner = [&](std::span<const double> theta, std::span<const double> vartheta) {
    if (options.inner_override) return options.inner_override(theta, vartheta);
    return inner_maximize(theta, vartheta, objective, p_max, options.inner);
  };

  const int cap =
      std::max(options.iteration_cap_floor,
               eta < 1.0 ? static_cast<int>(std::ceil(49.0 * std::log(1.0 / eta))) : 0);

  std::vector<double> z(n, 1.0);
  std::vector<double> shape(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) shape[i * n + i] = options.initial_radius * options.initial_radius;

  OptimizationResult result;
  result.method = Method::dual_ellipsoid;
  result.best_beta = -std::numeric_limits<double>::infinity();

  std::vector<double> h(n);
  int iteration = 0;
  for (; iteration < cap; ++iteration) {
    const auto most_negative = std::min_element(z.begin(), z.end());
    if (*most_negative < 0.0) {
      // Feasibility cut against the violated nonnegativity constraint.
      std::fill(h.begin(), h.end(), 0.0);
      h[static_cast<std::size_t>(most_negative - z.begin())] = -1.0;
      result.trace.push_back({iteration, kNan, z, kNan, true});
      ellipsoid_cut(z, shape, h);
      continue;
    }
    const std::span<const double> theta(z.data(), m);
    const std::span<const double> vartheta(z.data() + m, m);
    InnerResult inner = run_inner(theta, vartheta);
    const double beta = objective(inner.powers_watts);
    if (beta > result.best_beta) {
      result.best_beta = beta;
      result.best_allocation = {inner.powers_watts, p_max};
    }
    for (std::size_t i = 0; i < m; ++i) {
      h[i] = inner.powers_watts[i];
      h[m + i] = p_max - inner.powers_watts[i];
    }
    std::vector<double> ah(n, 0.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) ah[r] += shape[r * n + c] * h[c];
    const double bound = std::sqrt(std::max(0.0, dot(h, ah)));
    result.trace.push_back({iteration, beta, z, bound, false});
    if (bound <= eta) {
      result.converged = true;
      ++iteration;
      break;
    }
    ellipsoid_cut(z, shape, h);
  }

  result.evaluations = objective.calls();
  DualState state;
  state.theta.assign(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(m));
  state.vartheta.assign(z.begin() + static_cast<std::ptrdiff_t>(m), z.end());
  for (auto& v : state.theta) v = std::max(v, 0.0);
  for (auto& v : state.vartheta) v = std::max(v, 0.0);
  state.ellipsoid_center = z;
  state.ellipsoid_shape = shape;
  state.iteration = iteration;
  state.eta = eta;
  result.dual_state = std::move(state);
  return result;
}

OptimizationResult direct_search_on(const Objective& objective, std::size_t dims,
                                    double p_max_watts, const PatternOptions& options) {
  const double floor = kPowerFloorRel * p_max_watts;
  OptimizationResult result;
  result.method = Method::direct_search;

  std::vector<double> x(dims, p_max_watts);
  long evals = 0;
  double fx = objective(x);
  ++evals;
  std::vector<double> y(dims);
  for (double step = options.initial_step_rel * p_max_watts;
       step >= options.final_step_rel * p_max_watts; step *= 0.5) {
    bool improved = true;
    int passes = 0;
    while (improved && ++passes < 100000) {
      improved = false;
      for (std::size_t d = 0; d < dims; ++d) {
        for (const double delta : {step, -step}) {
          y = x;
          y[d] = std::clamp(x[d] + delta, floor, p_max_watts);
          if (y[d] == x[d]) continue;
          const double fy = objective(y);
          ++evals;
          if (fy > fx || (fy == fx && lex_greater(y, x))) {
            x = y;
            fx = fy;
            improved = true;
          }
        }
      }
    }
  }
  result.best_allocation = {std::move(x), p_max_watts};
  result.best_beta = fx;
  result.evaluations = evals;
  result.converged = true;
  return result;
}

OptimizationResult direct_search(const ValidatedScenario& scenario, const PatternOptions& options) {
  BetaObjective objective(scenario);
  auto result = direct_search_on(std::cref(objective), scenario.link_count(),
                                 scenario.config().allocation.p_max_watts, options);
  result.evaluations = objective.calls();
  return result;
}

PowerAllocation random_baseline(const ValidatedScenario& scenario, CounterRng& rng) {
  const double p_max = scenario.config().allocation.p_max_watts;
  std::vector<double> powers(scenario.link_count());
  for (auto& p : powers) p = rng.next_uniform(0.0, p_max);
  return {std::move(powers), p_max};
}

}  // namespace v2vdep::opt
