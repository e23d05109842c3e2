#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "v2vdep/analytic.hpp"
#include "v2vdep/rng.hpp"
#include "v2vdep/scenario.hpp"

namespace v2vdep::opt {

// Power allocation maximizing the Blomqvist beta concordance of the link
// delays over the box [0, p_max]^M: a Lagrangian dual solved by the ellipsoid
// method, cross-checked by a derivative-free pattern search, plus a random
// baseline. All solvers keep every iterate strictly inside the box with a
// floor of 1e-6 * p_max, since the concordance measure is undefined for a
// silent link.

inline constexpr double kPowerFloorRel = 1e-6;

using Objective = std::function<double(std::span<const double>)>;

// Memoizing beta evaluator; safe for concurrent calls. Keys are the exact
// power vectors, so repeated probes (grid starts, pattern revisits) are free.
class BetaObjective {
 public:
  explicit BetaObjective(ValidatedScenario scenario);

  double operator()(std::span<const double> powers_watts) const;
  long calls() const;
  long distinct_evaluations() const;
  const ValidatedScenario& scenario() const { return scenario_; }

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<std::uint64_t>& key) const;
  };
  ValidatedScenario scenario_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::vector<std::uint64_t>, double, KeyHash> cache_;
  mutable long calls_ = 0;
  mutable long misses_ = 0;
};

// L = beta(P) + sum_i theta_i P_i + sum_j vartheta_j (p_max - P_j).
double lagrangian(std::span<const double> powers_watts, std::span<const double> theta,
                  std::span<const double> vartheta, const ValidatedScenario& scenario);

struct Subgradient {
  std::vector<double> d_theta;     // per-coordinate inner optimum
  std::vector<double> d_vartheta;  // p_max minus the inner optimum
};
Subgradient subgradient(std::span<const double> inner_optimum, double p_max_watts);

struct InnerOptions {
  int starts_per_dim = 5;
  double fd_step_rel = 1e-3;     // central-difference step, relative to p_max
  double step_tol_rel = 1e-5;    // ascent stops once moves shrink below this
  int max_iterations = 40;
  int max_backtracks = 14;
  double armijo_sigma = 1e-4;
};

struct InnerResult {
  std::vector<double> powers_watts;
  double value = 0.0;
  bool converged = true;  // false when every start failed its first line search
  long evaluations = 0;
};

// Multi-start projected gradient ascent over the box with finite-difference
// gradients and Armijo backtracking. Generic in the objective so tests can
// inject synthetic landscapes; ties resolve toward the lexicographically
// larger point, then the earlier start.
InnerResult maximize_over_box(const Objective& objective, std::size_t dims, double p_max_watts,
                              const InnerOptions& options = {});

// Inner Lagrangian maximization at fixed multipliers.
InnerResult inner_maximize(std::span<const double> theta, std::span<const double> vartheta,
                           const BetaObjective& objective, double p_max_watts,
                           const InnerOptions& options = {});
PowerAllocation inner_maximize(std::span<const double> theta, std::span<const double> vartheta,
                               const ValidatedScenario& scenario, const InnerOptions& options = {});

struct DualState {
  std::vector<double> theta;
  std::vector<double> vartheta;
  std::vector<double> ellipsoid_center;  // 2M values
  std::vector<double> ellipsoid_shape;   // row-major 2M x 2M, symmetric positive definite
  int iteration = 0;
  double eta = 0.0;
};

enum class Method { dual_ellipsoid, direct_search, random_baseline };

struct TracePoint {
  int iteration = 0;
  double beta = 0.0;  // NaN on feasibility cuts
  std::vector<double> multipliers;
  double gap_bound = 0.0;
  bool feasibility_cut = false;
};

struct OptimizationResult {
  PowerAllocation best_allocation;
  double best_beta = 0.0;
  Method method = Method::direct_search;
  long evaluations = 0;
  bool converged = false;
  std::vector<TracePoint> trace;
  std::optional<DualState> dual_state;
};

// One central/feasibility cut of the standard ellipsoid method. The shape
// matrix keeps its volume shrinking by at least exp(-1/(2n)) per cut.
void ellipsoid_cut(std::vector<double>& center, std::vector<double>& shape,
                   std::span<const double> direction);

struct DualOptions {
  double initial_radius = 1e3;
  int iteration_cap_floor = 500;
  InnerOptions inner;
  // Swappable inner strategy; defaults to the multi-start scheme above.
  std::function<InnerResult(std::span<const double> theta, std::span<const double> vartheta)>
      inner_override;
};

// Ellipsoid method on the 2M nonnegative multipliers, minimizing the dual
// function; terminates once the subgradient bound over the ellipsoid drops
// below eta or at the iteration cap max(500, ceil(49 ln(1/eta))). The
// returned allocation is the best feasible inner optimum seen.
OptimizationResult dual_ellipsoid_solve(const ValidatedScenario& scenario, double eta,
                                        const DualOptions& options = {});

struct PatternOptions {
  double initial_step_rel = 0.25;
  double final_step_rel = 1e-4;
};

// Coordinate pattern search from p_max * (1, ..., 1) with step halving;
// equal-value ties move toward the lexicographically larger allocation.
OptimizationResult direct_search(const ValidatedScenario& scenario,
                                 const PatternOptions& options = {});
OptimizationResult direct_search_on(const Objective& objective, std::size_t dims,
                                    double p_max_watts, const PatternOptions& options = {});

// Independent uniform draws over [0, p_max] per link.
PowerAllocation random_baseline(const ValidatedScenario& scenario, CounterRng& rng);

}  // namespace v2vdep::opt
