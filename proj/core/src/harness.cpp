#include "v2vdep/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "v2vdep/analytic.hpp"
#include "v2vdep/config_io.hpp"
#include "v2vdep/optimizer.hpp"
#include "v2vdep/version.hpp"

namespace v2vdep::harness {

namespace {

constexpr std::uint64_t kBaselineSubstream = 0xba5e0000ull;

std::string mode_name(mc::LinkMode mode) { return mode == mc::LinkMode::sir ? "sir" : "sinr"; }

std::vector<double> log_grid(double lo, double hi, std::size_t points) {
  std::vector<double> grid(points);
  const double step = std::log(hi / lo) / static_cast<double>(points - 1);
  for (std::size_t k = 0; k < points; ++k) grid[k] = lo * std::exp(step * static_cast<double>(k));
  return grid;
}

std::vector<double> resolve_sweep(const ExperimentSpec& spec, const std::string& expected,
                                  std::vector<double> fallback) {
  if (!spec.sweep) return fallback;
  if (spec.sweep->first != expected)
    throw std::invalid_argument("experiment sweeps over '" + expected + "', got sweep parameter '" +
                                spec.sweep->first + "'");
  if (spec.sweep->second.empty()) throw std::invalid_argument("sweep value list is empty");
  return spec.sweep->second;
}

std::size_t resolve_trials(const ExperimentSpec& spec, std::size_t fallback) {
  const std::size_t trials = spec.trials == 0 ? fallback : spec.trials;
  if (trials < 1000)
    throw std::invalid_argument("empirical experiments require at least 1000 trials");
  return trials;
}

void append_common_meta(Table& table, const ExperimentSpec& spec, const char* experiment,
                        std::size_t trials) {
  table.meta.emplace_back("library_version", library_version);
  table.meta.emplace_back("experiment", experiment);
  table.meta.emplace_back("seed", std::to_string(spec.seed));
  table.meta.emplace_back("trials", std::to_string(trials));
  table.meta.emplace_back("mode", mode_name(spec.mode));
  for (auto& kv : config_echo(spec.scenario)) table.meta.push_back(std::move(kv));
  table.meta.emplace_back("units", "seconds and watts in data columns; *_dbm columns are display-only");
}

// Fraction of trials where every link meets its target.
double empirical_joint(const std::vector<double>& delays, std::size_t m,
                       std::span<const double> targets) {
  const std::size_t n = delays.size() / m;
  std::size_t hits = 0;
  for (std::size_t t = 0; t < n; ++t) {
    bool all = true;
    for (std::size_t i = 0; i < m; ++i) all = all && delays[t * m + i] <= targets[i];
    hits += all;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

std::string join_targets(std::span<const double> targets) {
  std::string out;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (i) out += ';';
    out += format_number(targets[i]);
  }
  return out;
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

void write_csv(const Table& table, std::ostream& out) {
  for (const auto& [key, value] : table.meta) out << "# " << key << " = " << value << "\n";
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out << ",";
    out << table.columns[c];
  }
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ",";
      out << row[c];
    }
    out << "\n";
  }
}

void write_json(const Table& table, std::ostream& out) {
  nlohmann::ordered_json j;
  auto& meta = j["meta"] = nlohmann::ordered_json::object();
  for (const auto& [key, value] : table.meta) meta[key] = value;
  j["columns"] = table.columns;
  j["rows"] = table.rows;
  out << j.dump(2) << "\n";
}

ExperimentResult run_validate_fh(const ExperimentSpec& spec) {
  const auto lambdas = resolve_sweep(spec, "lambda", {0.01, 0.03, 0.05});
  const std::size_t trials = resolve_trials(spec, 100000);
  const std::size_t m = spec.scenario.geometry.link_count();
  validate(spec.scenario);

  ExperimentResult result;
  append_common_meta(result.table, spec, "validate_fh", trials);

  result.table.columns = {"lambda_per_m", "delay_s"};
  for (std::size_t i = 0; i < m; ++i) {
    result.table.columns.push_back("F" + std::to_string(i + 1) + "_analytic");
    result.table.columns.push_back("F" + std::to_string(i + 1) + "_empirical");
  }
  result.table.columns.push_back("H_analytic");
  result.table.columns.push_back("H_empirical");

  const auto grid = log_grid(1e-6, 1e-1, 100);
  for (const double lambda : lambdas) {
    ScenarioConfig cfg = spec.scenario;
    cfg.interferers.density_per_m = lambda;
    const ValidatedScenario scen = validate(cfg);
    const std::span<const double> powers = cfg.allocation.tx_powers_watts;

    const mc::TrialEnsemble ensemble(scen, trials, spec.seed);
    const auto delays = ensemble.delays_for(powers, spec.mode);
    std::vector<std::vector<double>> link_sorted(m, std::vector<double>(trials));
    std::vector<double> max_sorted(trials);
    for (std::size_t t = 0; t < trials; ++t) {
      double worst = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        link_sorted[i][t] = delays[t * m + i];
        worst = std::max(worst, delays[t * m + i]);
      }
      max_sorted[t] = worst;
    }
    for (auto& col : link_sorted) std::sort(col.begin(), col.end());
    std::sort(max_sorted.begin(), max_sorted.end());
    auto ecdf = [trials](const std::vector<double>& sorted, double v) {
      const auto it = std::upper_bound(sorted.begin(), sorted.end(), v);
      return static_cast<double>(it - sorted.begin()) / static_cast<double>(trials);
    };

    double dev_f = 0.0;
    double dev_h = 0.0;
    bool frechet_ok = true;
    std::vector<double> thresholds(m);
    for (const double v : grid) {
      std::vector<std::string> row{format_number(lambda), format_number(v)};
      double min_f = 1.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double fa = analytic::marginal_cdf(i, v, powers, scen).value;
        const double fe = ecdf(link_sorted[i], v);
        dev_f = std::max(dev_f, std::fabs(fa - fe));
        min_f = std::min(min_f, fa);
        row.push_back(format_number(fa));
        row.push_back(format_number(fe));
      }
      std::fill(thresholds.begin(), thresholds.end(), v);
      const double ha = analytic::joint_cdf(thresholds, powers, scen).value;
      const double he = ecdf(max_sorted, v);
      dev_h = std::max(dev_h, std::fabs(ha - he));
      frechet_ok = frechet_ok && ha <= min_f + 1e-12;
      row.push_back(format_number(ha));
      row.push_back(format_number(he));
      result.table.rows.push_back(std::move(row));
    }
    const std::string tag = format_number(lambda);
    result.table.meta.emplace_back("max_abs_dev_F_lambda_" + tag, format_number(dev_f));
    result.table.meta.emplace_back("max_abs_dev_H_lambda_" + tag, format_number(dev_h));
    if (dev_f > 0.02 || dev_h > 0.02) {
      std::ostringstream os;
      os << "analytic/empirical deviation exceeds 0.02 at lambda " << tag << " (F " << dev_f
         << ", H " << dev_h << ")";
      result.summary.failures.push_back(os.str());
    }
    if (!frechet_ok)
      result.summary.failures.push_back("joint CDF exceeds a marginal at lambda " + tag);
  }
  result.summary.passed = result.summary.failures.empty();
  return result;
}

ExperimentResult run_beta_sweep(const ExperimentSpec& spec) {
  const auto distances = resolve_sweep(spec, "d12", {1.0, 2.0, 3.0, 4.0, 5.0});
  const std::size_t trials = resolve_trials(spec, 20000);
  validate(spec.scenario);

  ExperimentResult result;
  append_common_meta(result.table, spec, "beta_sweep", trials);
  result.table.columns = {"d12_m",
                          "beta_analytic",
                          "beta_empirical",
                          "reliability_analytic",
                          "reliability_empirical",
                          "reliability_stderr_empirical"};

  double prev_beta = -std::numeric_limits<double>::infinity();
  double prev_rel = -std::numeric_limits<double>::infinity();
  double prev_emp = -std::numeric_limits<double>::infinity();
  double prev_emp_se = 0.0;
  for (const double d12 : distances) {
    const ScenarioConfig cfg = with_cross_distance(spec.scenario, d12);
    const ValidatedScenario scen = validate(cfg);
    const std::span<const double> powers = cfg.allocation.tx_powers_watts;
    const std::span<const double> targets = cfg.requirements.targets_s;

    const auto beta = analytic::blomqvist_beta(powers, scen);
    const double rel_a = analytic::joint_cdf(targets, powers, scen).value;

    const mc::TrialEnsemble ensemble(scen, trials, spec.seed);
    const auto report = mc::estimate_from(ensemble, powers, targets, spec.mode);

    if (beta.beta < prev_beta - 1e-12)
      result.summary.failures.push_back("analytic beta decreases at d12 = " + format_number(d12));
    if (rel_a < prev_rel - 1e-12)
      result.summary.failures.push_back("analytic reliability decreases at d12 = " +
                                        format_number(d12));
    const double noise = 3.0 * std::sqrt(prev_emp_se * prev_emp_se +
                                         report.joint_reliability_stderr *
                                             report.joint_reliability_stderr);
    if (report.joint_reliability < prev_emp - noise)
      result.summary.failures.push_back("empirical reliability decreases beyond noise at d12 = " +
                                        format_number(d12));
    prev_beta = beta.beta;
    prev_rel = rel_a;
    prev_emp = report.joint_reliability;
    prev_emp_se = report.joint_reliability_stderr;

    result.table.rows.push_back({format_number(d12), format_number(beta.beta),
                                 format_number(report.empirical_beta), format_number(rel_a),
                                 format_number(report.joint_reliability),
                                 format_number(report.joint_reliability_stderr)});
  }
  result.summary.passed = result.summary.failures.empty();
  return result;
}

ExperimentResult run_depcontrol_sweep(const ExperimentSpec& spec,
                                      const DepControlOptions& options) {
  const auto lambdas = resolve_sweep(spec, "lambda", {0.01, 0.02, 0.03, 0.04, 0.05});
  const std::size_t trials = resolve_trials(spec, 20000);
  const std::size_t m = spec.scenario.geometry.link_count();
  validate(spec.scenario);
  if (options.baseline_draws == 0)
    throw std::invalid_argument("baseline averaging requires at least one draw");

  std::vector<std::vector<double>> target_sets = options.delay_target_sets;
  if (target_sets.empty()) target_sets.push_back(spec.scenario.requirements.targets_s);
  for (const auto& targets : target_sets)
    if (targets.size() != m)
      throw std::invalid_argument("each delay target set needs one entry per link");

  ExperimentResult result;
  append_common_meta(result.table, spec, "depcontrol_sweep", trials);
  result.table.meta.emplace_back("baseline_draws", std::to_string(options.baseline_draws));
  result.table.meta.emplace_back("eta", format_number(options.eta));

  result.table.columns = {"lambda_per_m", "tau_s", "beta_dual", "beta_direct"};
  for (std::size_t i = 0; i < m; ++i)
    result.table.columns.push_back("P" + std::to_string(i + 1) + "_W");
  for (std::size_t i = 0; i < m; ++i)
    result.table.columns.push_back("P" + std::to_string(i + 1) + "_dbm");
  for (const char* name :
       {"reliability_opt_analytic", "reliability_opt_empirical", "reliability_opt_stderr",
        "baseline_mean_analytic", "baseline_mean_empirical", "baseline_sd_empirical",
        "gain_analytic", "gain_empirical", "method", "dual_iterations", "objective_evaluations"})
    result.table.columns.push_back(name);

  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    ScenarioConfig cfg = spec.scenario;
    cfg.interferers.density_per_m = lambdas[li];
    const ValidatedScenario scen = validate(cfg);

    const auto dual = opt::dual_ellipsoid_solve(scen, options.eta);
    const auto direct = opt::direct_search(scen);
    const std::span<const double> opt_powers = dual.best_allocation.tx_powers_watts;

    const mc::TrialEnsemble ensemble(scen, trials, spec.seed);
    const auto opt_delays = ensemble.delays_for(opt_powers, spec.mode);

    // Baseline allocations are drawn once per density and evaluated on the
    // same trial randomness as the optimized allocation.
    std::vector<PowerAllocation> baseline(options.baseline_draws);
    for (std::size_t b = 0; b < options.baseline_draws; ++b) {
      CounterRng rng(spec.seed, b, kBaselineSubstream + li);
      baseline[b] = opt::random_baseline(scen, rng);
    }

    const std::string method =
        dual.converged ? "dual_ellipsoid" : "dual_ellipsoid(unconverged)";
    const int dual_iterations = dual.dual_state ? dual.dual_state->iteration : 0;

    for (const auto& targets : target_sets) {
      const double rel_opt_a = analytic::joint_cdf(targets, opt_powers, scen).value;
      const double rel_opt_e = empirical_joint(opt_delays, m, targets);
      const double rel_opt_se =
          std::sqrt(rel_opt_e * (1.0 - rel_opt_e) / static_cast<double>(trials));

      double base_a_sum = 0.0;
      double base_e_sum = 0.0;
      double base_e_sq = 0.0;
      for (const auto& alloc : baseline) {
        base_a_sum += analytic::joint_cdf(targets, alloc.tx_powers_watts, scen).value;
        const auto delays = ensemble.delays_for(alloc.tx_powers_watts, spec.mode);
        const double rel = empirical_joint(delays, m, targets);
        base_e_sum += rel;
        base_e_sq += rel * rel;
      }
      const double draws = static_cast<double>(options.baseline_draws);
      const double base_a = base_a_sum / draws;
      const double base_e = base_e_sum / draws;
      const double base_var = std::max(0.0, base_e_sq / draws - base_e * base_e);

      std::vector<std::string> row{format_number(lambdas[li]), join_targets(targets),
                                   format_number(dual.best_beta),
                                   format_number(direct.best_beta)};
      for (std::size_t i = 0; i < m; ++i) row.push_back(format_number(opt_powers[i]));
      for (std::size_t i = 0; i < m; ++i)
        row.push_back(format_number(watts_to_dbm(opt_powers[i])));
      row.push_back(format_number(rel_opt_a));
      row.push_back(format_number(rel_opt_e));
      row.push_back(format_number(rel_opt_se));
      row.push_back(format_number(base_a));
      row.push_back(format_number(base_e));
      row.push_back(format_number(std::sqrt(base_var)));
      row.push_back(format_number(rel_opt_a - base_a));
      row.push_back(format_number(rel_opt_e - base_e));
      row.push_back(method);
      row.push_back(std::to_string(dual_iterations));
      row.push_back(std::to_string(dual.evaluations));
      result.table.rows.push_back(std::move(row));
    }
    if (std::fabs(dual.best_beta - direct.best_beta) > 0.05) {
      result.summary.failures.push_back(
          "dual/direct concordance mismatch above 0.05 at lambda " + format_number(lambdas[li]));
    }
  }
  result.summary.passed = result.summary.failures.empty();
  return result;
}

ExperimentResult run_single_eval(const ExperimentSpec& spec) {
  const std::size_t trials = resolve_trials(spec, 20000);
  const ValidatedScenario scen = validate(spec.scenario);
  const std::size_t m = scen.link_count();
  const std::span<const double> powers = spec.scenario.allocation.tx_powers_watts;
  const std::span<const double> targets = spec.scenario.requirements.targets_s;

  ExperimentResult result;
  append_common_meta(result.table, spec, "single_eval", trials);

  const auto beta = analytic::blomqvist_beta(powers, scen);
  const double rel_a = analytic::joint_cdf(targets, powers, scen).value;
  const auto report = mc::estimate(scen, powers, targets, trials, spec.mode, spec.seed);

  result.table.columns = {"beta_analytic", "joint_cdf_at_medians", "joint_survival_at_medians"};
  std::vector<std::string> row{format_number(beta.beta),
                               format_number(beta.joint_cdf_at_medians),
                               format_number(beta.joint_survival_at_medians)};
  const auto& cfg = spec.scenario;
  for (std::size_t i = 0; i < m; ++i) {
    result.table.columns.push_back("median" + std::to_string(i + 1) + "_s");
    row.push_back(format_number(beta.medians_s[i]));
  }
  for (std::size_t i = 0; i < m; ++i) {
    result.table.columns.push_back("F" + std::to_string(i + 1) + "_at_target");
    row.push_back(format_number(analytic::marginal_cdf(i, targets[i], powers, scen).value));
  }
  // Field exposure factor exp(-lambda * integral) at the target; exactly 1
  // for an empty interferer field.
  for (std::size_t i = 0; i < m; ++i) {
    result.table.columns.push_back("exposure_factor" + std::to_string(i + 1));
    const double lambda = cfg.interferers.density_per_m;
    double factor = 1.0;
    if (lambda > 0.0) {
      const double theta = analytic::sir_threshold(targets[i], cfg.radio);
      const double signal = powers[i] * scen.path_gain(i, i);
      const double coeff = theta * cfg.interferers.power_watts / signal;
      factor = std::exp(-lambda * analytic::ppp_integral(coeff, cfg.geometry.rx_positions_m[i],
                                                         cfg.radio.path_loss_exponent));
    }
    row.push_back(format_number(factor));
  }
  result.table.columns.push_back("reliability_analytic");
  row.push_back(format_number(rel_a));
  result.table.columns.push_back("reliability_empirical");
  row.push_back(format_number(report.joint_reliability));
  result.table.columns.push_back("reliability_stderr");
  row.push_back(format_number(report.joint_reliability_stderr));
  result.table.columns.push_back("beta_empirical");
  row.push_back(format_number(report.empirical_beta));
  for (std::size_t i = 0; i < m; ++i) {
    result.table.columns.push_back("marginal" + std::to_string(i + 1) + "_empirical");
    row.push_back(format_number(report.marginal_reliabilities[i]));
  }
  for (std::size_t i = 0; i < m; ++i) {
    result.table.columns.push_back("empirical_median" + std::to_string(i + 1) + "_s");
    row.push_back(format_number(report.empirical_medians_s[i]));
  }
  // display-unit duplicates
  for (std::size_t i = 0; i < m; ++i) {
    result.table.columns.push_back("P" + std::to_string(i + 1) + "_dbm");
    row.push_back(format_number(watts_to_dbm(powers[i])));
  }
  for (std::size_t i = 0; i < m; ++i) {
    result.table.columns.push_back("target" + std::to_string(i + 1) + "_ms");
    row.push_back(format_number(targets[i] * 1e3));
  }
  result.table.rows.push_back(std::move(row));
  return result;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  switch (spec.experiment) {
    case ExperimentKind::validate_fh:
      return run_validate_fh(spec);
    case ExperimentKind::beta_sweep:
      return run_beta_sweep(spec);
    case ExperimentKind::depcontrol_sweep:
      return run_depcontrol_sweep(spec);
    case ExperimentKind::single_eval:
      return run_single_eval(spec);
  }
  throw std::invalid_argument("unknown experiment");
}

}  // namespace v2vdep::harness
