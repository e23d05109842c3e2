#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "v2vdep/montecarlo.hpp"
#include "v2vdep/scenario.hpp"

namespace v2vdep::harness {

// Experiment runners that wire the analytic, Monte Carlo and optimizer
// modules together and emit plot-ready tables: marginal/joint CDF validation
// curves, the concordance-vs-distance sweep, and the dependence-control
// comparison against a random-power baseline.

enum class ExperimentKind { validate_fh, beta_sweep, depcontrol_sweep, single_eval };

struct ExperimentSpec {
  ExperimentKind experiment = ExperimentKind::single_eval;
  ScenarioConfig scenario;
  // Sweep parameter name ("lambda" or "d12") and its values; each experiment
  // has a documented default when absent.
  std::optional<std::pair<std::string, std::vector<double>>> sweep;
  std::size_t trials = 0;  // 0 selects the per-experiment default
  std::uint64_t seed = 1;
  mc::LinkMode mode = mc::LinkMode::sir;
  std::string output_path;  // empty writes to stdout
};

struct Table {
  std::vector<std::pair<std::string, std::string>> meta;  // echoed into the header block
  std::vector<std::string> columns;                       // names carry units (_s, _W, _dbm)
  std::vector<std::vector<std::string>> rows;             // preformatted cells
};

struct RunSummary {
  bool passed = true;
  std::vector<std::string> failures;
};

struct ExperimentResult {
  Table table;
  RunSummary summary;
};

// Shortest round-trippable decimal representation used for all table cells,
// so identical inputs produce byte-identical outputs.
std::string format_number(double value);

// Commented "# key = value" header block followed by CSV rows.
void write_csv(const Table& table, std::ostream& out);
// Same content as a JSON object {meta, columns, rows}.
void write_json(const Table& table, std::ostream& out);

// Marginal and joint CDF validation: analytic curves against empirical CDFs
// on a 100-point log-spaced delay grid, one block per interferer density.
// Default densities {0.01, 0.03, 0.05} /m, default 1e5 trials. The summary
// fails when any curve deviates by more than 0.02 in max-abs distance.
ExperimentResult run_validate_fh(const ExperimentSpec& spec);

// Concordance-reliability trend: sweeps the cross distance d12 (default
// {1..5} m), reporting analytic/empirical beta and joint reliability at the
// configured targets. Flags non-monotone series in the summary.
ExperimentResult run_beta_sweep(const ExperimentSpec& spec);

struct DepControlOptions {
  // Delay target vectors to evaluate; defaults to the configured targets.
  // The optimized allocation does not depend on the targets, so extra sets
  // reuse the same solve.
  std::vector<std::vector<double>> delay_target_sets;
  std::size_t baseline_draws = 100;
  double eta = 1e-3;  // dual solver accuracy
};

// Reliability with and without dependence control: per density, the dual
// ellipsoid allocation (cross-checked against the pattern search) versus the
// mean over random power draws, on common random numbers.
ExperimentResult run_depcontrol_sweep(const ExperimentSpec& spec,
                                      const DepControlOptions& options = {});

// One-shot analytic + empirical report for the configured allocation.
ExperimentResult run_single_eval(const ExperimentSpec& spec);

ExperimentResult run_experiment(const ExperimentSpec& spec);

}  // namespace v2vdep::harness
