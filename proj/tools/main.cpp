// Command line front end: loads a scenario config, runs one experiment, and
// writes the result table as CSV (or JSON when the output path ends in
// .json). Exit codes: 0 success, 1 usage/config error, 2 an acceptance check
// inside the experiment failed, 3 numerical failure.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "v2vdep/analytic.hpp"
#include "v2vdep/config_io.hpp"
#include "v2vdep/harness.hpp"
#include "v2vdep/parallel.hpp"
#include "v2vdep/version.hpp"

namespace {

using v2vdep::harness::ExperimentKind;
using v2vdep::harness::ExperimentSpec;

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 1;
  std::size_t trials = 0;
  std::string mode = "sir";
  std::string output;
  std::vector<double> lambdas;
  std::vector<double> d12;
  unsigned threads = 0;
};

void add_common_flags(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Scenario config file")->required();
  cmd->add_option("--seed", args.seed, "Random seed (default 1)");
  cmd->add_option("--trials", args.trials, "Monte Carlo trials (0 = experiment default)");
  cmd->add_option("--mode", args.mode, "Delay model: sir or sinr")
      ->check(CLI::IsMember({"sir", "sinr"}));
  cmd->add_option("--output", args.output, "Output path (.csv or .json; default stdout)");
  cmd->add_option("--lambda", args.lambdas, "Interferer densities to sweep (per meter)")
      ->delimiter(',');
  cmd->add_option("--d12", args.d12, "Cross distances to sweep (meters)")->delimiter(',');
  cmd->add_option("--threads", args.threads, "Worker threads (0 = hardware)");
}

int run(ExperimentKind kind, const CommonArgs& args) {
  v2vdep::set_max_threads(args.threads);

  ExperimentSpec spec;
  spec.experiment = kind;
  spec.scenario = v2vdep::load_config(args.config_path);
  spec.seed = args.seed;
  spec.trials = args.trials;
  spec.mode = args.mode == "sinr" ? v2vdep::mc::LinkMode::sinr : v2vdep::mc::LinkMode::sir;
  spec.output_path = args.output;
  if (!args.lambdas.empty() && !args.d12.empty()) {
    std::cerr << "error: --lambda and --d12 cannot be combined\n";
    return 1;
  }
  if (!args.lambdas.empty()) spec.sweep = {{"lambda", args.lambdas}};
  if (!args.d12.empty()) spec.sweep = {{"d12", args.d12}};

  const auto result = v2vdep::harness::run_experiment(spec);

  if (spec.output_path.empty()) {
    v2vdep::harness::write_csv(result.table, std::cout);
  } else {
    std::ofstream out(spec.output_path);
    if (!out) {
      std::cerr << "error: cannot open output file '" << spec.output_path << "'\n";
      return 1;
    }
    if (spec.output_path.size() >= 5 &&
        spec.output_path.compare(spec.output_path.size() - 5, 5, ".json") == 0)
      v2vdep::harness::write_json(result.table, out);
    else
      v2vdep::harness::write_csv(result.table, out);
  }

  if (!result.summary.passed) {
    for (const auto& failure : result.summary.failures)
      std::cerr << "check failed: " << failure << "\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("v2vdep ") + v2vdep::library_version +
               " - joint delay reliability and concordance toolkit for V2V links"};
  app.require_subcommand(1);

  CommonArgs args;
  ExperimentKind kind = ExperimentKind::single_eval;
  auto* validate_fh = app.add_subcommand(
      "validate-fh", "Analytic vs empirical marginal/joint delay CDF curves");
  validate_fh->callback([&kind] { kind = ExperimentKind::validate_fh; });
  auto* beta_sweep =
      app.add_subcommand("beta-sweep", "Concordance and reliability over a cross-distance sweep");
  beta_sweep->callback([&kind] { kind = ExperimentKind::beta_sweep; });
  auto* depcontrol = app.add_subcommand(
      "depcontrol-sweep", "Optimized power allocation vs random baseline over densities");
  depcontrol->callback([&kind] { kind = ExperimentKind::depcontrol_sweep; });
  auto* eval = app.add_subcommand("eval", "One-shot analytic and empirical report");
  eval->callback([&kind] { kind = ExperimentKind::single_eval; });
  for (auto* cmd : {validate_fh, beta_sweep, depcontrol, eval}) add_common_flags(cmd, args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    return run(kind, args);
  } catch (const v2vdep::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const v2vdep::ScenarioError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const v2vdep::quad::QuadratureError& e) {
    std::cerr << "numerical error: " << e.what() << " (achieved " << e.achieved_error() << ")\n";
    return 3;
  } catch (const v2vdep::analytic::MedianError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
