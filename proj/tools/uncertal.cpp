// uncertal: run active-learning benchmarks from the command line.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uncertal/cli.hpp"

namespace {

uncertal::Budget parse_budget(const std::string& text) {
  if (text == "auto") return uncertal::Budget{};
  if (text == "full") return uncertal::Budget::full();
  std::size_t pos = 0;
  long long n = -1;
  try {
    n = std::stoll(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != text.size() || n < 0)
    throw uncertal::ConfigError("--budget: expected auto, full or a non-negative integer, got '" +
                                text + "'");
  return uncertal::Budget::fixed(static_cast<std::size_t>(n));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pool-based active learning benchmark for logistic regression"};
  app.set_version_flag("--version", std::string(UNCERTAL_VERSION));

  std::string config;
  std::vector<std::string> datasets;
  std::vector<std::string> strategies;
  int trials = 0;
  std::string budget;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  uncertal::CliOptions opts;
  std::string out = opts.out.string();
  std::string data_dir = opts.data_dir.string();

  auto* o_config = app.add_option("--config", config, "Run configuration file");
  auto* o_datasets =
      app.add_option("--datasets", datasets, "Dataset names (config sections, 'synthetic' or files in --data-dir)")
          ->delimiter(',');
  auto* o_strategies =
      app.add_option("--strategies", strategies,
                     "random, uncertainty, eer, ueer, eer-worst, mli, umli, mli-avg")
          ->delimiter(',');
  auto* o_trials = app.add_option("--trials", trials, "Trials per dataset and strategy");
  auto* o_budget = app.add_option("--budget", budget, "Queries per trial: auto, full or N");
  auto* o_lambda = app.add_option("--lambda", lambda, "Regularization parameter");
  auto* o_seed = app.add_option("--seed", seed, "Base random seed");
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.add_option("--data-dir", data_dir, "Directory searched for <name>.libsvm")->capture_default_str();
  app.add_flag("--trace", opts.trace, "Record the selections of trial 0 on a 2-D dataset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : uncertal::kExitConfig;
  }

  try {
    if (*o_config) opts.config = config;
    if (*o_datasets) opts.datasets = datasets;
    if (*o_strategies) opts.strategies = strategies;
    if (*o_trials) opts.trials = trials;
    if (*o_budget) opts.budget = parse_budget(budget);
    if (*o_lambda) opts.lambda = lambda;
    if (*o_seed) opts.seed = seed;
  } catch (const uncertal::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return uncertal::kExitConfig;
  }
  opts.out = out;
  opts.data_dir = data_dir;
  return uncertal::run(opts, std::cerr);
}
