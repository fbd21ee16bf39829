// Experiment runner for the decomposed adversarial inference model and the
// 2D grid mode-collapse benchmark.
//
//   dali train <config.json> [--seed N] [--steps N] [--variant V] [--out DIR]
//              [--jobs N] [--quiet]
//   dali eval <checkpoint> <config.json> [--quiet]
//   dali compare <config.json>... [--out DIR] [--jobs N] [--quiet]
//
// Exit codes: 0 success, 1 configuration error, 2 runtime/numeric failure.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dali/errors.hpp"
#include "dali/kernels.hpp"
#include "dali/runner.hpp"

namespace {

struct CommonOpts {
  std::int64_t seed = -1;
  std::int64_t steps = -1;
  std::string variant;
  std::string out;
  int jobs = 1;
  bool quiet = false;
};

void apply_overrides(dali::run::TrainConfig& cfg, const CommonOpts& o) {
  if (o.seed >= 0) cfg.seeds = {static_cast<std::uint64_t>(o.seed)};
  if (o.steps >= 0) cfg.total_steps = o.steps;
  if (!o.variant.empty()) cfg.variant = dali::core::parse_variant(o.variant);
  if (!o.out.empty()) cfg.output_dir = o.out;
  cfg.validate();
}

int cmd_train(const std::string& config_path, const CommonOpts& o) {
  dali::run::TrainConfig cfg = dali::run::load_config(config_path);
  apply_overrides(cfg, o);
  if (!o.quiet) {
    std::cout << "kernels: " << dali::kernels::backend_name(dali::kernels::active_backend())
              << "\n";
  }
  const dali::run::RunSummary summary = dali::run::run_experiment(cfg, o.jobs, o.quiet);
  if (!summary.all_ok) {
    std::cerr << "one or more seeds failed; see summary.csv\n";
    return 2;
  }
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& config_path,
             const CommonOpts& o) {
  dali::run::TrainConfig cfg = dali::run::load_config(config_path);
  apply_overrides(cfg, o);
  const dali::metrics::MetricsRecord rec = dali::run::evaluate_checkpoint(checkpoint_path, cfg);
  std::cout << dali::run::kMetricsHeader << "\n" << dali::run::metrics_row(rec) << "\n";
  return 0;
}

int cmd_compare(const std::vector<std::string>& config_paths, const CommonOpts& o) {
  std::vector<dali::run::TrainConfig> configs;
  for (const std::string& p : config_paths) {
    dali::run::TrainConfig cfg = dali::run::load_config(p);
    if (!o.variant.empty()) cfg.variant = dali::core::parse_variant(o.variant);
    cfg.validate();
    configs.push_back(std::move(cfg));
  }
  const std::string out_dir = o.out.empty() ? "runs/compare" : o.out;
  const std::string table = dali::run::compare_variants(configs, out_dir, o.jobs, o.quiet);
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adversarial learned inference experiment runner"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string config_path, checkpoint_path;
  std::vector<std::string> compare_paths;

  auto add_common = [&opts](CLI::App* sub, bool with_overrides) {
    sub->add_flag("--quiet", opts.quiet, "suppress progress output");
    sub->add_option("--jobs", opts.jobs, "seeds trained in parallel");
    if (with_overrides) {
      sub->add_option("--seed", opts.seed, "train a single seed");
      sub->add_option("--steps", opts.steps, "override total_steps");
      sub->add_option("--variant", opts.variant, "override variant");
      sub->add_option("--out", opts.out, "override output directory");
    }
  };

  CLI::App* train = app.add_subcommand("train", "train per config, one run per seed");
  train->add_option("config", config_path, "config JSON file")->required();
  add_common(train, true);

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("checkpoint", checkpoint_path, "checkpoint file")->required();
  eval->add_option("config", config_path, "config JSON file")->required();
  add_common(eval, false);

  CLI::App* compare = app.add_subcommand("compare", "variant comparison table");
  compare->add_option("configs", compare_paths, "config JSON files")->required();
  compare->add_option("--out", opts.out, "output directory for the table");
  compare->add_option("--variant", opts.variant, "override variant for all configs");
  compare->add_flag("--quiet", opts.quiet, "suppress progress output");
  compare->add_option("--jobs", opts.jobs, "seeds trained in parallel");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(config_path, opts);
    if (eval->parsed()) return cmd_eval(checkpoint_path, config_path, opts);
    if (compare->parsed()) return cmd_compare(compare_paths, opts);
  } catch (const dali::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
