#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dali/dali_core.hpp"
#include "dali/metrics.hpp"
#include "dali/optim.hpp"
#include "dali/synthdata.hpp"

namespace dali::run {

/// Full experiment configuration. Defaults reproduce the 25-mode grid
/// benchmark; every field is settable from the flat JSON config document.
struct TrainConfig {
  core::VariantKind variant = core::VariantKind::DALI;
  int latent_dim = 2;
  std::optional<double> lambda;  // resolved to 1/latent_dim when unset
  int batch_size = 256;
  std::int64_t total_steps = 50000;
  std::int64_t eval_every = 1000;
  std::vector<std::uint64_t> seeds{1, 2, 3};

  // optimizer block (shared by the D and the joint G+E optimizer states)
  double lr = 1e-3;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
  optim::DecayKind decay = optim::DecayKind::none;
  double decay_k = 0.0;
  double grad_clip = 0.0;

  // architecture block
  std::vector<int> g_hidden{128, 128};
  std::vector<int> d_hidden{128, 128, 128};
  std::vector<int> e_hidden{64};
  std::vector<int> e_trunk_hidden{128, 64};
  double leaky_alpha = 0.2;
  bool share_features = true;
  bool redraw_latent = false;
  int d_steps = 1;

  // mixture block
  int grid_side = 5;
  double spacing = 2.0;
  double data_sigma = 0.05;

  // evaluation block
  int eval_samples = 2500;
  int eval_test = 1000;

  std::string output_dir = "runs/out";

  double resolved_lambda() const { return lambda ? *lambda : 1.0 / latent_dim; }
  void validate() const;  // throws ConfigError
  core::BundleConfig bundle_config() const;
  synth::GridMixture mixture() const;
};

/// Parse the flat JSON config document. Unknown keys and type mismatches are
/// ConfigErrors naming the key.
TrainConfig parse_config_text(const std::string& text);
TrainConfig load_config(const std::string& path);

/// Effective configuration echo (fixed key order, lambda resolved). Parsing
/// this text reproduces the run exactly.
std::string resolved_config_text(const TrainConfig& cfg);

struct CheckpointMeta {
  core::VariantKind variant = core::VariantKind::DALI;
  int latent_dim = 2;
  std::int64_t step = 0;
  std::uint64_t seed = 0;
  // losses at the checkpointed step, NaN before the first step
  double L_d = 0.0, L_g = 0.0, L_e = 0.0, L_rec = 0.0;
};

void save_checkpoint(const std::string& path, const core::ModelBundle& bundle,
                     const CheckpointMeta& meta);

struct LoadedCheckpoint {
  CheckpointMeta meta;
  core::ModelBundle bundle;
};

/// Rebuilds the bundle described by cfg's architecture block from the stored
/// entries. Shape mismatches name the offending entry.
LoadedCheckpoint load_checkpoint(const std::string& path, const TrainConfig& cfg);

struct SeedResult {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  metrics::MetricsRecord final_record;
  double wall_seconds = 0.0;
};

struct RunSummary {
  std::vector<SeedResult> seeds;
  // sample mean / std (n-1) over succeeding seeds of the final record
  double modes_mean = 0.0, modes_std = 0.0;
  double hq_mean = 0.0, hq_std = 0.0;
  double recon_mse_mean = 0.0, recon_mse_std = 0.0;
  bool all_ok = false;
};

/// Train every seed (jobs in parallel), writing per-seed artifact directories
/// plus config.resolved and summary.csv under cfg.output_dir. A seed whose
/// loss becomes non-finite is marked failed; the other seeds continue.
RunSummary run_experiment(const TrainConfig& cfg, int jobs = 1, bool quiet = false);

/// Re-evaluates a checkpoint with the evaluation stream of its recorded
/// (seed, step); reproduces the metrics row logged during training.
metrics::MetricsRecord evaluate_checkpoint(const std::string& path, const TrainConfig& cfg);

/// Runs (or reuses completed runs of) each config and emits the comparison
/// table: one row per variant, modes captured and high-quality fraction as
/// mean +/- std over seeds. All configs must share the mixture block.
/// Returns the text table; also writes compare.csv under out_dir.
std::string compare_variants(const std::vector<TrainConfig>& configs, const std::string& out_dir,
                             int jobs = 1, bool quiet = false);

/// metrics.csv header and row formatting (fixed column order).
extern const char* const kMetricsHeader;
std::string metrics_row(const metrics::MetricsRecord& r);

}  // namespace dali::run
