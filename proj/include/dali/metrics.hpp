#pragma once

#include <cstdint>
#include <vector>

#include "dali/array.hpp"
#include "dali/dali_core.hpp"
#include "dali/rng.hpp"
#include "dali/synthdata.hpp"

namespace dali::metrics {

/// One evaluation row. recon_mse and mean_nll are NaN for the GAN variant.
/// Losses come from the most recent training step (NaN before any step).
/// wall_ms holds measured wall time in-process; artifact CSVs write 0 there
/// so that runs are byte-reproducible.
struct MetricsRecord {
  std::int64_t step = 0;
  int modes_captured = 0;
  double high_quality_fraction = 0.0;
  double recon_mse = 0.0;
  double mean_nll = 0.0;
  double L_d = 0.0, L_g = 0.0, L_e = 0.0, L_rec = 0.0;
  std::int64_t wall_ms = 0;
};

/// mask[i] = distance from samples[i] to its nearest mode mean <= k_sigma * sigma.
std::vector<bool> high_quality_mask(const Array& samples, const synth::GridMixture& mix,
                                    double k_sigma = 3.0);

/// Number of distinct components that are the nearest mode of at least one
/// high-quality sample.
int modes_captured(const Array& samples, const synth::GridMixture& mix, double k_sigma = 3.0);

/// (1/m) sum_i || x_i - G(mu(x_i)) ||^2.
double recon_mse(const core::ModelBundle& bundle, const Array& test);

struct EvalOutput {
  MetricsRecord record;
  Array generated;   // [n_gen x 2]
  Array test;        // [test_m x 2]
  Array reconstructed;  // [test_m x 2]; empty for GAN
};

/// Draws n_gen latent samples through G, computes the mode-coverage metrics,
/// then draws a held-out test set for reconstruction. Deterministic given the
/// generator state of rng.
EvalOutput evaluate_full(const core::ModelBundle& bundle, const synth::GridMixture& mix,
                         int n_gen, int test_m, Rng& rng);

MetricsRecord evaluate(const core::ModelBundle& bundle, const synth::GridMixture& mix,
                       int n_gen, int test_m, Rng& rng);

}  // namespace dali::metrics
