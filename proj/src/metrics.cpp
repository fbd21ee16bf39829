#include "dali/metrics.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "dali/errors.hpp"

namespace dali::metrics {

std::vector<bool> high_quality_mask(const Array& samples, const synth::GridMixture& mix,
                                    double k_sigma) {
  if (samples.rows() < 1) throw ContractError("high_quality_mask: need at least one sample");
  std::vector<bool> mask(samples.rows());
  const double radius = k_sigma * mix.sigma;
  for (int i = 0; i < samples.rows(); ++i) {
    const auto [k, dist] = synth::nearest_mode(mix, samples.at(i, 0), samples.at(i, 1));
    (void)k;
    mask[static_cast<std::size_t>(i)] = dist <= radius;
  }
  return mask;
}

int modes_captured(const Array& samples, const synth::GridMixture& mix, double k_sigma) {
  if (samples.rows() < 1) throw ContractError("modes_captured: need at least one sample");
  const double radius = k_sigma * mix.sigma;
  std::set<int> captured;
  for (int i = 0; i < samples.rows(); ++i) {
    const auto [k, dist] = synth::nearest_mode(mix, samples.at(i, 0), samples.at(i, 1));
    if (dist <= radius) captured.insert(k);
  }
  return static_cast<int>(captured.size());
}

double recon_mse(const core::ModelBundle& bundle, const Array& test) {
  if (test.rows() < 1) throw ContractError("recon_mse: need at least one point");
  const Array rec = core::reconstruct(bundle, test);
  double total = 0.0;
  for (int i = 0; i < test.rows(); ++i) {
    for (int j = 0; j < test.cols(); ++j) {
      const double d = test.at(i, j) - rec.at(i, j);
      total += d * d;
    }
  }
  return total / static_cast<double>(test.rows());
}

EvalOutput evaluate_full(const core::ModelBundle& bundle, const synth::GridMixture& mix,
                         int n_gen, int test_m, Rng& rng) {
  EvalOutput out;
  const Array z = rng.normal_array(n_gen, bundle.latent_dim);
  out.generated = core::generate(bundle, z);

  out.record.modes_captured = modes_captured(out.generated, mix);
  const std::vector<bool> mask = high_quality_mask(out.generated, mix);
  int hq = 0;
  for (bool m : mask) hq += m ? 1 : 0;
  out.record.high_quality_fraction = static_cast<double>(hq) / static_cast<double>(n_gen);

  out.test = synth::sample(mix, test_m, rng);
  if (bundle.has_encoder()) {
    out.reconstructed = core::reconstruct(bundle, out.test);
    double total = 0.0;
    for (int i = 0; i < out.test.rows(); ++i) {
      for (int j = 0; j < out.test.cols(); ++j) {
        const double d = out.test.at(i, j) - out.reconstructed.at(i, j);
        total += d * d;
      }
    }
    out.record.recon_mse = total / static_cast<double>(test_m);

    // Batch mean of the latent reconstruction NLL on the generated batch.
    const core::GaussianPosterior post = core::encode(bundle, out.generated);
    double nll = 0.0;
    for (int i = 0; i < z.rows(); ++i) {
      for (int j = 0; j < z.cols(); ++j) {
        const double lv = post.log_var.at(i, j);
        const double diff = z.at(i, j) - post.mu.at(i, j);
        nll += 0.5 * (diff * diff * std::exp(-lv) + lv + core::kLog2Pi);
      }
    }
    out.record.mean_nll = nll / static_cast<double>(z.rows());
  } else {
    out.record.recon_mse = std::numeric_limits<double>::quiet_NaN();
    out.record.mean_nll = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

MetricsRecord evaluate(const core::ModelBundle& bundle, const synth::GridMixture& mix,
                       int n_gen, int test_m, Rng& rng) {
  return evaluate_full(bundle, mix, n_gen, test_m, rng).record;
}

}  // namespace dali::metrics
