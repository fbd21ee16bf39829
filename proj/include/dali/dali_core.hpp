#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dali/array.hpp"
#include "dali/autodiff.hpp"
#include "dali/nn.hpp"
#include "dali/optim.hpp"
#include "dali/rng.hpp"

namespace dali::core {

/// DALI: GAN-style adversarial game plus latent reconstruction.
/// DALI_L2: posterior fixed to identity covariance (log-variance 0).
/// DALI_F: KL-matching value function with identity-activation discriminator.
/// GAN: adversarial game only, no encoder.
enum class VariantKind { DALI, DALI_L2, DALI_F, GAN };

VariantKind parse_variant(const std::string& s);  // throws ConfigError
const char* variant_name(VariantKind v);

inline constexpr double kLog2Pi = 1.8378770664093453;
inline constexpr double kProbClamp = 1e-7;       // keeps log() away from 0
inline constexpr double kLogVarClamp = 10.0;     // log-variance in [-10, 10]
inline constexpr double kFganExpClamp = 20.0;    // cap on exp() argument

struct BundleConfig {
  VariantKind variant = VariantKind::DALI;
  int latent_dim = 2;
  int data_dim = 2;
  std::vector<int> g_hidden{128, 128};
  std::vector<int> d_hidden{128, 128, 128};     // last entry is the shared feature width
  std::vector<int> e_hidden{64};                // encoder head when sharing features
  std::vector<int> e_trunk_hidden{128, 64};     // standalone encoder otherwise
  double leaky_alpha = 0.2;
  bool share_features = true;
};

/// The three-network model. With feature sharing the encoder consumes the
/// discriminator's last hidden representation; those shared layers belong to
/// the discriminator and are only ever updated by the discriminator loss.
struct ModelBundle {
  VariantKind variant = VariantKind::DALI;
  int latent_dim = 0;
  int data_dim = 0;
  bool share_features = true;
  nn::MlpSpec g, d, e;
  nn::ParamStore pg, pd, pe;

  bool has_encoder() const { return variant != VariantKind::GAN; }
};

/// Build and Glorot-initialize a bundle. Per-network init streams derive from
/// the master seed, so e.g. resizing the discriminator leaves the generator's
/// initial weights untouched.
ModelBundle make_bundle(const BundleConfig& cfg, std::uint64_t master_seed);

/// Diagonal-Gaussian negative log-likelihood, mean over the batch:
///   (1/n) sum_i (1/2) sum_j [ (z_ij - mu_ij)^2 / s2_ij + log s2_ij + log 2pi ]
/// with s2 = exp(log_var). Differentiable in all three arguments.
ad::Var gaussian_nll(ad::Var z, ad::Var mu, ad::Var log_var);

/// L_d = -mean log(rho_q) - mean log(1 - rho_p), probabilities clamped to
/// [1e-7, 1-1e-7] before the logs.
ad::Var disc_loss_gan(ad::Var rho_q, ad::Var rho_p);

/// Non-saturating generator loss L_g = -mean log(rho_p), same clamping.
ad::Var gen_loss_gan(ad::Var rho_p);

/// Value function mean(d_real) - mean(exp(d_fake - 1)); the discriminator
/// ascends it (implemented as descending its negation). The exp argument is
/// capped at kFganExpClamp.
ad::Var fgan_value(ad::Var d_real, ad::Var d_fake);

/// Generator objective -mean(d_fake) for the identity-activation game.
ad::Var fgan_gen_loss(ad::Var d_fake);

/// L_rec = L_g + lambda * nll (nll is already batch-meaned).
ad::Var reconstruction_loss(ad::Var l_g, ad::Var nll, double lambda);

/// -d (1 + log 2pi) / 2: expected log-density of a standard normal prior in
/// d dimensions. Additive constant relating the optimized objective to the
/// full divergence; reported in logs, never optimized.
double prior_log_constant(int d);

struct StepOptions {
  double lambda = 0.5;        // weight on the latent reconstruction term
  bool redraw_latent = false; // fresh z for the generator/encoder substep
  int d_steps = 1;            // discriminator updates per iteration
};

struct StepReport {
  double L_d = 0.0, L_g = 0.0, L_e = 0.0, L_rec = 0.0;
  double mean_nll = 0.0;  // unscaled batch-mean NLL (L_e = lambda * mean_nll)
};

/// Discriminator update on one real batch and one latent batch; the fake
/// samples are constants for this substep. Returns L_d.
double disc_substep(ModelBundle& b, const Array& real_batch, const Array& z,
                    optim::Adam& opt_d);

struct GeReport {
  double L_g = 0.0, L_e = 0.0, L_rec = 0.0, mean_nll = 0.0;
};

/// Joint generator+encoder update on L_rec with the discriminator frozen.
GeReport gen_enc_substep(ModelBundle& b, const Array& z, optim::Adam& opt_ge,
                         const StepOptions& opt);

/// One full training iteration: draw z, update D on L_d, then update (G, E)
/// jointly on L_rec. The same z batch serves both substeps unless
/// redraw_latent is set. Throws NumericError with a diagnostic snapshot if a
/// loss becomes non-finite.
StepReport train_step(ModelBundle& b, const Array& real_batch, Rng& latent_rng,
                      optim::Adam& opt_d, optim::Adam& opt_ge, const StepOptions& opt);

struct GaussianPosterior {
  Array mu;       // [n x d]
  Array log_var;  // [n x d], clamped; identically zero for DALI_L2
};

/// Encoder outputs for a data batch. UnsupportedError for the GAN variant.
GaussianPosterior encode(const ModelBundle& b, const Array& x);

/// Conditional-mean inference: mu(x).
Array infer_latent(const ModelBundle& b, const Array& x);

/// G(z), value-only.
Array generate(const ModelBundle& b, const Array& z);

/// G(mu(x)).
Array reconstruct(const ModelBundle& b, const Array& x);

/// k draws z ~ N(mu(x), diag exp(log_var(x))) mapped through G.
/// x is a single point [1 x data_dim]; result is [k x data_dim].
Array sample_posterior(const ModelBundle& b, const Array& x, int k, Rng& rng);

}  // namespace dali::core
