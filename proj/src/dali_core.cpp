#include "dali/dali_core.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "dali/errors.hpp"

namespace dali::core {

VariantKind parse_variant(const std::string& s) {
  if (s == "dali") return VariantKind::DALI;
  if (s == "dali_l2") return VariantKind::DALI_L2;
  if (s == "dali_f") return VariantKind::DALI_F;
  if (s == "gan") return VariantKind::GAN;
  throw ConfigError("unknown variant '" + s + "' (expected dali|dali_l2|dali_f|gan)");
}

const char* variant_name(VariantKind v) {
  switch (v) {
    case VariantKind::DALI: return "dali";
    case VariantKind::DALI_L2: return "dali_l2";
    case VariantKind::DALI_F: return "dali_f";
    case VariantKind::GAN: return "gan";
  }
  return "?";
}

namespace {

std::vector<int> cat_widths(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> w;
  w.reserve(hidden.size() + 2);
  w.push_back(in);
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}

}  // namespace

ModelBundle make_bundle(const BundleConfig& cfg, std::uint64_t master_seed) {
  if (cfg.latent_dim < 1) throw ContractError("bundle: latent_dim must be >= 1");
  if (cfg.data_dim < 1) throw ContractError("bundle: data_dim must be >= 1");
  if (cfg.g_hidden.empty() || cfg.d_hidden.empty())
    throw ContractError("bundle: generator and discriminator need hidden layers");

  ModelBundle b;
  b.variant = cfg.variant;
  b.latent_dim = cfg.latent_dim;
  b.data_dim = cfg.data_dim;
  b.share_features = cfg.share_features;

  b.g = nn::MlpSpec{"g", cat_widths(cfg.latent_dim, cfg.g_hidden, cfg.data_dim),
                    {ad::ActKind::relu, 0.0},
                    {ad::ActKind::identity, 0.0}};
  const bool identity_head = cfg.variant == VariantKind::DALI_F;
  b.d = nn::MlpSpec{"d", cat_widths(cfg.data_dim, cfg.d_hidden, 1),
                    {ad::ActKind::leaky_relu, cfg.leaky_alpha},
                    {identity_head ? ad::ActKind::identity : ad::ActKind::sigmoid, 0.0}};
  b.g.validate();
  b.d.validate();

  Rng rg(derive_seed(master_seed, Stream::init_g));
  Rng rd(derive_seed(master_seed, Stream::init_d));
  b.pg = nn::init_params(b.g, rg);
  b.pd = nn::init_params(b.d, rd);

  if (b.has_encoder()) {
    const int post_width = 2 * cfg.latent_dim;  // mu and log-variance columns
    if (cfg.share_features) {
      b.e = nn::MlpSpec{"e", cat_widths(cfg.d_hidden.back(), cfg.e_hidden, post_width),
                        {ad::ActKind::relu, 0.0},
                        {ad::ActKind::identity, 0.0}};
    } else {
      b.e = nn::MlpSpec{"e", cat_widths(cfg.data_dim, cfg.e_trunk_hidden, post_width),
                        {ad::ActKind::relu, 0.0},
                        {ad::ActKind::identity, 0.0}};
    }
    b.e.validate();
    Rng re(derive_seed(master_seed, Stream::init_e));
    b.pe = nn::init_params(b.e, re);
  }
  return b;
}

ad::Var gaussian_nll(ad::Var z, ad::Var mu, ad::Var log_var) {
  const Array& zv = z.value();
  if (!zv.same_shape(mu.value()) || !zv.same_shape(log_var.value()))
    throw DimensionError("gaussian_nll: z" + zv.shape_str() + ", mu" + mu.value().shape_str() +
                         ", log_var" + log_var.value().shape_str() + " must agree");
  for (std::size_t i = 0; i < zv.size(); ++i) {
    if (std::isnan(zv[i]) || std::isnan(mu.value()[i]) || !std::isfinite(log_var.value()[i]))
      throw NumericError("gaussian_nll: non-finite input at flat index " + std::to_string(i));
  }
  const int n = zv.rows();
  ad::Var diff = ad::sub(z, mu);
  ad::Var quad = ad::mul(ad::square(diff), ad::exp_act(ad::negate(log_var)));
  ad::Var per_elem = ad::add_scalar(ad::add(quad, log_var), kLog2Pi);
  ad::Var total = ad::reduce_sum(per_elem, ad::Axis::all);
  return ad::mul_scalar(total, 0.5 / static_cast<double>(n));
}

ad::Var disc_loss_gan(ad::Var rho_q, ad::Var rho_p) {
  ad::Var cq = ad::clamp(rho_q, kProbClamp, 1.0 - kProbClamp);
  ad::Var cp = ad::clamp(rho_p, kProbClamp, 1.0 - kProbClamp);
  ad::Var real_term = ad::negate(ad::reduce_mean(ad::log_act(cq), ad::Axis::all));
  ad::Var fake_term =
      ad::negate(ad::reduce_mean(ad::log_act(ad::add_scalar(ad::negate(cp), 1.0)), ad::Axis::all));
  return ad::add(real_term, fake_term);
}

ad::Var gen_loss_gan(ad::Var rho_p) {
  ad::Var cp = ad::clamp(rho_p, kProbClamp, 1.0 - kProbClamp);
  return ad::negate(ad::reduce_mean(ad::log_act(cp), ad::Axis::all));
}

ad::Var fgan_value(ad::Var d_real, ad::Var d_fake) {
  ad::Var real_term = ad::reduce_mean(d_real, ad::Axis::all);
  ad::Var shifted = ad::clamp(ad::add_scalar(d_fake, -1.0),
                              -std::numeric_limits<double>::infinity(), kFganExpClamp);
  ad::Var fake_term = ad::reduce_mean(ad::exp_act(shifted), ad::Axis::all);
  return ad::sub(real_term, fake_term);
}

ad::Var fgan_gen_loss(ad::Var d_fake) {
  return ad::negate(ad::reduce_mean(d_fake, ad::Axis::all));
}

ad::Var reconstruction_loss(ad::Var l_g, ad::Var nll, double lambda) {
  if (lambda < 0.0) throw ContractError("reconstruction_loss: lambda must be >= 0");
  return ad::add(l_g, ad::mul_scalar(nll, lambda));
}

double prior_log_constant(int d) {
  if (d < 1) throw ContractError("prior_log_constant: d must be >= 1");
  return -static_cast<double>(d) * (1.0 + kLog2Pi) / 2.0;
}

namespace {

void collect_grads(const nn::MlpSpec& spec, const nn::ParamStore& store, const nn::MlpVars& vars,
                   optim::GradMap& out) {
  for (int layer = 0; layer < spec.layer_count(); ++layer) {
    const std::string wn = spec.name + ".w" + std::to_string(layer);
    const std::string bn = spec.name + ".b" + std::to_string(layer);
    if (store.trainable(wn)) out[wn] = vars.w[layer].grad();
    if (store.trainable(bn)) out[bn] = vars.b[layer].grad();
  }
}

[[noreturn]] void numeric_abort(const char* where, const ModelBundle& b, double loss,
                                const Array& z) {
  std::ostringstream os;
  os << "train_step: non-finite loss in " << where << " (variant " << variant_name(b.variant)
     << ", loss=" << loss << ")";
  double zmax = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) zmax = std::max(zmax, std::fabs(z[i]));
  double pmax = 0.0;
  for (const auto& store : {&b.pg, &b.pd, &b.pe}) {
    for (const auto& name : store->order()) {
      const Array& a = store->at(name);
      for (std::size_t i = 0; i < a.size(); ++i) pmax = std::max(pmax, std::fabs(a[i]));
    }
  }
  os << "; |z|max=" << zmax << ", |param|max=" << pmax;
  throw NumericError(os.str());
}

}  // namespace

double disc_substep(ModelBundle& b, const Array& real_batch, const Array& z,
                    optim::Adam& opt_d) {
  Array x_fake = generate(b, z);
  if (!x_fake.all_finite()) numeric_abort("discriminator substep (generated batch)", b, 0.0, z);

  ad::Tape tape;
  nn::MlpVars dv = nn::make_mlp_vars(tape, b.d, b.pd, /*with_grad=*/true);
  ad::Var vreal = tape.leaf(real_batch, false);
  ad::Var vfake = tape.leaf(std::move(x_fake), false);
  nn::ForwardResult fq = nn::mlp_forward(b.d, dv, vreal);
  nn::ForwardResult fp = nn::mlp_forward(b.d, dv, vfake);
  if (!fq.output.value().all_finite() || !fp.output.value().all_finite())
    numeric_abort("discriminator substep (scores)", b, 0.0, z);

  // The reported L_d is always the quantity the discriminator descends
  // (the negated value function under DALI_F).
  ad::Var loss = b.variant == VariantKind::DALI_F
                     ? ad::negate(fgan_value(fq.output, fp.output))
                     : disc_loss_gan(fq.output, fp.output);
  const double l_d = loss.value()[0];
  if (!std::isfinite(l_d)) numeric_abort("discriminator substep", b, l_d, z);

  tape.backward(loss);
  optim::GradMap grads;
  collect_grads(b.d, b.pd, dv, grads);
  opt_d.step(grads);
  return l_d;
}

GeReport gen_enc_substep(ModelBundle& b, const Array& z, optim::Adam& opt_ge,
                         const StepOptions& opt) {
  ad::Tape tape;
  nn::MlpVars gv = nn::make_mlp_vars(tape, b.g, b.pg, true);
  nn::MlpVars dv = nn::make_mlp_vars(tape, b.d, b.pd, false);  // frozen here
  ad::Var vz = tape.leaf(z, false);
  nn::ForwardResult gf = nn::mlp_forward(b.g, gv, vz);
  if (!gf.output.value().all_finite())
    numeric_abort("generator/encoder substep (generated batch)", b, 0.0, z);
  nn::ForwardResult df = nn::mlp_forward(b.d, dv, gf.output);
  if (!df.output.value().all_finite())
    numeric_abort("generator/encoder substep (scores)", b, 0.0, z);

  ad::Var l_g = b.variant == VariantKind::DALI_F ? fgan_gen_loss(df.output)
                                                 : gen_loss_gan(df.output);

  GeReport rep;
  ad::Var l_rec = l_g;
  nn::MlpVars ev;
  if (b.has_encoder()) {
    ad::Var e_in = b.share_features ? df.hiddens.back() : gf.output;
    ev = nn::make_mlp_vars(tape, b.e, b.pe, true);
    nn::ForwardResult ef = nn::mlp_forward(b.e, ev, e_in);
    ad::Var mu = ad::slice_cols(ef.output, 0, b.latent_dim);
    ad::Var log_var;
    if (b.variant == VariantKind::DALI_L2) {
      log_var = tape.leaf(Array::zeros(z.rows(), b.latent_dim), false);
    } else {
      log_var = ad::clamp(ad::slice_cols(ef.output, b.latent_dim, 2 * b.latent_dim),
                          -kLogVarClamp, kLogVarClamp);
    }
    ad::Var nll = gaussian_nll(vz, mu, log_var);
    l_rec = reconstruction_loss(l_g, nll, opt.lambda);
    rep.mean_nll = nll.value()[0];
    rep.L_e = opt.lambda * rep.mean_nll;
  }
  rep.L_g = l_g.value()[0];
  rep.L_rec = l_rec.value()[0];
  if (!std::isfinite(rep.L_rec)) numeric_abort("generator/encoder substep", b, rep.L_rec, z);

  tape.backward(l_rec);
  optim::GradMap grads;
  collect_grads(b.g, b.pg, gv, grads);
  if (b.has_encoder()) collect_grads(b.e, b.pe, ev, grads);
  opt_ge.step(grads);
  return rep;
}

StepReport train_step(ModelBundle& b, const Array& real_batch, Rng& latent_rng,
                      optim::Adam& opt_d, optim::Adam& opt_ge, const StepOptions& opt) {
  if (real_batch.rows() < 2) throw ContractError("train_step: need a batch of n >= 2");
  if (real_batch.cols() != b.data_dim)
    throw DimensionError("train_step: batch " + real_batch.shape_str() + " vs data_dim " +
                         std::to_string(b.data_dim));
  if (opt.d_steps < 1) throw ContractError("train_step: d_steps must be >= 1");

  const int n = real_batch.rows();
  Array z = latent_rng.normal_array(n, b.latent_dim);

  StepReport rep;
  rep.L_d = disc_substep(b, real_batch, z, opt_d);
  for (int extra = 1; extra < opt.d_steps; ++extra) {
    Array z_extra = latent_rng.normal_array(n, b.latent_dim);
    rep.L_d = disc_substep(b, real_batch, z_extra, opt_d);
  }

  if (opt.redraw_latent) z = latent_rng.normal_array(n, b.latent_dim);
  const GeReport ge = gen_enc_substep(b, z, opt_ge, opt);
  rep.L_g = ge.L_g;
  rep.L_e = ge.L_e;
  rep.L_rec = ge.L_rec;
  rep.mean_nll = ge.mean_nll;
  return rep;
}

GaussianPosterior encode(const ModelBundle& b, const Array& x) {
  if (!b.has_encoder())
    throw UnsupportedError("encode: the GAN variant trains no encoder");
  Array e_out;
  if (b.share_features) {
    std::vector<Array> hiddens;
    nn::mlp_eval(b.d, b.pd, x, &hiddens);
    e_out = nn::mlp_eval(b.e, b.pe, hiddens.back());
  } else {
    e_out = nn::mlp_eval(b.e, b.pe, x);
  }
  GaussianPosterior p{Array(x.rows(), b.latent_dim), Array(x.rows(), b.latent_dim)};
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < b.latent_dim; ++j) {
      p.mu.at(i, j) = e_out.at(i, j);
      if (b.variant == VariantKind::DALI_L2) {
        p.log_var.at(i, j) = 0.0;
      } else {
        const double lv = e_out.at(i, b.latent_dim + j);
        p.log_var.at(i, j) = lv < -kLogVarClamp ? -kLogVarClamp
                                                : (lv > kLogVarClamp ? kLogVarClamp : lv);
      }
    }
  }
  return p;
}

Array infer_latent(const ModelBundle& b, const Array& x) { return encode(b, x).mu; }

Array generate(const ModelBundle& b, const Array& z) { return nn::mlp_eval(b.g, b.pg, z); }

Array reconstruct(const ModelBundle& b, const Array& x) {
  return generate(b, infer_latent(b, x));
}

Array sample_posterior(const ModelBundle& b, const Array& x, int k, Rng& rng) {
  if (k < 1) throw ContractError("sample_posterior: k must be >= 1");
  if (x.rows() != 1) throw ContractError("sample_posterior: x must be a single point");
  const GaussianPosterior p = encode(b, x);
  Array zs(k, b.latent_dim);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < b.latent_dim; ++j) {
      const double sigma = std::exp(0.5 * p.log_var.at(0, j));
      zs.at(i, j) = p.mu.at(0, j) + sigma * rng.normal();
    }
  }
  return generate(b, zs);
}

}  // namespace dali::core
