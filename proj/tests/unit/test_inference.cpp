#include <cmath>

#include "dali/dali_core.hpp"
#include "dali/errors.hpp"
#include "dali/rng.hpp"
#include "doctest.h"

using namespace dali;
using namespace dali::core;

namespace {

BundleConfig small_cfg(VariantKind v = VariantKind::DALI) {
  BundleConfig cfg;
  cfg.variant = v;
  cfg.g_hidden = {8};
  cfg.d_hidden = {8, 8};
  cfg.e_hidden = {6};
  return cfg;
}

void zero_store(nn::ParamStore& s) {
  for (const auto& name : s.order()) s.at(name).fill(0.0);
}

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("GAN variant refuses inference") {
  ModelBundle b = make_bundle(small_cfg(VariantKind::GAN), 1);
  const Array x = Array::from_rows({{0.1, 0.2}});
  CHECK_THROWS_AS(infer_latent(b, x), UnsupportedError);
  CHECK_THROWS_AS(reconstruct(b, x), UnsupportedError);
  Rng rng(1);
  CHECK_THROWS_AS(sample_posterior(b, x, 4, rng), UnsupportedError);
}

TEST_CASE("zeroed encoder head infers mu = 0 everywhere") {
  ModelBundle b = make_bundle(small_cfg(), 2);
  zero_store(b.pe);
  Rng rng(3);
  const Array x = rng.normal_array(7, 2);
  const Array mu = infer_latent(b, x);
  for (std::size_t i = 0; i < mu.size(); ++i) CHECK(mu[i] == 0.0);
}

TEST_CASE("inference is deterministic") {
  ModelBundle b = make_bundle(small_cfg(), 4);
  Rng rng(5);
  const Array x = rng.normal_array(5, 2);
  CHECK(infer_latent(b, x) == infer_latent(b, x));
  CHECK(reconstruct(b, x) == reconstruct(b, x));
}

TEST_CASE("reconstruct composes G with mu") {
  ModelBundle b = make_bundle(small_cfg(), 6);
  Rng rng(7);
  const Array x = rng.normal_array(3, 2);
  const Array mu = infer_latent(b, x);
  CHECK(reconstruct(b, x) == generate(b, mu));
}

TEST_CASE("degenerate posterior collapses sampling onto the reconstruction") {
  // zero generator weights: G is the constant bias point, so any posterior
  // draw maps to reconstruct(x); the log-variance floor makes the z spread
  // tiny as well.
  ModelBundle b = make_bundle(small_cfg(), 8);
  zero_store(b.pg);
  b.pg.at("g.b1").at(0, 0) = 0.75;
  b.pg.at("g.b1").at(0, 1) = -0.25;
  // push the encoder's log-variance columns to the clamp floor
  zero_store(b.pe);
  b.pe.at("e.b1").at(0, 2) = -1000.0;
  b.pe.at("e.b1").at(0, 3) = -1000.0;

  const Array x = Array::from_rows({{0.4, 0.6}});
  const GaussianPosterior post = encode(b, x);
  CHECK(post.log_var.at(0, 0) == -kLogVarClamp);
  CHECK(post.log_var.at(0, 1) == -kLogVarClamp);

  Rng rng(11);
  const Array samples = sample_posterior(b, x, 16, rng);
  const Array rec = reconstruct(b, x);
  double max_dev = 0.0;
  for (int i = 0; i < samples.rows(); ++i) {
    for (int j = 0; j < samples.cols(); ++j)
      max_dev = std::max(max_dev, std::fabs(samples.at(i, j) - rec.at(0, j)));
  }
  CHECK(max_dev < 1e-3);
}

TEST_CASE("posterior sampling is seed-deterministic") {
  ModelBundle b = make_bundle(small_cfg(), 10);
  const Array x = Array::from_rows({{0.1, -0.3}});
  Rng r1(42), r2(42);
  CHECK(sample_posterior(b, x, 9, r1) == sample_posterior(b, x, 9, r2));
  Rng r3(43);
  CHECK(!(sample_posterior(b, x, 9, r3) == sample_posterior(b, x, 9, r1)));
}

TEST_CASE("posterior draw mean concentrates on mu") {
  // identity generator over the working range: w0 = I, b0 = C >> 0 shifts
  // past the relu kink, w1 = I, b1 = -C shifts back.
  BundleConfig cfg = small_cfg();
  cfg.g_hidden = {2};
  ModelBundle b = make_bundle(cfg, 12);
  const double shift = 1000.0;
  auto& w0 = b.pg.at("g.w0");
  w0.fill(0.0);
  w0.at(0, 0) = 1.0;
  w0.at(1, 1) = 1.0;
  b.pg.at("g.b0").fill(shift);
  auto& w1 = b.pg.at("g.w1");
  w1.fill(0.0);
  w1.at(0, 0) = 1.0;
  w1.at(1, 1) = 1.0;
  b.pg.at("g.b1").fill(-shift);

  // fixed posterior: mu = (0.3, -0.2), sigma = 0.5 per dimension
  zero_store(b.pe);
  b.pe.at("e.b1").at(0, 0) = 0.3;
  b.pe.at("e.b1").at(0, 1) = -0.2;
  b.pe.at("e.b1").at(0, 2) = 2.0 * std::log(0.5);
  b.pe.at("e.b1").at(0, 3) = 2.0 * std::log(0.5);

  const Array x = Array::from_rows({{1.0, 1.0}});
  const int k = 10000;
  Rng rng(13);
  const Array draws = sample_posterior(b, x, k, rng);
  double mean0 = 0.0, mean1 = 0.0;
  for (int i = 0; i < k; ++i) {
    mean0 += draws.at(i, 0);
    mean1 += draws.at(i, 1);
  }
  mean0 /= k;
  mean1 /= k;
  const double se = 0.5 / std::sqrt(static_cast<double>(k));
  CHECK(std::fabs(mean0 - 0.3) <= 4.0 * se);
  CHECK(std::fabs(mean1 + 0.2) <= 4.0 * se);
}

TEST_CASE("sample_posterior contract") {
  ModelBundle b = make_bundle(small_cfg(), 14);
  Rng rng(1);
  CHECK_THROWS_AS(sample_posterior(b, Array::from_rows({{0.0, 0.0}}), 0, rng), ContractError);
  CHECK_THROWS_AS(sample_posterior(b, Array(2, 2), 3, rng), ContractError);
}

}  // TEST_SUITE
