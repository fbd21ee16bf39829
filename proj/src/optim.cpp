#include "dali/optim.hpp"

#include <cmath>

#include "dali/errors.hpp"
#include "dali/kernels.hpp"

namespace dali::optim {

Adam::Adam(AdamConfig cfg, std::vector<nn::ParamStore*> stores)
    : cfg_(cfg), stores_(std::move(stores)) {
  if (!(cfg_.lr >= 0.0)) throw ContractError("adam: lr must be >= 0");
  if (cfg_.beta1 < 0.0 || cfg_.beta1 >= 1.0 || cfg_.beta2 < 0.0 || cfg_.beta2 >= 1.0)
    throw ContractError("adam: betas must lie in [0, 1)");
  if (!(cfg_.eps > 0.0)) throw ContractError("adam: eps must be > 0");
  for (nn::ParamStore* s : stores_) {
    for (const auto& name : s->order()) {
      const Array& p = s->at(name);
      m_.emplace(name, Array::zeros(p.rows(), p.cols()));
      v_.emplace(name, Array::zeros(p.rows(), p.cols()));
    }
  }
}

double Adam::lr_at(std::int64_t t) const {
  switch (cfg_.decay) {
    case DecayKind::inverse_time:
      return cfg_.lr / (1.0 + cfg_.decay_k * static_cast<double>(t));
    case DecayKind::none:
    default:
      return cfg_.lr;
  }
}

void Adam::step(const GradMap& grads) {
  // Validate coverage before mutating anything.
  std::size_t expected = 0;
  for (nn::ParamStore* s : stores_) {
    for (const auto& name : s->order()) {
      if (!s->trainable(name)) continue;
      ++expected;
      auto it = grads.find(name);
      if (it == grads.end())
        throw ContractError("adam: missing gradient for trainable entry '" + name + "'");
      if (!it->second.same_shape(s->at(name)))
        throw ContractError("adam: gradient shape " + it->second.shape_str() +
                            " != param shape " + s->at(name).shape_str() + " for '" + name + "'");
    }
  }
  if (grads.size() != expected)
    throw ContractError("adam: gradient map has " + std::to_string(grads.size()) +
                        " entries, expected exactly " + std::to_string(expected));

  ++t_;
  const double lr = lr_at(t_);
  const double bias1_inv = 1.0 / (1.0 - std::pow(cfg_.beta1, static_cast<double>(t_)));
  const double bias2_inv = 1.0 / (1.0 - std::pow(cfg_.beta2, static_cast<double>(t_)));

  double clip_scale = 1.0;
  if (cfg_.grad_clip > 0.0) {
    double sq = 0.0;
    for (const auto& [name, g] : grads) {
      for (std::size_t i = 0; i < g.size(); ++i) sq += g[i] * g[i];
    }
    const double norm = std::sqrt(sq);
    if (norm > cfg_.grad_clip) clip_scale = cfg_.grad_clip / norm;
  }

  for (nn::ParamStore* s : stores_) {
    for (const auto& name : s->order()) {
      if (!s->trainable(name)) continue;
      Array& p = s->at(name);
      Array& m = m_.at(name);
      Array& v = v_.at(name);
      const Array& g0 = grads.at(name);
      if (clip_scale != 1.0) {
        Array g = g0;
        kernels::scale(g.data(), clip_scale, g.size());
        kernels::adam_update(p.data(), m.data(), v.data(), g.data(), p.size(), cfg_.beta1,
                             cfg_.beta2, bias1_inv, bias2_inv, lr, cfg_.eps);
      } else {
        kernels::adam_update(p.data(), m.data(), v.data(), g0.data(), p.size(), cfg_.beta1,
                             cfg_.beta2, bias1_inv, bias2_inv, lr, cfg_.eps);
      }
    }
  }
}

}  // namespace dali::optim
