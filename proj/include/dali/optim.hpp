#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dali/array.hpp"
#include "dali/nn.hpp"

namespace dali::optim {

enum class DecayKind { none, inverse_time };

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.5;  // GAN-training convention
  double beta2 = 0.999;
  double eps = 1e-8;
  DecayKind decay = DecayKind::none;
  double decay_k = 0.0;
  double grad_clip = 0.0;  // global-norm clip; 0 disables
};

using GradMap = std::map<std::string, Array>;

/// Adam with bias correction over the trainable entries of one or more
/// bound stores. First/second moments are zero-initialized and mirror each
/// parameter's shape. Owned by a single training run.
class Adam {
 public:
  Adam(AdamConfig cfg, std::vector<nn::ParamStore*> stores);

  /// One update. grads must cover exactly the trainable entries of the bound
  /// stores (ContractError otherwise). Non-trainable entries are untouched.
  void step(const GradMap& grads);

  /// Effective learning rate at step t >= 1.
  double lr_at(std::int64_t t) const;

  std::int64_t t() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  const Array& moment1(const std::string& name) const { return m_.at(name); }
  const Array& moment2(const std::string& name) const { return v_.at(name); }

 private:
  AdamConfig cfg_;
  std::vector<nn::ParamStore*> stores_;
  std::map<std::string, Array> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace dali::optim
