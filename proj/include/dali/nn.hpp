#pragma once

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "dali/array.hpp"
#include "dali/autodiff.hpp"
#include "dali/rng.hpp"

namespace dali::nn {

/// Fully connected network description. widths[0] is the input width,
/// widths.back() the output width; hidden activation applies after every
/// layer except the last, output activation after the last.
struct MlpSpec {
  std::string name;
  std::vector<int> widths;
  ad::Activation hidden;
  ad::Activation output;  // identity allowed

  int layer_count() const { return static_cast<int>(widths.size()) - 1; }
  int input_width() const { return widths.front(); }
  int output_width() const { return widths.back(); }
  void validate() const;  // throws ContractError
};

/// Ordered named parameter storage with a per-entry trainable mask.
/// Non-trainable entries never change under optimizer steps.
class ParamStore {
 public:
  void add(const std::string& name, Array value, bool trainable = true);
  bool has(const std::string& name) const { return entries_.count(name) != 0; }
  Array& at(const std::string& name);
  const Array& at(const std::string& name) const;
  bool trainable(const std::string& name) const;
  void set_trainable(const std::string& name, bool t);
  const std::vector<std::string>& order() const { return order_; }
  std::size_t size() const { return order_.size(); }

  /// Sum over entries of the number of scalars.
  std::size_t scalar_count() const;

 private:
  std::vector<std::string> order_;
  std::unordered_map<std::string, Array> entries_;
  std::unordered_map<std::string, bool> trainable_;
};

/// Glorot-uniform weights (limit sqrt(6/(fan_in+fan_out))), zero biases.
/// Entry names: "<spec.name>.w<i>" / "<spec.name>.b<i>". Fully determined by
/// the generator state.
ParamStore init_params(const MlpSpec& spec, Rng& rng);

/// A spec's parameters materialized as tape leaves for one forward/backward.
struct MlpVars {
  std::vector<ad::Var> w, b;
};

/// with_grad gates requires_grad; an entry additionally needs its trainable
/// mask set for gradients to accumulate.
MlpVars make_mlp_vars(ad::Tape& tape, const MlpSpec& spec, const ParamStore& params,
                      bool with_grad);

struct ForwardResult {
  ad::Var output;
  std::vector<ad::Var> hiddens;  // post-activation, one per hidden layer
};

ForwardResult mlp_forward(const MlpSpec& spec, const MlpVars& vars, ad::Var batch);

/// Value-only forward pass (no tape). When hiddens is non-null it receives the
/// post-activation hidden arrays in layer order.
Array mlp_eval(const MlpSpec& spec, const ParamStore& params, const Array& batch,
               std::vector<Array>* hiddens = nullptr);

/// Text (de)serialization of a store: one "entry <name> <trainable> <rows>
/// <cols>" line followed by hexfloat values, one row per line.
void write_entries(std::ostream& os, const ParamStore& store);
ParamStore read_entries(std::istream& is, int entry_count);

}  // namespace dali::nn
