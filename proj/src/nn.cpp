#include "dali/nn.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

#include "dali/errors.hpp"
#include "dali/kernels.hpp"

namespace dali::nn {

void MlpSpec::validate() const {
  if (widths.size() < 2)
    throw ContractError("mlp '" + name + "': need at least input and output widths");
  for (int w : widths) {
    if (w < 1) throw ContractError("mlp '" + name + "': widths must be >= 1");
  }
}

void ParamStore::add(const std::string& name, Array value, bool trainable) {
  if (has(name)) throw ContractError("param store: duplicate entry '" + name + "'");
  order_.push_back(name);
  entries_.emplace(name, std::move(value));
  trainable_.emplace(name, trainable);
}

Array& ParamStore::at(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ContractError("param store: no entry '" + name + "'");
  return it->second;
}

const Array& ParamStore::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ContractError("param store: no entry '" + name + "'");
  return it->second;
}

bool ParamStore::trainable(const std::string& name) const {
  auto it = trainable_.find(name);
  if (it == trainable_.end()) throw ContractError("param store: no entry '" + name + "'");
  return it->second;
}

void ParamStore::set_trainable(const std::string& name, bool t) {
  if (!has(name)) throw ContractError("param store: no entry '" + name + "'");
  trainable_[name] = t;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& name : order_) n += entries_.at(name).size();
  return n;
}

ParamStore init_params(const MlpSpec& spec, Rng& rng) {
  spec.validate();
  ParamStore store;
  for (int layer = 0; layer < spec.layer_count(); ++layer) {
    const int fan_in = spec.widths[layer];
    const int fan_out = spec.widths[layer + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Array w(fan_in, fan_out);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-limit, limit);
    store.add(spec.name + ".w" + std::to_string(layer), std::move(w));
    store.add(spec.name + ".b" + std::to_string(layer), Array::zeros(1, fan_out));
  }
  return store;
}

MlpVars make_mlp_vars(ad::Tape& tape, const MlpSpec& spec, const ParamStore& params,
                      bool with_grad) {
  MlpVars vars;
  for (int layer = 0; layer < spec.layer_count(); ++layer) {
    const std::string wi = spec.name + ".w" + std::to_string(layer);
    const std::string bi = spec.name + ".b" + std::to_string(layer);
    vars.w.push_back(tape.leaf(params.at(wi), with_grad && params.trainable(wi)));
    vars.b.push_back(tape.leaf(params.at(bi), with_grad && params.trainable(bi)));
  }
  return vars;
}

ForwardResult mlp_forward(const MlpSpec& spec, const MlpVars& vars, ad::Var batch) {
  if (batch.value().cols() != spec.input_width())
    throw DimensionError("mlp '" + spec.name + "': batch width " +
                         std::to_string(batch.value().cols()) + " != input width " +
                         std::to_string(spec.input_width()));
  ForwardResult r;
  ad::Var h = batch;
  const int layers = spec.layer_count();
  for (int layer = 0; layer < layers; ++layer) {
    h = ad::affine(h, vars.w[layer], vars.b[layer]);
    if (layer + 1 < layers) {
      h = ad::activation(h, spec.hidden);
      r.hiddens.push_back(h);
    } else {
      h = ad::activation(h, spec.output);
    }
  }
  r.output = h;
  return r;
}

Array mlp_eval(const MlpSpec& spec, const ParamStore& params, const Array& batch,
               std::vector<Array>* hiddens) {
  if (batch.cols() != spec.input_width())
    throw DimensionError("mlp '" + spec.name + "': batch width " +
                         std::to_string(batch.cols()) + " != input width " +
                         std::to_string(spec.input_width()));
  if (hiddens) hiddens->clear();
  Array h = batch;
  const int layers = spec.layer_count();
  for (int layer = 0; layer < layers; ++layer) {
    const Array& w = params.at(spec.name + ".w" + std::to_string(layer));
    const Array& b = params.at(spec.name + ".b" + std::to_string(layer));
    Array out = Array::uninit(h.rows(), w.cols());
    kernels::matmul(h.data(), w.data(), out.data(), h.rows(), h.cols(), w.cols());
    kernels::add_row_vector(out.data(), b.data(), out.rows(), out.cols());
    const ad::Activation act = layer + 1 < layers ? spec.hidden : spec.output;
    switch (act.kind) {
      case ad::ActKind::identity:
        break;
      case ad::ActKind::relu:
        kernels::relu_fwd(out.data(), out.data(), out.size());
        break;
      case ad::ActKind::leaky_relu:
        kernels::leaky_relu_fwd(out.data(), out.data(), act.alpha, out.size());
        break;
      case ad::ActKind::tanh:
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
        break;
      case ad::ActKind::sigmoid:
        for (std::size_t i = 0; i < out.size(); ++i) {
          const double v = out[i];
          out[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
        }
        break;
      case ad::ActKind::exp:
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(out[i]);
        break;
      case ad::ActKind::log:
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(out[i]);
        break;
      case ad::ActKind::square:
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] * out[i];
        break;
      case ad::ActKind::negate:
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = -out[i];
        break;
    }
    if (hiddens && layer + 1 < layers) hiddens->push_back(out);
    h = std::move(out);
  }
  return h;
}

namespace {

void write_hex(std::ostream& os, double v) {
  char buf[48];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
  os.write(buf, res.ptr - buf);
}

double read_hex(const std::string& tok) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v, std::chars_format::hex);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw IoError("checkpoint: bad value token '" + tok + "'");
  return v;
}

}  // namespace

void write_entries(std::ostream& os, const ParamStore& store) {
  for (const auto& name : store.order()) {
    const Array& a = store.at(name);
    os << "entry " << name << ' ' << (store.trainable(name) ? 1 : 0) << ' ' << a.rows() << ' '
       << a.cols() << '\n';
    for (int i = 0; i < a.rows(); ++i) {
      for (int j = 0; j < a.cols(); ++j) {
        if (j) os << ' ';
        write_hex(os, a.at(i, j));
      }
      os << '\n';
    }
  }
}

ParamStore read_entries(std::istream& is, int entry_count) {
  ParamStore store;
  std::string line;
  for (int e = 0; e < entry_count; ++e) {
    if (!std::getline(is, line)) throw IoError("checkpoint: truncated entry header");
    std::istringstream hdr(line);
    std::string tag, name;
    int trainable = 0, rows = 0, cols = 0;
    hdr >> tag >> name >> trainable >> rows >> cols;
    if (tag != "entry" || name.empty() || rows < 0 || cols < 0 || hdr.fail())
      throw IoError("checkpoint: bad entry header '" + line + "'");
    Array a(rows, cols);
    for (int i = 0; i < rows; ++i) {
      if (!std::getline(is, line)) throw IoError("checkpoint: truncated values for '" + name + "'");
      std::istringstream vals(line);
      std::string tok;
      for (int j = 0; j < cols; ++j) {
        if (!(vals >> tok)) throw IoError("checkpoint: short row in '" + name + "'");
        a.at(i, j) = read_hex(tok);
      }
    }
    store.add(name, std::move(a), trainable != 0);
  }
  return store;
}

}  // namespace dali::nn
