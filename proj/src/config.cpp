#include <fstream>
#include <set>
#include <sstream>

#include "dali/errors.hpp"
#include "dali/runner.hpp"
#include "json.hpp"

namespace dali::run {

namespace {

using json = nlohmann::ordered_json;

const char* decay_name(optim::DecayKind d) {
  return d == optim::DecayKind::inverse_time ? "inverse_time" : "none";
}

optim::DecayKind parse_decay(const std::string& s) {
  if (s == "none") return optim::DecayKind::none;
  if (s == "inverse_time") return optim::DecayKind::inverse_time;
  throw ConfigError("config: decay must be 'none' or 'inverse_time', got '" + s + "'");
}

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: bad value type for key '" + key + "'");
  }
}

std::vector<int> get_int_list(const json& j, const std::string& key) {
  if (!j.is_array()) throw ConfigError("config: key '" + key + "' must be a list of integers");
  std::vector<int> out;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw ConfigError("config: key '" + key + "' must hold integers");
    out.push_back(v.get<int>());
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (latent_dim < 1) throw ConfigError("config: latent_dim must be >= 1");
  if (lambda && !(*lambda > 0.0)) throw ConfigError("config: lambda must be > 0");
  if (batch_size < 2) throw ConfigError("config: batch_size must be >= 2");
  if (total_steps < 0) throw ConfigError("config: total_steps must be >= 0");
  if (eval_every < 1) throw ConfigError("config: eval_every must be >= 1");
  if (total_steps > 0 && total_steps < eval_every)
    throw ConfigError("config: total_steps must be >= eval_every");
  if (seeds.empty()) throw ConfigError("config: seeds must be non-empty");
  {
    std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
    if (unique.size() != seeds.size())
      throw ConfigError("config: seeds must be distinct (per-seed output directories collide)");
  }
  if (!(lr > 0.0)) throw ConfigError("config: lr must be > 0");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw ConfigError("config: betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("config: eps must be > 0");
  if (decay_k < 0.0) throw ConfigError("config: decay_k must be >= 0");
  if (grad_clip < 0.0) throw ConfigError("config: grad_clip must be >= 0");
  if (g_hidden.empty() || d_hidden.empty())
    throw ConfigError("config: g_hidden and d_hidden must be non-empty");
  for (const auto* widths : {&g_hidden, &d_hidden, &e_hidden, &e_trunk_hidden}) {
    for (int w : *widths) {
      if (w < 1) throw ConfigError("config: layer widths must be >= 1");
    }
  }
  if (!(leaky_alpha >= 0.0 && leaky_alpha < 1.0))
    throw ConfigError("config: leaky_alpha must lie in [0, 1)");
  if (d_steps < 1) throw ConfigError("config: d_steps must be >= 1");
  if (grid_side < 1) throw ConfigError("config: grid_side must be >= 1");
  if (!(spacing > 0.0)) throw ConfigError("config: spacing must be > 0");
  if (!(data_sigma > 0.0)) throw ConfigError("config: data_sigma must be > 0");
  if (eval_samples < 1) throw ConfigError("config: eval_samples must be >= 1");
  if (eval_test < 1) throw ConfigError("config: eval_test must be >= 1");
  if (output_dir.empty()) throw ConfigError("config: output_dir must be non-empty");
}

core::BundleConfig TrainConfig::bundle_config() const {
  core::BundleConfig bc;
  bc.variant = variant;
  bc.latent_dim = latent_dim;
  bc.data_dim = 2;
  bc.g_hidden = g_hidden;
  bc.d_hidden = d_hidden;
  bc.e_hidden = e_hidden;
  bc.e_trunk_hidden = e_trunk_hidden;
  bc.leaky_alpha = leaky_alpha;
  bc.share_features = share_features;
  return bc;
}

synth::GridMixture TrainConfig::mixture() const {
  return synth::make_grid(grid_side, spacing, data_sigma);
}

TrainConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: document must be a JSON object");

  TrainConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "variant") cfg.variant = core::parse_variant(get_as<std::string>(value, key));
    else if (key == "latent_dim") cfg.latent_dim = get_as<int>(value, key);
    else if (key == "lambda") {
      if (value.is_null()) cfg.lambda.reset();
      else cfg.lambda = get_as<double>(value, key);
    }
    else if (key == "batch_size") cfg.batch_size = get_as<int>(value, key);
    else if (key == "total_steps") cfg.total_steps = get_as<std::int64_t>(value, key);
    else if (key == "eval_every") cfg.eval_every = get_as<std::int64_t>(value, key);
    else if (key == "seeds") cfg.seeds = get_as<std::vector<std::uint64_t>>(value, key);
    else if (key == "lr") cfg.lr = get_as<double>(value, key);
    else if (key == "beta1") cfg.beta1 = get_as<double>(value, key);
    else if (key == "beta2") cfg.beta2 = get_as<double>(value, key);
    else if (key == "eps") cfg.eps = get_as<double>(value, key);
    else if (key == "decay") cfg.decay = parse_decay(get_as<std::string>(value, key));
    else if (key == "decay_k") cfg.decay_k = get_as<double>(value, key);
    else if (key == "grad_clip") cfg.grad_clip = get_as<double>(value, key);
    else if (key == "g_hidden") cfg.g_hidden = get_int_list(value, key);
    else if (key == "d_hidden") cfg.d_hidden = get_int_list(value, key);
    else if (key == "e_hidden") cfg.e_hidden = get_int_list(value, key);
    else if (key == "e_trunk_hidden") cfg.e_trunk_hidden = get_int_list(value, key);
    else if (key == "leaky_alpha") cfg.leaky_alpha = get_as<double>(value, key);
    else if (key == "share_features") cfg.share_features = get_as<bool>(value, key);
    else if (key == "redraw_latent") cfg.redraw_latent = get_as<bool>(value, key);
    else if (key == "d_steps") cfg.d_steps = get_as<int>(value, key);
    else if (key == "grid_side") cfg.grid_side = get_as<int>(value, key);
    else if (key == "spacing") cfg.spacing = get_as<double>(value, key);
    else if (key == "data_sigma") cfg.data_sigma = get_as<double>(value, key);
    else if (key == "eval_samples") cfg.eval_samples = get_as<int>(value, key);
    else if (key == "eval_test") cfg.eval_test = get_as<int>(value, key);
    else if (key == "output_dir") cfg.output_dir = get_as<std::string>(value, key);
    else throw ConfigError("config: unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string resolved_config_text(const TrainConfig& cfg) {
  json j;
  j["variant"] = core::variant_name(cfg.variant);
  j["latent_dim"] = cfg.latent_dim;
  j["lambda"] = cfg.resolved_lambda();
  j["batch_size"] = cfg.batch_size;
  j["total_steps"] = cfg.total_steps;
  j["eval_every"] = cfg.eval_every;
  j["seeds"] = cfg.seeds;
  j["lr"] = cfg.lr;
  j["beta1"] = cfg.beta1;
  j["beta2"] = cfg.beta2;
  j["eps"] = cfg.eps;
  j["decay"] = decay_name(cfg.decay);
  j["decay_k"] = cfg.decay_k;
  j["grad_clip"] = cfg.grad_clip;
  j["g_hidden"] = cfg.g_hidden;
  j["d_hidden"] = cfg.d_hidden;
  j["e_hidden"] = cfg.e_hidden;
  j["e_trunk_hidden"] = cfg.e_trunk_hidden;
  j["leaky_alpha"] = cfg.leaky_alpha;
  j["share_features"] = cfg.share_features;
  j["redraw_latent"] = cfg.redraw_latent;
  j["d_steps"] = cfg.d_steps;
  j["grid_side"] = cfg.grid_side;
  j["spacing"] = cfg.spacing;
  j["data_sigma"] = cfg.data_sigma;
  j["eval_samples"] = cfg.eval_samples;
  j["eval_test"] = cfg.eval_test;
  j["output_dir"] = cfg.output_dir;
  return j.dump(2) + "\n";
}

}  // namespace dali::run
