#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "dali/errors.hpp"
#include "dali/runner.hpp"

namespace dali::run {

namespace {

constexpr const char* kMagic = "dali_checkpoint";
constexpr int kVersion = 1;

std::string hex_double(double v) {
  char buf[48];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
  return std::string(buf, res.ptr);
}

double parse_hex_double(const std::string& tok, const char* what) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v, std::chars_format::hex);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw IoError(std::string("checkpoint: bad ") + what + " token '" + tok + "'");
  return v;
}

int store_entry_count(const nn::ParamStore& s) { return static_cast<int>(s.size()); }

void check_store_against_spec(const nn::MlpSpec& spec, const nn::ParamStore& store) {
  for (int layer = 0; layer < spec.layer_count(); ++layer) {
    for (const char* kind : {"w", "b"}) {
      const std::string name = spec.name + "." + kind + std::to_string(layer);
      if (!store.has(name))
        throw IoError("checkpoint: missing entry '" + name + "' for configured architecture");
      const Array& a = store.at(name);
      const int rows = kind[0] == 'w' ? spec.widths[layer] : 1;
      const int cols = spec.widths[layer + 1];
      if (a.rows() != rows || a.cols() != cols)
        throw IoError("checkpoint: entry '" + name + "' has shape " + a.shape_str() +
                      ", architecture expects [" + std::to_string(rows) + "x" +
                      std::to_string(cols) + "]");
    }
  }
  if (static_cast<int>(store.size()) != 2 * spec.layer_count())
    throw IoError("checkpoint: store '" + spec.name + "' has unexpected extra entries");
}

}  // namespace

void save_checkpoint(const std::string& path, const core::ModelBundle& bundle,
                     const CheckpointMeta& meta) {
  std::ofstream os(path);
  if (!os) throw IoError("checkpoint: cannot open '" + path + "' for writing");
  os << kMagic << ' ' << kVersion << '\n';
  os << "variant " << core::variant_name(bundle.variant) << '\n';
  os << "latent_dim " << bundle.latent_dim << '\n';
  os << "step " << meta.step << '\n';
  os << "seed " << meta.seed << '\n';
  os << "losses " << hex_double(meta.L_d) << ' ' << hex_double(meta.L_g) << ' '
     << hex_double(meta.L_e) << ' ' << hex_double(meta.L_rec) << '\n';
  const int total = store_entry_count(bundle.pg) + store_entry_count(bundle.pd) +
                    (bundle.has_encoder() ? store_entry_count(bundle.pe) : 0);
  os << "entries " << total << '\n';
  nn::write_entries(os, bundle.pg);
  nn::write_entries(os, bundle.pd);
  if (bundle.has_encoder()) nn::write_entries(os, bundle.pe);
  if (!os) throw IoError("checkpoint: write failed for '" + path + "'");
}

LoadedCheckpoint load_checkpoint(const std::string& path, const TrainConfig& cfg) {
  std::ifstream is(path);
  if (!is) throw IoError("checkpoint: cannot open '" + path + "'");

  std::string line, tag;
  LoadedCheckpoint out;

  auto next_line = [&](const char* what) {
    if (!std::getline(is, line)) throw IoError(std::string("checkpoint: truncated before ") + what);
    return std::istringstream(line);
  };

  {
    auto ss = next_line("magic");
    int version = 0;
    ss >> tag >> version;
    if (tag != kMagic || version != kVersion)
      throw IoError("checkpoint: bad header in '" + path + "'");
  }
  {
    auto ss = next_line("variant");
    std::string v;
    ss >> tag >> v;
    if (tag != "variant") throw IoError("checkpoint: expected variant line");
    out.meta.variant = core::parse_variant(v);
  }
  {
    auto ss = next_line("latent_dim");
    ss >> tag >> out.meta.latent_dim;
    if (tag != "latent_dim" || ss.fail()) throw IoError("checkpoint: expected latent_dim line");
  }
  {
    auto ss = next_line("step");
    ss >> tag >> out.meta.step;
    if (tag != "step" || ss.fail()) throw IoError("checkpoint: expected step line");
  }
  {
    auto ss = next_line("seed");
    ss >> tag >> out.meta.seed;
    if (tag != "seed" || ss.fail()) throw IoError("checkpoint: expected seed line");
  }
  {
    auto ss = next_line("losses");
    std::string a, b, c, d;
    ss >> tag >> a >> b >> c >> d;
    if (tag != "losses" || ss.fail()) throw IoError("checkpoint: expected losses line");
    out.meta.L_d = parse_hex_double(a, "loss");
    out.meta.L_g = parse_hex_double(b, "loss");
    out.meta.L_e = parse_hex_double(c, "loss");
    out.meta.L_rec = parse_hex_double(d, "loss");
  }
  int entry_count = 0;
  {
    auto ss = next_line("entries");
    ss >> tag >> entry_count;
    if (tag != "entries" || ss.fail() || entry_count < 0)
      throw IoError("checkpoint: expected entries line");
  }

  if (out.meta.variant != cfg.variant)
    throw IoError("checkpoint: variant '" + std::string(core::variant_name(out.meta.variant)) +
                  "' does not match config variant '" + core::variant_name(cfg.variant) + "'");
  if (out.meta.latent_dim != cfg.latent_dim)
    throw IoError("checkpoint: latent_dim " + std::to_string(out.meta.latent_dim) +
                  " does not match config latent_dim " + std::to_string(cfg.latent_dim));

  nn::ParamStore all = nn::read_entries(is, entry_count);

  // Rebuild the architecture from the config, then swap in the stored values.
  out.bundle = core::make_bundle(cfg.bundle_config(), out.meta.seed);
  auto fill = [&all](const nn::MlpSpec& spec, nn::ParamStore& dst) {
    nn::ParamStore picked;
    for (int layer = 0; layer < spec.layer_count(); ++layer) {
      for (const char* kind : {"w", "b"}) {
        const std::string name = spec.name + "." + kind + std::to_string(layer);
        if (!all.has(name))
          throw IoError("checkpoint: missing entry '" + name + "' for configured architecture");
        picked.add(name, all.at(name), all.trainable(name));
      }
    }
    check_store_against_spec(spec, picked);
    dst = std::move(picked);
  };
  fill(out.bundle.g, out.bundle.pg);
  fill(out.bundle.d, out.bundle.pd);
  int expected = store_entry_count(out.bundle.pg) + store_entry_count(out.bundle.pd);
  if (out.bundle.has_encoder()) {
    fill(out.bundle.e, out.bundle.pe);
    expected += store_entry_count(out.bundle.pe);
  }
  if (expected != entry_count)
    throw IoError("checkpoint: has " + std::to_string(entry_count) + " entries, architecture needs " +
                  std::to_string(expected));
  return out;
}

}  // namespace dali::run
