#pragma once

#include <cstdint>
#include <random>

#include "dali/array.hpp"

namespace dali {

/// Named sub-streams fanned out from one master seed. Each consumer owns its
/// stream, so e.g. changing the evaluation cadence cannot perturb the
/// training draws.
enum class Stream : std::uint64_t {
  init_g = 1,
  init_d = 2,
  init_e = 3,
  data = 4,
  latent = 5,
  eval = 6,
  posterior = 7,
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed for (master, stream, index). index distinguishes repeated uses of one
/// stream, e.g. the evaluation at step t uses index = t.
std::uint64_t derive_seed(std::uint64_t master, Stream s, std::uint64_t index = 0);

/// Seeded generator with engine-only use of std::mt19937_64; the uniform and
/// normal transforms are implemented here so that draws are identical across
/// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n).
  int uniform_index(int n);

  /// Standard normal via Box-Muller (pairs generated, one cached).
  double normal();

  Array normal_array(int rows, int cols);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace dali
