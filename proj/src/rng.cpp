#include "dali/rng.hpp"

#include <cmath>

namespace dali {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, Stream s, std::uint64_t index) {
  return mix64(mix64(master ^ (static_cast<std::uint64_t>(s) << 32)) ^ index);
}

double Rng::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

int Rng::uniform_index(int n) {
  const int i = static_cast<int>(uniform01() * n);
  return i < n ? i : n - 1;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] so the log is finite.
  const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

Array Rng::normal_array(int rows, int cols) {
  Array a(rows, cols);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = normal();
  return a;
}

}  // namespace dali
