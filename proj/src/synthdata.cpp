#include "dali/synthdata.hpp"

#include <cmath>
#include <iostream>
#include <limits>

#include "dali/errors.hpp"

namespace dali::synth {

GridMixture make_grid(int grid_side, double spacing, double sigma) {
  if (grid_side < 1) throw ContractError("make_grid: grid_side must be >= 1");
  if (!(spacing > 0.0)) throw ContractError("make_grid: spacing must be > 0");
  if (!(sigma > 0.0)) throw ContractError("make_grid: sigma must be > 0");
  if (spacing <= 6.0 * sigma) {
    std::cerr << "warning: grid spacing " << spacing << " <= 6*sigma (" << 6.0 * sigma
              << "); quality radii of neighbouring modes overlap\n";
  }
  GridMixture mix;
  mix.sigma = sigma;
  mix.spacing = spacing;
  mix.grid_side = grid_side;
  mix.means = Array(grid_side * grid_side, 2);
  const double half = (grid_side - 1) / 2.0;
  for (int ix = 0; ix < grid_side; ++ix) {
    for (int iy = 0; iy < grid_side; ++iy) {
      const int k = ix * grid_side + iy;
      mix.means.at(k, 0) = (ix - half) * spacing;
      mix.means.at(k, 1) = (iy - half) * spacing;
    }
  }
  return mix;
}

Array sample(const GridMixture& mix, int n, Rng& rng) {
  if (n < 0) throw ContractError("sample: n must be >= 0");
  Array out(n, 2);
  const int K = mix.component_count();
  for (int i = 0; i < n; ++i) {
    const int k = rng.uniform_index(K);
    out.at(i, 0) = mix.means.at(k, 0) + mix.sigma * rng.normal();
    out.at(i, 1) = mix.means.at(k, 1) + mix.sigma * rng.normal();
  }
  return out;
}

std::pair<int, double> nearest_mode(const GridMixture& mix, double x, double y) {
  int best = 0;
  double best_sq = std::numeric_limits<double>::infinity();
  for (int k = 0; k < mix.component_count(); ++k) {
    const double dx = x - mix.means.at(k, 0);
    const double dy = y - mix.means.at(k, 1);
    const double sq = dx * dx + dy * dy;
    if (sq < best_sq) {
      best_sq = sq;
      best = k;
    }
  }
  return {best, std::sqrt(best_sq)};
}

}  // namespace dali::synth
