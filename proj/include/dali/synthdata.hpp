#pragma once

#include <utility>

#include "dali/array.hpp"
#include "dali/rng.hpp"

namespace dali::synth {

/// 2D Gaussian mixture with components on a square grid centered at the
/// origin: equal weights, shared isotropic standard deviation. Immutable
/// after construction; safe for concurrent reads.
struct GridMixture {
  Array means;     // [K x 2], K = grid_side^2
  double sigma = 0.05;
  double spacing = 2.0;
  int grid_side = 5;

  int component_count() const { return means.rows(); }
};

/// Grid coordinates run over {-(s-1)/2, ..., +(s-1)/2} * spacing in each
/// axis; component index = ix * grid_side + iy. Warns on stderr when
/// spacing <= 6*sigma (the three-standard-deviation quality radius becomes
/// ambiguous between neighbouring modes).
GridMixture make_grid(int grid_side, double spacing, double sigma);

/// n draws: component ~ uniform, point ~ N(mean_k, sigma^2 I).
Array sample(const GridMixture& mix, int n, Rng& rng);

/// (index, Euclidean distance) of the closest component mean; ties go to the
/// lowest index.
std::pair<int, double> nearest_mode(const GridMixture& mix, double x, double y);

}  // namespace dali::synth
