#include <cmath>
#include <set>

#include "dali/errors.hpp"
#include "dali/rng.hpp"
#include "dali/synthdata.hpp"
#include "doctest.h"

using namespace dali;
using namespace dali::synth;

TEST_SUITE("synthdata") {

TEST_CASE("single-mode grid sits at the origin") {
  const GridMixture mix = make_grid(1, 2.0, 0.05);
  CHECK(mix.component_count() == 1);
  CHECK(mix.means.at(0, 0) == 0.0);
  CHECK(mix.means.at(0, 1) == 0.0);
}

TEST_CASE("default 5x5 grid spans [-4, 4]^2") {
  const GridMixture mix = make_grid(5, 2.0, 0.05);
  CHECK(mix.component_count() == 25);
  double min_x = 1e9, max_x = -1e9, min_y = 1e9, max_y = -1e9;
  for (int k = 0; k < 25; ++k) {
    min_x = std::min(min_x, mix.means.at(k, 0));
    max_x = std::max(max_x, mix.means.at(k, 0));
    min_y = std::min(min_y, mix.means.at(k, 1));
    max_y = std::max(max_y, mix.means.at(k, 1));
  }
  CHECK(min_x == -4.0);
  CHECK(max_x == 4.0);
  CHECK(min_y == -4.0);
  CHECK(max_y == 4.0);
}

TEST_CASE("3x3 unit grid equals the brute-force enumeration") {
  const GridMixture mix = make_grid(3, 1.0, 0.01);
  std::set<std::pair<double, double>> expected;
  for (double a : {-1.0, 0.0, 1.0})
    for (double b : {-1.0, 0.0, 1.0}) expected.insert({a, b});
  std::set<std::pair<double, double>> got;
  for (int k = 0; k < mix.component_count(); ++k)
    got.insert({mix.means.at(k, 0), mix.means.at(k, 1)});
  CHECK(got == expected);
}

TEST_CASE("mean set is symmetric under axis reflections") {
  const GridMixture mix = make_grid(4, 1.5, 0.05);
  std::set<std::pair<double, double>> means;
  for (int k = 0; k < mix.component_count(); ++k)
    means.insert({mix.means.at(k, 0), mix.means.at(k, 1)});
  for (const auto& [x, y] : means) {
    CHECK(means.count({-x, y}) == 1);
    CHECK(means.count({x, -y}) == 1);
  }
}

TEST_CASE("make_grid validates its arguments") {
  CHECK_THROWS_AS(make_grid(0, 1.0, 0.05), ContractError);
  CHECK_THROWS_AS(make_grid(3, 0.0, 0.05), ContractError);
  CHECK_THROWS_AS(make_grid(3, 1.0, 0.0), ContractError);
}

TEST_CASE("sampling basics") {
  const GridMixture mix = make_grid(5, 2.0, 0.05);
  Rng rng(1);
  CHECK(sample(mix, 0, rng).rows() == 0);

  Rng r1(9), r2(9);
  CHECK(sample(mix, 100, r1) == sample(mix, 100, r2));
}

TEST_CASE("tiny sigma pins samples onto the means") {
  const GridMixture mix = make_grid(3, 2.0, 1e-12);
  Rng rng(4);
  const Array pts = sample(mix, 200, rng);
  for (int i = 0; i < pts.rows(); ++i) {
    const auto [k, dist] = nearest_mode(mix, pts.at(i, 0), pts.at(i, 1));
    (void)k;
    CHECK(dist < 1e-9);
  }
}

TEST_CASE("component counts follow the uniform mixture") {
  const GridMixture mix = make_grid(5, 2.0, 0.05);
  const int n = 100000;
  Rng rng(17);
  const Array pts = sample(mix, n, rng);
  std::vector<int> counts(25, 0);
  for (int i = 0; i < n; ++i)
    counts[static_cast<std::size_t>(nearest_mode(mix, pts.at(i, 0), pts.at(i, 1)).first)]++;
  const double expected = n / 25.0;
  const double sd = std::sqrt(n * (1.0 / 25.0) * (24.0 / 25.0));
  for (int k = 0; k < 25; ++k) {
    CAPTURE(k);
    CHECK(std::fabs(counts[static_cast<std::size_t>(k)] - expected) <= 4.0 * sd);
  }
}

TEST_CASE("nearest_mode exact hits and tie-breaking") {
  const GridMixture mix = make_grid(5, 2.0, 0.05);
  for (int k = 0; k < mix.component_count(); ++k) {
    const auto [idx, dist] = nearest_mode(mix, mix.means.at(k, 0), mix.means.at(k, 1));
    CHECK(idx == k);
    CHECK(dist == 0.0);
  }
  // midpoint between modes 0 and 1 (same x, neighbouring y): lowest index wins
  const double mx = mix.means.at(0, 0);
  const double my = 0.5 * (mix.means.at(0, 1) + mix.means.at(1, 1));
  CHECK(nearest_mode(mix, mx, my).first == 0);
}

TEST_CASE("nearest_mode agrees with a brute-force scan") {
  const GridMixture mix = make_grid(4, 1.3, 0.05);
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const double x = rng.uniform(-4.0, 4.0);
    const double y = rng.uniform(-4.0, 4.0);
    int best = 0;
    double best_d = 1e300;
    for (int k = 0; k < mix.component_count(); ++k) {
      const double dx = x - mix.means.at(k, 0);
      const double dy = y - mix.means.at(k, 1);
      const double d = std::sqrt(dx * dx + dy * dy);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    const auto [idx, dist] = nearest_mode(mix, x, y);
    CHECK(idx == best);
    CHECK(dist == doctest::Approx(best_d).epsilon(1e-12));
  }
}

}  // TEST_SUITE
