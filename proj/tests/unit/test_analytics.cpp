#include <cmath>
#include <limits>

#include "doctest.h"
#include "mmi/analytics.hpp"
#include "mmi/normal.hpp"

using namespace mmi;

TEST_CASE("density and cdf reference values") {
  CHECK(minmax_density({1, 1}, 0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-14));
  CHECK(std::abs(minmax_density({2, 3}, 0.0) - 0.5236117430268804) < 1e-12);
  // Reference values from a direct formula evaluation.
  CHECK(minmax_density({10, 100}, 2.0) == doctest::Approx(2.14041340488279).epsilon(1e-11));
  CHECK(minmax_density({3, 100}, 1.5) == doctest::Approx(0.04128128561614835).epsilon(1e-11));
  CHECK(minmax_cdf({10, 100}, 2.0) == doctest::Approx(0.6518229438823244).epsilon(1e-12));
  CHECK(minmax_cdf({2, 3}, -1.0) == doctest::Approx(0.007971229394964974).epsilon(1e-12));

  CHECK(minmax_cdf({2, 1}, 0.0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(minmax_cdf({1, 2}, 0.0) == doctest::Approx(0.25).epsilon(1e-15));
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(minmax_cdf({4, 7}, inf) == 1.0);
  CHECK(minmax_cdf({4, 7}, -inf) == 0.0);
  CHECK(minmax_density({4, 7}, inf) == 0.0);
  CHECK(minmax_density({4, 7}, 40.0) == 0.0);
  CHECK(minmax_density({4, 7}, -40.0) == 0.0);
}

TEST_CASE("large p does not underflow") {
  const double f = minmax_density({10, 1000000}, 5.0);
  CHECK(std::isfinite(f));
  CHECK(f > 0.0);
  const double F = minmax_cdf({10, 1000000}, 5.0);
  CHECK(F > 0.0);
  CHECK(F < 1.0);
}

TEST_CASE("long double instantiation agrees") {
  for (double t : {-2.0, 0.3, 1.7, 3.2}) {
    const long double a = minmax_density<long double>({5, 20}, t);
    CHECK(static_cast<double>(a) == doctest::Approx(minmax_density({5, 20}, t)).epsilon(1e-12));
  }
}

TEST_CASE("monotone coupling in N and p") {
  for (double t : {-1.0, 0.0, 1.0, 2.5}) {
    CHECK(minmax_cdf({3, 10}, t) >= minmax_cdf({3, 11}, t));
    CHECK(minmax_cdf({4, 10}, t) >= minmax_cdf({3, 10}, t));
  }
}

TEST_CASE("bounds") {
  const DensityBounds b10 = density_bounds({10, 10});
  CHECK_FALSE(b10.hypothesis_holds);
  const DensityBounds b = density_bounds({10, 100});
  CHECK(b.hypothesis_holds);
  CHECK(b.upper == doctest::Approx(123.97270975143255).epsilon(1e-12));
  const DensityBounds wide = density_bounds({2, 1000000});
  CHECK(wide.lower == doctest::Approx(0.8033238333662703).epsilon(1e-12));
  CHECK(density_bounds({1, 1000}).lower == 0.0);

  for (const MinMaxGaussianSpec spec : {MinMaxGaussianSpec{3, 100}, MinMaxGaussianSpec{10, 100},
                                        MinMaxGaussianSpec{100, 100}, MinMaxGaussianSpec{10, 10000}}) {
    const DensityBounds db = density_bounds(spec);
    if (!db.hypothesis_holds) continue;
    double peak = 0.0;
    for (const double t : linear_grid(-2.0, 6.0, 8001)) peak = std::max(peak, minmax_density(spec, t));
    CHECK(peak <= db.upper);
    CHECK(peak >= db.lower);
  }
}

TEST_CASE("finite differences of the cdf") {
  const double h = 1e-5;
  for (const MinMaxGaussianSpec spec : {MinMaxGaussianSpec{1, 1}, MinMaxGaussianSpec{2, 3}, MinMaxGaussianSpec{10, 100}}) {
    for (const double t : linear_grid(-5.0, 5.0, 201)) {
      const double fd = (minmax_cdf(spec, t + h) - minmax_cdf(spec, t - h)) / (2 * h);
      CHECK(std::abs(fd - minmax_density(spec, t)) < 1e-6);
    }
  }
}

TEST_CASE("monte carlo density") {
  const std::vector<double> grid = linear_grid(-3.0, 3.0, 61);
  McDensityConfig cfg;
  cfg.B = 20000;
  cfg.seed = 4;
  const McDensity mc = mc_minmax_density({2, 3}, iid_normal_sampler(), grid, cfg);
  double sup = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) sup = std::max(sup, std::abs(mc.cdf[k] - minmax_cdf({2, 3}, grid[k])));
  CHECK(sup < 0.02);
  CHECK(mc.bandwidth > 0.0);

  // Rank-one rows: the min-max is the min of N standard normals.
  const McDensity r1 = mc_minmax_density({3, 50}, rank_one_sampler(), grid, cfg);
  double sup1 = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double exact = 1.0 - std::pow(1.0 - normal_cdf(grid[k]), 3.0);
    sup1 = std::max(sup1, std::abs(r1.cdf[k] - exact));
  }
  CHECK(sup1 < 0.02);

  const McDensity one = mc_minmax_density({1, 1}, iid_normal_sampler(), grid, cfg);
  for (std::size_t k = 0; k < grid.size(); k += 10) CHECK(std::abs(one.density[k] - normal_pdf(grid[k])) < 0.02);

  cfg.threads = 4;
  const McDensity again = mc_minmax_density({2, 3}, iid_normal_sampler(), grid, cfg);
  CHECK(again.draws == mc.draws);
  CHECK(again.density == mc.density);
}

TEST_CASE("linear grid") {
  const auto g = linear_grid(-1.0, 1.0, 5);
  CHECK(g == std::vector<double>{-1.0, -0.5, 0.0, 0.5, 1.0});
  CHECK(linear_grid(2.0, 3.0, 1) == std::vector<double>{2.0});
}
