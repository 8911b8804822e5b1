#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "mmi/error.hpp"
#include "mmi/optimize.hpp"

using namespace mmi;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

NullRestriction square() { return NullRestriction::whole_box(ThetaBox::cube(2, -1.0, 1.0)); }

// Pins theta_1 = 0 and leaves theta_2 free in [-1, 1].
NullRestriction pinned_first() {
  return NullRestriction::fixed_coordinates(ThetaBox::cube(2, -1.0, 1.0), {{0, 0.0}});
}

}  // namespace

TEST_CASE("free_dims 0 evaluates the pinned point once") {
  const auto R = NullRestriction::fixed_coordinates(ThetaBox::cube(2, -1, 1), {{0, 0.3}, {1, -0.2}});
  CHECK(R.free_dims() == 0);
  const ProfiledFit fit = profile_min([](const VectorXd&) { return VectorXd{{3.0, -1.0}}; }, R);
  CHECK(fit.value == 3.0);
  CHECK(fit.evals == 1);
  REQUIRE(fit.argmin_set.size() == 1);
  CHECK(fit.minimizer(0) == 0.3);
  CHECK(fit.minimizer(1) == -0.2);
}

TEST_CASE("absolute value has its minimum at zero") {
  const ProfiledFit fit =
      profile_min([](const VectorXd& t) { return VectorXd{{t(1), -t(1)}}; }, pinned_first());
  CHECK(std::abs(fit.value) < 1e-8);
  CHECK(std::abs(fit.minimizer(1)) < 1e-8);
  CHECK(fit.minimizer(0) == 0.0);
}

TEST_CASE("value equals the objective at the minimizer") {
  auto f = [](const VectorXd& t) {
    return VectorXd{{std::pow(t(0) - 0.3, 2) + t(1), 0.5 - t(0) * t(1), t(0) + 0.2 * t(1) - 0.1}};
  };
  const ProfiledFit fit = profile_min(f, square());
  CHECK(fit.value == extended_max(f(fit.minimizer)));
  CHECK(fit.argmin_set.front() == fit.minimizer);
}

TEST_CASE("dominated index leaves the value unchanged") {
  auto f = [](const VectorXd& t) { return VectorXd{{t(1) - 0.4, 0.1 - t(1)}}; };
  auto g = [&](const VectorXd& t) {
    VectorXd v = f(t);
    VectorXd w(3);
    w << v, v.minCoeff() - 1.0;
    return w;
  };
  const ProfiledFit a = profile_min(f, pinned_first());
  const ProfiledFit b = profile_min(g, pinned_first());
  CHECK(b.value == doctest::Approx(a.value).epsilon(1e-12));
}

TEST_CASE("seed determinism") {
  auto f = [](const VectorXd& t) { return VectorXd{{std::sin(3 * t(0)) + t(1) * t(1), std::cos(2 * t(1)) - t(0)}}; };
  SearchConfig cfg;
  cfg.seed = 17;
  const ProfiledFit a = profile_min(f, square(), cfg);
  const ProfiledFit b = profile_min(f, square(), cfg);
  CHECK(a.value == b.value);
  CHECK(a.minimizer == b.minimizer);
  CHECK(a.evals == b.evals);
}

TEST_CASE("infinite entries") {
  auto f = [](const VectorXd& t) { return VectorXd{{t(1) < 0 ? kInf : t(1), -1.0}}; };
  const ProfiledFit fit = profile_min(f, pinned_first());
  CHECK(std::isfinite(fit.value));
  CHECK(fit.value < 1e-6);

  auto never = [](const VectorXd&) { return VectorXd{{kInf}}; };
  CHECK_THROWS_AS(profile_min(never, pinned_first()), Error);
  try {
    profile_min(never, pinned_first());
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoFiniteValue);
  }
}

TEST_CASE("restriction errors") {
  const ThetaBox box = ThetaBox::cube(2, -1, 1);
  try {
    NullRestriction::fixed_coordinates(box, {{0, 2.0}});
    FAIL("expected InfeasibleRestriction");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InfeasibleRestriction);
  }
  try {
    NullRestriction::affine(box, MatrixXd{{1.0, 1.0}}, VectorXd::Constant(1, 3.0));
    FAIL("expected InfeasibleRestriction");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InfeasibleRestriction);
  }
}

TEST_CASE("affine restriction keeps theta on the line") {
  const auto R = NullRestriction::affine(ThetaBox::cube(2, -1, 1), MatrixXd{{1.0, 1.0}}, VectorXd::Constant(1, 0.5));
  CHECK(R.free_dims() == 1);
  auto f = [](const VectorXd& t) { return VectorXd{{t(0) - 0.1, -t(0)}}; };
  const ProfiledFit fit = profile_min(f, R);
  CHECK(fit.minimizer.sum() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(fit.minimizer(0) == doctest::Approx(0.05).epsilon(1e-6));
  CHECK(fit.value == doctest::Approx(-0.05).epsilon(1e-6));
}

TEST_CASE("grid mode only visits candidates") {
  SearchConfig cfg;
  cfg.candidates = {VectorXd{{0.0, 0.5}}, VectorXd{{0.0, -0.25}}, VectorXd{{0.5, 0.0}}};
  const ProfiledFit fit = profile_min([](const VectorXd& t) { return VectorXd{{std::abs(t(1))}}; }, pinned_first(), cfg);
  CHECK(fit.value == 0.25);
  CHECK(fit.evals == 2);
}

TEST_CASE("AllMinimizers keeps both ends of a flat valley") {
  auto f = [](const VectorXd& t) { return VectorXd{{std::max(0.0, std::abs(t(1)) - 0.9) * -1.0 + 1.0}}; };
  SearchConfig cfg;
  cfg.policy = ArgminPolicy::AllMinimizers;
  const ProfiledFit fit = profile_min(f, pinned_first(), cfg);
  CHECK(fit.selected(ArgminPolicy::Singleton).size() == 1);
  CHECK(fit.selected(ArgminPolicy::AllMinimizers).size() >= 2);
}

TEST_CASE("profile_min is not worse than a dense grid on a random minimax") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  MatrixXd G(4, 2);
  VectorXd c(4);
  for (Index j = 0; j < 4; ++j) {
    G(j, 0) = z(rng);
    G(j, 1) = z(rng);
    c(j) = 0.3 * z(rng);
  }
  auto f = [&](const VectorXd& t) { return VectorXd((G * t + c).array() + 0.2 * t.squaredNorm()); };
  const ProfiledFit fit = profile_min(f, square());
  double grid = kInf;
  const int m = 201;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      const VectorXd t{{-1.0 + 2.0 * a / (m - 1), -1.0 + 2.0 * b / (m - 1)}};
      grid = std::min(grid, f(t).maxCoeff());
    }
  CHECK(fit.value <= grid + 1e-6 * (1 + std::abs(grid)));
}

TEST_CASE("halton points are deterministic and inside the unit cube") {
  const MatrixXd a = halton_points(50, 3, 9);
  const MatrixXd b = halton_points(50, 3, 9);
  CHECK(a == b);
  CHECK(a.minCoeff() >= 0.0);
  CHECK(a.maxCoeff() < 1.0);
}
