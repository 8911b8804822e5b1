#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "fixtures.hpp"
#include "mmi/dgp.hpp"
#include "mmi/error.hpp"
#include "mmi/normal.hpp"
#include "mmi/sn.hpp"

using namespace mmi;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::Io;
}

}  // namespace

TEST_CASE("normal quantile against reference values") {
  // Reference quantiles from a 50-digit evaluation.
  CHECK(std::abs(normal_upper_quantile(0.05) - 1.6448536269514727) < 1e-12);
  CHECK(std::abs(normal_upper_quantile(0.005) - 2.5758293035489008) < 1e-12);
  CHECK(std::abs(normal_upper_quantile(5e-8) - 5.3267238863844963) < 1e-10);
  CHECK(std::abs(normal_quantile(0.3) - -0.52440051270804082) < 1e-12);
  for (double p : {1e-300, 1e-20, 1e-6, 0.01, 0.2, 0.5, 0.7, 0.99}) {
    const double x = normal_quantile(p);
    CHECK(normal_cdf(x) == doctest::Approx(p).epsilon(1e-12));
  }
}

TEST_CASE("sn critical value") {
  CHECK(std::abs(sn_critical_value(1, 0.05, 100) - 1.6675666788002138) < 1e-9);
  CHECK(std::abs(sn_critical_value(10, 0.05, 100) - 2.6657829646116666) < 1e-9);
  CHECK(std::abs(sn_critical_value(10, 0.01, 10) - 14.55998549435181) < 1e-7);
  CHECK(code_of([] { sn_critical_value(1e6, 0.05, 10); }) == Errc::QuantileExceedsRoot);
  CHECK(code_of([] { sn_critical_value(0.5, 0.05, 10); }) == Errc::InvalidArgument);
  CHECK(code_of([] { sn_critical_value(2, 1.0, 10); }) == Errc::InvalidArgument);
}

TEST_CASE("sn critical value monotonicity and limit") {
  CHECK(sn_critical_value(3, 0.05, 200) < sn_critical_value(4, 0.05, 200));
  CHECK(sn_critical_value(3, 0.05, 200) > sn_critical_value(3, 0.06, 200));
  CHECK(sn_critical_value(3, 0.05, 200) > sn_critical_value(3, 0.05, 201));
  CHECK(std::abs(sn_critical_value(3, 0.05, 1e8) - normal_upper_quantile(0.05 / 3)) < 1e-6);
}

TEST_CASE("two-step pieces") {
  CHECK(sn_near_binding(VectorXd{{-10.0, -1.0, 0.5}}, 2.0) == std::vector<Index>{1, 2});
  CHECK(sn_near_binding(VectorXd{{-10.0, -9.0}}, 2.0).empty());
  CHECK(sn_two_step_value(0, 0.05, 0.005, 100) == 0.0);
  CHECK(sn_two_step_value(1, 0.05, 0.005, 100) == sn_critical_value(1, 0.035, 100));
  CHECK(sn_two_step_value(1, 0.05, 0.005, 100) < sn_critical_value(2, 0.035, 100));
}

TEST_CASE("sn_two_step on a pinned point with one near-binding index") {
  // m1 = W has mean 0; m2 = W - 50 sits far below -2 c_gamma.
  const MomentModel model(1, 2, 0, ThetaBox::cube(1, -1, 1), [](const Sample& s, const VectorXd&, MatrixXd& out) {
    out.col(0) = s.rows.col(0);
    out.col(1) = (s.rows.col(0).array() - 50.0).matrix();
  });
  const Sample s = fixtures::column({-1.0, 1.0, -0.5, 0.5, 0.0, -1.0, 1.0, -0.5, 0.5, 0.0});
  const auto R = fixtures::pin_first(model, 0.0);
  const SnTwoStepState st = sn_two_step(model, s, R, 0.2, 0.02);
  REQUIRE(st.theta_hat_sn.size() == 1);
  CHECK(st.j_hat[0] == std::vector<Index>{0});
  CHECK(st.c_final == sn_critical_value(1, 0.2 - 0.06, 10));
  CHECK(st.c_final < sn_critical_value(2, 0.2 - 0.06, 10));
  CHECK_FALSE(st.fallback);
}

TEST_CASE("sn_two_step fallback and gamma range") {
  // Every searched theta has max stud = +inf: no member.
  const MomentModel model = fixtures::constant_model({1.0, -1.0});
  const Sample s = fixtures::column({0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0});
  const auto R = NullRestriction::whole_box(model.box());
  const SnTwoStepState st = sn_two_step(model, s, R, 0.5, 0.05);
  CHECK(st.fallback);
  CHECK(st.c_final == sn_critical_value(2, 0.5 - 0.15, 8));

  CHECK(code_of([&] { sn_two_step(model, s, R, 0.1, 0.025); }) == Errc::GammaOutOfRange);
  CHECK(code_of([&] { sn_two_step(model, s, R, 0.1, 0.0); }) == Errc::GammaOutOfRange);
}

TEST_CASE("sn_two_step on the failcase") {
  const DgpSpec dgp = make_dgp("failcase");
  const Sample s = dgp.generator(1000, 5);
  const NullRestriction R = dgp.null_at(dgp.eta0);
  const double alpha = 0.05;
  const double gamma = alpha / 10;
  const SnTwoStepState st = sn_two_step(dgp.model, s, R, alpha, gamma);
  CHECK(st.points_examined == 401);
  CHECK_FALSE(st.theta_hat_sn.empty());
  // Dominance: at most the one-step value at the shifted level.
  CHECK(st.c_final <= sn_critical_value(2, alpha - 3 * gamma, 1000) + 1e-15);
  for (std::size_t k = 0; k < st.theta_hat_sn.size(); ++k)
    CHECK(standardize(dgp.model, s, st.theta_hat_sn[k]).stud.maxCoeff() <= st.c_gamma);

  // A larger gamma lowers c_gamma, so J-hat can only shrink.
  const SnTwoStepState wide = sn_two_step(dgp.model, s, R, alpha, 0.012);
  CHECK(wide.c_gamma < st.c_gamma);
  const VectorXd probe{{-3.1, -4.4, 0.2}};
  const auto narrow_set = sn_near_binding(probe, wide.c_gamma);
  const auto broad_set = sn_near_binding(probe, st.c_gamma);
  CHECK(std::includes(broad_set.begin(), broad_set.end(), narrow_set.begin(), narrow_set.end()));
  SnSearchConfig threaded;
  threaded.threads = 4;
  const SnTwoStepState st4 = sn_two_step(dgp.model, s, R, alpha, gamma, threaded);
  CHECK(st4.c_final == st.c_final);
  CHECK(st4.theta_hat_sn.size() == st.theta_hat_sn.size());
}
