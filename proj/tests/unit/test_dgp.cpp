#include <sstream>

#include "doctest.h"
#include "mmi/dgp.hpp"
#include "mmi/error.hpp"
#include "mmi/statistic.hpp"

using namespace mmi;

namespace {

// Two observations on a three-point grid theta in {-1, 0, 1} with m = theta - w_i.
const char* kTable =
    "i,theta1,m1\n"
    "0,-1,-1.5\n"
    "1,-1,-0.5\n"
    "0,0,-0.5\n"
    "1,0,0.5\n"
    "0,1,0.5\n"
    "1,1,1.5\n";

}  // namespace

TEST_CASE("registry") {
  CHECK(dgp_names() == std::vector<std::string>{"failcase", "box-1d", "many-failcase"});
  const DgpSpec fc = make_dgp("failcase");
  CHECK(fc.model.d_theta() == 2);
  CHECK(fc.model.p() == 2);
  CHECK(fc.pinned == std::vector<Index>{0});
  CHECK(make_dgp("many-failcase", {{"k", 4.0}}).model.p() == 8);
  CHECK(make_dgp("box-1d", {{"mu", 0.5}}).eta0(0) == 0.5);

  try {
    make_dgp("nope");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InvalidArgument);
  }
  try {
    make_dgp("failcase", {{"k", 2.0}});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnknownKey);
  }
  CHECK_THROWS_AS(make_dgp("many-failcase", {{"k", 1.5}}), Error);
}

TEST_CASE("failcase moments") {
  const DgpSpec fc = make_dgp("failcase");
  MatrixXd rows(2, 2);
  rows << 0.3, -0.2,
          1.0, 0.5;
  const Sample s = make_sample(rows);
  const MatrixXd m = fc.model.evaluate(s, VectorXd{{0.25, 0.5}});
  CHECK(m(0, 0) == doctest::Approx(0.75 - 0.3));
  CHECK(m(0, 1) == doctest::Approx(-0.2 - 0.75));
  CHECK(m(1, 1) == doctest::Approx(0.5 - 0.75));
}

TEST_CASE("generator determinism and prefixes") {
  const DgpSpec fc = make_dgp("failcase");
  const Sample a = fc.generator(50, 9);
  const Sample b = fc.generator(80, 9);
  CHECK(a.rows == b.rows.topRows(50));
  CHECK(fc.generator(50, 10).rows != a.rows);
}

TEST_CASE("null_at pins the listed coordinates") {
  const DgpSpec fc = make_dgp("failcase");
  const NullRestriction R = fc.null_at(VectorXd::Constant(1, 0.4));
  CHECK(R.free_dims() == 1);
  CHECK(R.offset()(0) == 0.4);
  CHECK_THROWS_AS(fc.null_at(VectorXd::Zero(2)), Error);
}

TEST_CASE("tabulated model") {
  std::istringstream in(kTable);
  const TabulatedModel t = parse_tabulated(in);
  CHECK(t.grid.size() == 3);
  CHECK(t.sample.n() == 2);
  CHECK(t.model.p() == 1);
  const MatrixXd m = t.model.evaluate(t.sample, VectorXd::Constant(1, 0.0));
  CHECK(m(0, 0) == -0.5);
  CHECK(m(1, 0) == 0.5);
  try {
    t.model.evaluate(t.sample, VectorXd::Constant(1, 0.5));
    FAIL("expected ThetaOutOfBox");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ThetaOutOfBox);
  }

  MinMaxConfig cfg;
  cfg.search.candidates = t.grid;
  const MinMaxResult r = minmax_statistic(t.model, t.sample, NullRestriction::whole_box(t.model.box()), cfg);
  // stud at theta = -1 is sqrt(2) * (-1) / 0.5.
  CHECK(r.T_n == doctest::Approx(-2.0 * std::sqrt(2.0)));

  std::istringstream missing("theta1,m1\n0,1\n1,2\n");
  CHECK_THROWS_AS(parse_tabulated(missing), Error);
  std::istringstream ragged("i,theta1,m1\n0,0,1\n1,0,2\n0,1,3\n");
  CHECK_THROWS_AS(parse_tabulated(ragged), Error);
}
