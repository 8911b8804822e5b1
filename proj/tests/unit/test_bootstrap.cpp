#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "mmi/bootstrap.hpp"
#include "mmi/dgp.hpp"
#include "mmi/error.hpp"

using namespace mmi;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

struct Failcase {
  DgpSpec dgp = make_dgp("failcase");
  Sample sample = dgp.generator(300, 4);
  NullRestriction R = dgp.null_at(dgp.eta0);
};

MinMaxResult fitted(const Failcase& f, double margin) {
  MinMaxConfig cfg;
  cfg.margin = margin;
  return minmax_statistic(f.dgp.model, f.sample, f.R, cfg);
}

}  // namespace

TEST_CASE("multiplier process identities") {
  const MomentModel model = fixtures::identity_model();
  const Sample s = fixtures::column({0.0, 2.0});
  const MomentSnapshot snap = snapshot(model, s, VectorXd::Zero(1));
  CHECK(multiplier_process(snap, VectorXd::Zero(2))(0) == 0.0);
  CHECK(multiplier_process(snap, VectorXd::Constant(2, 3.7))(0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(multiplier_process(snap, VectorXd{{1.0, -1.0}})(0) == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("bank columns depend only on seed and index") {
  const MultiplierBank a = draw_multiplier_bank(50, 8, 42, StreamDomain::Bootstrap, 1);
  const MultiplierBank b = draw_multiplier_bank(50, 12, 42, StreamDomain::Bootstrap, 4);
  CHECK(a.xi == b.xi.leftCols(8));
  Engine stream = make_stream(42, StreamDomain::Bootstrap, 5);
  CHECK(draw_multiplier(50, stream).xi == a.xi.col(5));
  const MultiplierBank c = draw_multiplier_bank(50, 8, 43);
  CHECK(c.xi != a.xi);
}

TEST_CASE("critical value order statistic") {
  VectorXd v(100);
  for (Index i = 0; i < 100; ++i) v(i) = static_cast<double>(100 - i);
  const CriticalValue cv = critical_value(v, 0.05);
  CHECK(cv.rank == 95);
  CHECK(cv.c == 95.0);
  CHECK(critical_value(VectorXd::Constant(1, -2.5), 0.3).c == -2.5);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  VectorXd w(100000);
  for (Index i = 0; i < w.size(); ++i) w(i) = u(rng);
  CHECK(std::abs(critical_value(w, 0.1).c - 0.9) < 0.01);

  CHECK_THROWS_AS(critical_value(v, 1.0), Error);
}

TEST_CASE("mr is the minimum") {
  CHECK(mr_statistic(0.5, 0.7) == 0.5);
  CHECK(mr_statistic(-kInf, 1.0) == -kInf);
  CHECK(mr_statistic(0.25, 0.25) == 0.25);
}

TEST_CASE("pr centering") {
  const VectorXd stud{{-4.0, 1.0, -kInf}};
  PrOptions plain;
  plain.kappa = 2.0;
  const VectorXd c = pr_centering(stud, plain);
  CHECK(c(0) == -2.0);
  CHECK(c(1) == 0.5);
  CHECK(c(2) == -kInf);

  PrOptions refined = plain;
  refined.centering = Centering::Refined;
  refined.wbar = 1.0;
  const VectorXd r = pr_centering(stud, refined);
  CHECK(r(0) == -3.0);  // min(-2, -4 + 1)
  CHECK(r(1) == 0.5);

  refined.wbar = 1e6;
  CHECK(pr_centering(stud, refined) == c);

  PrOptions limit;
  limit.kappa = kInf;
  CHECK(pr_centering(VectorXd{{-4.0, 1.0}}, limit).isZero());

  PrOptions small;
  small.kappa = 0.5;
  try {
    pr_centering(stud, small);
    FAIL("expected KappaTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::KappaTooSmall);
  }
}

TEST_CASE("single-replicate statistics on fixed draws") {
  Failcase f;
  const MinMaxResult fit = fitted(f, kInf);
  Engine stream = make_stream(9, StreamDomain::Bootstrap, 0);
  const MultiplierDraw draw = draw_multiplier(f.sample.n(), stream);

  const MomentSnapshot snap = snapshot(f.dgp.model, f.sample, fit.theta_hat.front());
  const VectorXd v = multiplier_process(snap, draw.xi);
  CHECK(dr_statistic(draw, f.dgp.model, f.sample, fit) == doctest::Approx(v.maxCoeff()).epsilon(1e-12));

  MultiplierDraw zero{VectorXd::Zero(f.sample.n())};
  CHECK(dr_statistic(zero, f.dgp.model, f.sample, fit) == 0.0);

  // Pinned singleton null: the PR value is the centered max at that theta.
  const auto R0 = NullRestriction::fixed_coordinates(f.dgp.model.box(), {{0, 0.0}, {1, 0.2}});
  const StandardizedMoments z = standardize(f.dgp.model, f.sample, VectorXd{{0.0, 0.2}});
  PrOptions o;
  o.kappa = 2.0;
  CHECK(pr_statistic(zero, f.dgp.model, f.sample, R0, o) == doctest::Approx(z.stud.maxCoeff() / 2).epsilon(1e-12));
}

TEST_CASE("pr value is nondecreasing in kappa when every stud is negative") {
  Failcase f;
  // theta2 = 0.3 leaves the second moment at W2 - 0.3 and the first at 0.3 - W1;
  // shift the sample so both means are negative.
  MatrixXd rows = f.sample.rows;
  rows.col(0).array() += 1.0;
  rows.col(1).array() -= 1.0;
  const Sample shifted = make_sample(rows);
  const auto R0 = NullRestriction::fixed_coordinates(f.dgp.model.box(), {{0, 0.0}, {1, 0.3}});
  REQUIRE(standardize(f.dgp.model, shifted, VectorXd{{0.0, 0.3}}).stud.maxCoeff() < 0.0);
  Engine stream = make_stream(2, StreamDomain::Bootstrap, 0);
  const MultiplierDraw draw = draw_multiplier(shifted.n(), stream);
  double previous = -kInf;
  for (double k : {1.0, 1.5, 3.0, 10.0, 100.0, kInf}) {
    PrOptions o;
    o.kappa = k;
    const double value = pr_statistic(draw, f.dgp.model, shifted, R0, o);
    CHECK(value >= previous);
    previous = value;
  }
}

TEST_CASE("ensembles: dominance, reproducibility and thread independence") {
  Failcase f;
  const MinMaxResult fit = fitted(f, 2.0);
  const MultiplierBank bank = draw_multiplier_bank(f.sample.n(), 64, 3, StreamDomain::Bootstrap, 1);
  BootstrapSearch search;
  search.seed = 3;
  PrOptions o;
  o.kappa = 4.0;
  const BootstrapEnsemble dr = dr_ensemble(bank, f.dgp.model, f.sample, fit, 1);
  const BootstrapEnsemble pr = pr_ensemble(bank, f.dgp.model, f.sample, f.R, o, fit.theta_hat, search);
  const BootstrapEnsemble mr = mr_ensemble(dr, pr);
  CHECK(mr.B() == 64);
  for (Index b = 0; b < 64; ++b) {
    CHECK(mr.values(b) <= dr.values(b));
    CHECK(mr.values(b) <= pr.values(b));
  }

  search.threads = 4;
  const BootstrapEnsemble pr4 = pr_ensemble(bank, f.dgp.model, f.sample, f.R, o, fit.theta_hat, search);
  CHECK(pr4.values == pr.values);
  CHECK(dr_ensemble(bank, f.dgp.model, f.sample, fit, 4).values == dr.values);

  const BootstrapEnsemble naive = naive_ensemble(bank, f.dgp.model, f.sample, f.R, fit.theta_hat, search);
  CHECK(naive.B() == 64);
  CHECK(naive.eval_cap == 0);
}

TEST_CASE("replicate search value agrees with the single-draw statistic") {
  Failcase f;
  const MinMaxResult fit = fitted(f, kInf);
  const MultiplierBank bank = draw_multiplier_bank(f.sample.n(), 6, 8);
  PrOptions o;
  o.kappa = 3.0;
  BootstrapSearch search;
  search.seed = 8;
  const BootstrapEnsemble pr = pr_ensemble(bank, f.dgp.model, f.sample, f.R, o, fit.theta_hat, search);
  for (Index b = 0; b < bank.B(); ++b) {
    const MultiplierDraw draw{bank.xi.col(b)};
    const double direct = pr_statistic(draw, f.dgp.model, f.sample, f.R, o);
    CHECK(std::abs(pr.values(b) - direct) < 1e-3 * (1 + std::abs(direct)));
  }
}
