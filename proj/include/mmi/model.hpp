#pragma once

#include <cmath>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mmi/error.hpp"

namespace mmi {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

/// n observations of a fixed-width vector; one row per observation.
struct Sample {
  MatrixXd rows;
  std::vector<std::string> column_names;

  Index n() const { return rows.rows(); }
  Index width() const { return rows.cols(); }
};

/// Validates shape, finiteness and n >= 2.
Sample make_sample(MatrixXd rows, std::vector<std::string> column_names = {});

/// Reads a headered, comma-separated file. `schema` lists the columns to
/// keep, in order; an empty schema keeps every column.
Sample load_csv(const std::string& path, const std::vector<std::string>& schema = {});
Sample parse_csv(std::istream& in, const std::vector<std::string>& schema = {});

struct ThetaBox {
  VectorXd lower;
  VectorXd upper;

  Index dim() const { return lower.size(); }
  bool contains(const VectorXd& theta, double tol = 1e-12) const;
  static ThetaBox cube(Index dim, double lo, double hi);
};

/// Fills `out` (n x k) with moment values for every observation at theta.
using BatchEvaluator =
    std::function<void(const Sample& sample, const VectorXd& theta, MatrixXd& out)>;

/// Single moment m_j(W, theta) for one observation row.
using PointwiseMoment =
    std::function<double(const Eigen::Ref<const RowVectorXd>& w, const VectorXd& theta)>;

/// Moment-inequality model E[m_j(W, theta)] <= 0, j = 1..p, after equality
/// conversion: p = p_ineq + 2 p_eq.
class MomentModel {
 public:
  MomentModel(Index d_theta, Index p_ineq, Index p_eq, ThetaBox box, BatchEvaluator evaluator);

  Index d_theta() const { return d_theta_; }
  Index p_ineq() const { return p_ineq_; }
  Index p_eq() const { return p_eq_; }
  Index p() const { return p_ineq_ + 2 * p_eq_; }
  const ThetaBox& box() const { return box_; }

  /// n x p matrix of m_j(W_i, theta).
  MatrixXd evaluate(const Sample& sample, const VectorXd& theta) const;
  void evaluate_into(const Sample& sample, const VectorXd& theta, MatrixXd& out) const;

  /// m_j(W_i, theta) for a single cell; j is zero-based.
  double value(const Sample& sample, Index i, const VectorXd& theta, Index j) const;

 private:
  Index d_theta_;
  Index p_ineq_;
  Index p_eq_;
  ThetaBox box_;
  BatchEvaluator evaluator_;
};

/// Raw moments before equality conversion: the evaluator returns
/// p_ineq + p_eq columns, inequalities first.
MomentModel convert_equalities(Index d_theta, Index p_ineq, Index p_eq, ThetaBox box,
                               BatchEvaluator raw);

/// Lifts pointwise inequality/equality moments into a batch evaluator
/// returning [inequalities..., equalities...].
BatchEvaluator batch_from_pointwise(std::vector<PointwiseMoment> moments);

using Instrument = std::function<double(const Eigen::Ref<const RowVectorXd>& x)>;

/// Conditional model E[m_tau(W, theta) | X] <= 0 (tau in inequalities) and
/// = 0 (tau in equalities), where X are the listed conditioning columns.
struct ConditionalModel {
  Index d_theta = 0;
  ThetaBox box;
  std::vector<PointwiseMoment> inequalities;
  std::vector<PointwiseMoment> equalities;
  std::vector<Index> conditioning_columns;
};

/// Unconditional model with moments m_{tau,g}(W, theta) = m_tau(W, theta) g(X),
/// ordered tau-major; equalities are then converted.
MomentModel instrument_expand(const ConditionalModel& model, std::vector<Instrument> instruments);

/// Sample means and divisor-n standard deviations at one theta.
struct StandardizedMoments {
  VectorXd theta;
  VectorXd mbar;
  VectorXd sigma_hat;
  VectorXd stud;
};

/// Column means and divisor-n standard deviations, each summed sequentially
/// in row order so the result does not depend on vectorization width.
template <typename Derived>
void column_moments(const Eigen::MatrixBase<Derived>& values, VectorXd& mean, VectorXd& sd) {
  const Index n = values.rows();
  const Index p = values.cols();
  mean.resize(p);
  sd.resize(p);
  for (Index j = 0; j < p; ++j) {
    double s = 0.0;
    for (Index i = 0; i < n; ++i) s += values(i, j);
    const double m = s / static_cast<double>(n);
    double ss = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double dev = values(i, j) - m;
      ss += dev * dev;
    }
    mean(j) = m;
    sd(j) = std::sqrt(ss / static_cast<double>(n));
  }
}

/// sqrt(n) mbar / sigma with the degenerate conventions: +inf / -inf when
/// sigma = 0 and mbar is positive / negative, and 0 when both vanish.
double studentize(double mbar, double sigma, Index n);
VectorXd studentize(const VectorXd& mbar, const VectorXd& sigma, Index n);

StandardizedMoments standardize(const MomentModel& model, const Sample& sample,
                                const VectorXd& theta);

/// Everything the bootstrap needs at one theta: the studentized moments and
/// the scaled deviations (m_j(W_i) - mbar_j) / sigma_j (zero where sigma = 0).
struct MomentSnapshot {
  VectorXd theta;
  VectorXd mbar;
  VectorXd sigma_hat;
  VectorXd stud;
  MatrixXd scaled_dev;  // n x p
};

MomentSnapshot snapshot(const MomentModel& model, const Sample& sample, const VectorXd& theta);

/// Reusable-buffer variant for hot loops.
void snapshot_into(const MomentModel& model, const Sample& sample, const VectorXd& theta,
                   MomentSnapshot& out, MatrixXd& scratch);

}  // namespace mmi
