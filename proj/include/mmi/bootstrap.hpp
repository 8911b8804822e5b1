#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "mmi/model.hpp"
#include "mmi/optimize.hpp"
#include "mmi/rng.hpp"
#include "mmi/statistic.hpp"

namespace mmi {

/// Gaussian multipliers xi_1..xi_n for one bootstrap replicate.
struct MultiplierDraw {
  VectorXd xi;
};

MultiplierDraw draw_multiplier(Index n, Engine& stream);

/// v*_{theta,j} = n^{-1/2} sum_i xi_i (m_j(W_i, theta) - mbar_j) / sigma_j for all j.
VectorXd multiplier_process(const MomentSnapshot& snap, const VectorXd& xi);

/// B replicate draws stored column-wise; column b comes from
/// stream(seed, domain, b) and depends on nothing else.
struct MultiplierBank {
  MatrixXd xi;  // n x B
  std::uint64_t seed = 0;
  StreamDomain domain = StreamDomain::Bootstrap;

  Index n() const { return xi.rows(); }
  Index B() const { return xi.cols(); }
};

MultiplierBank draw_multiplier_bank(Index n, Index B, std::uint64_t seed,
                                    StreamDomain domain = StreamDomain::Bootstrap,
                                    std::size_t threads = 1);

/// The p x B matrix of v*_{theta,j} for every replicate of the bank.
MatrixXd process_matrix(const MomentSnapshot& snap, const MultiplierBank& bank);

enum class Centering { Plain, Refined };
enum class BootstrapKind { DR, PR, MR, Naive };

const char* to_string(BootstrapKind kind);

/// kappa = +inf is accepted as the no-centering limit.
struct PrOptions {
  double kappa = 1.0;
  Centering centering = Centering::Plain;
  double wbar = 0.0;  ///< used by the refined centering only
};

/// Per-index additive centering of the PR statistic at one theta:
/// kappa^{-1} stud (plain) or min{kappa^{-1} stud, stud + wbar} (refined).
VectorXd pr_centering(const VectorXd& stud, const PrOptions& options);

/// 0 on the indices attaining max_j stud_j, -inf elsewhere.
VectorXd naive_centering(const VectorXd& stud);

/// Centering rule applied at every theta visited by the replicate search.
using CenteringRule = std::function<VectorXd(const VectorXd& stud)>;

struct BootstrapSearch {
  int n_starts = 0;     ///< shared low-discrepancy starts; 0: max(48, 16 * free_dims)
  int max_evals = 200;  ///< per-replicate cap for the local refinement
  double xtol = 1e-5;  ///< relative to the free-box width
  double ftol = 1e-6;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  /// Grid mode: the infimum is taken over these thetas only.
  std::vector<VectorXd> candidates;
};

struct BootstrapEnsemble {
  BootstrapKind method = BootstrapKind::DR;
  double kappa = std::numeric_limits<double>::infinity();
  Centering centering = Centering::Plain;
  VectorXd values;
  std::uint64_t seed = 0;
  int eval_cap = 0;
  long evals = 0;

  Index B() const { return values.size(); }
};

struct CriticalValue {
  double alpha = 0.0;
  double c = 0.0;
  Index rank = 0;
};

/// ceil(level * B), clamped to [1, B]; the small offset keeps products such
/// as 0.95 * 100 from rounding up to the next rank.
inline Index quantile_rank(Index B, double level) {
  const double x = level * static_cast<double>(B);
  Index r = static_cast<Index>(std::ceil(x - 1e-9 * (1.0 + x)));
  if (r < 1) r = 1;
  if (r > B) r = B;
  return r;
}

/// rank-th smallest value (one-based rank).
template <typename Derived>
double order_statistic(const Eigen::DenseBase<Derived>& values, Index rank) {
  std::vector<double> v(static_cast<std::size_t>(values.size()));
  for (Index i = 0; i < values.size(); ++i) v[static_cast<std::size_t>(i)] = values(i);
  auto nth = v.begin() + (rank - 1);
  std::nth_element(v.begin(), nth, v.end(), [](double a, double b) {
    // NaN sorts last, as +inf does.
    if (std::isnan(a)) return false;
    if (std::isnan(b)) return true;
    return a < b;
  });
  return *nth;
}

/// Right-continuous (1 - alpha) order-statistic quantile at rank ceil((1 - alpha) B).
template <typename Derived>
CriticalValue critical_value(const Eigen::DenseBase<Derived>& values, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(Errc::InvalidArgument, "alpha must lie in (0, 1)");
  if (values.size() < 1) throw Error(Errc::InvalidArgument, "empty bootstrap ensemble");
  CriticalValue cv;
  cv.alpha = alpha;
  cv.rank = quantile_rank(values.size(), 1.0 - alpha);
  cv.c = order_statistic(values, cv.rank);
  return cv;
}

inline CriticalValue critical_value(const BootstrapEnsemble& ensemble, double alpha) {
  return critical_value(ensemble.values, alpha);
}

// Single-replicate statistics.

/// inf over theta-hat of max over Psi-hat_theta of v*_{theta,j}.
double dr_statistic(const MultiplierDraw& draw, const MomentModel& model, const Sample& sample,
                    const MinMaxResult& fit);

/// inf over Theta(eta) of max_j {v*_{theta,j} + centering_j(theta)}.
double pr_statistic(const MultiplierDraw& draw, const MomentModel& model, const Sample& sample,
                    const NullRestriction& restriction, const PrOptions& options,
                    const SearchConfig& cfg = {});

inline double mr_statistic(double dr_value, double pr_value) { return std::min(dr_value, pr_value); }

/// inf over Theta(eta) of max over the binding indices at theta of v*_{theta,j}.
double naive_statistic(const MultiplierDraw& draw, const MomentModel& model, const Sample& sample,
                       const NullRestriction& restriction, const SearchConfig& cfg = {});

// Whole ensembles, evaluated for every replicate of a bank at once.

BootstrapEnsemble dr_ensemble(const MultiplierBank& bank, const MomentModel& model,
                              const Sample& sample, const MinMaxResult& fit, std::size_t threads = 1);

BootstrapEnsemble pr_ensemble(const MultiplierBank& bank, const MomentModel& model,
                              const Sample& sample, const NullRestriction& restriction,
                              const PrOptions& options, const std::vector<VectorXd>& warm_starts,
                              const BootstrapSearch& search);

BootstrapEnsemble naive_ensemble(const MultiplierBank& bank, const MomentModel& model,
                                 const Sample& sample, const NullRestriction& restriction,
                                 const std::vector<VectorXd>& warm_starts, const BootstrapSearch& search);

/// Replicate-wise minimum; both ensembles must come from the same bank.
BootstrapEnsemble mr_ensemble(const BootstrapEnsemble& dr, const BootstrapEnsemble& pr);

/// Replicate-wise inf over Theta(eta) of max_j {v*_{theta,j} + rule(stud(theta))_j}.
/// Every replicate is first evaluated on a shared set of starting thetas via
/// one matrix product per point, then refined locally from its own best
/// start with at most search.max_evals evaluations.
VectorXd profile_replicates(const MultiplierBank& bank, const MomentModel& model,
                            const Sample& sample, const NullRestriction& restriction,
                            const CenteringRule& rule, const std::vector<VectorXd>& warm_starts,
                            const BootstrapSearch& search, long* evals = nullptr);

}  // namespace mmi
