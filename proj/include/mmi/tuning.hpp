#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "mmi/bootstrap.hpp"
#include "mmi/model.hpp"
#include "mmi/optimize.hpp"

namespace mmi {

/// 1 / (10 log n).
double default_wbar_gamma(Index n);

struct WbarConfig {
  Index B = 1000;
  double gamma = -1.0;  ///< < 0: default_wbar_gamma(n)
  int n_points = 32;    ///< low-discrepancy thetas added to `extra_thetas`
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::vector<VectorXd> extra_thetas;  ///< e.g. the MinMax argmin points
  std::vector<VectorXd> candidates;    ///< grid mode: these thetas only
};

struct WbarEstimate {
  double wbar = 0.0;
  double gamma = 0.0;
  Index B = 0;
  std::size_t points = 0;
};

/// (1 - gamma) order-statistic quantile over B multiplier draws of the sup
/// of |v*_{theta,j}| over the theta points and all j.
WbarEstimate estimate_wbar(const MomentModel& model, const Sample& sample,
                           const NullRestriction& restriction, const WbarConfig& cfg = {});

/// max over eps in {delta_floor 1.2^k} with eps <= range(values) (always at
/// least delta_floor) of eps^{-1} #{|value - c_hat| <= eps} / B.
double anti_concentration(const VectorXd& values, double c_hat, double delta_floor);

struct LbarResult {
  double l = 0.0;
  bool all_mass_at_c = false;
};

/// m_n-quantile of |value - c_hat|; 0 for m_n >= 1 and, flagged, when more
/// than a fraction m_n of the values sit exactly at c_hat.
LbarResult anti_concentration_lbar(const VectorXd& values, double c_hat, double m_n);

/// 1, r, r^2, ... up to n.
std::vector<double> kappa_grid(double n, double ratio = 1.25);

struct KappaScanPoint {
  double kappa = 0.0;
  double c = 0.0;   ///< (1 - alpha) quantile of the scan ensemble
  double ac = 0.0;  ///< A(W, kappa)
};

struct KappaSelection {
  double kappa = 0.0;
  double ac = std::numeric_limits<double>::quiet_NaN();
  bool satisfied = false;  ///< false: no grid kappa qualified, fallback used
  std::vector<KappaScanPoint> scanned;
};

using AcAtKappa = std::function<KappaScanPoint(double kappa)>;

/// Smallest grid kappa with kappa >= wbar * A(kappa) * n^c_exp, scanning in
/// increasing order and stopping at the first qualifying point. Falls back
/// to sqrt(n) / log n when none qualifies.
KappaSelection select_kappa_on_grid(const std::vector<double>& grid, const AcAtKappa& ac, double wbar,
                                    double n, double c_exp);

struct KappaConfig {
  Index B = 200;
  double c_exp = 0.1;
  double ratio = 1.25;
  double delta_floor = -1.0;  ///< < 0: n^{-1/2}
  Centering centering = Centering::Plain;
  std::uint64_t seed = 0;
  BootstrapSearch search;
  std::vector<VectorXd> warm_starts;
};

/// PR ensemble at one kappa on the KappaScan bank, with its (1 - alpha)
/// quantile and A(W, kappa) around it.
KappaScanPoint kappa_scan_point(const MomentModel& model, const Sample& sample,
                                const NullRestriction& restriction, double wbar, double alpha,
                                double kappa, const KappaConfig& cfg = {});

/// Data-driven kappa: one PR ensemble (reduced B, common multipliers) per
/// grid kappa, A(W, kappa) around that ensemble's own (1 - alpha) quantile.
KappaSelection select_kappa(const MomentModel& model, const Sample& sample,
                            const NullRestriction& restriction, double wbar, double alpha,
                            const KappaConfig& cfg = {});

/// ac [ (log^4(p n^d) / n)^{1/6} + kappa d^{1/2} log(p n^d) / n^{1/2} + wbar / kappa ].
double rate_diagnostic(double p, double d_theta, double n, double kappa, double wbar, double ac);

struct TuningReport {
  double wbar = std::numeric_limits<double>::quiet_NaN();
  double gamma_used = std::numeric_limits<double>::quiet_NaN();
  double M_n = std::numeric_limits<double>::quiet_NaN();
  double kappa_n = std::numeric_limits<double>::quiet_NaN();
  double ac_at_kappa = std::numeric_limits<double>::quiet_NaN();
  double delta_floor = std::numeric_limits<double>::quiet_NaN();
  double diagnostic_lhs = std::numeric_limits<double>::quiet_NaN();
  bool kappa_satisfied = true;
  Index B_used = 0;
  std::uint64_t seed = 0;
};

}  // namespace mmi
