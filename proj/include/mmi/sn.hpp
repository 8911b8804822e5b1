#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mmi/model.hpp"
#include "mmi/optimize.hpp"

namespace mmi {

/// Self-normalized critical value
///   q / sqrt(1 - q^2 / n),  q = Phi^{-1}(1 - alpha / p).
/// Throws QuantileExceedsRoot when q^2 >= n.
double sn_critical_value(double p, double alpha, double n);

struct SnSearchConfig {
  int grid_1d = 401;       ///< exhaustive grid points when free_dims == 1
  int grid_2d = 101;       ///< per-axis points when free_dims == 2
  int n_points = 2048;     ///< Halton points when free_dims > 2
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  /// Extra thetas always examined (typically the MinMax minimizers).
  std::vector<VectorXd> seeds;
  /// Grid mode: only these thetas are examined.
  std::vector<VectorXd> candidates;
};

struct SnTwoStepState {
  double alpha = 0.0;
  double gamma_n = 0.0;
  double c_gamma = 0.0;            ///< c^SN(p, gamma_n)
  std::size_t points_examined = 0;
  std::vector<VectorXd> theta_hat_sn;
  std::vector<std::vector<Index>> j_hat;  ///< J-hat(theta) for each member
  std::vector<double> c_two_step;         ///< c^{SN,2S}(theta, alpha) for each member
  double c_final = 0.0;
  bool fallback = false;  ///< no member found; c_final = c^SN(p, alpha - 3 gamma_n)
};

/// J-hat(theta) = {j : stud_j > -2 c^SN(p, gamma_n)}.
std::vector<Index> sn_near_binding(const VectorXd& stud, double c_gamma);

/// c^SN(|J|, alpha - 3 gamma_n) for |J| >= 1, and 0 for an empty set.
double sn_two_step_value(Index j_count, double alpha, double gamma_n, double n);

SnTwoStepState sn_two_step(const MomentModel& model, const Sample& sample,
                           const NullRestriction& restriction, double alpha, double gamma_n,
                           const SnSearchConfig& cfg = {});

}  // namespace mmi
