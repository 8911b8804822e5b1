#pragma once

#include <optional>
#include <vector>

#include "mmi/model.hpp"
#include "mmi/optimize.hpp"

namespace mmi {

struct MinMaxConfig {
  SearchConfig search;
  /// Margin M_n for the near-binding sets; when empty the sets are left
  /// unfilled and can be attached later with select_near_binding().
  std::optional<double> margin;
};

struct MinMaxResult {
  double T_n = 0.0;
  ProfiledFit fit;
  /// Theta-hat_n(eta) under the configured argmin policy.
  std::vector<VectorXd> theta_hat;
  /// Studentized moments at each theta-hat point.
  std::vector<VectorXd> stud_at_theta_hat;
  /// Psi-hat_theta for each theta-hat point (zero-based indices, ascending).
  std::vector<std::vector<Index>> psi_hat;
  double M_n_used = 0.0;
};

/// Indices j with stud_j >= max stud - margin. Never empty for p >= 1;
/// a margin of +inf selects every index.
std::vector<Index> near_binding(const VectorXd& stud, double margin);

/// T_n(eta) = inf over Theta(eta) of max_j sqrt(n) mbar_j / sigma_j.
MinMaxResult minmax_statistic(const MomentModel& model, const Sample& sample,
                              const NullRestriction& restriction, const MinMaxConfig& cfg = {});

void select_near_binding(MinMaxResult& result, double margin);

}  // namespace mmi
