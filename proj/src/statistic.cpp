#include "mmi/statistic.hpp"

#include <cmath>
#include <limits>

namespace mmi {

std::vector<Index> near_binding(const VectorXd& stud, double margin) {
  const double top = extended_max(stud);
  std::vector<Index> out;
  for (Index j = 0; j < stud.size(); ++j) {
    const double s = stud(j);
    // inf - inf is NaN; an index tied at +/-inf with the max is binding.
    const bool keep = s == top || std::isinf(margin) || s >= top - margin;
    if (keep && !std::isnan(s)) out.push_back(j);
  }
  if (out.empty()) {
    for (Index j = 0; j < stud.size(); ++j)
      if (std::isnan(stud(j))) out.push_back(j);
  }
  return out;
}

MinMaxResult minmax_statistic(const MomentModel& model, const Sample& sample,
                              const NullRestriction& restriction, const MinMaxConfig& cfg) {
  MatrixXd scratch;
  VectorXd mbar;
  VectorXd sigma;
  const Index n = sample.n();
  VectorObjective objective = [&](const VectorXd& theta) -> VectorXd {
    model.evaluate_into(sample, theta, scratch);
    column_moments(scratch, mbar, sigma);
    return studentize(mbar, sigma, n);
  };

  MinMaxResult out;
  out.fit = profile_min(objective, restriction, cfg.search);
  out.T_n = out.fit.value;
  out.theta_hat = out.fit.selected(cfg.search.policy);
  for (const auto& theta : out.theta_hat) out.stud_at_theta_hat.push_back(objective(theta));
  if (cfg.margin) select_near_binding(out, *cfg.margin);
  return out;
}

void select_near_binding(MinMaxResult& result, double margin) {
  result.M_n_used = margin;
  result.psi_hat.clear();
  for (const auto& stud : result.stud_at_theta_hat) result.psi_hat.push_back(near_binding(stud, margin));
}

}  // namespace mmi
