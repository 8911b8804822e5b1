#include "mmi/sn.hpp"

#include <cmath>
#include <string>

#include "mmi/normal.hpp"
#include "mmi/parallel.hpp"

namespace mmi {

double sn_critical_value(double p, double alpha, double n) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(Errc::InvalidArgument, "alpha must lie in (0, 1)");
  if (!(p >= 1.0)) throw Error(Errc::InvalidArgument, "p must be at least 1");
  const double q = normal_upper_quantile(alpha / p);
  if (!(q * q < n))
    throw Error(Errc::QuantileExceedsRoot, "Phi^{-1}(1 - alpha/p)^2 = " + std::to_string(q * q) +
                                               " is not below n = " + std::to_string(n));
  return q / std::sqrt(1.0 - q * q / n);
}

std::vector<Index> sn_near_binding(const VectorXd& stud, double c_gamma) {
  std::vector<Index> out;
  for (Index j = 0; j < stud.size(); ++j)
    if (stud(j) > -2.0 * c_gamma) out.push_back(j);
  return out;
}

double sn_two_step_value(Index j_count, double alpha, double gamma_n, double n) {
  if (j_count < 1) return 0.0;
  return sn_critical_value(static_cast<double>(j_count), alpha - 3.0 * gamma_n, n);
}

namespace {

std::vector<VectorXd> search_points(const NullRestriction& restriction, const SnSearchConfig& cfg) {
  std::vector<VectorXd> points;
  if (!cfg.candidates.empty()) {
    for (const auto& c : cfg.candidates)
      if (restriction.contains(c)) points.push_back(c);
    return points;
  }
  for (const auto& s : cfg.seeds)
    if (restriction.contains(s)) points.push_back(s);
  const Index f = restriction.free_dims();
  const VectorXd& lo = restriction.free_lower();
  const VectorXd& hi = restriction.free_upper();
  if (f == 0) {
    points.push_back(restriction.offset());
  } else if (f <= 2) {
    const int m = f == 1 ? cfg.grid_1d : cfg.grid_2d;
    const int total = f == 1 ? m : m * m;
    for (int k = 0; k < total; ++k) {
      VectorXd z(f);
      int rem = k;
      for (Index d = 0; d < f; ++d) {
        const int idx = rem % m;
        rem /= m;
        z(d) = m == 1 ? 0.5 * (lo(d) + hi(d)) : lo(d) + (hi(d) - lo(d)) * idx / (m - 1);
      }
      const VectorXd theta = restriction.to_theta(z);
      if (restriction.violation(theta) <= 1e-12) points.push_back(theta);
    }
  } else {
    for (auto& t : low_discrepancy_thetas(restriction, cfg.n_points, cfg.seed))
      if (restriction.violation(t) <= 1e-12) points.push_back(std::move(t));
  }
  return points;
}

}  // namespace

SnTwoStepState sn_two_step(const MomentModel& model, const Sample& sample, const NullRestriction& restriction,
                           double alpha, double gamma_n, const SnSearchConfig& cfg) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(Errc::InvalidArgument, "alpha must lie in (0, 1)");
  if (!(gamma_n > 0.0 && gamma_n < alpha / 4.0))
    throw Error(Errc::GammaOutOfRange, "gamma_n must lie in (0, alpha/4)");
  const double n = static_cast<double>(sample.n());
  const double p = static_cast<double>(model.p());

  SnTwoStepState state;
  state.alpha = alpha;
  state.gamma_n = gamma_n;
  state.c_gamma = sn_critical_value(p, gamma_n, n);

  const std::vector<VectorXd> points = search_points(restriction, cfg);
  state.points_examined = points.size();

  std::vector<VectorXd> studs(points.size());
  parallel_for(points.size(), cfg.threads, [&](std::size_t k) {
    studs[k] = standardize(model, sample, points[k]).stud;
  });

  double best = -1.0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (!(extended_max(studs[k]) <= state.c_gamma)) continue;
    std::vector<Index> j = sn_near_binding(studs[k], state.c_gamma);
    const double c = sn_two_step_value(static_cast<Index>(j.size()), alpha, gamma_n, n);
    state.theta_hat_sn.push_back(points[k]);
    state.j_hat.push_back(std::move(j));
    state.c_two_step.push_back(c);
    best = std::max(best, c);
  }
  if (state.theta_hat_sn.empty()) {
    state.fallback = true;
    state.c_final = sn_critical_value(p, alpha - 3.0 * gamma_n, n);
  } else {
    state.c_final = best;
  }
  return state;
}

}  // namespace mmi
