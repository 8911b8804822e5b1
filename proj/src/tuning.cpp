#include "mmi/tuning.hpp"

#include <algorithm>
#include <cmath>

#include "mmi/parallel.hpp"

namespace mmi {

double default_wbar_gamma(Index n) { return 1.0 / (10.0 * std::log(static_cast<double>(n))); }

WbarEstimate estimate_wbar(const MomentModel& model, const Sample& sample, const NullRestriction& restriction,
                           const WbarConfig& cfg) {
  const double gamma = cfg.gamma < 0.0 ? default_wbar_gamma(sample.n()) : cfg.gamma;
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error(Errc::GammaOutOfRange, "wbar gamma must lie in (0, 1)");
  if (cfg.B < 1) throw Error(Errc::InvalidArgument, "B must be positive");

  std::vector<VectorXd> points;
  if (!cfg.candidates.empty()) {
    for (const auto& c : cfg.candidates)
      if (restriction.contains(c)) points.push_back(c);
  } else {
    for (const auto& t : cfg.extra_thetas)
      if (restriction.contains(t)) points.push_back(t);
    if (restriction.free_dims() == 0) {
      points.push_back(restriction.offset());
    } else {
      for (auto& t : low_discrepancy_thetas(restriction, cfg.n_points, derive_seed(cfg.seed, StreamDomain::Wbar, 1)))
        if (restriction.violation(t) <= 1e-12) points.push_back(std::move(t));
    }
  }
  if (points.empty()) throw Error(Errc::InfeasibleRestriction, "no theta point available for wbar");

  const MultiplierBank bank = draw_multiplier_bank(sample.n(), cfg.B, cfg.seed, StreamDomain::Wbar, cfg.threads);
  std::vector<VectorXd> sups(points.size());
  parallel_for(points.size(), cfg.threads, [&](std::size_t k) {
    const MomentSnapshot snap = snapshot(model, sample, points[k]);
    sups[k] = process_matrix(snap, bank).cwiseAbs().colwise().maxCoeff().transpose();
  });
  VectorXd sup = VectorXd::Zero(cfg.B);
  for (const auto& s : sups) sup = sup.cwiseMax(s);

  WbarEstimate out;
  out.gamma = gamma;
  out.B = cfg.B;
  out.points = points.size();
  out.wbar = order_statistic(sup, quantile_rank(cfg.B, 1.0 - gamma));
  return out;
}

namespace {

std::vector<double> sorted_distances(const VectorXd& values, double c_hat) {
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(values.size()));
  for (Index i = 0; i < values.size(); ++i) {
    const double x = std::abs(values(i) - c_hat);
    d.push_back(std::isnan(x) ? std::numeric_limits<double>::infinity() : x);
  }
  std::sort(d.begin(), d.end());
  return d;
}

}  // namespace

double anti_concentration(const VectorXd& values, double c_hat, double delta_floor) {
  if (!(delta_floor > 0.0)) throw Error(Errc::InvalidArgument, "delta_floor must be positive");
  if (values.size() < 1) throw Error(Errc::InvalidArgument, "no replicate values");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Index i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values(i))) continue;
    lo = std::min(lo, values(i));
    hi = std::max(hi, values(i));
  }
  const double range = hi >= lo ? hi - lo : 0.0;
  const std::vector<double> d = sorted_distances(values, c_hat);
  const double B = static_cast<double>(values.size());
  double best = 0.0;
  for (double eps = delta_floor;; eps *= 1.2) {
    const auto count = std::upper_bound(d.begin(), d.end(), eps) - d.begin();
    best = std::max(best, static_cast<double>(count) / B / eps);
    if (eps * 1.2 > range) break;
  }
  return best;
}

LbarResult anti_concentration_lbar(const VectorXd& values, double c_hat, double m_n) {
  if (!(m_n > 0.0)) throw Error(Errc::InvalidArgument, "target mass must be positive");
  if (values.size() < 1) throw Error(Errc::InvalidArgument, "no replicate values");
  LbarResult out;
  if (m_n >= 1.0) return out;
  const std::vector<double> d = sorted_distances(values, c_hat);
  const double B = static_cast<double>(values.size());
  const auto at_c = std::upper_bound(d.begin(), d.end(), 0.0) - d.begin();
  if (static_cast<double>(at_c) / B > m_n) {
    out.all_mass_at_c = true;
    return out;
  }
  const Index rank = quantile_rank(values.size(), m_n);
  out.l = d[static_cast<std::size_t>(rank - 1)];
  return out;
}

std::vector<double> kappa_grid(double n, double ratio) {
  if (!(ratio > 1.0)) throw Error(Errc::InvalidArgument, "kappa grid ratio must exceed 1");
  std::vector<double> grid;
  for (double k = 1.0; k <= n * (1.0 + 1e-12); k *= ratio) grid.push_back(k);
  if (grid.empty()) throw Error(Errc::EmptyGrid, "kappa grid is empty");
  return grid;
}

KappaSelection select_kappa_on_grid(const std::vector<double>& grid, const AcAtKappa& ac, double wbar, double n,
                                    double c_exp) {
  if (grid.empty()) throw Error(Errc::EmptyGrid, "kappa grid is empty");
  if (!(wbar >= 0.0)) throw Error(Errc::InvalidArgument, "wbar must be nonnegative");
  if (!(c_exp > 0.0)) throw Error(Errc::InvalidArgument, "c_exp must be positive");
  const double scale = std::pow(n, c_exp);
  KappaSelection out;
  for (double kappa : grid) {
    const KappaScanPoint point = ac(kappa);
    out.scanned.push_back(point);
    if (kappa >= wbar * point.ac * scale) {
      out.kappa = kappa;
      out.ac = point.ac;
      out.satisfied = true;
      return out;
    }
  }
  out.kappa = std::max(1.0, std::sqrt(n) / std::log(n));
  out.satisfied = false;
  return out;
}

namespace {

KappaScanPoint scan_point(const MultiplierBank& bank, const MomentModel& model, const Sample& sample,
                          const NullRestriction& restriction, double wbar, double alpha, double kappa,
                          const KappaConfig& cfg) {
  const double delta = cfg.delta_floor > 0.0 ? cfg.delta_floor : 1.0 / std::sqrt(static_cast<double>(sample.n()));
  PrOptions options;
  options.kappa = kappa;
  options.centering = cfg.centering;
  options.wbar = wbar;
  const BootstrapEnsemble ens = pr_ensemble(bank, model, sample, restriction, options, cfg.warm_starts, cfg.search);
  KappaScanPoint point;
  point.kappa = kappa;
  point.c = critical_value(ens, alpha).c;
  point.ac = anti_concentration(ens.values, point.c, delta);
  return point;
}

}  // namespace

KappaScanPoint kappa_scan_point(const MomentModel& model, const Sample& sample, const NullRestriction& restriction,
                                double wbar, double alpha, double kappa, const KappaConfig& cfg) {
  const MultiplierBank bank =
      draw_multiplier_bank(sample.n(), cfg.B, cfg.seed, StreamDomain::KappaScan, cfg.search.threads);
  return scan_point(bank, model, sample, restriction, wbar, alpha, kappa, cfg);
}

KappaSelection select_kappa(const MomentModel& model, const Sample& sample, const NullRestriction& restriction,
                            double wbar, double alpha, const KappaConfig& cfg) {
  const double n = static_cast<double>(sample.n());
  const MultiplierBank bank =
      draw_multiplier_bank(sample.n(), cfg.B, cfg.seed, StreamDomain::KappaScan, cfg.search.threads);
  AcAtKappa ac = [&](double kappa) { return scan_point(bank, model, sample, restriction, wbar, alpha, kappa, cfg); };
  KappaSelection out = select_kappa_on_grid(kappa_grid(n, cfg.ratio), ac, wbar, n, cfg.c_exp);
  if (!out.satisfied) out.ac = ac(out.kappa).ac;
  return out;
}

double rate_diagnostic(double p, double d_theta, double n, double kappa, double wbar, double ac) {
  const double L = std::log(p) + d_theta * std::log(n);
  return ac * (std::pow(std::pow(L, 4.0) / n, 1.0 / 6.0) + kappa * std::sqrt(d_theta) * L / std::sqrt(n) +
               wbar / kappa);
}

}  // namespace mmi
