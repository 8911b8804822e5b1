#include "mmi/bootstrap.hpp"

#include <limits>

#include "mmi/parallel.hpp"

namespace mmi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Per-column mean, divisor-n sd and xi'(m - mbar) for one replicate, using
// Eigen's vectorized reductions: deterministic for a given build, though not
// bit-identical to the sequential column_moments().
struct ReplicateMoments {
  VectorXd mbar;
  VectorXd sigma;
  VectorXd dot;
};

void replicate_moments(const MatrixXd& values, const Eigen::Ref<const VectorXd>& xi, ReplicateMoments& out) {
  const Index p = values.cols();
  const double n = static_cast<double>(values.rows());
  out.mbar.resize(p);
  out.sigma.resize(p);
  out.dot.resize(p);
  for (Index j = 0; j < p; ++j) {
    const double m = values.col(j).sum() / n;
    const auto dev = values.col(j).array() - m;
    out.mbar(j) = m;
    out.sigma(j) = std::sqrt(dev.square().sum() / n);
    out.dot(j) = (xi.array() * dev).sum();
  }
}

// max_j {v*_j + centering_j} for one replicate at one theta.
double replicate_value(const ReplicateMoments& rm, const VectorXd& centering, Index n) {
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  double best = -kInf;
  for (Index j = 0; j < rm.dot.size(); ++j) {
    const double c = centering(j);
    if (c == -kInf) continue;
    if (std::isnan(c) || c == kInf) return kInf;
    const double v = rm.sigma(j) > 0.0 ? rm.dot(j) * inv_sqrt_n / rm.sigma(j) : 0.0;
    best = std::max(best, v + c);
  }
  return best;
}

// Column-wise max of (V + centering) over the rows of V.
VectorXd column_max_centered(const MatrixXd& V, const VectorXd& centering) {
  VectorXd out = VectorXd::Constant(V.cols(), -kInf);
  for (Index j = 0; j < V.rows(); ++j) {
    const double c = centering(j);
    if (c == -kInf) continue;
    if (std::isnan(c) || c == kInf) return VectorXd::Constant(V.cols(), kInf);
    out = out.cwiseMax((V.row(j).array() + c).matrix().transpose());
  }
  return out;
}

std::vector<VectorXd> stage_one_points(const NullRestriction& restriction,
                                       const std::vector<VectorXd>& warm_starts,
                                       const BootstrapSearch& search) {
  std::vector<VectorXd> points;
  if (!search.candidates.empty()) {
    for (const auto& c : search.candidates)
      if (restriction.contains(c)) points.push_back(c);
    if (points.empty()) throw Error(Errc::InfeasibleRestriction, "no grid point satisfies the null restriction");
    return points;
  }
  if (restriction.free_dims() == 0) {
    points.push_back(restriction.offset());
    return points;
  }
  for (const auto& w : warm_starts) {
    const VectorXd z = restriction.to_free(w).cwiseMax(restriction.free_lower()).cwiseMin(restriction.free_upper());
    const VectorXd theta = restriction.to_theta(z);
    if (restriction.violation(theta) <= 1e-12) points.push_back(theta);
  }
  if (restriction.kind() == NullRestriction::Kind::Affine) points.push_back(restriction.offset());
  const int f = static_cast<int>(restriction.free_dims());
  const int n_starts = search.n_starts > 0 ? search.n_starts : std::max(48, 16 * f);
  for (auto& t : low_discrepancy_thetas(restriction, n_starts, derive_seed(search.seed, StreamDomain::Search, 1))) {
    if (restriction.violation(t) <= 1e-12) points.push_back(std::move(t));
  }
  return points;
}

}  // namespace

const char* to_string(BootstrapKind kind) {
  switch (kind) {
    case BootstrapKind::DR: return "DR";
    case BootstrapKind::PR: return "PR";
    case BootstrapKind::MR: return "MR";
    case BootstrapKind::Naive: return "NAIVE";
  }
  return "?";
}

MultiplierDraw draw_multiplier(Index n, Engine& stream) {
  MultiplierDraw draw;
  draw.xi.resize(n);
  fill_standard_normal(stream, draw.xi);
  return draw;
}

VectorXd multiplier_process(const MomentSnapshot& snap, const VectorXd& xi) {
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(snap.scaled_dev.rows()));
  return snap.scaled_dev.transpose() * xi * inv_sqrt_n;
}

MultiplierBank draw_multiplier_bank(Index n, Index B, std::uint64_t seed, StreamDomain domain,
                                    std::size_t threads) {
  MultiplierBank bank;
  bank.seed = seed;
  bank.domain = domain;
  bank.xi.resize(n, B);
  parallel_for(static_cast<std::size_t>(B), threads, [&](std::size_t b) {
    Engine stream = make_stream(seed, domain, b);
    fill_standard_normal(stream, bank.xi.col(static_cast<Index>(b)));
  });
  return bank;
}

MatrixXd process_matrix(const MomentSnapshot& snap, const MultiplierBank& bank) {
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(bank.n()));
  MatrixXd V = snap.scaled_dev.transpose() * bank.xi;
  V *= inv_sqrt_n;
  return V;
}

VectorXd pr_centering(const VectorXd& stud, const PrOptions& options) {
  if (!(options.kappa >= 1.0)) throw Error(Errc::KappaTooSmall, "kappa must be at least 1");
  VectorXd out(stud.size());
  const bool limit = std::isinf(options.kappa);
  for (Index j = 0; j < stud.size(); ++j) {
    const double s = stud(j);
    const double shrunk = limit ? 0.0 : s / options.kappa;
    out(j) = options.centering == Centering::Plain ? shrunk : std::min(shrunk, s + options.wbar);
  }
  return out;
}

VectorXd naive_centering(const VectorXd& stud) {
  VectorXd out = VectorXd::Constant(stud.size(), -kInf);
  for (Index j : near_binding(stud, 0.0)) out(j) = 0.0;
  return out;
}

double dr_statistic(const MultiplierDraw& draw, const MomentModel& model, const Sample& sample,
                    const MinMaxResult& fit) {
  double best = kInf;
  for (std::size_t t = 0; t < fit.theta_hat.size(); ++t) {
    const MomentSnapshot snap = snapshot(model, sample, fit.theta_hat[t]);
    const VectorXd v = multiplier_process(snap, draw.xi);
    double m = -kInf;
    for (Index j : fit.psi_hat.at(t)) m = std::max(m, v(j));
    best = std::min(best, m);
  }
  return best;
}

namespace {

double profile_single(const MultiplierDraw& draw, const MomentModel& model, const Sample& sample,
                      const NullRestriction& restriction, const CenteringRule& rule, const SearchConfig& cfg) {
  MatrixXd values;
  VectorXd mbar;
  VectorXd sigma;
  VectorObjective objective = [&](const VectorXd& theta) -> VectorXd {
    model.evaluate_into(sample, theta, values);
    column_moments(values, mbar, sigma);
    const VectorXd centering = rule(studentize(mbar, sigma, sample.n()));
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(sample.n()));
    VectorXd out(values.cols());
    for (Index j = 0; j < values.cols(); ++j) {
      double v = 0.0;
      if (sigma(j) > 0.0) {
        double s = 0.0;
        for (Index i = 0; i < values.rows(); ++i) s += draw.xi(i) * (values(i, j) - mbar(j));
        v = s * inv_sqrt_n / sigma(j);
      }
      out(j) = centering(j) == -kInf ? -kInf : v + centering(j);
    }
    return out;
  };
  return profile_min(objective, restriction, cfg).value;
}

}  // namespace

double pr_statistic(const MultiplierDraw& draw, const MomentModel& model, const Sample& sample,
                    const NullRestriction& restriction, const PrOptions& options, const SearchConfig& cfg) {
  if (!(options.kappa >= 1.0)) throw Error(Errc::KappaTooSmall, "kappa must be at least 1");
  return profile_single(draw, model, sample, restriction,
                        [&](const VectorXd& stud) { return pr_centering(stud, options); }, cfg);
}

double naive_statistic(const MultiplierDraw& draw, const MomentModel& model, const Sample& sample,
                       const NullRestriction& restriction, const SearchConfig& cfg) {
  return profile_single(draw, model, sample, restriction, naive_centering, cfg);
}

VectorXd profile_replicates(const MultiplierBank& bank, const MomentModel& model, const Sample& sample,
                            const NullRestriction& restriction, const CenteringRule& rule,
                            const std::vector<VectorXd>& warm_starts, const BootstrapSearch& search,
                            long* evals) {
  const Index B = bank.B();
  const std::vector<VectorXd> points = stage_one_points(restriction, warm_starts, search);
  const std::size_t K = points.size();

  // Stage 1: every replicate at every shared point.
  std::vector<VectorXd> point_values(K);
  parallel_for(K, search.threads, [&](std::size_t k) {
    const MomentSnapshot snap = snapshot(model, sample, points[k]);
    point_values[k] = column_max_centered(process_matrix(snap, bank), rule(snap.stud));
  });
  VectorXd best = VectorXd::Constant(B, kInf);
  std::vector<std::size_t> best_point(static_cast<std::size_t>(B), 0);
  for (std::size_t k = 0; k < K; ++k) {
    for (Index b = 0; b < B; ++b) {
      if (point_values[k](b) < best(b)) {
        best(b) = point_values[k](b);
        best_point[static_cast<std::size_t>(b)] = k;
      }
    }
  }
  long total_evals = static_cast<long>(K);

  const bool refine = search.candidates.empty() && restriction.free_dims() > 0 && search.max_evals > 0;
  if (refine) {
    std::vector<long> used(static_cast<std::size_t>(B), 0);
    const VectorXd& lo = restriction.free_lower();
    const VectorXd& hi = restriction.free_upper();
    LocalSearchOptions opts;
    opts.max_evals = search.max_evals;
    opts.xtol = search.xtol;
    opts.ftol = search.ftol;
    opts.initial_step = 0.5 / static_cast<double>(std::max<std::size_t>(K, 2));
    opts.restarts = restriction.free_dims() > 1 ? 1 : 0;
    parallel_for(static_cast<std::size_t>(B), search.threads, [&](std::size_t b) {
      MatrixXd values;
      ReplicateMoments rm;
      const auto xi = bank.xi.col(static_cast<Index>(b));
      KeyedObjective keyed = [&](const VectorXd& z) -> std::pair<double, double> {
        const VectorXd theta = restriction.to_theta(z);
        const double viol = restriction.violation(theta);
        if (viol > 1e-12) return {viol, kInf};
        model.evaluate_into(sample, theta, values);
        replicate_moments(values, xi, rm);
        return {0.0, replicate_value(rm, rule(studentize(rm.mbar, rm.sigma, sample.n())), sample.n())};
      };
      const VectorXd z0 = restriction.to_free(points[best_point[b]]);
      const LocalSearchResult res = nelder_mead(keyed, z0, {0.0, best(static_cast<Index>(b))}, lo, hi, opts);
      used[b] = res.evals;
      if (res.violation == 0.0 && res.value < best(static_cast<Index>(b))) best(static_cast<Index>(b)) = res.value;
    });
    for (long u : used) total_evals += u;
  }
  if (evals) *evals = total_evals;
  return best;
}

BootstrapEnsemble dr_ensemble(const MultiplierBank& bank, const MomentModel& model, const Sample& sample,
                              const MinMaxResult& fit, std::size_t threads) {
  const std::size_t K = fit.theta_hat.size();
  if (fit.psi_hat.size() != K) throw Error(Errc::InvalidArgument, "near-binding sets have not been selected");
  std::vector<VectorXd> per_point(K);
  parallel_for(K, threads, [&](std::size_t t) {
    const MomentSnapshot snap = snapshot(model, sample, fit.theta_hat[t]);
    VectorXd centering = VectorXd::Constant(snap.stud.size(), -kInf);
    for (Index j : fit.psi_hat[t]) centering(j) = 0.0;
    per_point[t] = column_max_centered(process_matrix(snap, bank), centering);
  });
  BootstrapEnsemble ens;
  ens.method = BootstrapKind::DR;
  ens.seed = bank.seed;
  ens.values = VectorXd::Constant(bank.B(), kInf);
  for (const auto& v : per_point) ens.values = ens.values.cwiseMin(v);
  ens.evals = static_cast<long>(K);
  return ens;
}

BootstrapEnsemble pr_ensemble(const MultiplierBank& bank, const MomentModel& model, const Sample& sample,
                              const NullRestriction& restriction, const PrOptions& options,
                              const std::vector<VectorXd>& warm_starts, const BootstrapSearch& search) {
  if (!(options.kappa >= 1.0)) throw Error(Errc::KappaTooSmall, "kappa must be at least 1");
  BootstrapEnsemble ens;
  ens.method = BootstrapKind::PR;
  ens.kappa = options.kappa;
  ens.centering = options.centering;
  ens.seed = bank.seed;
  ens.eval_cap = search.max_evals;
  ens.values = profile_replicates(
      bank, model, sample, restriction, [&](const VectorXd& stud) { return pr_centering(stud, options); },
      warm_starts, search, &ens.evals);
  return ens;
}

BootstrapEnsemble naive_ensemble(const MultiplierBank& bank, const MomentModel& model, const Sample& sample,
                                 const NullRestriction& restriction, const std::vector<VectorXd>& warm_starts,
                                 const BootstrapSearch& search) {
  BootstrapEnsemble ens;
  ens.method = BootstrapKind::Naive;
  ens.seed = bank.seed;
  // NAIVE exists to reproduce a counterexample; its infimum is taken over
  // the shared points only, without per-replicate refinement.
  BootstrapSearch shared = search;
  shared.max_evals = 0;
  ens.eval_cap = 0;
  ens.values = profile_replicates(bank, model, sample, restriction, naive_centering, warm_starts, shared, &ens.evals);
  return ens;
}

BootstrapEnsemble mr_ensemble(const BootstrapEnsemble& dr, const BootstrapEnsemble& pr) {
  if (dr.B() != pr.B() || dr.seed != pr.seed)
    throw Error(Errc::InvalidArgument, "MR needs DR and PR ensembles from the same multiplier bank");
  BootstrapEnsemble ens = pr;
  ens.method = BootstrapKind::MR;
  ens.values = dr.values.cwiseMin(pr.values);
  ens.evals = dr.evals + pr.evals;
  return ens;
}

}  // namespace mmi
