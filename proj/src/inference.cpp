#include "mmi/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "mmi/parallel.hpp"
#include "mmi/statistic.hpp"

namespace mmi {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string lower(std::string s) {
  for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

const char* kNaiveWarning =
    "NAIVE is not a valid test: its bootstrap ignores the penalization and selection that the valid methods apply";

}  // namespace

const char* to_string(Method method) {
  switch (method) {
    case Method::SN: return "SN";
    case Method::SN2S: return "SN2S";
    case Method::DR: return "DR";
    case Method::PR: return "PR";
    case Method::MR: return "MR";
    case Method::Naive: return "NAIVE";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  const std::string s = lower(name);
  if (s == "sn") return Method::SN;
  if (s == "sn2s") return Method::SN2S;
  if (s == "dr") return Method::DR;
  if (s == "pr") return Method::PR;
  if (s == "mr") return Method::MR;
  if (s == "naive") return Method::Naive;
  throw Error(Errc::InvalidArgument, "unknown method '" + name + "' (expected sn, sn2s, dr, pr, mr or naive)");
}

bool is_bootstrap(Method method) {
  return method == Method::DR || method == Method::PR || method == Method::MR || method == Method::Naive;
}

std::vector<TestReport> run_tests(const MomentModel& model, const Sample& sample, const NullRestriction& restriction,
                                  const std::vector<Method>& methods, const std::vector<double>& alphas,
                                  const InferenceConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  if (methods.empty() || alphas.empty()) throw Error(Errc::InvalidArgument, "no method or level requested");
  for (double a : alphas)
    if (!(a > 0.0 && a < 1.0)) throw Error(Errc::InvalidArgument, "alpha must lie in (0, 1)");
  if (cfg.B < 1) throw Error(Errc::InvalidArgument, "B must be positive");
  if (cfg.kappa && !(*cfg.kappa >= 1.0)) throw Error(Errc::KappaTooSmall, "kappa must be at least 1");
  const auto uses = [&](Method m) { return std::find(methods.begin(), methods.end(), m) != methods.end(); };
  const double n = static_cast<double>(sample.n());
  const bool forced = cfg.forced_critical_value.has_value();

  MinMaxConfig mm;
  mm.search = cfg.search;
  mm.search.seed = cfg.seed;
  mm.search.candidates = cfg.candidates;
  MinMaxResult fit = minmax_statistic(model, sample, restriction, mm);

  BootstrapSearch bsearch = cfg.bootstrap;
  bsearch.seed = cfg.seed;
  bsearch.threads = cfg.threads;
  bsearch.candidates = cfg.candidates;
  const std::vector<VectorXd>& warm = fit.theta_hat;

  const bool need_pr = uses(Method::PR) || uses(Method::MR);
  const bool need_dr = uses(Method::DR) || uses(Method::MR);
  const bool need_wbar =
      !forced && (need_dr || (need_pr && (!cfg.kappa || cfg.centering == Centering::Refined)));

  TuningReport base;
  base.seed = cfg.seed;
  base.B_used = cfg.B;
  base.delta_floor = 1.0 / std::sqrt(n);
  if (need_wbar) {
    WbarConfig wc;
    wc.B = cfg.B;
    wc.gamma = cfg.wbar_gamma.value_or(-1.0);
    wc.n_points = cfg.wbar_points;
    wc.seed = cfg.seed;
    wc.threads = cfg.threads;
    wc.extra_thetas = fit.theta_hat;
    wc.candidates = cfg.candidates;
    const WbarEstimate w = estimate_wbar(model, sample, restriction, wc);
    base.wbar = w.wbar;
    base.gamma_used = w.gamma;
  }
  if (need_wbar) base.M_n = cfg.margin ? *cfg.margin : base.wbar * std::log(n);
  if (need_dr && !forced) select_near_binding(fit, base.M_n);

  std::optional<MultiplierBank> bank;
  if (!forced && (need_dr || need_pr || uses(Method::Naive)))
    bank = draw_multiplier_bank(sample.n(), cfg.B, cfg.seed, StreamDomain::Bootstrap, cfg.threads);

  std::optional<BootstrapEnsemble> dr;
  if (bank && need_dr) dr = dr_ensemble(*bank, model, sample, fit, cfg.threads);
  std::optional<BootstrapEnsemble> naive;
  if (bank && uses(Method::Naive)) naive = naive_ensemble(*bank, model, sample, restriction, warm, bsearch);

  std::map<double, BootstrapEnsemble> pr_by_kappa;
  const auto pr_at = [&](double kappa) -> const BootstrapEnsemble& {
    auto it = pr_by_kappa.find(kappa);
    if (it != pr_by_kappa.end()) return it->second;
    PrOptions options;
    options.kappa = kappa;
    options.centering = cfg.centering;
    options.wbar = std::isnan(base.wbar) ? 0.0 : base.wbar;
    return pr_by_kappa.emplace(kappa, pr_ensemble(*bank, model, sample, restriction, options, warm, bsearch))
        .first->second;
  };

  std::vector<TestReport> reports;
  for (Method method : methods) {
    for (double alpha : alphas) {
      TestReport r;
      r.eta = restriction.eta();
      r.T_n = fit.T_n;
      r.method = method;
      r.alpha = alpha;
      r.B = cfg.B;
      r.seed = cfg.seed;
      r.theta_hat = fit.fit.minimizer;
      r.evals = fit.fit.evals;
      r.tuning = base;
      if (method == Method::Naive) r.warnings.push_back(kNaiveWarning);
      if (forced) {
        r.c = *cfg.forced_critical_value;
      } else if (method == Method::SN) {
        r.c = sn_critical_value(static_cast<double>(model.p()), alpha, n);
      } else if (method == Method::SN2S) {
        SnSearchConfig sc = cfg.sn;
        sc.seed = cfg.seed;
        sc.threads = cfg.threads;
        sc.seeds = fit.theta_hat;
        sc.candidates = cfg.candidates;
        const SnTwoStepState st =
            sn_two_step(model, sample, restriction, alpha, cfg.sn_gamma.value_or(alpha / 10.0), sc);
        r.c = st.c_final;
        r.sn_fallback = st.fallback;
        if (st.fallback) r.warnings.push_back("no theta passed the SN pre-test; used c^SN(p, alpha - 3 gamma)");
      } else {
        const BootstrapEnsemble* ens = nullptr;
        BootstrapEnsemble mr;
        if (method == Method::DR) ens = &*dr;
        if (method == Method::Naive) ens = &*naive;
        if (method == Method::PR || method == Method::MR) {
          if (cfg.kappa) {
            r.tuning.kappa_n = *cfg.kappa;
          } else {
            KappaConfig kc;
            kc.B = cfg.kappa_B;
            kc.c_exp = cfg.c_exp;
            kc.ratio = cfg.kappa_ratio;
            kc.centering = cfg.centering;
            kc.seed = cfg.seed;
            kc.search = bsearch;
            kc.warm_starts = warm;
            const KappaSelection ks = select_kappa(model, sample, restriction, base.wbar, alpha, kc);
            r.tuning.kappa_n = ks.kappa;
            r.tuning.ac_at_kappa = ks.ac;
            r.tuning.kappa_satisfied = ks.satisfied;
            if (!ks.satisfied) r.warnings.push_back("no grid kappa met the data-driven condition; used sqrt(n)/log(n)");
          }
          const BootstrapEnsemble& pr = pr_at(r.tuning.kappa_n);
          if (method == Method::PR) {
            ens = &pr;
          } else {
            mr = mr_ensemble(*dr, pr);
            ens = &mr;
          }
          if (!std::isnan(r.tuning.wbar) && !std::isnan(r.tuning.ac_at_kappa))
            r.tuning.diagnostic_lhs = rate_diagnostic(static_cast<double>(model.p()), static_cast<double>(model.d_theta()),
                                                      n, r.tuning.kappa_n, r.tuning.wbar, r.tuning.ac_at_kappa);
        }
        const CriticalValue cv = critical_value(*ens, alpha);
        r.c = cv.c;
        r.ac = anti_concentration(ens->values, cv.c, base.delta_floor);
        r.evals += ens->evals;
        r.eval_cap = ens->eval_cap;
      }
      r.reject = rejects(r.T_n, r.c);
      reports.push_back(std::move(r));
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (auto& r : reports) r.seconds = secs;
  return reports;
}

TestReport run_test(const MomentModel& model, const Sample& sample, const NullRestriction& restriction, Method method,
                    double alpha, const InferenceConfig& cfg) {
  return run_tests(model, sample, restriction, {method}, {alpha}, cfg).front();
}

ConfidenceSet confidence_set(const MomentModel& model, const Sample& sample, const RestrictionAt& restriction_at,
                             double alpha, Method method, const std::vector<double>& eta_grid,
                             const InferenceConfig& cfg, int bisection_steps) {
  if (eta_grid.empty()) throw Error(Errc::EmptyGrid, "eta grid is empty");
  if (!std::is_sorted(eta_grid.begin(), eta_grid.end()))
    throw Error(Errc::InvalidArgument, "eta grid must be sorted");

  const auto probe = [&](double eta, bool refined) {
    CsPoint pt;
    pt.eta = eta;
    pt.refined = refined;
    try {
      const NullRestriction restriction = restriction_at(eta);
      const TestReport r = run_test(model, sample, restriction, method, alpha, cfg);
      pt.T_n = r.T_n;
      pt.c = r.c;
      pt.accepted = !r.reject;
    } catch (const Error& e) {
      // An empty null set cannot contain the parameter.
      if (e.code() != Errc::InfeasibleRestriction) throw;
      pt.T_n = std::numeric_limits<double>::infinity();
      pt.c = kNaN;
      pt.accepted = false;
    }
    return pt;
  };

  ConfidenceSet out;
  std::vector<CsPoint> grid_points;
  for (double eta : eta_grid) grid_points.push_back(probe(eta, false));

  std::vector<CsPoint> extra;
  double lower_edge = kNaN;
  double upper_edge = kNaN;
  for (std::size_t k = 0; k + 1 < grid_points.size(); ++k) {
    const CsPoint& a = grid_points[k];
    const CsPoint& b = grid_points[k + 1];
    if (a.accepted == b.accepted) continue;
    double in = a.accepted ? a.eta : b.eta;
    double out_eta = a.accepted ? b.eta : a.eta;
    for (int s = 0; s < bisection_steps; ++s) {
      const CsPoint mid = probe(0.5 * (in + out_eta), true);
      extra.push_back(mid);
      (mid.accepted ? in : out_eta) = mid.eta;
    }
    if (b.accepted) lower_edge = in;
    else upper_edge = in;
  }

  out.points = grid_points;
  out.points.insert(out.points.end(), extra.begin(), extra.end());
  std::stable_sort(out.points.begin(), out.points.end(),
                   [](const CsPoint& x, const CsPoint& y) { return x.eta < y.eta; });
  for (const auto& pt : grid_points)
    if (pt.accepted) out.accepted.push_back(pt.eta);

  int runs = 0;
  for (std::size_t k = 0; k < grid_points.size(); ++k)
    if (grid_points[k].accepted && (k == 0 || !grid_points[k - 1].accepted)) ++runs;
  out.contiguous = runs == 1;
  if (out.contiguous) {
    out.lower = std::isnan(lower_edge) ? out.accepted.front() : lower_edge;
    out.upper = std::isnan(upper_edge) ? out.accepted.back() : upper_edge;
  }
  return out;
}

std::vector<SimulationResult> simulate_rejection_rates(const DgpSpec& dgp, const SimulationConfig& cfg) {
  if (cfg.reps < 1) throw Error(Errc::InvalidArgument, "reps must be positive");
  const VectorXd eta = cfg.eta.value_or(dgp.eta0);
  const NullRestriction restriction = dgp.null_at(eta);
  const std::size_t reps = static_cast<std::size_t>(cfg.reps);
  std::vector<std::vector<TestReport>> per_rep(reps);
  std::vector<std::uint64_t> seeds(reps);
  for (std::size_t r = 0; r < reps; ++r) seeds[r] = derive_seed(cfg.master_seed, StreamDomain::Repetition, r);

  parallel_for(reps, cfg.threads, [&](std::size_t r) {
    const Sample sample = dgp.generator(cfg.n, seeds[r]);
    InferenceConfig ic = cfg.inference;
    ic.seed = seeds[r];
    ic.threads = 1;
    per_rep[r] = run_tests(dgp.model, sample, restriction, cfg.methods, cfg.alphas, ic);
  });

  std::vector<SimulationResult> out;
  const std::size_t cells = cfg.methods.size() * cfg.alphas.size();
  for (std::size_t k = 0; k < cells; ++k) {
    SimulationResult s;
    s.method = cfg.methods[k / cfg.alphas.size()];
    s.alpha = cfg.alphas[k % cfg.alphas.size()];
    s.reps = cfg.reps;
    s.seeds = seeds;
    for (std::size_t r = 0; r < reps; ++r) {
      const TestReport& t = per_rep[r][k];
      s.T_n.push_back(t.T_n);
      s.c.push_back(t.c);
      s.reject.push_back(t.reject ? 1 : 0);
      s.rejections += t.reject ? 1 : 0;
    }
    s.rejection_rate = static_cast<double>(s.rejections) / static_cast<double>(s.reps);
    s.mc_stderr = std::sqrt(s.rejection_rate * (1.0 - s.rejection_rate) / static_cast<double>(s.reps));
    std::vector<double> cs = s.c;
    std::sort(cs.begin(), cs.end());
    const std::size_t m = cs.size();
    s.median_c = m % 2 == 1 ? cs[m / 2] : 0.5 * (cs[m / 2 - 1] + cs[m / 2]);
    out.push_back(std::move(s));
  }
  return out;
}

SimulationResult simulate_rejection_rate(const DgpSpec& dgp, Index n, Method method, double alpha, Index reps,
                                         std::uint64_t master_seed, const InferenceConfig& cfg, std::size_t threads) {
  SimulationConfig sc;
  sc.n = n;
  sc.methods = {method};
  sc.alphas = {alpha};
  sc.reps = reps;
  sc.master_seed = master_seed;
  sc.threads = threads;
  sc.inference = cfg;
  return simulate_rejection_rates(dgp, sc).front();
}

}  // namespace mmi
