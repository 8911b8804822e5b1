#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "config.hpp"
#include "mmi/analytics.hpp"
#include "mmi/dgp.hpp"
#include "mmi/inference.hpp"
#include "mmi/statistic.hpp"

namespace mmi::cli {

namespace {

std::string num(double x) { return fmt::format("{}", x); }

std::string join_vec(const VectorXd& v) {
  std::string s;
  for (Index k = 0; k < v.size(); ++k) s += (k ? ";" : "") + num(v(k));
  return s;
}

/// Where the CSV and the summary block go.
struct Sinks {
  std::ostream& csv;
  std::ostream& summary;
};

struct Problem {
  std::optional<DgpSpec> dgp;
  std::optional<TabulatedModel> table;
  Sample sample;
  std::vector<VectorXd> candidates;

  const MomentModel& model() const { return dgp ? dgp->model : table->model; }
};

Problem load_problem(RunConfig& c) {
  Problem pr;
  if (c.family == "tabulated") {
    pr.table = load_tabulated(c.table);
    pr.sample = pr.table->sample;
    pr.candidates = pr.table->grid;
    c.n = pr.sample.n();
    return pr;
  }
  try {
    pr.dgp = make_dgp(c.family, c.family_params);
  } catch (const Error& e) {
    if (e.code() == Errc::UnknownKey) throw Error(Errc::UnknownKey, std::string("model.") + e.what());
    throw Error(e.code(), std::string("model.family: ") + e.what());
  }
  if (!c.data.empty()) {
    pr.sample = load_csv(c.data, pr.dgp->columns);
    c.n = pr.sample.n();
  } else {
    pr.sample = pr.dgp->generator(c.n, c.seed);
  }
  return pr;
}

MatrixXd matrix_of(const RunConfig& c, Index d) {
  MatrixXd A(static_cast<Index>(c.matrix.size()), d);
  for (std::size_t r = 0; r < c.matrix.size(); ++r) {
    if (static_cast<Index>(c.matrix[r].size()) != d)
      throw Error(Errc::TypeMismatch, fmt::format("null.matrix: row {} has {} entries, theta has {}", r + 1,
                                                  c.matrix[r].size(), d));
    for (Index k = 0; k < d; ++k) A(static_cast<Index>(r), k) = c.matrix[r][static_cast<std::size_t>(k)];
  }
  return A;
}

/// Fills in the null from the family default when none was configured.
void resolve_null(RunConfig& c, const Problem& pr) {
  if (c.null_type == "affine") return;
  if (c.coords.empty()) {
    for (Index s : pr.dgp->pinned) c.coords.push_back(s + 1);
    if (c.eta.empty())
      for (Index k = 0; k < pr.dgp->eta0.size(); ++k) c.eta.push_back(pr.dgp->eta0(k));
  }
  for (Index s : c.coords)
    if (s > pr.model().d_theta())
      throw Error(Errc::TypeMismatch, fmt::format("null.coords: coordinate {} exceeds d_theta = {}", s, pr.model().d_theta()));
}

NullRestriction restriction_for(const RunConfig& c, const Problem& pr, const std::vector<double>& eta) {
  const ThetaBox& box = pr.model().box();
  if (c.null_type == "affine") {
    VectorXd e = Eigen::Map<const VectorXd>(eta.data(), static_cast<Index>(eta.size()));
    return NullRestriction::affine(box, matrix_of(c, box.dim()), e);
  }
  std::vector<std::pair<Index, double>> pins;
  for (std::size_t k = 0; k < c.coords.size(); ++k) pins.emplace_back(c.coords[k] - 1, eta.at(k));
  return NullRestriction::fixed_coordinates(box, pins);
}

InferenceConfig inference_config(const RunConfig& c, const Problem& pr) {
  InferenceConfig ic;
  ic.B = c.B;
  ic.seed = c.seed;
  ic.threads = c.threads;
  ic.kappa = c.kappa;
  ic.centering = c.centering == "refined" ? Centering::Refined : Centering::Plain;
  ic.wbar_gamma = c.wbar_gamma;
  ic.margin = c.margin;
  ic.c_exp = c.c_exp;
  ic.kappa_B = c.kappa_B;
  ic.sn_gamma = c.sn_gamma;
  ic.forced_critical_value = c.critical_value;
  ic.search.policy = c.policy == "all" ? ArgminPolicy::AllMinimizers : ArgminPolicy::Singleton;
  ic.bootstrap.max_evals = c.max_evals;
  ic.candidates = pr.candidates;
  return ic;
}

std::vector<Method> methods_of(const RunConfig& c) {
  std::vector<Method> m;
  for (const auto& name : c.methods) m.push_back(parse_method(name));
  return m;
}

void write_summary_header(std::ostream& os, const RunConfig& c) {
  os << "# resolved configuration\n" << echo_config(c) << "\n";
}

int cmd_test(RunConfig& c, Sinks& io) {
  Problem pr = load_problem(c);
  resolve_null(c, pr);
  const NullRestriction R = restriction_for(c, pr, c.eta);
  const auto reports = run_tests(pr.model(), pr.sample, R, methods_of(c), c.alphas, inference_config(c, pr));

  io.csv << "eta,method,alpha,n,p,T_n,c,reject,B,seed,wbar,wbar_gamma,M_n,kappa_n,kappa_satisfied,A_kappa,A_final,"
            "delta_floor,diagnostic,sn_fallback,theta_hat,evals,eval_cap\n";
  for (const auto& r : reports) {
    const auto& t = r.tuning;
    io.csv << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", join_vec(r.eta),
                          to_string(r.method), num(r.alpha), pr.sample.n(), pr.model().p(), num(r.T_n), num(r.c),
                          r.reject ? 1 : 0, r.B, r.seed, num(t.wbar), num(t.gamma_used), num(t.M_n), num(t.kappa_n),
                          t.kappa_satisfied ? 1 : 0, num(t.ac_at_kappa), num(r.ac), num(t.delta_floor),
                          num(t.diagnostic_lhs), r.sn_fallback ? 1 : 0, join_vec(r.theta_hat), r.evals, r.eval_cap);
  }
  write_summary_header(io.summary, c);
  io.summary << fmt::format("# test of H0: h(theta) = {} with n = {}, p = {}\n", join_vec(reports.front().eta),
                            pr.sample.n(), pr.model().p());
  for (const auto& r : reports) {
    const auto& t = r.tuning;
    io.summary << fmt::format(
        "{:<5} alpha={}  T_n={}  c={}  reject={}  wbar={}  M_n={}  kappa_n={}  A_kappa={}  A_final={}  diagnostic={}\n",
        to_string(r.method), num(r.alpha), num(r.T_n), num(r.c), r.reject ? 1 : 0, num(t.wbar), num(t.M_n),
        num(t.kappa_n), num(t.ac_at_kappa), num(r.ac), num(t.diagnostic_lhs));
    for (const auto& w : r.warnings) io.summary << "  warning: " << w << "\n";
  }
  return kExitOk;
}

int cmd_cs(RunConfig& c, Sinks& io) {
  Problem pr = load_problem(c);
  const ThetaBox& box = pr.model().box();
  RestrictionAt at;
  double lo = 0.0;
  double hi = 0.0;
  if (c.null_type == "affine") {
    const MatrixXd A = matrix_of(c, box.dim());
    const RowVectorXd a = A.row(0);
    for (Index k = 0; k < box.dim(); ++k) {
      lo += a(k) * (a(k) >= 0 ? box.lower(k) : box.upper(k));
      hi += a(k) * (a(k) >= 0 ? box.upper(k) : box.lower(k));
    }
    at = [box, A](double eta) { return NullRestriction::affine(box, A, VectorXd::Constant(1, eta)); };
  } else {
    if (c.coords.empty()) {
      if (!pr.dgp) throw Error(Errc::MissingRequired, "null.coords: required by the tabulated family");
      c.coords = {pr.dgp->pinned.front() + 1};
    }
    const Index s = c.coords.front() - 1;
    if (s >= box.dim())
      throw Error(Errc::TypeMismatch, fmt::format("null.coords: coordinate {} exceeds d_theta = {}", s + 1, box.dim()));
    lo = box.lower(s);
    hi = box.upper(s);
    at = [box, s](double eta) { return NullRestriction::fixed_coordinates(box, {{s, eta}}); };
  }
  if (!c.eta_lo) c.eta_lo = lo;
  if (!c.eta_hi) c.eta_hi = hi;
  if (!(*c.eta_lo <= *c.eta_hi)) throw Error(Errc::EmptyGrid, "cs.eta_lo: must not exceed cs.eta_hi");
  const std::vector<double> grid = linear_grid(*c.eta_lo, *c.eta_hi, c.eta_points);
  const Method method = parse_method(c.methods.front());
  const double alpha = c.alphas.front();
  const ConfidenceSet set = confidence_set(pr.model(), pr.sample, at, alpha, method, grid, inference_config(c, pr),
                                           c.bisection);

  io.csv << "kind,eta,T_n,c,accepted\n";
  for (const auto& pt : set.points)
    io.csv << fmt::format("{},{},{},{},{}\n", pt.refined ? "refined" : "grid", num(pt.eta), num(pt.T_n), num(pt.c),
                          pt.accepted ? 1 : 0);
  io.csv << fmt::format("lower,{},nan,nan,{}\n", num(set.lower), set.contiguous ? 1 : 0);
  io.csv << fmt::format("upper,{},nan,nan,{}\n", num(set.upper), set.contiguous ? 1 : 0);

  write_summary_header(io.summary, c);
  io.summary << fmt::format("# {} confidence set at level 1 - {} over {} grid points\n", to_string(method), num(alpha),
                            grid.size());
  io.summary << fmt::format("accepted grid points: {}\n", set.accepted.size());
  if (set.contiguous)
    io.summary << fmt::format("interval: [{}, {}]\n", num(set.lower), num(set.upper));
  else
    io.summary << (set.accepted.empty() ? "empty set\n" : "accepted points are not contiguous\n");
  return kExitOk;
}

int cmd_simulate(RunConfig& c, Sinks& io) {
  DgpSpec dgp = [&] {
    try {
      return make_dgp(c.family, c.family_params);
    } catch (const Error& e) {
      if (e.code() == Errc::UnknownKey) throw Error(Errc::UnknownKey, std::string("model.") + e.what());
      throw Error(e.code(), std::string("model.family: ") + e.what());
    }
  }();
  Problem shell;
  shell.dgp = dgp;
  resolve_null(c, shell);
  SimulationConfig sc;
  sc.n = c.n;
  sc.methods = methods_of(c);
  sc.alphas = c.alphas;
  sc.reps = c.reps;
  sc.master_seed = c.seed;
  sc.threads = c.threads;
  if (c.null_type == "affine") throw Error(Errc::TypeMismatch, "null.type: simulate tests the family's subvector null");
  if (c.coords.size() != dgp.pinned.size())
    throw Error(Errc::TypeMismatch, "null.coords: simulate uses the family's pinned coordinates");
  for (std::size_t k = 0; k < c.coords.size(); ++k)
    if (c.coords[k] - 1 != dgp.pinned[k])
      throw Error(Errc::TypeMismatch, "null.coords: simulate uses the family's pinned coordinates");
  sc.eta = Eigen::Map<const VectorXd>(c.eta.data(), static_cast<Index>(c.eta.size()));
  sc.inference = inference_config(c, shell);
  const auto results = simulate_rejection_rates(dgp, sc);

  io.csv << "method,alpha,n,reps,rejections,rate,mc_stderr,median_c\n";
  for (const auto& r : results)
    io.csv << fmt::format("{},{},{},{},{},{},{},{}\n", to_string(r.method), num(r.alpha), c.n, r.reps, r.rejections,
                          num(r.rejection_rate), num(r.mc_stderr), num(r.median_c));
  if (!c.per_rep_output.empty()) {
    std::ofstream f(c.per_rep_output);
    if (!f) throw Error(Errc::Io, "cannot write '" + c.per_rep_output + "'");
    f << "rep,seed,method,alpha,T_n,c,reject\n";
    for (const auto& r : results)
      for (std::size_t k = 0; k < r.T_n.size(); ++k)
        f << fmt::format("{},{},{},{},{},{},{}\n", k, r.seeds[k], to_string(r.method), num(r.alpha), num(r.T_n[k]),
                         num(r.c[k]), static_cast<int>(r.reject[k]));
  }
  write_summary_header(io.summary, c);
  io.summary << fmt::format("# {} repetitions of {} with n = {}\n", c.reps, dgp.name, c.n);
  for (const auto& r : results) {
    io.summary << fmt::format("{:<5} alpha={}  rate={}  mc_stderr={}  median_c={}\n", to_string(r.method),
                              num(r.alpha), num(r.rejection_rate), num(r.mc_stderr), num(r.median_c));
    if (r.method == Method::Naive) io.summary << "  warning: NAIVE is not a valid test; it is included to show over-rejection\n";
  }
  return kExitOk;
}

int cmd_tune(RunConfig& c, Sinks& io) {
  Problem pr = load_problem(c);
  resolve_null(c, pr);
  const NullRestriction R = restriction_for(c, pr, c.eta);
  const InferenceConfig ic = inference_config(c, pr);
  const double n = static_cast<double>(pr.sample.n());
  const double alpha = c.alphas.front();

  MinMaxConfig mm;
  mm.search = ic.search;
  mm.search.seed = c.seed;
  mm.search.candidates = pr.candidates;
  const MinMaxResult fit = minmax_statistic(pr.model(), pr.sample, R, mm);

  WbarConfig wc;
  wc.B = c.B;
  wc.gamma = c.wbar_gamma.value_or(-1.0);
  wc.n_points = ic.wbar_points;
  wc.seed = c.seed;
  wc.threads = c.threads;
  wc.extra_thetas = fit.theta_hat;
  wc.candidates = pr.candidates;
  const WbarEstimate w = estimate_wbar(pr.model(), pr.sample, R, wc);

  KappaConfig kc;
  kc.B = c.kappa_B;
  kc.c_exp = c.c_exp;
  kc.centering = ic.centering;
  kc.seed = c.seed;
  kc.search = ic.bootstrap;
  kc.search.seed = c.seed;
  kc.search.threads = c.threads;
  kc.search.candidates = pr.candidates;
  kc.warm_starts = fit.theta_hat;
  KappaSelection ks;
  if (c.kappa) {
    const KappaScanPoint point = kappa_scan_point(pr.model(), pr.sample, R, w.wbar, alpha, *c.kappa, kc);
    ks.kappa = *c.kappa;
    ks.ac = point.ac;
    ks.satisfied = ks.kappa >= w.wbar * point.ac * std::pow(n, c.c_exp);
    ks.scanned = {point};
  } else {
    ks = select_kappa(pr.model(), pr.sample, R, w.wbar, alpha, kc);
  }
  TuningReport t;
  t.wbar = w.wbar;
  t.gamma_used = w.gamma;
  t.M_n = c.margin ? *c.margin : w.wbar * std::log(n);
  t.kappa_n = ks.kappa;
  t.ac_at_kappa = ks.ac;
  t.kappa_satisfied = ks.satisfied;
  t.delta_floor = 1.0 / std::sqrt(n);
  t.diagnostic_lhs = rate_diagnostic(static_cast<double>(pr.model().p()), static_cast<double>(pr.model().d_theta()), n,
                                     t.kappa_n, t.wbar, t.ac_at_kappa);
  t.B_used = c.B;
  t.seed = c.seed;

  std::vector<std::pair<std::string, std::string>> rows = {
      {"T_n", num(fit.T_n)},
      {"alpha", num(alpha)},
      {"wbar", num(t.wbar)},
      {"wbar_gamma", num(t.gamma_used)},
      {"M_n", num(t.M_n)},
      {"kappa_n", num(t.kappa_n)},
      {"kappa_satisfied", t.kappa_satisfied ? "1" : "0"},
      {"A_kappa", num(t.ac_at_kappa)},
      {"delta_floor", num(t.delta_floor)},
      {"diagnostic", num(t.diagnostic_lhs)},
      {"B", fmt::format("{}", t.B_used)},
      {"kappa_B", fmt::format("{}", c.kappa_B)},
      {"seed", fmt::format("{}", t.seed)},
  };
  for (std::size_t k = 0; k < ks.scanned.size(); ++k) {
    rows.emplace_back(fmt::format("scan.{}.kappa", k + 1), num(ks.scanned[k].kappa));
    rows.emplace_back(fmt::format("scan.{}.c", k + 1), num(ks.scanned[k].c));
    rows.emplace_back(fmt::format("scan.{}.A", k + 1), num(ks.scanned[k].ac));
  }
  io.csv << "name,value\n";
  for (const auto& [k, v] : rows) io.csv << k << "," << v << "\n";
  write_summary_header(io.summary, c);
  io.summary << "# tuning values\n";
  for (std::size_t k = 0; k < 13; ++k) io.summary << fmt::format("{:<16}{}\n", rows[k].first, rows[k].second);
  if (!t.kappa_satisfied) io.summary << "warning: no grid kappa met the data-driven condition; used sqrt(n)/log(n)\n";
  return kExitOk;
}

int cmd_density(RunConfig& c, Sinks& io) {
  const MinMaxGaussianSpec spec{c.N, c.p};
  const std::vector<double> grid = c.t ? std::vector<double>{*c.t} : linear_grid(c.t_lo, c.t_hi, c.t_points);
  const DensityBounds bounds = density_bounds(spec);
  std::optional<McDensity> mc;
  if (c.mc_draws > 0) {
    McDensityConfig mcfg;
    mcfg.B = c.mc_draws;
    mcfg.bandwidth = c.bandwidth;
    mcfg.seed = c.seed;
    mcfg.threads = c.threads;
    mc = mc_minmax_density(spec, iid_normal_sampler(), grid, mcfg);
  }
  io.csv << "t,f,F,upper,lower,hypothesis" << (mc ? ",mc_f,mc_F" : "") << "\n";
  for (std::size_t k = 0; k < grid.size(); ++k) {
    io.csv << fmt::format("{},{},{},{},{},{}", num(grid[k]), num(minmax_density(spec, grid[k])),
                          num(minmax_cdf(spec, grid[k])), num(bounds.upper), num(bounds.lower),
                          bounds.hypothesis_holds ? 1 : 0);
    if (mc) io.csv << fmt::format(",{},{}", num(mc->density[k]), num(mc->cdf[k]));
    io.csv << "\n";
  }
  write_summary_header(io.summary, c);
  io.summary << fmt::format("# min over N = {} rows of the max over p = {} iid N(0,1) columns\n", c.N, c.p);
  if (c.t)
    io.summary << fmt::format("f({}) = {}\nF({}) = {}\n", num(*c.t), num(minmax_density(spec, *c.t)), num(*c.t),
                              num(minmax_cdf(spec, *c.t)));
  io.summary << fmt::format("density bounds: lower = {}, upper = {}, hypothesis = {}\n", num(bounds.lower),
                            num(bounds.upper), bounds.hypothesis_holds ? 1 : 0);
  if (!bounds.hypothesis_holds)
    io.summary << "warning: p / sqrt(2 pi) > log(N p) >= 2 fails; the bounds are not guaranteed\n";
  return kExitOk;
}

struct Flag {
  const char* name;
  const char* key;
  const char* help;
};

const Flag kFlags[] = {
    {"--seed", "run.seed", "master seed"},
    {"--threads", "run.threads", "worker threads (results do not depend on it)"},
    {"--output", "run.output", "CSV output path (default: stdout)"},
    {"--per-rep-output", "run.per_rep_output", "simulate: per-repetition CSV path"},
    {"--model", "model.family", "model family: failcase, box-1d, many-failcase, tabulated"},
    {"--table", "model.table", "tabulated model CSV"},
    {"--data", "data.path", "data CSV (omit to simulate from the family)"},
    {"--n", "data.n", "simulated sample size"},
    {"--null-type", "null.type", "subvector or affine"},
    {"--coords", "null.coords", "pinned coordinates, one-based, comma separated"},
    {"--eta", "null.eta", "tested values, comma separated"},
    {"--matrix", "null.matrix", "affine constraint rows, ';' separated"},
    {"--method", "method.name", "sn, sn2s, dr, pr, mr or naive (comma list)"},
    {"--alpha", "method.alpha", "level (comma list)"},
    {"--B", "method.B", "bootstrap replicates"},
    {"--kappa", "method.kappa", "fixed PR kappa (default: data-driven)"},
    {"--gamma", "method.gamma", "two-step SN pre-test level (default alpha/10)"},
    {"--wbar-gamma", "method.wbar_gamma", "tail level for wbar (default 1/(10 log n))"},
    {"--margin", "method.margin", "DR margin M_n (default wbar log n)"},
    {"--centering", "method.centering", "PR centering: plain or refined"},
    {"--critical-value", "method.critical_value", "force the critical value"},
    {"--policy", "method.policy", "argmin policy: singleton or all"},
    {"--c-exp", "method.c_exp", "exponent c in the kappa rule"},
    {"--kappa-B", "method.kappa_B", "replicates per kappa in the scan"},
    {"--max-evals", "method.max_evals", "per-replicate evaluation cap"},
    {"--eta-lo", "cs.eta_lo", "cs: grid start"},
    {"--eta-hi", "cs.eta_hi", "cs: grid end"},
    {"--eta-points", "cs.eta_points", "cs: grid size"},
    {"--bisection", "cs.bisection", "cs: bisection steps per boundary"},
    {"--reps", "simulate.reps", "simulate: repetitions"},
    {"--N", "density.N", "density: rows"},
    {"--p", "density.p", "density: columns"},
    {"--t", "density.t", "density: single evaluation point"},
    {"--t-lo", "density.t_lo", "density: grid start"},
    {"--t-hi", "density.t_hi", "density: grid end"},
    {"--t-points", "density.t_points", "density: grid size"},
    {"--mc-draws", "density.mc_draws", "density: Monte Carlo draws (0: none)"},
    {"--bandwidth", "density.bandwidth", "density: kernel bandwidth (default Silverman)"},
};

int classify(const Error& e) {
  if (e.is_config_error()) return kExitConfig;
  switch (e.code()) {
    case Errc::MissingColumn:
    case Errc::NonNumericCell:
    case Errc::TooFewRows:
    case Errc::NegativeInstrumentValue:
    case Errc::EmptyModel:
    case Errc::Io:
      return kExitData;
    default:
      return kExitInternal;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Inference for functions of partially identified parameters in moment inequality models", "mmi"};
  app.require_subcommand(0, 1);
  std::string config_path;
  std::string write_config;
  std::map<std::string, std::string> flag_values;
  std::vector<std::string> params;

  const auto add_options = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "sectioned key=value config file");
    sub->add_option("--write-config", write_config, "write the resolved configuration to this path");
    sub->add_option("--param", params, "family parameter as key=value (repeatable)");
    for (const auto& f : kFlags) sub->add_option(f.name, flag_values[f.key], f.help);
  };
  add_options(&app);
  const std::map<std::string, std::string> descriptions = {
      {"test", "test H0: h(theta) = eta"},
      {"cs", "confidence set for a scalar h(theta) by test inversion"},
      {"simulate", "Monte Carlo rejection rates on a built-in family"},
      {"tune", "data-driven tuning values (wbar, M_n, kappa_n, A)"},
      {"density", "min-max Gaussian density, CDF and bounds"}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : descriptions) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_options(sub);
    subs.push_back(sub);
  }

  if (args.empty()) {
    err << app.help();
    return kExitConfig;
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    Assignments assignments;
    if (!config_path.empty()) assignments = read_config_file(config_path);
    for (CLI::App* sub : subs)
      if (sub->parsed()) assignments.emplace_back("run.command", sub->get_name());
    for (const auto& f : kFlags) {
      // Options are shared by name across the app and its subcommands.
      std::size_t count = app.count(f.name);
      for (CLI::App* sub : subs) count += sub->parsed() ? sub->count(f.name) : 0;
      if (count) assignments.emplace_back(f.key, flag_values[f.key]);
    }
    for (const auto& p : params) {
      const auto eq = p.find('=');
      if (eq == std::string::npos) throw Error(Errc::TypeMismatch, "--param: expected key=value, got '" + p + "'");
      assignments.emplace_back("model." + p.substr(0, eq), p.substr(eq + 1));
    }
    RunConfig cfg = resolve_config(assignments);

    std::ofstream file;
    std::ostringstream summary_buf;
    if (!cfg.output.empty()) {
      file.open(cfg.output);
      if (!file) throw Error(Errc::Io, "cannot write '" + cfg.output + "'");
    }
    std::ostream& csv = cfg.output.empty() ? out : static_cast<std::ostream&>(file);
    std::ostream& summary = cfg.output.empty() ? err : out;
    std::ostringstream csv_buf;
    Sinks io{csv_buf, summary_buf};

    int code = kExitOk;
    if (cfg.command == "test") code = cmd_test(cfg, io);
    else if (cfg.command == "cs") code = cmd_cs(cfg, io);
    else if (cfg.command == "simulate") code = cmd_simulate(cfg, io);
    else if (cfg.command == "tune") code = cmd_tune(cfg, io);
    else code = cmd_density(cfg, io);

    csv << csv_buf.str();
    csv.flush();
    summary << summary_buf.str();
    if (!write_config.empty()) {
      std::ofstream wc(write_config);
      if (!wc) throw Error(Errc::Io, "cannot write '" + write_config + "'");
      wc << echo_config(cfg);
    }
    return code;
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return classify(e);
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace mmi::cli
