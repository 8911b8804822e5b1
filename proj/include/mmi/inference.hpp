#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mmi/bootstrap.hpp"
#include "mmi/dgp.hpp"
#include "mmi/model.hpp"
#include "mmi/optimize.hpp"
#include "mmi/sn.hpp"
#include "mmi/tuning.hpp"

namespace mmi {

enum class Method { SN, SN2S, DR, PR, MR, Naive };

const char* to_string(Method method);
/// Case-insensitive; throws InvalidArgument.
Method parse_method(const std::string& name);
bool is_bootstrap(Method method);

struct InferenceConfig {
  Index B = 1000;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  SearchConfig search;        ///< T_n search; its seed is replaced by `seed`
  BootstrapSearch bootstrap;  ///< per-replicate search; seed and threads replaced
  std::optional<double> kappa;
  Centering centering = Centering::Plain;
  std::optional<double> wbar_gamma;
  std::optional<double> margin;  ///< M_n override
  double c_exp = 0.1;
  Index kappa_B = 200;
  double kappa_ratio = 1.25;
  std::optional<double> sn_gamma;  ///< default alpha / 10
  SnSearchConfig sn;
  int wbar_points = 32;
  /// Replaces every critical value; used to probe the inversion logic.
  std::optional<double> forced_critical_value;
  /// Grid mode: every search is restricted to these thetas.
  std::vector<VectorXd> candidates;
};

struct TestReport {
  VectorXd eta;
  double T_n = 0.0;
  Method method = Method::SN;
  double alpha = 0.0;
  double c = 0.0;
  bool reject = false;
  TuningReport tuning;
  /// A(W) of the final ensemble around c (bootstrap methods only).
  double ac = std::numeric_limits<double>::quiet_NaN();
  Index B = 0;
  std::uint64_t seed = 0;
  VectorXd theta_hat;
  bool sn_fallback = false;
  long evals = 0;
  int eval_cap = 0;
  double seconds = 0.0;
  std::vector<std::string> warnings;
};

/// Reject iff T_n(eta) > c_n(eta, alpha).
inline bool rejects(double T_n, double c) { return T_n > c; }

TestReport run_test(const MomentModel& model, const Sample& sample, const NullRestriction& restriction,
                    Method method, double alpha, const InferenceConfig& cfg = {});

/// Several methods and levels on one sample; T_n, wbar and the multiplier
/// bank are shared. Reports are ordered method-major, then alpha.
std::vector<TestReport> run_tests(const MomentModel& model, const Sample& sample,
                                  const NullRestriction& restriction, const std::vector<Method>& methods,
                                  const std::vector<double>& alphas, const InferenceConfig& cfg = {});

using RestrictionAt = std::function<NullRestriction(double eta)>;

struct CsPoint {
  double eta = 0.0;
  double T_n = 0.0;
  double c = 0.0;
  bool accepted = false;
  bool refined = false;  ///< added by boundary bisection
};

struct ConfidenceSet {
  std::vector<CsPoint> points;  ///< sorted by eta
  std::vector<double> accepted;
  bool contiguous = false;
  /// Accepted-side endpoints of a contiguous run after bisection.
  double lower = std::numeric_limits<double>::quiet_NaN();
  double upper = std::numeric_limits<double>::quiet_NaN();
};

/// {eta in grid : T_n(eta) <= c_n(eta, alpha)}, then 8 bisection steps on
/// every accept/reject boundary between neighbouring grid points.
ConfidenceSet confidence_set(const MomentModel& model, const Sample& sample, const RestrictionAt& restriction_at,
                             double alpha, Method method, const std::vector<double>& eta_grid,
                             const InferenceConfig& cfg = {}, int bisection_steps = 8);

struct SimulationConfig {
  Index n = 1000;
  std::vector<Method> methods{Method::SN};
  std::vector<double> alphas{0.05};
  Index reps = 100;
  std::uint64_t master_seed = 0;
  std::size_t threads = 1;  ///< repetitions run concurrently
  std::optional<VectorXd> eta;  ///< default: the DGP's true value
  InferenceConfig inference;
};

struct SimulationResult {
  Method method = Method::SN;
  double alpha = 0.0;
  Index reps = 0;
  Index rejections = 0;
  double rejection_rate = 0.0;
  double mc_stderr = 0.0;
  double median_c = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> T_n;
  std::vector<double> c;
  std::vector<char> reject;
};

/// Repetition r draws its sample and its bootstrap from
/// derive_seed(master_seed, Repetition, r).
std::vector<SimulationResult> simulate_rejection_rates(const DgpSpec& dgp, const SimulationConfig& cfg);

SimulationResult simulate_rejection_rate(const DgpSpec& dgp, Index n, Method method, double alpha, Index reps,
                                         std::uint64_t master_seed, const InferenceConfig& cfg = {},
                                         std::size_t threads = 1);

}  // namespace mmi
