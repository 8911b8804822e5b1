#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mmi/model.hpp"

namespace mmi {

/// Null set Theta(eta) = {theta in box : h(theta) = eta}, with h either a
/// coordinate projection or an affine map A theta. Internally the set is
/// parametrized as theta = offset + basis * z over a box of free coordinates z.
class NullRestriction {
 public:
  enum class Kind { FixedCoordinates, Affine };

  /// Pins theta_s = value for each (s, value); s is zero-based.
  static NullRestriction fixed_coordinates(const ThetaBox& box,
                                           const std::vector<std::pair<Index, double>>& pins);
  static NullRestriction affine(const ThetaBox& box, const MatrixXd& A, const VectorXd& eta);
  static NullRestriction whole_box(const ThetaBox& box);

  Kind kind() const { return kind_; }
  const VectorXd& eta() const { return eta_; }
  const MatrixXd& constraint_matrix() const { return A_; }
  const ThetaBox& box() const { return box_; }
  Index free_dims() const { return basis_.cols(); }
  const VectorXd& free_lower() const { return z_lower_; }
  const VectorXd& free_upper() const { return z_upper_; }
  /// A point of Theta(eta); z = 0 maps to it.
  const VectorXd& offset() const { return offset_; }

  VectorXd to_theta(const VectorXd& z) const;
  VectorXd to_free(const VectorXd& theta) const;
  /// Largest coordinate-wise distance of theta outside the box.
  double violation(const VectorXd& theta) const;
  bool contains(const VectorXd& theta, double tol = 1e-9) const;

 private:
  Kind kind_ = Kind::FixedCoordinates;
  ThetaBox box_;
  MatrixXd A_;
  VectorXd eta_;
  VectorXd offset_;
  MatrixXd basis_;
  VectorXd z_lower_;
  VectorXd z_upper_;
};

enum class ArgminPolicy { Singleton, AllMinimizers };

struct SearchConfig {
  int n_starts = 0;          ///< 0: max(16, 8 * free_dims)
  int max_iters = 2000;      ///< objective evaluations per local search
  double tol = 1e-10;        ///< relative value tolerance
  double xtol = 1e-10;       ///< simplex size, relative to the free-box width
  double eps_argmin = -1.0;  ///< < 0: 1e-6 (1 + |value|)
  std::uint64_t seed = 0;
  ArgminPolicy policy = ArgminPolicy::Singleton;
  /// Points tried before the low-discrepancy starts (e.g. a previous argmin).
  std::vector<VectorXd> warm_starts;
  /// Non-empty switches to grid mode: only these thetas are evaluated.
  std::vector<VectorXd> candidates;
};

struct ProfiledFit {
  double value = 0.0;
  VectorXd minimizer;
  /// Deduplicated (1e-3 in theta) evaluated points within eps_argmin of the
  /// value; minimizer first.
  std::vector<VectorXd> argmin_set;
  long evals = 0;
  bool converged = false;

  /// Theta-hat according to the policy.
  std::vector<VectorXd> selected(ArgminPolicy policy) const;
};

/// Maps theta to the per-index values whose maximum is minimized.
using VectorObjective = std::function<VectorXd(const VectorXd& theta)>;

/// Extended-real max; NaN counts as +inf.
double extended_max(const Eigen::Ref<const VectorXd>& v);

/// inf over Theta(eta) of max_j objective_j(theta): multistart Nelder-Mead
/// in the free coordinates with box projection, seeded at a shifted Halton
/// sequence. Deterministic given cfg.seed.
ProfiledFit profile_min(const VectorObjective& objective, const NullRestriction& restriction,
                        const SearchConfig& cfg = {});

/// Halton points in [0,1)^dims with a Cranley-Patterson shift from `seed`.
MatrixXd halton_points(Index count, Index dims, std::uint64_t seed);

/// Scaled Halton points inside the free box of the restriction, as thetas.
std::vector<VectorXd> low_discrepancy_thetas(const NullRestriction& restriction, Index count,
                                             std::uint64_t seed);

struct LocalSearchOptions {
  int max_evals = 2000;
  double ftol = 1e-10;
  double xtol = 1e-10;
  double initial_step = 0.1;  ///< fraction of the free-box width
  int restarts = 3;
};

struct LocalSearchResult {
  VectorXd z;
  double violation = 0.0;
  double value = 0.0;
  long evals = 0;
  bool converged = false;
};

/// (violation, value); points are ordered lexicographically so infeasible
/// points are pushed toward feasibility before values are compared.
using KeyedObjective = std::function<std::pair<double, double>(const VectorXd& z)>;

/// Box-projected Nelder-Mead with restarts from the incumbent.
LocalSearchResult nelder_mead(const KeyedObjective& objective, const VectorXd& z0,
                              std::pair<double, double> f0, const VectorXd& lower,
                              const VectorXd& upper, const LocalSearchOptions& options);

}  // namespace mmi
