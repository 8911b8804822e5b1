#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "mmi/error.hpp"
#include "mmi/normal.hpp"
#include "mmi/rng.hpp"

namespace mmi {

/// Z = min over N rows of the max over p columns of iid N(0,1) entries.
struct MinMaxGaussianSpec {
  long N = 1;
  long p = 1;
};

namespace detail {

/// log(1 - exp(a)) for a <= 0.
template <typename Scalar>
Scalar log1mexp(Scalar a) {
  using std::exp;
  using std::expm1;
  using std::log;
  using std::log1p;
  const Scalar ln2 = Scalar(0.693147180559945309417232121458176568L);
  if (a > -ln2) return log(-expm1(a));
  return log1p(-exp(a));
}

inline void check_spec(const MinMaxGaussianSpec& spec) {
  if (spec.N < 1 || spec.p < 1) throw Error(Errc::InvalidArgument, "N and p must be at least 1");
}

}  // namespace detail

/// log(1 - Phi(t)^p).
template <typename Scalar>
Scalar log_one_minus_cdf_pow(Scalar t, long p) {
  return detail::log1mexp(Scalar(p) * log_normal_cdf(t));
}

/// f_Z(t) = N p (1 - Phi^p)^{N-1} Phi^{p-1} phi, assembled in log space.
template <typename Scalar = double>
Scalar minmax_density(const MinMaxGaussianSpec& spec, Scalar t) {
  using std::exp;
  using std::log;
  detail::check_spec(spec);
  if (std::isinf(static_cast<double>(t))) return Scalar(0);
  const Scalar log_phi = Scalar(-0.5) * t * t - Scalar(0.918938533204672741780329736405617640L);
  Scalar s = log(Scalar(spec.N)) + log(Scalar(spec.p)) + log_phi;
  if (spec.p > 1) s += Scalar(spec.p - 1) * log_normal_cdf(t);
  if (spec.N > 1) s += Scalar(spec.N - 1) * log_one_minus_cdf_pow(t, spec.p);
  return exp(s);
}

/// F_Z(t) = 1 - (1 - Phi^p)^N.
template <typename Scalar = double>
Scalar minmax_cdf(const MinMaxGaussianSpec& spec, Scalar t) {
  using std::expm1;
  detail::check_spec(spec);
  if (t == std::numeric_limits<Scalar>::infinity()) return Scalar(1);
  if (t == -std::numeric_limits<Scalar>::infinity()) return Scalar(0);
  return -expm1(Scalar(spec.N) * log_one_minus_cdf_pow(t, spec.p));
}

struct DensityBounds {
  double upper = 0.0;
  double lower = 0.0;
  bool hypothesis_holds = false;  ///< p / sqrt(2 pi) > log(N p) >= 2
};

/// upper = 2 (sqrt 2 + 2) log^{3/2}(N p);
/// lower = max(0, (sqrt 2 log^{1/2}(p / (sqrt(2 pi) log N)) - 2) log N / e),
/// reported as 0 when the inner log argument is not above 1.
DensityBounds density_bounds(const MinMaxGaussianSpec& spec);

/// Fills an N x p matrix with one draw.
using MatrixSampler = std::function<void(Engine& engine, Eigen::MatrixXd& out)>;

/// iid N(0,1) entries.
MatrixSampler iid_normal_sampler();
/// Every column equal to one N(0,1) vector of length N.
MatrixSampler rank_one_sampler();

struct McDensityConfig {
  long B = 100000;
  double bandwidth = -1.0;  ///< <= 0: Silverman's rule
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct McDensity {
  std::vector<double> grid;
  std::vector<double> density;  ///< Gaussian-kernel estimate
  std::vector<double> cdf;      ///< empirical CDF
  std::vector<double> draws;    ///< sorted min-max values
  double bandwidth = 0.0;
};

/// Monte Carlo min-max distribution; draw b uses stream(seed, MonteCarlo, b).
McDensity mc_minmax_density(const MinMaxGaussianSpec& spec, const MatrixSampler& sampler,
                            const std::vector<double>& grid, const McDensityConfig& cfg = {});

/// Evenly spaced points from lo to hi inclusive.
std::vector<double> linear_grid(double lo, double hi, int count);

}  // namespace mmi
