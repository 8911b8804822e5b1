#include "mmi/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mmi/rng.hpp"

namespace mmi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFeasibleTol = 1e-12;

using Key = std::pair<double, double>;

bool key_less(const Key& a, const Key& b) {
  if (a.first != b.first) return a.first < b.first;
  return a.second < b.second;
}

VectorXd clamp(const VectorXd& z, const VectorXd& lo, const VectorXd& hi) {
  return z.cwiseMax(lo).cwiseMin(hi);
}

// Orthonormal basis of the null space of A (d x k).
MatrixXd null_space(const MatrixXd& A, Index& rank) {
  const Index d = A.cols();
  Eigen::ColPivHouseholderQR<MatrixXd> qr(A.transpose());
  qr.setThreshold(1e-12);
  rank = qr.rank();
  const MatrixXd q = qr.householderQ() * MatrixXd::Identity(d, d);
  return q.rightCols(d - rank);
}

}  // namespace

NullRestriction NullRestriction::fixed_coordinates(const ThetaBox& box,
                                                   const std::vector<std::pair<Index, double>>& pins) {
  const Index d = box.dim();
  NullRestriction r;
  r.kind_ = Kind::FixedCoordinates;
  r.box_ = box;
  r.A_ = MatrixXd::Zero(static_cast<Index>(pins.size()), d);
  r.eta_.resize(static_cast<Index>(pins.size()));
  r.offset_ = VectorXd::Zero(d);
  std::vector<bool> pinned(static_cast<std::size_t>(d), false);
  for (std::size_t k = 0; k < pins.size(); ++k) {
    const auto [s, value] = pins[k];
    if (s < 0 || s >= d)
      throw Error(Errc::InvalidArgument, "pinned coordinate " + std::to_string(s + 1) + " out of range");
    if (pinned[static_cast<std::size_t>(s)])
      throw Error(Errc::InvalidArgument, "coordinate " + std::to_string(s + 1) + " pinned twice");
    if (!(value >= box.lower(s) && value <= box.upper(s)))
      throw Error(Errc::InfeasibleRestriction,
                  "eta for coordinate " + std::to_string(s + 1) + " lies outside the parameter box");
    pinned[static_cast<std::size_t>(s)] = true;
    r.A_(static_cast<Index>(k), s) = 1.0;
    r.eta_(static_cast<Index>(k)) = value;
    r.offset_(s) = value;
  }
  std::vector<Index> free;
  for (Index k = 0; k < d; ++k) {
    if (pinned[static_cast<std::size_t>(k)]) continue;
    if (box.upper(k) > box.lower(k))
      free.push_back(k);
    else
      r.offset_(k) = box.lower(k);
  }
  const Index f = static_cast<Index>(free.size());
  r.basis_ = MatrixXd::Zero(d, f);
  r.z_lower_.resize(f);
  r.z_upper_.resize(f);
  for (Index c = 0; c < f; ++c) {
    const Index k = free[static_cast<std::size_t>(c)];
    r.basis_(k, c) = 1.0;
    r.z_lower_(c) = box.lower(k);
    r.z_upper_(c) = box.upper(k);
  }
  return r;
}

NullRestriction NullRestriction::whole_box(const ThetaBox& box) { return fixed_coordinates(box, {}); }

NullRestriction NullRestriction::affine(const ThetaBox& box, const MatrixXd& A, const VectorXd& eta) {
  const Index d = box.dim();
  if (A.cols() != d || A.rows() != eta.size() || A.rows() == 0)
    throw Error(Errc::InvalidArgument, "affine restriction has mismatched dimensions");
  NullRestriction r;
  r.kind_ = Kind::Affine;
  r.box_ = box;
  r.A_ = A;
  r.eta_ = eta;

  Index rank = 0;
  r.basis_ = null_space(A, rank);
  const Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A);

  // Alternating projections between {A theta = eta} and the box.
  VectorXd theta = cod.solve(eta);
  if ((A * theta - eta).norm() > 1e-9 * (1.0 + eta.norm()))
    throw Error(Errc::InfeasibleRestriction, "affine constraint A theta = eta has no solution");
  const MatrixXd proj = r.basis_ * r.basis_.transpose();
  for (int it = 0; it < 10000; ++it) {
    const VectorXd clipped = theta.cwiseMax(box.lower).cwiseMin(box.upper);
    if ((clipped - theta).cwiseAbs().maxCoeff() <= 1e-13) break;
    const VectorXd base = cod.solve(eta);
    theta = base + proj * (clipped - base);
  }
  r.offset_ = theta;
  if (r.violation(theta) > 1e-9)
    throw Error(Errc::InfeasibleRestriction, "affine null set does not meet the parameter box");

  const Index f = r.basis_.cols();
  r.z_lower_.resize(f);
  r.z_upper_.resize(f);
  for (Index c = 0; c < f; ++c) {
    double lo = 0.0;
    double hi = 0.0;
    for (Index k = 0; k < d; ++k) {
      const double a = r.basis_(k, c) * (box.lower(k) - theta(k));
      const double b = r.basis_(k, c) * (box.upper(k) - theta(k));
      lo += std::min(a, b);
      hi += std::max(a, b);
    }
    r.z_lower_(c) = lo;
    r.z_upper_(c) = hi;
  }
  return r;
}

VectorXd NullRestriction::to_theta(const VectorXd& z) const { return offset_ + basis_ * z; }

VectorXd NullRestriction::to_free(const VectorXd& theta) const {
  return basis_.transpose() * (theta - offset_);
}

double NullRestriction::violation(const VectorXd& theta) const {
  if (kind_ == Kind::FixedCoordinates) return 0.0;
  const VectorXd below = box_.lower - theta;
  const VectorXd above = theta - box_.upper;
  return std::max({0.0, below.maxCoeff(), above.maxCoeff()});
}

bool NullRestriction::contains(const VectorXd& theta, double tol) const {
  if (theta.size() != box_.dim()) return false;
  if (!box_.contains(theta, tol)) return false;
  if (A_.rows() == 0) return true;
  return ((A_ * theta - eta_).cwiseAbs().array() <= tol * (1.0 + eta_.cwiseAbs().array())).all();
}

std::vector<VectorXd> ProfiledFit::selected(ArgminPolicy policy) const {
  if (policy == ArgminPolicy::Singleton || argmin_set.empty()) return {minimizer};
  return argmin_set;
}

double extended_max(const Eigen::Ref<const VectorXd>& v) {
  double m = -kInf;
  for (Index j = 0; j < v.size(); ++j) {
    const double x = v(j);
    if (std::isnan(x)) return kInf;
    if (x > m) m = x;
  }
  return m;
}

MatrixXd halton_points(Index count, Index dims, std::uint64_t seed) {
  static constexpr int primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                                   43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};
  constexpr Index max_dims = static_cast<Index>(sizeof(primes) / sizeof(primes[0]));
  MatrixXd out(count, dims);
  Engine engine = make_stream(seed, StreamDomain::Search, 0);
  for (Index m = 0; m < dims; ++m) {
    const double shift = uniform01(engine);
    const int base = primes[m % max_dims];
    // Beyond the tabulated primes, dimensions reuse a base with an extra
    // digit-dependent offset; only reachable for d_theta > 25.
    const double extra = m >= max_dims ? uniform01(engine) : 0.0;
    for (Index k = 0; k < count; ++k) {
      std::uint64_t i = static_cast<std::uint64_t>(k) + 1;
      double f = 1.0;
      double r = 0.0;
      while (i > 0) {
        f /= base;
        r += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
        i /= static_cast<std::uint64_t>(base);
      }
      const double u = r + shift + extra;
      out(k, m) = u - std::floor(u);
    }
  }
  return out;
}

std::vector<VectorXd> low_discrepancy_thetas(const NullRestriction& restriction, Index count,
                                             std::uint64_t seed) {
  std::vector<VectorXd> out;
  const Index f = restriction.free_dims();
  if (f == 0) {
    out.push_back(restriction.offset());
    return out;
  }
  const MatrixXd u = halton_points(count, f, seed);
  const VectorXd width = restriction.free_upper() - restriction.free_lower();
  for (Index k = 0; k < count; ++k) {
    const VectorXd z = restriction.free_lower() + u.row(k).transpose().cwiseProduct(width);
    out.push_back(restriction.to_theta(z));
  }
  return out;
}

LocalSearchResult nelder_mead(const KeyedObjective& objective, const VectorXd& z0, Key f0,
                              const VectorXd& lower, const VectorXd& upper,
                              const LocalSearchOptions& options) {
  const Index k = z0.size();
  const VectorXd width = upper - lower;
  const double scale = std::max(width.maxCoeff(), 1e-300);

  LocalSearchResult best;
  best.z = z0;
  best.violation = f0.first;
  best.value = f0.second;
  long evals = 0;
  bool converged = false;
  double step_frac = options.initial_step;

  auto eval = [&](const VectorXd& z) {
    ++evals;
    return objective(z);
  };

  std::vector<VectorXd> pts(static_cast<std::size_t>(k + 1));
  std::vector<Key> vals(static_cast<std::size_t>(k + 1));
  std::vector<std::size_t> order(static_cast<std::size_t>(k + 1));

  for (int round = 0; round <= options.restarts; ++round) {
    const Key round_start{best.violation, best.value};
    pts[0] = best.z;
    vals[0] = round_start;
    for (Index i = 0; i < k; ++i) {
      VectorXd z = best.z;
      const double s = step_frac * width(i);
      z(i) = z(i) + s <= upper(i) ? z(i) + s : z(i) - s;
      pts[static_cast<std::size_t>(i + 1)] = clamp(z, lower, upper);
      vals[static_cast<std::size_t>(i + 1)] = eval(pts[static_cast<std::size_t>(i + 1)]);
    }
    bool round_converged = false;
    while (evals < options.max_evals) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return key_less(vals[a], vals[b]); });
      {
        std::vector<VectorXd> p2;
        std::vector<Key> v2;
        p2.reserve(order.size());
        v2.reserve(order.size());
        for (auto o : order) {
          p2.push_back(std::move(pts[o]));
          v2.push_back(vals[o]);
        }
        pts.swap(p2);
        vals.swap(v2);
      }
      const Key& fb = vals[0];
      const Key& fw = vals[static_cast<std::size_t>(k)];
      double size = 0.0;
      for (Index i = 1; i <= k; ++i)
        size = std::max(size, (pts[static_cast<std::size_t>(i)] - pts[0]).cwiseAbs().maxCoeff());
      const bool same = fb == fw;
      const double spread = same ? 0.0 : (fb.first != fw.first ? kInf : fw.second - fb.second);
      const double ftol = options.ftol * (1.0 + (std::isfinite(fb.second) ? std::abs(fb.second) : 0.0));
      if (size <= options.xtol * scale && spread <= ftol) {
        round_converged = true;
        break;
      }
      if (size <= 1e-3 * options.xtol * scale) break;

      VectorXd centroid = VectorXd::Zero(k);
      for (Index i = 0; i < k; ++i) centroid += pts[static_cast<std::size_t>(i)];
      centroid /= static_cast<double>(k);
      const VectorXd& worst = pts[static_cast<std::size_t>(k)];

      const VectorXd xr = clamp(centroid + (centroid - worst), lower, upper);
      const Key fr = eval(xr);
      if (key_less(fr, fb)) {
        const VectorXd xe = clamp(centroid + 2.0 * (centroid - worst), lower, upper);
        const Key fe = eval(xe);
        if (key_less(fe, fr)) {
          pts[static_cast<std::size_t>(k)] = xe;
          vals[static_cast<std::size_t>(k)] = fe;
        } else {
          pts[static_cast<std::size_t>(k)] = xr;
          vals[static_cast<std::size_t>(k)] = fr;
        }
        continue;
      }
      if (k == 1 ? false : key_less(fr, vals[static_cast<std::size_t>(k - 1)])) {
        pts[static_cast<std::size_t>(k)] = xr;
        vals[static_cast<std::size_t>(k)] = fr;
        continue;
      }
      bool shrink = false;
      if (key_less(fr, fw)) {
        const VectorXd xc = clamp(centroid + 0.5 * (xr - centroid), lower, upper);
        const Key fc = eval(xc);
        if (!key_less(fr, fc)) {
          pts[static_cast<std::size_t>(k)] = xc;
          vals[static_cast<std::size_t>(k)] = fc;
        } else {
          shrink = true;
        }
      } else {
        const VectorXd xc = clamp(centroid + 0.5 * (worst - centroid), lower, upper);
        const Key fc = eval(xc);
        if (key_less(fc, fw)) {
          pts[static_cast<std::size_t>(k)] = xc;
          vals[static_cast<std::size_t>(k)] = fc;
        } else {
          shrink = true;
        }
      }
      if (shrink) {
        for (Index i = 1; i <= k; ++i) {
          auto& p = pts[static_cast<std::size_t>(i)];
          p = pts[0] + 0.5 * (p - pts[0]);
          vals[static_cast<std::size_t>(i)] = eval(p);
        }
      }
    }
    // The incumbent is the best vertex.
    std::size_t ib = 0;
    for (std::size_t i = 1; i < vals.size(); ++i)
      if (key_less(vals[i], vals[ib])) ib = i;
    const bool improved = key_less(vals[ib], round_start);
    if (improved) {
      best.z = pts[ib];
      best.violation = vals[ib].first;
      best.value = vals[ib].second;
    }
    converged = round_converged;
    if (evals >= options.max_evals) break;
    const double gain = round_start.first != vals[ib].first ? kInf : round_start.second - vals[ib].second;
    const double ftol = options.ftol * (1.0 + (std::isfinite(best.value) ? std::abs(best.value) : 0.0));
    if (round > 0 && !(gain > ftol)) break;
    step_frac = std::max(step_frac * 0.2, 1e3 * options.xtol);
  }
  best.evals = evals;
  best.converged = converged;
  return best;
}

ProfiledFit profile_min(const VectorObjective& objective, const NullRestriction& restriction,
                        const SearchConfig& cfg) {
  struct Record {
    VectorXd theta;
    double value;
  };
  std::vector<Record> records;
  ProfiledFit fit;

  auto eval_theta = [&](const VectorXd& theta) {
    const double v = extended_max(objective(theta));
    ++fit.evals;
    records.push_back({theta, v});
    return v;
  };

  bool have_best = false;
  Key best_key{kInf, kInf};
  VectorXd best_theta;

  if (!cfg.candidates.empty()) {
    for (const auto& c : cfg.candidates) {
      if (!restriction.contains(c)) continue;
      const double v = eval_theta(c);
      if (!have_best || v < best_key.second) {
        have_best = true;
        best_key = {0.0, v};
        best_theta = c;
      }
    }
    if (!have_best) throw Error(Errc::InfeasibleRestriction, "no grid point satisfies the null restriction");
    fit.converged = true;
  } else if (restriction.free_dims() == 0) {
    best_theta = restriction.offset();
    best_key = {0.0, eval_theta(best_theta)};
    have_best = true;
    fit.converged = true;
  } else {
    const Index f = restriction.free_dims();
    const VectorXd& lo = restriction.free_lower();
    const VectorXd& hi = restriction.free_upper();
    const int n_starts = cfg.n_starts > 0 ? cfg.n_starts : std::max(16, 8 * static_cast<int>(f));

    std::vector<VectorXd> starts;
    for (const auto& w : cfg.warm_starts) starts.push_back(clamp(restriction.to_free(w), lo, hi));
    if (restriction.kind() == NullRestriction::Kind::Affine) starts.push_back(VectorXd::Zero(f));
    const MatrixXd u = halton_points(n_starts, f, cfg.seed);
    for (Index s = 0; s < n_starts; ++s)
      starts.push_back(lo + u.row(s).transpose().cwiseProduct(hi - lo));

    KeyedObjective keyed = [&](const VectorXd& z) -> Key {
      const VectorXd theta = restriction.to_theta(z);
      const double viol = restriction.violation(theta);
      if (viol > kFeasibleTol) return {viol, kInf};
      return {0.0, eval_theta(theta)};
    };

    LocalSearchOptions opts;
    opts.max_evals = cfg.max_iters;
    opts.ftol = cfg.tol;
    opts.xtol = cfg.xtol;

    std::vector<Key> start_keys;
    start_keys.reserve(starts.size());
    for (const auto& z : starts) start_keys.push_back(keyed(z));

    for (std::size_t s = 0; s < starts.size(); ++s) {
      const LocalSearchResult res = nelder_mead(keyed, starts[s], start_keys[s], lo, hi, opts);
      const Key k{res.violation, res.value};
      if (!have_best || key_less(k, best_key)) {
        have_best = true;
        best_key = k;
        best_theta = restriction.to_theta(res.z);
        fit.converged = res.converged;
      }
    }
    if (best_key.first > kFeasibleTol)
      throw Error(Errc::InfeasibleRestriction, "search found no point of the null set inside the box");
  }

  if (best_key.second == kInf) throw Error(Errc::NoFiniteValue, "objective is +inf at every evaluated point");

  fit.value = best_key.second;
  fit.minimizer = best_theta;
  const double eps = cfg.eps_argmin >= 0.0 ? cfg.eps_argmin
                                           : (std::isfinite(fit.value) ? 1e-6 * (1.0 + std::abs(fit.value)) : 0.0);
  const double cutoff = std::isfinite(fit.value) ? fit.value + eps : fit.value;
  fit.argmin_set.push_back(fit.minimizer);
  for (const auto& r : records) {
    if (!(r.value <= cutoff)) continue;
    bool duplicate = false;
    for (const auto& a : fit.argmin_set) {
      if ((a - r.theta).cwiseAbs().maxCoeff() <= 1e-3) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) fit.argmin_set.push_back(r.theta);
  }
  return fit;
}

}  // namespace mmi
