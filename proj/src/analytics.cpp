#include "mmi/analytics.hpp"

#include <algorithm>
#include <numbers>

#include "mmi/parallel.hpp"

namespace mmi {

DensityBounds density_bounds(const MinMaxGaussianSpec& spec) {
  detail::check_spec(spec);
  const double N = static_cast<double>(spec.N);
  const double p = static_cast<double>(spec.p);
  const double log_np = std::log(N * p);
  DensityBounds out;
  out.hypothesis_holds = p / std::sqrt(2.0 * std::numbers::pi) > log_np && log_np >= 2.0;
  out.upper = 2.0 * (std::numbers::sqrt2 + 2.0) * std::pow(log_np, 1.5);
  const double log_n = std::log(N);
  if (log_n > 0.0) {
    const double arg = p / (std::sqrt(2.0 * std::numbers::pi) * log_n);
    if (arg > 1.0)
      out.lower = std::max(0.0, (std::numbers::sqrt2 * std::sqrt(std::log(arg)) - 2.0) * log_n / std::numbers::e);
  }
  return out;
}

MatrixSampler iid_normal_sampler() {
  return [](Engine& engine, Eigen::MatrixXd& out) { fill_standard_normal(engine, out); };
}

MatrixSampler rank_one_sampler() {
  return [](Engine& engine, Eigen::MatrixXd& out) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index k = 0; k < out.rows(); ++k) out.row(k).setConstant(normal(engine));
  };
}

std::vector<double> linear_grid(double lo, double hi, int count) {
  if (count < 1) throw Error(Errc::EmptyGrid, "grid needs at least one point");
  std::vector<double> g(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) g[static_cast<std::size_t>(k)] = count == 1 ? lo : lo + (hi - lo) * k / (count - 1);
  return g;
}

McDensity mc_minmax_density(const MinMaxGaussianSpec& spec, const MatrixSampler& sampler,
                            const std::vector<double>& grid, const McDensityConfig& cfg) {
  detail::check_spec(spec);
  if (cfg.B < 100) throw Error(Errc::InvalidArgument, "B must be at least 100");
  McDensity out;
  out.grid = grid;
  out.draws.resize(static_cast<std::size_t>(cfg.B));

  // Draws are grouped in blocks so each worker reuses one matrix buffer.
  const std::size_t block = 1024;
  const std::size_t blocks = (out.draws.size() + block - 1) / block;
  parallel_for(blocks, cfg.threads, [&](std::size_t k) {
    Eigen::MatrixXd m(spec.N, spec.p);
    const std::size_t end = std::min(out.draws.size(), (k + 1) * block);
    for (std::size_t b = k * block; b < end; ++b) {
      Engine engine = make_stream(cfg.seed, StreamDomain::MonteCarlo, b);
      sampler(engine, m);
      out.draws[b] = m.rowwise().maxCoeff().minCoeff();
    }
  });
  std::sort(out.draws.begin(), out.draws.end());

  const double B = static_cast<double>(cfg.B);
  double h = cfg.bandwidth;
  if (!(h > 0.0)) {
    double mean = 0.0;
    for (double x : out.draws) mean += x;
    mean /= B;
    double ss = 0.0;
    for (double x : out.draws) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / B);
    const double iqr = out.draws[static_cast<std::size_t>(0.75 * (B - 1))] -
                       out.draws[static_cast<std::size_t>(0.25 * (B - 1))];
    const double spread = std::min(sd, iqr / 1.349);
    h = 0.9 * (spread > 0.0 ? spread : std::max(sd, 1e-3)) * std::pow(B, -0.2);
  }
  out.bandwidth = h;

  out.density.resize(grid.size());
  out.cdf.resize(grid.size());
  parallel_for(grid.size(), cfg.threads, [&](std::size_t g) {
    const double t = grid[g];
    const auto first = std::lower_bound(out.draws.begin(), out.draws.end(), t - 8.0 * h);
    const auto last = std::upper_bound(out.draws.begin(), out.draws.end(), t + 8.0 * h);
    double s = 0.0;
    for (auto it = first; it != last; ++it) s += normal_pdf((t - *it) / h);
    out.density[g] = s / (B * h);
    out.cdf[g] = static_cast<double>(std::upper_bound(out.draws.begin(), out.draws.end(), t) - out.draws.begin()) / B;
  });
  return out;
}

}  // namespace mmi
