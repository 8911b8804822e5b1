#include "mmi/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <set>

#include "mmi/rng.hpp"

namespace mmi {

NullRestriction DgpSpec::null_at(const VectorXd& eta) const {
  if (eta.size() != static_cast<Index>(pinned.size()))
    throw Error(Errc::InvalidArgument, "eta has " + std::to_string(eta.size()) + " entries, the null pins " +
                                           std::to_string(pinned.size()));
  std::vector<std::pair<Index, double>> pins;
  for (std::size_t k = 0; k < pinned.size(); ++k) pins.emplace_back(pinned[k], eta(static_cast<Index>(k)));
  return NullRestriction::fixed_coordinates(model.box(), pins);
}

namespace {

double take(ParameterMap& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  if (it == params.end()) return fallback;
  const double v = it->second;
  params.erase(it);
  return v;
}

std::vector<std::string> default_columns(Index width) {
  std::vector<std::string> names;
  for (Index j = 0; j < width; ++j) names.push_back("w" + std::to_string(j + 1));
  return names;
}

std::function<Sample(Index, std::uint64_t)> gaussian_generator(VectorXd mean) {
  return [mean = std::move(mean)](Index n, std::uint64_t seed) {
    Engine engine = make_stream(seed, StreamDomain::Data, 0);
    MatrixXd rows(n, mean.size());
    // Row-major fill so a sample of size n is a prefix of a larger one.
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < mean.size(); ++j) rows(i, j) = mean(j) + normal(engine);
    return make_sample(std::move(rows));
  };
}

// k copies of the two-sided failcase pair:
//   m_j = theta1 + theta2 - W_j,  m_{k+j} = W_{k+j} - theta1 - theta2.
DgpSpec failcase_family(const std::string& name, Index k, double half_width) {
  auto eval = [k](const Sample& sample, const VectorXd& theta, MatrixXd& out) {
    const double s = theta(0) + theta(1);
    out.leftCols(k) = (s - sample.rows.leftCols(k).array()).matrix();
    out.rightCols(k) = (sample.rows.rightCols(k).array() - s).matrix();
  };
  DgpSpec spec{name, {}, MomentModel(2, 2 * k, 0, ThetaBox::cube(2, -half_width, half_width), eval),
               default_columns(2 * k), {0}, VectorXd::Zero(1), gaussian_generator(VectorXd::Zero(2 * k))};
  return spec;
}

}  // namespace

std::vector<std::string> dgp_names() { return {"failcase", "box-1d", "many-failcase"}; }

DgpSpec make_dgp(const std::string& name, const ParameterMap& parameters) {
  ParameterMap params = parameters;
  DgpSpec spec = [&]() {
    if (name == "failcase") {
      return failcase_family(name, 1, 1.0);
    }
    if (name == "many-failcase") {
      const double k = take(params, "k", 5.0);
      if (!(k >= 1.0 && k == std::floor(k))) throw Error(Errc::InvalidArgument, "many-failcase: k must be a positive integer");
      DgpSpec s = failcase_family(name, static_cast<Index>(k), 1.0);
      s.parameters["k"] = k;
      return s;
    }
    if (name == "box-1d") {
      // m = theta - W with W ~ N(mu, 1): the identified set is theta <= mu.
      const double mu = take(params, "mu", 0.0);
      const double half_width = take(params, "half_width", 2.0);
      if (!(half_width > 0.0)) throw Error(Errc::InvalidArgument, "box-1d: half_width must be positive");
      auto eval = [](const Sample& sample, const VectorXd& theta, MatrixXd& out) {
        out.col(0) = (theta(0) - sample.rows.col(0).array()).matrix();
      };
      DgpSpec s{name, {{"mu", mu}, {"half_width", half_width}},
                MomentModel(1, 1, 0, ThetaBox::cube(1, -half_width, half_width), eval),
                default_columns(1), {0}, VectorXd::Constant(1, mu),
                gaussian_generator(VectorXd::Constant(1, mu))};
      return s;
    }
    throw Error(Errc::InvalidArgument, "unknown model family '" + name + "'");
  }();
  if (!params.empty()) throw Error(Errc::UnknownKey, name + ": unknown parameter '" + params.begin()->first + "'");
  return spec;
}

TabulatedModel parse_tabulated(std::istream& in) {
  const Sample raw = parse_csv(in);
  const auto& names = raw.column_names;
  Index col_i = -1;
  std::vector<Index> theta_cols;
  std::vector<Index> m_cols;
  for (Index c = 0; c < static_cast<Index>(names.size()); ++c) {
    const std::string& s = names[static_cast<std::size_t>(c)];
    if (s == "i") col_i = c;
    else if (s.rfind("theta", 0) == 0) theta_cols.push_back(c);
    else if (s.rfind("m", 0) == 0) m_cols.push_back(c);
    else throw Error(Errc::MissingColumn, "tabulated model: unexpected column '" + s + "'");
  }
  if (col_i < 0) throw Error(Errc::MissingColumn, "tabulated model: column 'i' missing");
  if (theta_cols.empty()) throw Error(Errc::MissingColumn, "tabulated model: no theta columns");
  if (m_cols.empty()) throw Error(Errc::EmptyModel, "tabulated model: no moment columns");

  const Index d = static_cast<Index>(theta_cols.size());
  const Index p = static_cast<Index>(m_cols.size());
  std::vector<VectorXd> grid;
  std::vector<std::vector<std::pair<Index, RowVectorXd>>> blocks;
  std::set<Index> obs;
  for (Index r = 0; r < raw.n(); ++r) {
    VectorXd theta(d);
    for (Index k = 0; k < d; ++k) theta(k) = raw.rows(r, theta_cols[static_cast<std::size_t>(k)]);
    std::size_t g = 0;
    while (g < grid.size() && (grid[g] - theta).cwiseAbs().maxCoeff() > 1e-12) ++g;
    if (g == grid.size()) {
      grid.push_back(theta);
      blocks.emplace_back();
    }
    const double iv = raw.rows(r, col_i);
    if (iv != std::floor(iv) || iv < 0) throw Error(Errc::NonNumericCell, "tabulated model: row " + std::to_string(r + 2) + ": i must be a nonnegative integer");
    RowVectorXd m(p);
    for (Index j = 0; j < p; ++j) m(j) = raw.rows(r, m_cols[static_cast<std::size_t>(j)]);
    blocks[g].emplace_back(static_cast<Index>(iv), m);
    obs.insert(static_cast<Index>(iv));
  }
  const Index n = static_cast<Index>(obs.size());
  std::vector<Index> obs_index(obs.begin(), obs.end());
  auto tables = std::make_shared<std::vector<MatrixXd>>();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (static_cast<Index>(blocks[g].size()) != n)
      throw Error(Errc::TooFewRows, "tabulated model: grid point " + std::to_string(g + 1) + " has " +
                                        std::to_string(blocks[g].size()) + " observations, expected " + std::to_string(n));
    MatrixXd t(n, p);
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (const auto& [i, m] : blocks[g]) {
      const auto pos = static_cast<std::size_t>(std::lower_bound(obs_index.begin(), obs_index.end(), i) - obs_index.begin());
      if (seen[pos]) throw Error(Errc::InvalidArgument, "tabulated model: duplicate observation " + std::to_string(i));
      seen[pos] = true;
      t.row(static_cast<Index>(pos)) = m;
    }
    tables->push_back(std::move(t));
  }

  ThetaBox box{grid.front(), grid.front()};
  for (const auto& g : grid) {
    box.lower = box.lower.cwiseMin(g);
    box.upper = box.upper.cwiseMax(g);
  }
  auto eval = [grid, tables](const Sample& sample, const VectorXd& theta, MatrixXd& out) {
    for (std::size_t g = 0; g < grid.size(); ++g) {
      if ((grid[g] - theta).cwiseAbs().maxCoeff() <= 1e-9) {
        const MatrixXd& t = (*tables)[g];
        // Sample rows carry observation positions into the table.
        for (Index i = 0; i < sample.n(); ++i) out.row(i) = t.row(static_cast<Index>(sample.rows(i, 0)));
        return;
      }
    }
    throw Error(Errc::ThetaOutOfBox, "tabulated model evaluated off its theta grid");
  };
  MatrixXd positions(n, 1);
  for (Index i = 0; i < n; ++i) positions(i, 0) = static_cast<double>(i);
  return TabulatedModel{MomentModel(d, p, 0, box, eval), grid, make_sample(std::move(positions), {"i"})};
}

TabulatedModel load_tabulated(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open '" + path + "'");
  return parse_tabulated(in);
}

}  // namespace mmi
