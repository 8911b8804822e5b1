#include "mmi/model.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>

namespace mmi {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  std::string out(s.substr(b, e - b));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(trim(std::string_view(line).substr(start)));
      return cells;
    }
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    start = comma + 1;
  }
}

bool parse_finite(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

Sample make_sample(MatrixXd rows, std::vector<std::string> column_names) {
  if (rows.rows() < 2)
    throw Error(Errc::TooFewRows, "sample needs at least 2 rows, got " + std::to_string(rows.rows()));
  if (!rows.allFinite()) throw Error(Errc::NonNumericCell, "sample contains non-finite entries");
  if (column_names.empty()) {
    for (Index j = 0; j < rows.cols(); ++j) column_names.push_back("w" + std::to_string(j + 1));
  }
  if (static_cast<Index>(column_names.size()) != rows.cols())
    throw Error(Errc::InvalidArgument, "column name count does not match sample width");
  return Sample{std::move(rows), std::move(column_names)};
}

Sample parse_csv(std::istream& in, const std::vector<std::string>& schema) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::TooFewRows, "empty CSV input");
  const std::vector<std::string> header = split_csv_line(line);

  std::vector<std::string> names = schema.empty() ? header : schema;
  std::vector<std::size_t> source;
  for (const auto& name : names) {
    std::size_t k = 0;
    while (k < header.size() && header[k] != name) ++k;
    if (k == header.size()) throw Error(Errc::MissingColumn, "column '" + name + "' not in header");
    source.push_back(k);
  }

  std::vector<double> values;
  Index n = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw Error(Errc::NonNumericCell, "row " + std::to_string(n + 1) + " has " +
                                            std::to_string(cells.size()) + " cells, expected " +
                                            std::to_string(header.size()));
    for (std::size_t c = 0; c < source.size(); ++c) {
      double v = 0.0;
      if (!parse_finite(cells[source[c]], v))
        throw Error(Errc::NonNumericCell, "row " + std::to_string(n + 1) + ", column '" +
                                              names[c] + "': '" + cells[source[c]] + "'");
      values.push_back(v);
    }
    ++n;
  }
  MatrixXd rows(n, static_cast<Index>(names.size()));
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < rows.cols(); ++j) rows(i, j) = values[static_cast<std::size_t>(i * rows.cols() + j)];
  return make_sample(std::move(rows), std::move(names));
}

Sample load_csv(const std::string& path, const std::vector<std::string>& schema) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open '" + path + "'");
  return parse_csv(in, schema);
}

bool ThetaBox::contains(const VectorXd& theta, double tol) const {
  if (theta.size() != lower.size()) return false;
  for (Index k = 0; k < theta.size(); ++k) {
    const double slack = tol * (1.0 + std::abs(lower(k)) + std::abs(upper(k)));
    if (!(theta(k) >= lower(k) - slack && theta(k) <= upper(k) + slack)) return false;
  }
  return true;
}

ThetaBox ThetaBox::cube(Index dim, double lo, double hi) {
  return ThetaBox{VectorXd::Constant(dim, lo), VectorXd::Constant(dim, hi)};
}

MomentModel::MomentModel(Index d_theta, Index p_ineq, Index p_eq, ThetaBox box,
                         BatchEvaluator evaluator)
    : d_theta_(d_theta), p_ineq_(p_ineq), p_eq_(p_eq), box_(std::move(box)),
      evaluator_(std::move(evaluator)) {
  if (p_ineq_ + p_eq_ < 1) throw Error(Errc::EmptyModel, "model has no moments");
  if (d_theta_ < 1 || box_.dim() != d_theta_ || box_.upper.size() != d_theta_)
    throw Error(Errc::InvalidArgument, "theta box dimension does not match d_theta");
  for (Index k = 0; k < d_theta_; ++k)
    if (!(box_.lower(k) <= box_.upper(k)))
      throw Error(Errc::InvalidArgument, "empty theta box interval at coordinate " + std::to_string(k + 1));
}

MatrixXd MomentModel::evaluate(const Sample& sample, const VectorXd& theta) const {
  MatrixXd out;
  evaluate_into(sample, theta, out);
  return out;
}

void MomentModel::evaluate_into(const Sample& sample, const VectorXd& theta, MatrixXd& out) const {
  out.resize(sample.n(), p());
  evaluator_(sample, theta, out);
}

double MomentModel::value(const Sample& sample, Index i, const VectorXd& theta, Index j) const {
  Sample one{sample.rows.row(i), sample.column_names};
  MatrixXd out(1, p());
  evaluator_(one, theta, out);
  return out(0, j);
}

MomentModel convert_equalities(Index d_theta, Index p_ineq, Index p_eq, ThetaBox box,
                               BatchEvaluator raw) {
  if (p_ineq < 0 || p_eq < 0 || p_ineq + p_eq < 1)
    throw Error(Errc::EmptyModel, "need at least one inequality or equality");
  if (p_eq == 0) return MomentModel(d_theta, p_ineq, 0, std::move(box), std::move(raw));
  auto converted = [raw = std::move(raw), p_ineq, p_eq](const Sample& sample, const VectorXd& theta,
                                                       MatrixXd& out) {
    // out is already n x (p_ineq + 2 p_eq); the raw evaluator fills the
    // leading block and the negated equalities are appended.
    MatrixXd head(sample.n(), p_ineq + p_eq);
    raw(sample, theta, head);
    out.leftCols(p_ineq + p_eq) = head;
    out.rightCols(p_eq) = -head.rightCols(p_eq);
  };
  return MomentModel(d_theta, p_ineq, p_eq, std::move(box), std::move(converted));
}

BatchEvaluator batch_from_pointwise(std::vector<PointwiseMoment> moments) {
  return [moments = std::move(moments)](const Sample& sample, const VectorXd& theta, MatrixXd& out) {
    for (Index i = 0; i < sample.n(); ++i) {
      const auto row = sample.rows.row(i);
      for (std::size_t j = 0; j < moments.size(); ++j) out(i, static_cast<Index>(j)) = moments[j](row, theta);
    }
  };
}

MomentModel instrument_expand(const ConditionalModel& model, std::vector<Instrument> instruments) {
  if (instruments.empty()) throw Error(Errc::InvalidArgument, "instrument list is empty");
  const Index n_g = static_cast<Index>(instruments.size());
  const Index n_ineq = static_cast<Index>(model.inequalities.size());
  const Index n_eq = static_cast<Index>(model.equalities.size());
  if (n_ineq + n_eq < 1) throw Error(Errc::EmptyModel, "conditional model has no moments");

  auto raw = [model, instruments = std::move(instruments), n_g, n_ineq, n_eq](
                 const Sample& sample, const VectorXd& theta, MatrixXd& out) {
    const auto& cols = model.conditioning_columns;
    RowVectorXd x(static_cast<Index>(cols.size()));
    for (Index i = 0; i < sample.n(); ++i) {
      const auto w = sample.rows.row(i);
      for (std::size_t c = 0; c < cols.size(); ++c) x(static_cast<Index>(c)) = w(cols[c]);
      for (Index g = 0; g < n_g; ++g) {
        const double gx = instruments[static_cast<std::size_t>(g)](x);
        if (gx < 0.0 && n_ineq > 0)
          throw Error(Errc::NegativeInstrumentValue,
                      "instrument " + std::to_string(g + 1) + " is negative at row " + std::to_string(i + 1));
        for (Index t = 0; t < n_ineq; ++t)
          out(i, t * n_g + g) = gx == 0.0 ? 0.0 : model.inequalities[static_cast<std::size_t>(t)](w, theta) * gx;
        for (Index t = 0; t < n_eq; ++t)
          out(i, n_ineq * n_g + t * n_g + g) =
              gx == 0.0 ? 0.0 : model.equalities[static_cast<std::size_t>(t)](w, theta) * gx;
      }
    }
  };
  return convert_equalities(model.d_theta, n_ineq * n_g, n_eq * n_g, model.box, std::move(raw));
}

double studentize(double mbar, double sigma, Index n) {
  if (sigma > 0.0) return std::sqrt(static_cast<double>(n)) * mbar / sigma;
  if (mbar > 0.0) return std::numeric_limits<double>::infinity();
  if (mbar < 0.0) return -std::numeric_limits<double>::infinity();
  return 0.0;
}

VectorXd studentize(const VectorXd& mbar, const VectorXd& sigma, Index n) {
  VectorXd out(mbar.size());
  for (Index j = 0; j < mbar.size(); ++j) out(j) = studentize(mbar(j), sigma(j), n);
  return out;
}

StandardizedMoments standardize(const MomentModel& model, const Sample& sample, const VectorXd& theta) {
  if (!model.box().contains(theta)) throw Error(Errc::ThetaOutOfBox, "theta lies outside the parameter box");
  StandardizedMoments out;
  out.theta = theta;
  const MatrixXd values = model.evaluate(sample, theta);
  column_moments(values, out.mbar, out.sigma_hat);
  out.stud = studentize(out.mbar, out.sigma_hat, sample.n());
  return out;
}

void snapshot_into(const MomentModel& model, const Sample& sample, const VectorXd& theta,
                   MomentSnapshot& out, MatrixXd& scratch) {
  model.evaluate_into(sample, theta, scratch);
  out.theta = theta;
  column_moments(scratch, out.mbar, out.sigma_hat);
  out.stud = studentize(out.mbar, out.sigma_hat, sample.n());
  out.scaled_dev.resize(scratch.rows(), scratch.cols());
  for (Index j = 0; j < scratch.cols(); ++j) {
    if (out.sigma_hat(j) > 0.0)
      out.scaled_dev.col(j) = (scratch.col(j).array() - out.mbar(j)) / out.sigma_hat(j);
    else
      out.scaled_dev.col(j).setZero();
  }
}

MomentSnapshot snapshot(const MomentModel& model, const Sample& sample, const VectorXd& theta) {
  if (!model.box().contains(theta)) throw Error(Errc::ThetaOutOfBox, "theta lies outside the parameter box");
  MomentSnapshot out;
  MatrixXd scratch;
  snapshot_into(model, sample, theta, out, scratch);
  return out;
}

}  // namespace mmi
