#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "mmi/model.hpp"
#include "mmi/optimize.hpp"

namespace mmi {

using ParameterMap = std::map<std::string, double>;

/// Built-in data-generating process together with its moment model and null.
struct DgpSpec {
  std::string name;
  ParameterMap parameters;
  MomentModel model;
  std::vector<std::string> columns;
  /// Coordinates fixed by the null hypothesis (zero-based) and their true values.
  std::vector<Index> pinned;
  VectorXd eta0;
  std::function<Sample(Index n, std::uint64_t seed)> generator;

  NullRestriction null_at(const VectorXd& eta) const;
};

/// Registered names: failcase, box-1d, many-failcase.
std::vector<std::string> dgp_names();

/// Throws InvalidArgument for an unknown name and UnknownKey for a parameter
/// the family does not take.
DgpSpec make_dgp(const std::string& name, const ParameterMap& parameters = {});

/// Moment model on precomputed values m_j(W_i, theta_g) over a theta grid.
/// Header: i, theta1..thetad, m1..mp; one row per (grid point, observation).
struct TabulatedModel {
  MomentModel model;
  std::vector<VectorXd> grid;
  Sample sample;  ///< observation indices only; the values live in the table
};

TabulatedModel parse_tabulated(std::istream& in);
TabulatedModel load_tabulated(const std::string& path);

}  // namespace mmi
