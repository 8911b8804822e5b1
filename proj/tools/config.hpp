#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mmi/dgp.hpp"

namespace mmi::cli {

/// Fully resolved run configuration. Section and key names follow the
/// config file layout: run.*, model.*, data.*, null.*, method.*, cs.*,
/// simulate.*, density.*.
struct RunConfig {
  std::string command;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string output;
  std::string per_rep_output;

  std::string family;
  std::string table;
  ParameterMap family_params;

  std::string data;
  Index n = 1000;

  std::string null_type = "subvector";
  std::vector<Index> coords;  ///< one-based
  std::vector<double> eta;
  std::vector<std::vector<double>> matrix;

  std::vector<std::string> methods{"sn"};
  std::vector<double> alphas{0.05};
  Index B = 1000;
  std::optional<double> kappa;
  std::optional<double> sn_gamma;
  std::optional<double> wbar_gamma;
  std::optional<double> margin;
  std::string centering = "plain";
  std::optional<double> critical_value;
  std::string policy = "singleton";
  double c_exp = 0.1;
  Index kappa_B = 200;
  int max_evals = 200;

  std::optional<double> eta_lo;
  std::optional<double> eta_hi;
  int eta_points = 21;
  int bisection = 8;

  Index reps = 100;

  long N = 0;
  long p = 0;
  std::optional<double> t;
  double t_lo = -5.0;
  double t_hi = 5.0;
  int t_points = 101;
  long mc_draws = 0;
  double bandwidth = -1.0;
};

/// Raw "section.key" -> value assignments, file first, flags after.
using Assignments = std::vector<std::pair<std::string, std::string>>;

/// Reads a sectioned key=value file ('#' or ';' comments).
Assignments read_config_file(const std::string& path);
Assignments read_config_stream(std::istream& in);

/// Later assignments override earlier ones. Throws UnknownKey, TypeMismatch
/// or MissingRequired with the key path in the message.
RunConfig resolve_config(const Assignments& assignments);

/// Every resolved value in the config file format; feeding it back
/// reproduces the run.
std::string echo_config(const RunConfig& cfg);

}  // namespace mmi::cli
