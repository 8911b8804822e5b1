#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

namespace mmi::cli {

namespace {

const std::set<std::string> kKnownKeys = {
    "run.command",       "run.seed",        "run.threads",     "run.output",       "run.per_rep_output",
    "model.family",      "model.table",     "data.path",       "data.n",           "null.type",
    "null.coords",       "null.eta",        "null.matrix",     "method.name",      "method.alpha",
    "method.B",          "method.kappa",    "method.gamma",    "method.wbar_gamma", "method.margin",
    "method.centering",  "method.critical_value", "method.policy", "method.c_exp",  "method.kappa_B",
    "method.max_evals",  "cs.eta_lo",       "cs.eta_hi",       "cs.eta_points",    "cs.bisection",
    "simulate.reps",     "density.N",       "density.p",       "density.t",        "density.t_lo",
    "density.t_hi",      "density.t_points", "density.mc_draws", "density.bandwidth",
};

const std::set<std::string> kCommands = {"test", "cs", "simulate", "tune", "density"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (out.empty()) out.push_back("");
  return out;
}

[[noreturn]] void type_mismatch(const std::string& key, const std::string& value, const std::string& expected) {
  throw Error(Errc::TypeMismatch, fmt::format("{}: expected {}, got '{}'", key, expected, value));
}

double to_double(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  double out = 0.0;
  const char* first = v.data();
  if (!v.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) type_mismatch(key, raw, "a number");
  return out;
}

long long to_integer(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) type_mismatch(key, raw, "an integer");
  return out;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) type_mismatch(key, raw, "a nonnegative integer");
  return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& raw) {
  std::vector<double> out;
  for (const auto& cell : split(raw, ',')) out.push_back(to_double(key, cell));
  return out;
}

std::string one_of(const std::string& key, const std::string& raw, const std::set<std::string>& allowed) {
  std::string v = trim(raw);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (!allowed.count(v)) {
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    type_mismatch(key, raw, "one of " + list);
  }
  return v;
}

void require(bool ok, const std::string& key, const std::string& why) {
  if (!ok) throw Error(Errc::TypeMismatch, fmt::format("{}: {}", key, why));
}

std::string fmt_double(double x) { return fmt::format("{}", x); }

template <typename T>
std::string join(const std::vector<T>& v, const char* sep = ",") {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += sep;
    if constexpr (std::is_same_v<T, double>) out += fmt_double(v[k]);
    else out += fmt::format("{}", v[k]);
  }
  return out;
}

}  // namespace

Assignments read_config_stream(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(Errc::TypeMismatch, fmt::format("config line {}: {}", e.line(), e.message()));
  }
  Assignments out;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw Error(Errc::UnknownKey, fmt::format("{}: key outside any section", section));
    for (const auto& [key, value] : body) out.emplace_back(section + "." + key, value.get_value<std::string>());
  }
  return out;
}

Assignments read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MissingRequired, fmt::format("run.config: cannot open '{}'", path));
  return read_config_stream(in);
}

RunConfig resolve_config(const Assignments& assignments) {
  std::map<std::string, std::string> kv;
  for (const auto& [k, v] : assignments) kv[k] = v;

  RunConfig c;
  for (const auto& [key, value] : kv) {
    if (key.rfind("model.", 0) == 0 && !kKnownKeys.count(key)) {
      // Remaining model keys are family parameters; the family validates the names.
      c.family_params[key.substr(6)] = to_double(key, value);
      continue;
    }
    if (!kKnownKeys.count(key)) throw Error(Errc::UnknownKey, fmt::format("{}: unknown key", key));
  }
  const auto has = [&](const char* key) { return kv.count(key) > 0; };
  const auto get = [&](const char* key) { return kv.at(key); };

  if (has("run.command")) c.command = one_of("run.command", get("run.command"), kCommands);
  if (c.command.empty()) throw Error(Errc::MissingRequired, "run.command: no command given");
  if (has("run.seed")) c.seed = to_unsigned("run.seed", get("run.seed"));
  if (has("run.threads")) {
    const long long t = to_integer("run.threads", get("run.threads"));
    require(t >= 1, "run.threads", "must be at least 1");
    c.threads = static_cast<std::size_t>(t);
  }
  if (has("run.output")) c.output = trim(get("run.output"));
  if (has("run.per_rep_output")) c.per_rep_output = trim(get("run.per_rep_output"));

  if (has("model.family")) c.family = trim(get("model.family"));
  if (has("model.table")) c.table = trim(get("model.table"));
  if (has("data.path")) c.data = trim(get("data.path"));
  if (has("data.n")) {
    c.n = to_integer("data.n", get("data.n"));
    require(c.n >= 2, "data.n", "must be at least 2");
  }

  if (has("null.type")) c.null_type = one_of("null.type", get("null.type"), {"subvector", "affine"});
  if (has("null.coords"))
    for (const auto& cell : split(get("null.coords"), ',')) {
      const long long s = to_integer("null.coords", cell);
      require(s >= 1, "null.coords", "coordinates are one-based");
      c.coords.push_back(static_cast<Index>(s));
    }
  if (has("null.eta")) c.eta = to_doubles("null.eta", get("null.eta"));
  if (has("null.matrix"))
    for (const auto& row : split(get("null.matrix"), ';')) c.matrix.push_back(to_doubles("null.matrix", row));

  if (has("method.name")) {
    c.methods.clear();
    for (const auto& m : split(get("method.name"), ','))
      c.methods.push_back(one_of("method.name", m, {"sn", "sn2s", "dr", "pr", "mr", "naive"}));
  }
  if (has("method.alpha")) {
    c.alphas = to_doubles("method.alpha", get("method.alpha"));
    for (double a : c.alphas) require(a > 0.0 && a < 1.0, "method.alpha", fmt::format("{} is outside (0, 1)", a));
  }
  if (has("method.B")) {
    c.B = to_integer("method.B", get("method.B"));
    require(c.B >= 1, "method.B", "must be positive");
  }
  if (has("method.kappa")) {
    c.kappa = to_double("method.kappa", get("method.kappa"));
    if (!(*c.kappa >= 1.0)) throw Error(Errc::KappaTooSmall, "method.kappa: must be at least 1");
  }
  if (has("method.gamma")) c.sn_gamma = to_double("method.gamma", get("method.gamma"));
  if (has("method.wbar_gamma")) {
    c.wbar_gamma = to_double("method.wbar_gamma", get("method.wbar_gamma"));
    require(*c.wbar_gamma > 0.0 && *c.wbar_gamma < 1.0, "method.wbar_gamma", "must lie in (0, 1)");
  }
  if (has("method.margin")) {
    c.margin = to_double("method.margin", get("method.margin"));
    require(*c.margin >= 0.0, "method.margin", "must be nonnegative");
  }
  if (has("method.centering")) c.centering = one_of("method.centering", get("method.centering"), {"plain", "refined"});
  if (has("method.critical_value")) c.critical_value = to_double("method.critical_value", get("method.critical_value"));
  if (has("method.policy")) c.policy = one_of("method.policy", get("method.policy"), {"singleton", "all"});
  if (has("method.c_exp")) {
    c.c_exp = to_double("method.c_exp", get("method.c_exp"));
    require(c.c_exp > 0.0, "method.c_exp", "must be positive");
  }
  if (has("method.kappa_B")) {
    c.kappa_B = to_integer("method.kappa_B", get("method.kappa_B"));
    require(c.kappa_B >= 1, "method.kappa_B", "must be positive");
  }
  if (has("method.max_evals")) {
    c.max_evals = static_cast<int>(to_integer("method.max_evals", get("method.max_evals")));
    require(c.max_evals >= 0, "method.max_evals", "must be nonnegative");
  }

  if (has("cs.eta_lo")) c.eta_lo = to_double("cs.eta_lo", get("cs.eta_lo"));
  if (has("cs.eta_hi")) c.eta_hi = to_double("cs.eta_hi", get("cs.eta_hi"));
  if (has("cs.eta_points")) {
    c.eta_points = static_cast<int>(to_integer("cs.eta_points", get("cs.eta_points")));
    if (c.eta_points < 1) throw Error(Errc::EmptyGrid, "cs.eta_points: the eta grid is empty");
  }
  if (has("cs.bisection")) {
    c.bisection = static_cast<int>(to_integer("cs.bisection", get("cs.bisection")));
    require(c.bisection >= 0, "cs.bisection", "must be nonnegative");
  }
  if (has("simulate.reps")) {
    c.reps = to_integer("simulate.reps", get("simulate.reps"));
    require(c.reps >= 1, "simulate.reps", "must be positive");
  }

  if (has("density.N")) c.N = static_cast<long>(to_integer("density.N", get("density.N")));
  if (has("density.p")) c.p = static_cast<long>(to_integer("density.p", get("density.p")));
  if (has("density.t")) c.t = to_double("density.t", get("density.t"));
  if (has("density.t_lo")) c.t_lo = to_double("density.t_lo", get("density.t_lo"));
  if (has("density.t_hi")) c.t_hi = to_double("density.t_hi", get("density.t_hi"));
  if (has("density.t_points")) {
    c.t_points = static_cast<int>(to_integer("density.t_points", get("density.t_points")));
    if (c.t_points < 1) throw Error(Errc::EmptyGrid, "density.t_points: the t grid is empty");
  }
  if (has("density.mc_draws")) {
    c.mc_draws = static_cast<long>(to_integer("density.mc_draws", get("density.mc_draws")));
    require(c.mc_draws == 0 || c.mc_draws >= 100, "density.mc_draws", "must be 0 or at least 100");
  }
  if (has("density.bandwidth")) c.bandwidth = to_double("density.bandwidth", get("density.bandwidth"));

  // Command-specific requirements.
  if (c.command == "density") {
    if (!has("density.N")) throw Error(Errc::MissingRequired, "density.N: required by the density command");
    if (!has("density.p")) throw Error(Errc::MissingRequired, "density.p: required by the density command");
    require(c.N >= 1, "density.N", "must be at least 1");
    require(c.p >= 1, "density.p", "must be at least 1");
  } else {
    if (c.family.empty()) throw Error(Errc::MissingRequired, "model.family: required by the " + c.command + " command");
    if (c.family == "tabulated" && c.table.empty())
      throw Error(Errc::MissingRequired, "model.table: required by the tabulated family");
    if (c.family == "tabulated" && !c.data.empty())
      throw Error(Errc::TypeMismatch, "data.path: the tabulated family carries its own data");
    if (c.command == "simulate" && (c.family == "tabulated" || !c.data.empty()))
      throw Error(Errc::TypeMismatch, "model.family: simulate needs a built-in family and no data.path");
    if (c.null_type == "affine") {
      if (c.matrix.empty()) throw Error(Errc::MissingRequired, "null.matrix: required by an affine null");
      if (c.command != "cs") require(c.matrix.size() == c.eta.size(), "null.eta", "needs one value per matrix row");
    } else if (!c.coords.empty() && c.command != "cs") {
      require(c.coords.size() == c.eta.size(), "null.eta", "needs one value per pinned coordinate");
    }
    if (c.command == "cs") {
      const std::size_t rows = c.null_type == "affine" ? c.matrix.size() : c.coords.size();
      require(rows <= 1, c.null_type == "affine" ? "null.matrix" : "null.coords",
              "the cs command inverts a scalar function of theta");
    }
    if (c.family == "tabulated" && c.coords.empty() && c.matrix.empty() && c.command != "cs")
      throw Error(Errc::MissingRequired, "null.coords: required by the tabulated family");
  }
  return c;
}

std::string echo_config(const RunConfig& c) {
  std::string s;
  const auto line = [&](const std::string& key, const std::string& value) { s += key + " = " + value + "\n"; };
  s += "[run]\n";
  line("command", c.command);
  line("seed", fmt::format("{}", c.seed));
  line("threads", fmt::format("{}", c.threads));
  if (!c.output.empty()) line("output", c.output);
  if (!c.per_rep_output.empty()) line("per_rep_output", c.per_rep_output);
  if (c.command == "density") {
    s += "\n[density]\n";
    line("N", fmt::format("{}", c.N));
    line("p", fmt::format("{}", c.p));
    if (c.t) line("t", fmt_double(*c.t));
    line("t_lo", fmt_double(c.t_lo));
    line("t_hi", fmt_double(c.t_hi));
    line("t_points", fmt::format("{}", c.t_points));
    line("mc_draws", fmt::format("{}", c.mc_draws));
    line("bandwidth", fmt_double(c.bandwidth));
    return s;
  }
  s += "\n[model]\n";
  line("family", c.family);
  if (!c.table.empty()) line("table", c.table);
  for (const auto& [k, v] : c.family_params) line(k, fmt_double(v));
  s += "\n[data]\n";
  if (!c.data.empty()) line("path", c.data);
  line("n", fmt::format("{}", c.n));
  s += "\n[null]\n";
  line("type", c.null_type);
  if (!c.coords.empty()) line("coords", join(c.coords));
  if (!c.eta.empty()) line("eta", join(c.eta));
  if (!c.matrix.empty()) {
    std::vector<std::string> rows;
    for (const auto& r : c.matrix) rows.push_back(join(r));
    line("matrix", join(rows, ";"));
  }
  s += "\n[method]\n";
  line("name", join(c.methods));
  line("alpha", join(c.alphas));
  line("B", fmt::format("{}", c.B));
  if (c.kappa) line("kappa", fmt_double(*c.kappa));
  if (c.sn_gamma) line("gamma", fmt_double(*c.sn_gamma));
  if (c.wbar_gamma) line("wbar_gamma", fmt_double(*c.wbar_gamma));
  if (c.margin) line("margin", fmt_double(*c.margin));
  line("centering", c.centering);
  if (c.critical_value) line("critical_value", fmt_double(*c.critical_value));
  line("policy", c.policy);
  line("c_exp", fmt_double(c.c_exp));
  line("kappa_B", fmt::format("{}", c.kappa_B));
  line("max_evals", fmt::format("{}", c.max_evals));
  if (c.command == "cs") {
    s += "\n[cs]\n";
    if (c.eta_lo) line("eta_lo", fmt_double(*c.eta_lo));
    if (c.eta_hi) line("eta_hi", fmt_double(*c.eta_hi));
    line("eta_points", fmt::format("{}", c.eta_points));
    line("bisection", fmt::format("{}", c.bisection));
  }
  if (c.command == "simulate") {
    s += "\n[simulate]\n";
    line("reps", fmt::format("{}", c.reps));
  }
  return s;
}

}  // namespace mmi::cli
