#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"
#include "doctest.h"
#include "mmi/dgp.hpp"
#include "mmi/inference.hpp"

using namespace mmi;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "mmi_integration";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

int run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  if (code != 0) MESSAGE(err.str());
  return code;
}

}  // namespace

TEST_CASE("cs command agrees with test at every grid point") {
  const auto cs = scratch("cs.csv");
  REQUIRE(run({"cs", "--model", "failcase", "--n", "500", "--seed", "4", "--method", "sn", "--eta-lo", "-1",
               "--eta-hi", "1", "--eta-points", "9", "--bisection", "0", "--output", cs.string()}) == 0);
  const auto rows = read_csv(cs);
  REQUIRE(rows.size() > 1);
  CHECK(rows[0][0] == "kind");
  int points = 0;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r][0] != "grid") continue;
    ++points;
    const auto one = scratch("one.csv");
    REQUIRE(run({"test", "--model", "failcase", "--n", "500", "--seed", "4", "--method", "sn", "--eta", rows[r][1],
                 "--output", one.string()}) == 0);
    const auto t = read_csv(one);
    CHECK(t[1][5] == rows[r][2]);                      // T_n
    CHECK(t[1][6] == rows[r][3]);                      // c
    CHECK((t[1][7] == "1") == (rows[r][4] == "0"));    // reject vs accepted
  }
  CHECK(points == 9);
}

TEST_CASE("simulate command matches the library harness") {
  const auto out = scratch("sim.csv");
  const auto per = scratch("sim_reps.csv");
  REQUIRE(run({"simulate", "--model", "failcase", "--n", "200", "--reps", "12", "--seed", "7", "--method", "sn,sn2s",
               "--alpha", "0.1", "--output", out.string(), "--per-rep-output", per.string()}) == 0);
  const auto rows = read_csv(out);
  REQUIRE(rows.size() == 3);

  SimulationConfig cfg;
  cfg.n = 200;
  cfg.reps = 12;
  cfg.master_seed = 7;
  cfg.methods = {Method::SN, Method::SN2S};
  cfg.alphas = {0.1};
  const auto res = simulate_rejection_rates(make_dgp("failcase"), cfg);
  CHECK(rows[1][4] == std::to_string(res[0].rejections));
  CHECK(rows[2][4] == std::to_string(res[1].rejections));
  CHECK(read_csv(per).size() == 1 + 24);
}

TEST_CASE("tune reports the values the PR test uses") {
  const auto tune = scratch("tune.csv");
  const auto test = scratch("tune_test.csv");
  const std::vector<std::string> common{"--model", "failcase", "--n", "400", "--seed", "2", "--B", "200",
                                        "--kappa-B", "100", "--alpha", "0.1"};
  std::vector<std::string> a{"tune"};
  a.insert(a.end(), common.begin(), common.end());
  a.insert(a.end(), {"--output", tune.string()});
  std::vector<std::string> b{"test", "--method", "pr"};
  b.insert(b.end(), common.begin(), common.end());
  b.insert(b.end(), {"--output", test.string()});
  REQUIRE(run(a) == 0);
  REQUIRE(run(b) == 0);
  std::map<std::string, std::string> tuned;
  for (const auto& row : read_csv(tune))
    if (row.size() >= 2) tuned[row[0]] = row[1];
  const auto t = read_csv(test);
  CHECK(tuned["wbar"] == t[1][10]);
  CHECK(tuned["M_n"] == t[1][12]);
  CHECK(tuned["kappa_n"] == t[1][13]);
}

TEST_CASE("SN confidence sets cover the true value") {
  const DgpSpec dgp = make_dgp("failcase");
  const RestrictionAt at = [&](double eta) { return dgp.null_at(VectorXd::Constant(1, eta)); };
  int covered = 0;
  const int runs = 20;
  for (int r = 0; r < runs; ++r) {
    const Sample s = dgp.generator(2000, 100 + r);
    const TestReport rep = run_test(dgp.model, s, at(0.0), Method::SN, 0.05);
    covered += rep.reject ? 0 : 1;
  }
  CHECK(covered >= 18);
}
