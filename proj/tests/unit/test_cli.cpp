#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"
#include "doctest.h"
#include "mmi/error.hpp"

using namespace mmi;
using namespace mmi::cli;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "mmi_cli_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Errc resolve_error(const Assignments& a) {
  try {
    resolve_config(a);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::Io;
}

}  // namespace

TEST_CASE("defaults resolve for a minimal test config") {
  std::istringstream in("[run]\ncommand = test\n[model]\nfamily = failcase\n[method]\nname = sn\nalpha = 0.05\n");
  const RunConfig c = resolve_config(read_config_stream(in));
  CHECK(c.command == "test");
  CHECK(c.B == 1000);
  CHECK(c.seed == 0);
  CHECK(c.data.empty());
  CHECK(c.methods == std::vector<std::string>{"sn"});
}

TEST_CASE("validation errors name the key") {
  const Assignments base{{"run.command", "test"}, {"model.family", "failcase"}};
  Assignments bad_alpha = base;
  bad_alpha.emplace_back("method.alpha", "1.5");
  CHECK(resolve_error(bad_alpha) == Errc::TypeMismatch);
  try {
    resolve_config(bad_alpha);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("method.alpha") != std::string::npos);
  }

  Assignments bad_int = base;
  bad_int.emplace_back("method.B", "many");
  CHECK(resolve_error(bad_int) == Errc::TypeMismatch);

  Assignments unknown = base;
  unknown.emplace_back("method.speed", "3");
  CHECK(resolve_error(unknown) == Errc::UnknownKey);

  CHECK(resolve_error({{"model.family", "failcase"}}) == Errc::MissingRequired);
  CHECK(resolve_error({{"run.command", "test"}}) == Errc::MissingRequired);
  CHECK(resolve_error({{"run.command", "density"}, {"density.N", "2"}}) == Errc::MissingRequired);

  Assignments small_kappa = base;
  small_kappa.emplace_back("method.kappa", "0.5");
  CHECK(resolve_error(small_kappa) == Errc::KappaTooSmall);
}

TEST_CASE("later assignments win") {
  const RunConfig c = resolve_config(
      {{"run.command", "test"}, {"model.family", "failcase"}, {"method.kappa", "2"}, {"method.kappa", "4"}});
  CHECK(c.kappa == 4.0);
}

TEST_CASE("flags override the config file") {
  const auto cfg = scratch("precedence.ini");
  {
    std::ofstream f(cfg);
    f << "[run]\ncommand = tune\n[model]\nfamily = failcase\n[data]\nn = 200\n[method]\nkappa = 2\nB = 100\nkappa_B = 50\n";
  }
  const auto echo = scratch("precedence_echo.ini");
  const Run r = run({"tune", "--config", cfg.string(), "--kappa", "4", "--write-config", echo.string(),
                     "--output", scratch("precedence.csv").string()});
  REQUIRE(r.code == kExitOk);
  std::ifstream in(echo);
  const RunConfig back = resolve_config(read_config_stream(in));
  CHECK(back.kappa == 4.0);
  CHECK(back.B == 100);
}

TEST_CASE("echo round trip") {
  const RunConfig c = resolve_config({{"run.command", "cs"}, {"model.family", "many-failcase"}, {"model.k", "3"},
                                      {"method.name", "sn,pr"}, {"method.alpha", "0.05,0.1"},
                                      {"cs.eta_lo", "-0.5"}, {"cs.eta_hi", "0.5"}, {"method.margin", "1.25"}});
  const std::string echo = echo_config(c);
  std::istringstream in(echo);
  CHECK(echo_config(resolve_config(read_config_stream(in))) == echo);
  CHECK(c.family_params.at("k") == 3.0);
}

TEST_CASE("density prints the closed form") {
  const Run r = run({"density", "--N", "2", "--p", "3", "--t", "0"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("t,f,F") == 0);
  CHECK(r.out.find("0.52361174") != std::string::npos);
}

TEST_CASE("empty argv prints usage and exits 2") {
  const Run r = run({});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("Usage") != std::string::npos);
}

TEST_CASE("exit codes by error class") {
  CHECK(run({"test", "--model", "failcase", "--alpha", "1.5"}).code == kExitConfig);
  CHECK(run({"test", "--model", "nosuch"}).code == kExitConfig);
  CHECK(run({"test", "--model", "failcase", "--data", scratch("absent.csv").string()}).code == kExitData);

  const auto bad = scratch("bad.csv");
  {
    std::ofstream f(bad);
    f << "w1,w2\n0.1,0.2\n0.3,oops\n";
  }
  CHECK(run({"test", "--model", "failcase", "--data", bad.string()}).code == kExitData);
}

TEST_CASE("test command writes its CSV and a summary") {
  const auto csv = scratch("test.csv");
  const Run r = run({"test", "--model", "failcase", "--method", "sn", "--n", "100", "--seed", "3", "--output", csv.string()});
  REQUIRE(r.code == kExitOk);
  const std::string body = slurp(csv);
  CHECK(body.rfind("eta,method,alpha,n,p,T_n,c,reject", 0) == 0);
  CHECK(body.find(",SN,0.05,100,2,") != std::string::npos);
  CHECK(r.out.find("[method]") != std::string::npos);
  CHECK(r.out.find("reject=") != std::string::npos);
}

TEST_CASE("test on a data file matches the simulated sample") {
  // Write the generator's sample to disk and feed it back.
  const DgpSpec fc = make_dgp("failcase");
  const Sample s = fc.generator(150, 5);
  const auto data = scratch("data.csv");
  {
    std::ofstream f(data);
    f.precision(17);
    f << "w1,w2\n";
    for (Index i = 0; i < s.n(); ++i) f << s.rows(i, 0) << "," << s.rows(i, 1) << "\n";
  }
  const auto a = scratch("from_file.csv");
  const auto b = scratch("from_gen.csv");
  REQUIRE(run({"test", "--model", "failcase", "--data", data.string(), "--seed", "5", "--output", a.string()}).code == 0);
  REQUIRE(run({"test", "--model", "failcase", "--n", "150", "--seed", "5", "--output", b.string()}).code == 0);
  CHECK(slurp(a) == slurp(b));
}

TEST_CASE("tabulated model through the CLI") {
  const auto table = scratch("table.csv");
  {
    std::ofstream f(table);
    f << "i,theta1,m1\n";
    for (int g = -2; g <= 2; ++g)
      for (int i = 0; i < 4; ++i) f << i << "," << 0.5 * g << "," << 0.5 * g - 0.3 * i << "\n";
  }
  const auto csv = scratch("tab.csv");
  const Run r = run({"test", "--model", "tabulated", "--table", table.string(), "--null-type", "affine", "--matrix", "1",
                     "--eta", "0", "--method", "sn", "--output", csv.string()});
  CHECK(r.code == kExitOk);
  CHECK(slurp(csv).find(",SN,") != std::string::npos);
}
