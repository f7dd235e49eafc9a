#include "ncfem/cli.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ncfem;
namespace fs = std::filesystem;

namespace {

int run(std::initializer_list<const char*> args) {
  std::vector<const char*> argv{"ncfem"};
  argv.insert(argv.end(), args.begin(), args.end());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ncfem_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  os << text;
}

}  // namespace

TEST_CASE("cmd_mesh: exit 0 with clean grading, dumps written") {
  const fs::path out = temp_dir("mesh");
  CHECK(run({"mesh", "--levels", "1..3", "--mu", "0.5", "--quiet",
             "--out", out.c_str()}) == kExitOk);
  CHECK(fs::exists(out / "mesh_l3.txt"));
}

TEST_CASE("config validation failures exit with code 1") {
  CHECK(run({"mesh", "--levels", "1..2", "--mu", "1.5", "--quiet"}) == kExitConfigError);
  CHECK(run({"mesh", "--levels", "3..1", "--quiet"}) == kExitConfigError);
  CHECK(run({"study", "--levels", "1..2", "--nu", "-1", "--quiet"}) == kExitConfigError);
  CHECK(run({"study", "--levels", "1..2", "--alpha", "-1.7", "--quiet"}) == kExitConfigError);

  const fs::path dir = temp_dir("badcfg");
  write(dir / "selfx.json",
        R"({"domain": {"vertices": [[0,0],[1,1],[1,0],[0,1]]}})");
  CHECK(run({"mesh", "--config", (dir / "selfx.json").c_str(), "--levels", "1..1",
             "--quiet"}) == kExitConfigError);

  write(dir / "badsolver.json", R"({"solver": {"method": "magic"}})");
  CHECK(run({"mesh", "--config", (dir / "badsolver.json").c_str(), "--quiet"}) ==
        kExitConfigError);

  write(dir / "malformed.json", "{oops");
  CHECK(run({"mesh", "--config", (dir / "malformed.json").c_str(), "--quiet"}) ==
        kExitConfigError);

  CHECK(run({"mesh", "--config", (dir / "missing.json").c_str(), "--quiet"}) ==
        kExitConfigError);
}

TEST_CASE("JSON config: decimal strings, inf bounds, nested keys") {
  const fs::path dir = temp_dir("jsoncfg");
  write(dir / "cfg.json", R"({
    "domain": {"preset": "lshape"},
    "mu": "0.5",
    "levels": {"min": 1, "max": 2},
    "delta": "6.0",
    "alpha": "-1.25",
    "ocp": {"nu": "2.5", "u_min": "-inf", "u_max": "inf", "opt_tol": 1e-9},
    "solver": {"method": "direct", "tol": 1e-10},
    "quadrature": {"tri_degree": 4, "parallel": true}
  })");
  const RunConfig cfg = load_config_file((dir / "cfg.json").string());
  CHECK(cfg.mu.size() == 1);
  CHECK(cfg.mu[0] == 0.5);
  CHECK(cfg.delta == 6.0);
  CHECK(cfg.nu == 2.5);
  CHECK(std::isinf(cfg.bounds.lo));
  CHECK(cfg.bounds.lo < 0.0);
  CHECK(std::isinf(cfg.bounds.hi));
  CHECK_NOTHROW(validate(cfg));

  // vertex-list domains work end to end
  write(dir / "poly.json",
        R"({"domain": {"vertices": [[0,0],[2,0],[2,1],[1,0.4],[0,1]]}})");
  CHECK(run({"mesh", "--config", (dir / "poly.json").c_str(), "--levels", "1..2",
             "--quiet", "--out", (dir / "out").c_str()}) == kExitOk);
}

TEST_CASE("cmd_study: CSV written, byte-identical across runs, single-EOC-row case") {
  const fs::path out1 = temp_dir("study1");
  const fs::path out2 = temp_dir("study2");
  CHECK(run({"study", "--levels", "1..2", "--quiet", "--out", out1.c_str()}) == kExitOk);
  CHECK(run({"study", "--levels", "1..2", "--quiet", "--out", out2.c_str()}) == kExitOk);
  const std::string csv1 = slurp(out1 / "study.csv");
  CHECK(csv1 == slurp(out2 / "study.csv"));
  // levels 1..2 leave exactly one populated EOC row
  std::istringstream is(csv1);
  std::string line;
  int data_rows = 0;
  while (std::getline(is, line))
    if (!line.empty() && line[0] != '#' && line[0] != 'l') ++data_rows;
  CHECK(data_rows == 2);
}

TEST_CASE("cmd_study --assert exits 3 on an order miss") {
  const fs::path dir = temp_dir("assert");
  write(dir / "tight.json", R"({"study": {"tol_l2": 0.001, "tol_h1": 0.001, "tol_u": 0.001}})");
  CHECK(run({"study", "--config", (dir / "tight.json").c_str(), "--levels", "1..3",
             "--assert", "--quiet", "--out", dir.c_str()}) == kExitOrderMiss);
}

TEST_CASE("cmd_solve_bvp and cmd_solve_ocp run clean") {
  const fs::path out = temp_dir("solve");
  CHECK(run({"solve-bvp", "--levels", "1..3", "--quiet", "--out", out.c_str()}) == kExitOk);
  CHECK(run({"solve-ocp", "--levels", "1..2", "--quiet", "--out", out.c_str()}) == kExitOk);
  CHECK(fs::exists(out / "control_l2.txt"));

  // box-constrained path through the config file
  write(out / "box.json", R"({"ocp": {"u_min": -0.2, "u_max": 0.3}})");
  CHECK(run({"solve-ocp", "--config", (out / "box.json").c_str(), "--levels", "1..2",
             "--quiet", "--out", out.c_str()}) == kExitOk);
}

TEST_CASE("cmd_check_coercivity verdict exit codes") {
  CHECK(run({"check-coercivity", "--levels", "1..4", "--quiet"}) == kExitNonCoercive);
  CHECK(run({"check-coercivity", "--levels", "1..3", "--coeffs", "constant-reaction",
             "--quiet"}) == kExitOk);
  // a small positive delta keeps the form coercive; the value is printed
  CHECK(run({"check-coercivity", "--levels", "1..3", "--delta", "0.5", "--quiet"}) == kExitOk);
}
