// Command-line front end: JSON config + flag overrides, command dispatch,
// table/CSV/mesh/matrix output.
#pragma once

#include "ncfem/analysis.hpp"

#include <optional>
#include <string>

namespace ncfem {

/// Exit codes shared by all commands.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 1,
  kExitNumericalFailure = 2,
  kExitOrderMiss = 3,      // study --assert
  kExitNonCoercive = 4,    // check-coercivity verdict
};

struct RunConfig {
  std::string preset = "lshape";
  std::vector<Vec2> vertices;  ///< overrides the preset when nonempty
  std::vector<double> mu;      ///< empty = quasi-uniform; scalar broadcasts

  int level_min = 1;
  int level_max = 7;

  double delta = 6.0;
  double alpha = -1.25;
  double nu = 1.0;

  /// "example" = manufactured coefficient family; "constant-reaction" =
  /// a = I, b = 0, a0 = reaction_a0 (the coercive reference).
  std::string coeffs = "example";
  double reaction_a0 = 1.0;

  ControlBounds bounds;
  LinearSolveConfig solver;
  OcpConfig ocp;
  AssemblyOptions quad;

  std::string out_dir = ".";
  bool quiet = false;
  bool assert_orders = false;
  bool with_ocp = true;  ///< study: include the control-problem column
  double assert_tol_l2 = 0.2;
  double assert_tol_h1 = 0.1;
  double assert_tol_u = 0.1;
  std::optional<ExpectedOrders> expected_override;
};

/// Parses a JSON config file into RunConfig (missing keys keep defaults).
/// Numeric values may be given as decimal strings; "inf"/"-inf" are
/// accepted for bounds. Throws std::invalid_argument on malformed input.
RunConfig load_config_file(const std::string& path);

/// Full validation; throws std::invalid_argument describing the problem.
void validate(const RunConfig& cfg);

PolygonDomain config_domain(const RunConfig& cfg);
GradingSpec config_grading(const RunConfig& cfg, const PolygonDomain& dom);

int cmd_mesh(const RunConfig& cfg);
int cmd_solve_bvp(const RunConfig& cfg);
int cmd_solve_ocp(const RunConfig& cfg);
int cmd_study(const RunConfig& cfg);
int cmd_check_coercivity(const RunConfig& cfg);

/// Parses argv and dispatches; returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace ncfem
