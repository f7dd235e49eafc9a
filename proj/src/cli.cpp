#include "ncfem/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace ncfem {

namespace {

using nlohmann::json;

double num(const json& j, const char* what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument(std::string("cannot parse number for ") + what + ": " + s);
  }
  throw std::invalid_argument(std::string("expected a number for ") + what);
}

std::vector<double> parse_mu_list(const std::string& s) {
  std::vector<double> mu;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) mu.push_back(std::stod(item));
  return mu;
}

void apply_json(RunConfig& cfg, const json& j) {
  if (j.contains("domain")) {
    const json& d = j["domain"];
    if (d.contains("preset")) cfg.preset = d["preset"].get<std::string>();
    if (d.contains("vertices")) {
      cfg.vertices.clear();
      for (const auto& v : d["vertices"])
        cfg.vertices.emplace_back(num(v.at(0), "vertex x"), num(v.at(1), "vertex y"));
    }
  }
  if (j.contains("mu")) {
    cfg.mu.clear();
    if (j["mu"].is_array())
      for (const auto& v : j["mu"]) cfg.mu.push_back(num(v, "mu"));
    else
      cfg.mu.push_back(num(j["mu"], "mu"));
  }
  if (j.contains("levels")) {
    if (j["levels"].contains("min")) cfg.level_min = j["levels"]["min"].get<int>();
    if (j["levels"].contains("max")) cfg.level_max = j["levels"]["max"].get<int>();
  }
  if (j.contains("delta")) cfg.delta = num(j["delta"], "delta");
  if (j.contains("alpha")) cfg.alpha = num(j["alpha"], "alpha");
  if (j.contains("nu")) cfg.nu = num(j["nu"], "nu");
  if (j.contains("coeffs")) {
    if (j["coeffs"].is_string()) {
      cfg.coeffs = j["coeffs"].get<std::string>();
    } else {
      if (j["coeffs"].contains("kind")) cfg.coeffs = j["coeffs"]["kind"].get<std::string>();
      if (j["coeffs"].contains("a0")) cfg.reaction_a0 = num(j["coeffs"]["a0"], "coeffs.a0");
    }
  }
  if (j.contains("ocp")) {
    const json& o = j["ocp"];
    if (o.contains("nu")) cfg.nu = num(o["nu"], "ocp.nu");
    if (o.contains("u_min")) cfg.bounds.lo = num(o["u_min"], "ocp.u_min");
    if (o.contains("u_max")) cfg.bounds.hi = num(o["u_max"], "ocp.u_max");
    if (o.contains("opt_tol")) cfg.ocp.opt_tol = num(o["opt_tol"], "ocp.opt_tol");
    if (o.contains("max_iter")) cfg.ocp.max_cg_iter = o["max_iter"].get<int>();
    if (o.contains("max_active_set_iter"))
      cfg.ocp.max_active_set_iter = o["max_active_set_iter"].get<int>();
  }
  if (j.contains("solver")) {
    const json& s = j["solver"];
    if (s.contains("method")) {
      const std::string m = s["method"].get<std::string>();
      if (m == "direct")
        cfg.solver.method = LinearSolveConfig::Method::Direct;
      else if (m == "iterative")
        cfg.solver.method = LinearSolveConfig::Method::Iterative;
      else
        throw std::invalid_argument("solver.method must be direct or iterative");
    }
    if (s.contains("tol")) cfg.solver.tol = num(s["tol"], "solver.tol");
    if (s.contains("max_iter")) cfg.solver.max_iter = s["max_iter"].get<int>();
  }
  if (j.contains("quadrature")) {
    const json& q = j["quadrature"];
    if (q.contains("tri_degree")) cfg.quad.tri_degree = q["tri_degree"].get<int>();
    if (q.contains("edge_degree")) cfg.quad.edge_degree = q["edge_degree"].get<int>();
    if (q.contains("corner_depth")) cfg.quad.corner.depth = q["corner_depth"].get<int>();
    if (q.contains("corner_ratio")) cfg.quad.corner.ratio = num(q["corner_ratio"], "ratio");
    if (q.contains("parallel")) cfg.quad.parallel = q["parallel"].get<bool>();
  }
  if (j.contains("study")) {
    const json& s = j["study"];
    if (s.contains("ocp")) cfg.with_ocp = s["ocp"].get<bool>();
    if (s.contains("tol_l2")) cfg.assert_tol_l2 = num(s["tol_l2"], "study.tol_l2");
    if (s.contains("tol_h1")) cfg.assert_tol_h1 = num(s["tol_h1"], "study.tol_h1");
    if (s.contains("tol_u")) cfg.assert_tol_u = num(s["tol_u"], "study.tol_u");
    if (s.contains("expected")) {
      ExpectedOrders e;
      const json& x = s["expected"];
      e.y_l2 = num(x.at("y_l2"), "expected.y_l2");
      e.y_h1 = num(x.at("y_h1"), "expected.y_h1");
      e.phi_l2 = num(x.at("phi_l2"), "expected.phi_l2");
      e.phi_h1 = num(x.at("phi_h1"), "expected.phi_h1");
      e.u_l2 = num(x.at("u_l2"), "expected.u_l2");
      cfg.expected_override = e;
    }
  }
  if (j.contains("out")) cfg.out_dir = j["out"].get<std::string>();
}

StudyConfig make_study_config(const RunConfig& cfg, PolygonDomain dom) {
  StudyConfig sc(std::move(dom));
  sc.grading = config_grading(cfg, sc.domain);
  sc.level_min = cfg.level_min;
  sc.level_max = cfg.level_max;
  sc.delta = cfg.delta;
  sc.alpha = cfg.alpha;
  sc.nu = cfg.nu;
  sc.bounds = cfg.bounds;
  sc.solver = cfg.solver;
  sc.ocp = cfg.ocp;
  sc.quad = cfg.quad;
  sc.with_ocp = cfg.with_ocp;
  sc.verbose = !cfg.quiet;
  return sc;
}

CoefficientSet config_coeffs(const RunConfig& cfg) {
  if (cfg.coeffs == "example") return make_example(cfg.delta, cfg.alpha, cfg.nu).coeffs;
  if (cfg.coeffs == "constant-reaction") return reaction_coefficients(cfg.reaction_a0);
  throw std::invalid_argument("coeffs must be 'example' or 'constant-reaction'");
}

std::ofstream open_out(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  const std::string path = cfg.out_dir + "/" + name;
  std::ofstream os(path);
  if (!os) throw std::invalid_argument("cannot open output file " + path);
  return os;
}

}  // namespace

RunConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot read config file " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("malformed JSON config: " + std::string(e.what()));
  }
  RunConfig cfg;
  apply_json(cfg, j);
  return cfg;
}

void validate(const RunConfig& cfg) {
  if (cfg.level_min < 1) throw std::invalid_argument("levels.min must be >= 1");
  if (cfg.level_max < cfg.level_min)
    throw std::invalid_argument("levels.max must be >= levels.min");
  for (double m : cfg.mu)
    if (!(m > 0.0 && m <= 1.0)) throw std::invalid_argument("mu must lie in (0, 1]");
  if (!(cfg.nu > 0.0)) throw std::invalid_argument("nu must be positive");
  if (!(cfg.alpha > -1.5)) throw std::invalid_argument("alpha must exceed -3/2");
  if (!(cfg.delta >= 0.0)) throw std::invalid_argument("delta must be nonnegative");
  if (!(cfg.bounds.lo <= cfg.bounds.hi))
    throw std::invalid_argument("ocp.u_min must not exceed ocp.u_max");
  if (!(cfg.solver.tol > 0.0)) throw std::invalid_argument("solver.tol must be positive");
  if (!(cfg.ocp.opt_tol > 0.0)) throw std::invalid_argument("ocp.opt_tol must be positive");
  if (!(cfg.quad.corner.ratio > 0.0 && cfg.quad.corner.ratio < 1.0))
    throw std::invalid_argument("quadrature.corner_ratio must lie in (0, 1)");
  if (cfg.coeffs != "example" && cfg.coeffs != "constant-reaction")
    throw std::invalid_argument("coeffs must be 'example' or 'constant-reaction'");
  if (!cfg.vertices.empty() && cfg.mu.size() > 1 && cfg.mu.size() != cfg.vertices.size())
    throw std::invalid_argument("mu list length must match the vertex count");
  config_domain(cfg);  // vertex-list geometry checks
}

PolygonDomain config_domain(const RunConfig& cfg) {
  if (!cfg.vertices.empty()) return make_polygon(cfg.vertices, cfg.mu);
  PolygonDomain dom = domain_preset(cfg.preset);
  if (cfg.mu.size() > 1 && cfg.mu.size() != static_cast<size_t>(dom.num_vertices()))
    throw std::invalid_argument("mu list length must match the preset corner count");
  return dom;
}

GradingSpec config_grading(const RunConfig& cfg, const PolygonDomain& dom) {
  if (cfg.mu.empty()) return GradingSpec::uniform(dom);
  if (cfg.mu.size() == 1) return GradingSpec::with_mu(dom, cfg.mu[0]);
  GradingSpec g;
  g.mu = cfg.mu;
  return g;
}

int cmd_mesh(const RunConfig& cfg) {
  validate(cfg);
  const PolygonDomain dom = config_domain(cfg);
  const GradingSpec grading = config_grading(cfg, dom);
  MeshBuilder builder(dom);
  std::size_t total_violations = 0;
  for (int level = 1; level <= cfg.level_max; ++level) {
    builder.refine_to_level(level, grading);
    if (level < cfg.level_min) continue;
    const TriMesh mesh = builder.snapshot();
    const MeshQuality q = mesh_quality_report(mesh, dom, grading);
    total_violations += q.grading_violations;
    if (!cfg.quiet) {
      std::printf(
          "level %2d: h=%.4e nodes=%zu tris=%zu min_angle=%.2f deg max_diam=%.4e "
          "grading_violations=%zu\n",
          q.level, q.h, q.nodes, q.tris, q.min_angle_deg, q.max_diam, q.grading_violations);
    }
    auto os = open_out(cfg, "mesh_l" + std::to_string(level) + ".txt");
    write_mesh_dump(mesh, os);
  }
  return total_violations == 0 ? kExitOk : kExitNumericalFailure;
}

int cmd_solve_bvp(const RunConfig& cfg) {
  validate(cfg);
  const PolygonDomain dom = config_domain(cfg);
  StudyConfig sc = make_study_config(cfg, dom);
  sc.level_min = sc.level_max = cfg.level_max;
  sc.with_ocp = false;
  const EocTable table = run_convergence_study(sc);
  const ErrorRecord& r = table.rows.front();
  std::printf("level %d (h=%.4e, ndof=%zu)\n", r.level, r.h, r.ndof);
  std::printf("  state   L2 %.6e   H1 %.6e\n", r.err_y_L2, r.err_y_H1);
  std::printf("  adjoint L2 %.6e   H1 %.6e\n", r.err_phi_L2, r.err_phi_H1);
  return kExitOk;
}

int cmd_solve_ocp(const RunConfig& cfg) {
  validate(cfg);
  const PolygonDomain dom = config_domain(cfg);
  const GradingSpec grading = config_grading(cfg, dom);
  const ManufacturedCase mc = make_example(cfg.delta, cfg.alpha, cfg.nu);
  const TriMesh mesh = build_graded_mesh(dom, cfg.level_max, grading);

  AssembledSystem sys = assemble_state(mesh, mc.coeffs, cfg.quad);
  const Eigen::VectorXd load_state =
      assemble_domain_load(mesh, mc.f, mc.coeffs.singular_points, cfg.quad) +
      assemble_boundary_load(mesh, mc.g_y, cfg.quad);
  const Eigen::VectorXd load_yd =
      assemble_domain_load(mesh, mc.y_d, mc.coeffs.singular_points, cfg.quad);
  const Eigen::VectorXd load_gphi = assemble_boundary_load(mesh, mc.g_phi, cfg.quad);
  const double yd_sq = integrate_domain(
      mesh, [&](const Vec2& x) { const double v = mc.y_d(x); return v * v; },
      mc.coeffs.singular_points, cfg.quad);

  OcpProblem problem(std::move(sys), cfg.nu, cfg.bounds, load_state, load_yd, yd_sq, load_gphi,
                     cfg.solver);
  const OcpSolution sol = cfg.bounds.finite() ? solve_box(problem, cfg.ocp)
                                              : solve_unconstrained(problem, cfg.ocp);
  const double err_u = error_L2_boundary(mesh, sol.u, mc.exact_u, cfg.quad.edge_degree);
  std::printf("level %d: J=%.10e opt_residual=%.3e iterations=%d method=%s\n", cfg.level_max,
              sol.objective, sol.opt_residual, sol.iterations, sol.method.c_str());
  std::printf("  control error L2(Gamma) = %.6e\n", err_u);

  auto os = open_out(cfg, "control_l" + std::to_string(cfg.level_max) + ".txt");
  os.precision(17);
  for (int e = 0; e < mesh.num_boundary_edges(); ++e) {
    const BoundaryEdge& be = mesh.boundary[size_t(e)];
    const Vec2 mid = 0.5 * (mesh.nodes[size_t(be.a)] + mesh.nodes[size_t(be.b)]);
    os << e << " " << be.side << " " << mid.x() << " " << mid.y() << " " << sol.u[e] << "\n";
  }
  return kExitOk;
}

int cmd_study(const RunConfig& cfg) {
  validate(cfg);
  const PolygonDomain dom = config_domain(cfg);
  const StudyConfig sc = make_study_config(cfg, dom);
  EocTable table = run_convergence_study(sc);
  if (cfg.expected_override) table.expected = *cfg.expected_override;

  if (!cfg.quiet) print_table(table, std::cout);
  auto os = open_out(cfg, "study.csv");
  write_csv(table, os);

  if (cfg.assert_orders) {
    if (table.rows.size() < 3) {
      std::fprintf(stderr, "--assert needs at least three levels\n");
      return kExitConfigError;
    }
    struct Check {
      const char* name;
      double ErrorRecord::* col;
      double target;
      double tol;
    };
    const ExpectedOrders& e = table.expected;
    std::vector<Check> checks = {
        {"y_L2", &ErrorRecord::err_y_L2, e.y_l2, cfg.assert_tol_l2},
        {"y_H1", &ErrorRecord::err_y_H1, e.y_h1, cfg.assert_tol_h1},
        {"phi_L2", &ErrorRecord::err_phi_L2, e.phi_l2, cfg.assert_tol_l2},
        {"phi_H1", &ErrorRecord::err_phi_H1, e.phi_h1, cfg.assert_tol_h1},
    };
    if (cfg.with_ocp)
      checks.push_back({"u_L2G", &ErrorRecord::err_u_L2G, e.u_l2, cfg.assert_tol_u});
    bool ok = true;
    for (const Check& c : checks) {
      const double got = table.tail_mean_eoc(c.col);
      const bool pass = std::abs(got - c.target) <= c.tol;
      ok = ok && pass;
      std::printf("assert %-7s EOC %.3f vs %.2f +- %.2f : %s\n", c.name, got, c.target, c.tol,
                  pass ? "ok" : "MISS");
    }
    if (!ok) return kExitOrderMiss;
  }
  return kExitOk;
}

int cmd_check_coercivity(const RunConfig& cfg) {
  validate(cfg);
  const PolygonDomain dom = config_domain(cfg);
  const GradingSpec grading = config_grading(cfg, dom);
  const TriMesh mesh = build_graded_mesh(dom, cfg.level_max, grading);
  const CoefficientSet coeffs = config_coeffs(cfg);
  const AssembledSystem sys = assemble_state(mesh, coeffs, cfg.quad);
  const AssembledSystem h1 = assemble_state(mesh, reaction_coefficients(1.0), cfg.quad);
  double lambda_min = 0.0;
  try {
    lambda_min = coercivity_probe(sys.K, h1.K);
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "coercivity probe INDETERMINATE: %s\n", e.what());
    return kExitNumericalFailure;
  }
  std::printf("lambda_min = %.6e (level %d, %d nodes): %s\n", lambda_min, cfg.level_max,
              mesh.num_nodes(),
              lambda_min < 0.0 ? "NON-COERCIVE (lambda_min < 0)" : "coercive");
  return lambda_min < 0.0 ? kExitNonCoercive : kExitOk;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"FEM solver for Neumann boundary control of non-coercive elliptic equations"};
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path, out_dir, levels_str, mu_str, coeffs_kind;
  double delta = 0, alpha = 0, nu = 0;
  bool quiet = false, assert_orders = false;

  auto* opt_config = app.add_option("--config", config_path, "JSON config file");
  auto* opt_out = app.add_option("--out", out_dir, "output directory");
  auto* opt_levels = app.add_option("--levels", levels_str, "level range a..b");
  auto* opt_mu = app.add_option("--mu", mu_str, "grading parameter (scalar or comma list)");
  auto* opt_delta = app.add_option("--delta", delta, "convection strength");
  auto* opt_alpha = app.add_option("--alpha", alpha, "coefficient singularity exponent");
  auto* opt_nu = app.add_option("--nu", nu, "Tikhonov weight");
  auto* opt_coeffs = app.add_option("--coeffs", coeffs_kind, "example | constant-reaction");
  app.add_flag("--quiet", quiet, "suppress console tables");
  app.add_flag("--assert", assert_orders, "study: exit 3 unless observed orders match");
  bool no_ocp = false;
  app.add_flag("--no-ocp", no_ocp, "study: skip the control-problem column");

  auto* sub_mesh = app.add_subcommand("mesh", "build graded meshes and report quality");
  auto* sub_bvp = app.add_subcommand("solve-bvp", "solve the state/adjoint pair at one level");
  auto* sub_ocp = app.add_subcommand("solve-ocp", "solve the control problem at one level");
  auto* sub_study = app.add_subcommand("study", "full convergence study (CSV + console)");
  auto* sub_coerc = app.add_subcommand("check-coercivity", "smallest symmetrized eigenvalue");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  try {
    RunConfig cfg;
    if (opt_config->count()) cfg = load_config_file(config_path);
    if (opt_out->count()) cfg.out_dir = out_dir;
    if (opt_levels->count()) {
      const auto sep = levels_str.find("..");
      if (sep == std::string::npos) {
        cfg.level_min = cfg.level_max = std::stoi(levels_str);
      } else {
        cfg.level_min = std::stoi(levels_str.substr(0, sep));
        cfg.level_max = std::stoi(levels_str.substr(sep + 2));
      }
    }
    if (opt_mu->count()) cfg.mu = parse_mu_list(mu_str);
    if (opt_delta->count()) cfg.delta = delta;
    if (opt_alpha->count()) cfg.alpha = alpha;
    if (opt_nu->count()) cfg.nu = nu;
    if (opt_coeffs->count()) cfg.coeffs = coeffs_kind;
    if (quiet) cfg.quiet = true;
    if (assert_orders) cfg.assert_orders = true;
    if (no_ocp) cfg.with_ocp = false;

    if (sub_mesh->parsed()) return cmd_mesh(cfg);
    if (sub_bvp->parsed()) return cmd_solve_bvp(cfg);
    if (sub_ocp->parsed()) return cmd_solve_ocp(cfg);
    if (sub_study->parsed()) return cmd_study(cfg);
    if (sub_coerc->parsed()) return cmd_check_coercivity(cfg);
    return kExitConfigError;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumericalFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfigError;
  }
}

}  // namespace ncfem
