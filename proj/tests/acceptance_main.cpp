// Acceptance suite: runs the full convergence studies and the property
// checks, printing one PASS/FAIL line per criterion.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ncfem/analysis.hpp"
#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>

using namespace ncfem;

namespace {

using Clock = std::chrono::steady_clock;

struct StudyResult {
  EocTable table;
  double seconds = 0.0;
};

const StudyResult& study(double mu) {
  static std::map<double, StudyResult> cache;
  auto it = cache.find(mu);
  if (it != cache.end()) return it->second;
  const auto t0 = Clock::now();
  StudyConfig cfg{make_lshape()};
  cfg.grading = GradingSpec::with_mu(cfg.domain, mu);
  cfg.level_min = 1;
  cfg.level_max = 7;
  cfg.delta = 6.0;
  cfg.alpha = -1.25;
  cfg.nu = 1.0;
  cfg.verbose = false;
  StudyResult r;
  r.table = run_convergence_study(cfg);
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return cache.emplace(mu, std::move(r)).first->second;
}

struct Window {
  const char* name;
  double ErrorRecord::* col;
  double target;
  double tol;
};

bool check_windows(const EocTable& t, const std::vector<Window>& windows, std::string& detail) {
  bool ok = true;
  char buf[96];
  for (const Window& w : windows) {
    const double got = t.tail_mean_eoc(w.col);
    const bool pass = std::abs(got - w.target) <= w.tol + 1e-12;
    ok = ok && pass;
    std::snprintf(buf, sizeof buf, " %s=%.3f(%s%.2f+-%.2f)", w.name, got, pass ? "" : "MISS ",
                  w.target, w.tol);
    detail += buf;
  }
  return ok;
}

void report(int criterion, const char* name, bool pass, const std::string& detail) {
  std::printf("ACCEPTANCE %d %-24s %s |%s\n", criterion, name, pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  CHECK_MESSAGE(pass, "criterion ", criterion, " (", name, "):", detail);
}

ControlVector random_direction(int m, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  ControlVector v(m);
  for (int e = 0; e < m; ++e) v[e] = unif(rng);
  return v;
}

}  // namespace

TEST_CASE("criterion 1: quasi-uniform convergence orders") {
  const StudyResult& r = study(1.0);
  std::string detail;
  bool ok = check_windows(r.table,
                          {{"y_L2", &ErrorRecord::err_y_L2, 1.33, 0.12},
                           {"y_H1", &ErrorRecord::err_y_H1, 0.66, 0.06},
                           {"phi_L2", &ErrorRecord::err_phi_L2, 1.33, 0.12},
                           {"phi_H1", &ErrorRecord::err_phi_H1, 0.66, 0.06}},
                          detail);
  char buf[48];
  std::snprintf(buf, sizeof buf, " time=%.1fs", r.seconds);
  detail += buf;
  ok = ok && r.seconds < 300.0;
  report(1, "quasi-uniform orders", ok, detail);
}

TEST_CASE("criterion 2: graded-mesh convergence orders") {
  std::string detail;
  detail += " mu=0.5:";
  bool ok = check_windows(study(0.5).table,
                          {{"y_L2", &ErrorRecord::err_y_L2, 2.0, 0.15},
                           {"y_H1", &ErrorRecord::err_y_H1, 1.0, 0.08},
                           {"phi_L2", &ErrorRecord::err_phi_L2, 2.0, 0.15},
                           {"phi_H1", &ErrorRecord::err_phi_H1, 1.0, 0.08}},
                          detail);
  detail += " mu=0.66:";
  ok = check_windows(study(0.66).table,
                     {{"y_L2", &ErrorRecord::err_y_L2, 2.0, 0.2},
                      {"y_H1", &ErrorRecord::err_y_H1, 1.0, 0.2},
                      {"phi_L2", &ErrorRecord::err_phi_L2, 2.0, 0.2},
                      {"phi_H1", &ErrorRecord::err_phi_H1, 1.0, 0.2}},
                     detail) &&
       ok;
  report(2, "graded orders", ok, detail);
}

TEST_CASE("criterion 3: first-order control convergence for all gradings") {
  std::string detail;
  bool ok = true;
  for (double mu : {1.0, 0.66, 0.6, 0.5}) {
    char tag[32];
    std::snprintf(tag, sizeof tag, " mu=%.2f:", mu);
    detail += tag;
    ok = check_windows(study(mu).table, {{"u_L2G", &ErrorRecord::err_u_L2G, 1.0, 0.07}},
                       detail) &&
         ok;
  }
  // the headline regime: on quasi-uniform meshes the control order exceeds
  // the state H1 order
  const EocTable& qu = study(1.0).table;
  const bool regime = qu.tail_mean_eoc(&ErrorRecord::err_u_L2G) >
                      qu.tail_mean_eoc(&ErrorRecord::err_y_H1) + 0.2;
  detail += regime ? " u>yH1" : " u>yH1 MISS";
  ok = ok && regime;
  report(3, "control order one", ok, detail);
}

TEST_CASE("criterion 4: coercivity probe signs") {
  const auto t0 = Clock::now();
  const PolygonDomain dom = make_lshape();
  const TriMesh mesh = build_graded_mesh(dom, 4, GradingSpec::uniform(dom));
  const AssembledSystem metric = assemble_state(mesh, reaction_coefficients(1.0));

  const ManufacturedCase mc = make_example(6.0, -1.25, 1.0);
  const AssembledSystem noncoercive = assemble_state(mesh, mc.coeffs);
  const double lam_example = coercivity_probe(noncoercive.K, metric.K);

  const double lam_reference = coercivity_probe(metric.K, metric.K);
  const double seconds = std::chrono::duration<double>(Clock::now() - t0).count();

  char buf[128];
  std::snprintf(buf, sizeof buf, " lambda(delta=6)=%.4f lambda(reference)=%.4f time=%.1fs",
                lam_example, lam_reference, seconds);
  const bool ok = lam_example < 0.0 && lam_reference > 0.0 && seconds < 60.0;
  report(4, "coercivity probe", ok, buf);
}

TEST_CASE("criterion 5: property suite") {
  const PolygonDomain dom = make_lshape();
  const ManufacturedCase mc = make_example(6.0, -1.25, 1.0);
  std::string detail;
  bool ok = true;

  {  // adjoint transpose: quadrature refinement and constant-b exactness
    const TriMesh mesh = build_graded_mesh(dom, 3, GradingSpec::uniform(dom));
    CoefficientSet smooth = laplace_coefficients();
    smooth.b = [](const Vec2& x) {
      return Vec2(std::exp(x.x() - x.y()), std::sin(x.x() + x.y()));
    };
    smooth.div_b = [](const Vec2& x) {
      return std::exp(x.x() - x.y()) + std::cos(x.x() + x.y());
    };
    smooth.a0 = [](const Vec2&) { return 1.0; };
    smooth.has_convection = true;
    auto max_diff = [](const Eigen::SparseMatrix<double>& A,
                       const Eigen::SparseMatrix<double>& B) {
      Eigen::SparseMatrix<double> D = A - B;
      double m = 0.0;
      for (int j = 0; j < D.outerSize(); ++j)
        for (Eigen::SparseMatrix<double>::InnerIterator it(D, j); it; ++it)
          m = std::max(m, std::abs(it.value()));
      return m;
    };
    AssemblyOptions low, high;
    high.tri_degree = 8;
    high.edge_degree = 15;
    const double e4 = max_diff(
        assemble_adjoint_direct(mesh, smooth, low),
        Eigen::SparseMatrix<double>(assemble_state(mesh, smooth, low).K.transpose()));
    const double e8 = max_diff(
        assemble_adjoint_direct(mesh, smooth, high),
        Eigen::SparseMatrix<double>(assemble_state(mesh, smooth, high).K.transpose()));

    CoefficientSet constb = laplace_coefficients();
    constb.b = [](const Vec2&) { return Vec2(0.7, -0.4); };
    constb.div_b = [](const Vec2&) { return 0.0; };
    constb.a0 = [](const Vec2&) { return 0.5; };
    constb.has_convection = true;
    const double ec = max_diff(
        assemble_adjoint_direct(mesh, constb),
        Eigen::SparseMatrix<double>(assemble_state(mesh, constb).K.transpose()));

    const bool pass = e8 * 10.0 <= e4 && ec <= 1e-12;
    char buf[96];
    std::snprintf(buf, sizeof buf, " transpose(deg4=%.1e deg8=%.1e const=%.1e)%s", e4, e8, ec,
                  pass ? "" : " MISS");
    detail += buf;
    ok = ok && pass;
  }

  {  // gradient vs central differences, level 3, five random directions
    const TriMesh mesh = build_graded_mesh(dom, 3, GradingSpec::uniform(dom));
    const OcpProblem p = testsupport::make_problem(mesh, mc);
    const ControlVector u = 0.2 * random_direction(p.num_controls(), 2024u);
    const ControlVector g = gradient(p, u);
    const double J0 = objective(p, u);
    double worst = 0.0;
    const double t = 1e-5;
    for (unsigned seed = 1; seed <= 5; ++seed) {
      const ControlVector v = random_direction(p.num_controls(), seed);
      const double fd = (objective(p, u + t * v) - objective(p, u - t * v)) / (2.0 * t);
      worst = std::max(worst, std::abs(fd - p.gamma().inner(g, v)) / (1.0 + std::abs(J0)));
    }
    const bool pass = worst <= 1e-6;
    char buf[64];
    std::snprintf(buf, sizeof buf, " gradient(fd=%.1e)%s", worst, pass ? "" : " MISS");
    detail += buf;
    ok = ok && pass;
  }

  {  // Q_h: admissibility preservation and per-edge orthogonality
    const TriMesh mesh = build_graded_mesh(dom, 3, GradingSpec::uniform(dom));
    auto field = [](const Vec2& x) {
      return std::min(0.8, std::max(-0.5, std::sin(5.0 * x.x()) * (1.0 + x.y())));
    };
    const ControlVector u = project_Qh(field, mesh);
    bool pass = true;
    double worst_orth = 0.0;
    for (int e = 0; e < mesh.num_boundary_edges(); ++e) {
      pass = pass && u[e] >= -0.5 - 1e-12 && u[e] <= 0.8 + 1e-12;
      const BoundaryEdge& be = mesh.boundary[size_t(e)];
      worst_orth = std::max(
          worst_orth, std::abs(integrate_edge(
                          mesh.nodes[size_t(be.a)], mesh.nodes[size_t(be.b)],
                          [&](const Vec2& x) { return field(x) - u[e]; }, edge_rule(7))));
    }
    pass = pass && worst_orth <= 1e-12;
    char buf[64];
    std::snprintf(buf, sizeof buf, " Qh(orth=%.1e)%s", worst_orth, pass ? "" : " MISS");
    detail += buf;
    ok = ok && pass;
  }

  {  // patch test
    auto exact = [](const Vec2& x) { return 3.0 + x.x() + 2.0 * x.y(); };
    const Vec2 grad(1.0, 2.0);
    const TriMesh mesh = build_graded_mesh(dom, 3, GradingSpec::with_mu(dom, 0.66));
    const AssembledSystem sys = assemble_state(mesh, reaction_coefficients(1.0));
    const Eigen::VectorXd rhs =
        assemble_domain_load(mesh, exact, {}) +
        assemble_boundary_load(mesh, [&](const Vec2&, const Vec2& n) { return grad.dot(n); });
    LinearOperatorSolver s(sys.K);
    const Eigen::VectorXd y = s.solve(rhs);
    double err = 0.0;
    for (int i = 0; i < mesh.num_nodes(); ++i)
      err = std::max(err, std::abs(y[i] - exact(mesh.nodes[size_t(i)])));
    const bool pass = err <= 1e-9;
    char buf[48];
    std::snprintf(buf, sizeof buf, " patch(%.1e)%s", err, pass ? "" : " MISS");
    detail += buf;
    ok = ok && pass;
  }

  {  // projection-formula residuals and variational-inequality signs
    const TriMesh mesh = build_graded_mesh(dom, 3, GradingSpec::uniform(dom));
    const OcpSolution unc = solve_unconstrained(testsupport::make_problem(mesh, mc));
    const double lo = 0.4 * unc.u.minCoeff() + 0.6 * unc.u.maxCoeff();
    const double hi = 0.1 * unc.u.minCoeff() + 0.9 * unc.u.maxCoeff();
    const OcpProblem boxed = testsupport::make_problem(mesh, mc, ControlBounds{lo, hi});
    const OcpSolution box = solve_box(boxed);

    bool pass = unc.opt_residual <= 1e-8 && box.opt_residual <= 1e-8;
    const ControlVector mult = boxed.nu() * box.u + boxed.gamma().edge_average(box.phi);
    int n_lo = 0, n_hi = 0;
    for (int e = 0; e < box.u.size(); ++e) {
      if (box.u[e] <= lo + 1e-12) {
        ++n_lo;
        pass = pass && mult[e] >= -1e-8;
      } else if (box.u[e] >= hi - 1e-12) {
        ++n_hi;
        pass = pass && mult[e] <= 1e-8;
      } else {
        pass = pass && std::abs(mult[e]) <= 1e-8;
      }
    }
    pass = pass && n_lo > 0 && n_hi > 0;
    char buf[96];
    std::snprintf(buf, sizeof buf, " kkt(unc=%.1e box=%.1e active=%d/%d)%s", unc.opt_residual,
                  box.opt_residual, n_lo, n_hi, pass ? "" : " MISS");
    detail += buf;
    ok = ok && pass;
  }

  {  // grading law at every level for mu in {0.5, 0.66, 1}
    std::size_t worst = 0;
    for (double mu : {0.5, 0.66, 1.0}) {
      const GradingSpec g = GradingSpec::with_mu(dom, mu);
      MeshBuilder builder(dom);
      for (int level = 1; level <= 6; ++level) {
        builder.refine_to_level(level, g);
        worst = std::max(worst,
                         mesh_quality_report(builder.snapshot(), dom, g).grading_violations);
      }
    }
    const bool pass = worst == 0;
    char buf[48];
    std::snprintf(buf, sizeof buf, " grading(violations=%zu)%s", worst, pass ? "" : " MISS");
    detail += buf;
    ok = ok && pass;
  }

  report(5, "property suite", ok, detail);
}
