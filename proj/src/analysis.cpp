#include "ncfem/analysis.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>

namespace ncfem {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

struct ElementStream {
  const TriMesh& mesh;
  const TriRule& rule;
  std::vector<int> sing;
  const AssemblyOptions& opts;

  ElementStream(const TriMesh& m, const std::vector<Vec2>& singular_points,
                const AssemblyOptions& o)
      : mesh(m), rule(tri_rule(o.tri_degree)), sing(singular_vertex_of_tris(m, singular_points)),
        opts(o) {}

  // Per-element integral of `f(x, value_h, grad_h)`, where value_h/grad_h
  // come from the P1 field. Deterministic two-phase reduction.
  template <class F>
  double sum(const Eigen::VectorXd* nodal, F&& f) const {
    const int nt = mesh.num_tris();
    std::vector<double> partial(static_cast<size_t>(nt), 0.0);
    auto kernel = [&](int t) {
      const auto& v = mesh.tris[size_t(t)];
      const int rot = std::max(sing[size_t(t)], 0);
      std::array<int, 3> g;
      Vec2 p[3];
      for (int k = 0; k < 3; ++k) {
        g[size_t(k)] = v[size_t((k + rot) % 3)];
        p[k] = mesh.nodes[size_t(g[size_t(k)])];
      }
      const Vec2 d1 = p[1] - p[0], d2 = p[2] - p[0];
      const double area2 = d1.x() * d2.y() - d1.y() * d2.x();
      Vec2 grad_h = Vec2::Zero();
      if (nodal) {
        for (int k = 0; k < 3; ++k) {
          const Vec2 d = p[(k + 1) % 3] - p[(k + 2) % 3];
          grad_h += (*nodal)[g[size_t(k)]] * Vec2(d.y(), -d.x()) / area2;
        }
      }
      const CornerSubdivision* sub = sing[size_t(t)] >= 0 ? &opts.corner : nullptr;
      double acc = 0.0;
      for_each_tri_point(p[0], p[1], p[2], rule, sub,
                         [&](const Vec2& x, double w, const std::array<double, 3>& bary) {
                           double vh = 0.0;
                           if (nodal)
                             for (int k = 0; k < 3; ++k)
                               vh += bary[size_t(k)] * (*nodal)[g[size_t(k)]];
                           acc += w * f(x, vh, grad_h);
                         });
      partial[size_t(t)] = acc;
    };
    if (opts.parallel) {
#pragma omp parallel for schedule(static)
      for (int t = 0; t < nt; ++t) kernel(t);
    } else {
      for (int t = 0; t < nt; ++t) kernel(t);
    }
    double total = 0.0;
    for (double s : partial) total += s;
    return total;
  }
};

}  // namespace

double EocTable::tail_mean_eoc(double ErrorRecord::* col, int pairs) const {
  if (static_cast<int>(rows.size()) < pairs + 1)
    throw std::invalid_argument("not enough levels for the requested EOC tail");
  double sum = 0.0;
  const int n = static_cast<int>(rows.size());
  for (int k = n - pairs; k < n; ++k)
    sum += eoc(rows[size_t(k - 1)].*col, rows[size_t(k)].*col);
  return sum / pairs;
}

ExpectedOrders expected_orders(const PolygonDomain& dom, const GradingSpec& grading) {
  double s = 1.0;
  for (int j = 0; j < dom.num_vertices(); ++j)
    s = std::min(s, dom.corner(j).lambda / grading.mu[size_t(j)]);
  ExpectedOrders e;
  e.y_l2 = e.phi_l2 = 2.0 * s;
  e.y_h1 = e.phi_h1 = s;
  e.u_l2 = std::min(1.0, 1.5 * s);
  return e;
}

double error_L2_domain(const TriMesh& mesh, const Eigen::VectorXd& nodal,
                       const ScalarField& exact, const std::vector<Vec2>& singular_points,
                       const AssemblyOptions& opts) {
  ElementStream es(mesh, singular_points, opts);
  const double s = es.sum(&nodal, [&](const Vec2& x, double vh, const Vec2&) {
    const double d = vh - exact(x);
    return d * d;
  });
  return std::sqrt(s);
}

double error_H1_domain(const TriMesh& mesh, const Eigen::VectorXd& nodal,
                       const ScalarField& exact, const VectorField& grad_exact,
                       const std::vector<Vec2>& singular_points, const AssemblyOptions& opts) {
  ElementStream es(mesh, singular_points, opts);
  const double s = es.sum(&nodal, [&](const Vec2& x, double vh, const Vec2& gh) {
    const double d = vh - exact(x);
    const Vec2 dg = gh - grad_exact(x);
    return d * d + dg.squaredNorm();
  });
  return std::sqrt(s);
}

double error_L2_boundary(const TriMesh& mesh, const ControlVector& u, const ScalarField& exact,
                         int edge_degree) {
  const EdgeRule& rule = edge_rule(edge_degree);
  double s = 0.0;
  for (int e = 0; e < mesh.num_boundary_edges(); ++e) {
    const BoundaryEdge& be = mesh.boundary[size_t(e)];
    const Vec2& a = mesh.nodes[size_t(be.a)];
    const Vec2& b = mesh.nodes[size_t(be.b)];
    const double ue = u[e];
    s += integrate_edge(
        a, b,
        [&](const Vec2& x) {
          const double d = ue - exact(x);
          return d * d;
        },
        rule);
  }
  return std::sqrt(s);
}

double integrate_domain(const TriMesh& mesh, const ScalarField& f,
                        const std::vector<Vec2>& singular_points, const AssemblyOptions& opts) {
  ElementStream es(mesh, singular_points, opts);
  return es.sum(nullptr, [&](const Vec2& x, double, const Vec2&) { return f(x); });
}

namespace {

// Number of eigenvalues of the pencil (S, M) below sigma, by Sylvester's
// law applied to the LDL^T factorization of S - sigma M. Returns -1 if the
// factorization broke down (indefinite pivot underflow).
int inertia_below(const SpMat& S, const SpMat& M, double sigma) {
  SpMat A = S - sigma * M;
  Eigen::SimplicialLDLT<SpMat> ldlt(A);
  if (ldlt.info() != Eigen::Success) return -1;
  const auto& D = ldlt.vectorD();
  int neg = 0;
  for (int i = 0; i < D.size(); ++i) {
    if (!std::isfinite(D[i])) return -1;
    if (D[i] < 0.0) ++neg;
  }
  return neg;
}

}  // namespace

double coercivity_probe(const SpMat& K, const SpMat& M_h1, double tol, int max_iter) {
  if (K.rows() != M_h1.rows()) throw std::invalid_argument("matrix dimensions differ");
  const int n = static_cast<int>(K.rows());
  SpMat S = SpMat(0.5 * (K + SpMat(K.transpose())));

  // Rayleigh quotients give upper bounds for the smallest eigenvalue.
  std::mt19937 rng(20240817u);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  double upper = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 4; ++trial) {
    Eigen::VectorXd v(n);
    if (trial == 0)
      v.setOnes();
    else
      for (int i = 0; i < n; ++i) v[i] = unif(rng);
    upper = std::min(upper, v.dot(S * v) / v.dot(M_h1 * v));
  }

  const double scale = 1.0 + std::abs(upper);
  auto inertia = [&](double sigma) {
    for (int nudge = 0; nudge < 6; ++nudge) {
      const int c = inertia_below(S, M_h1, sigma);
      if (c >= 0) return c;
      sigma -= scale * 1e-10 * std::pow(10.0, nudge);
    }
    throw NumericalError("LDL^T inertia count failed near sigma");
  };

  // Expand downward until the shift is below the whole spectrum.
  double lo = std::min(0.0, upper) - scale;
  for (int k = 0; inertia(lo) > 0; ++k) {
    if (k > 60) throw NumericalError("could not bracket the smallest eigenvalue from below");
    lo = lo * 2.0 - scale;
  }
  // Tighten the bracket (lo, hi] around the smallest eigenvalue.
  double hi = upper;
  for (int k = 0; k < 40 && (hi - lo) > 1e-3 * scale; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (inertia(mid) == 0)
      lo = mid;
    else
      hi = mid;
  }

  // Shifted inverse power iteration from just below the eigenvalue.
  SpMat A = S - lo * M_h1;
  Eigen::SparseLU<SpMat> lu(A);
  if (lu.info() != Eigen::Success) throw NumericalError("factorization of shifted pencil failed");
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = unif(rng);
  v /= std::sqrt(v.dot(M_h1 * v));
  double rho_prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = lu.solve(M_h1 * v);
    const double mnorm = std::sqrt(w.dot(M_h1 * w));
    if (!(mnorm > 0.0) || !std::isfinite(mnorm))
      throw NumericalError("inverse iteration broke down");
    v = w / mnorm;
    const double rho = v.dot(S * v) / v.dot(M_h1 * v);
    if (std::abs(rho - rho_prev) <= tol * std::max(1.0, std::abs(rho))) return rho;
    rho_prev = rho;
  }
  throw NumericalError("inverse iteration did not converge within max_iter");
}

EocTable run_convergence_study(const StudyConfig& cfg) {
  if (cfg.level_max < cfg.level_min || cfg.level_min < 1)
    throw std::invalid_argument("invalid level range");

  const ManufacturedCase mc = make_example(cfg.delta, cfg.alpha, cfg.nu);
  EocTable table;
  table.expected = expected_orders(cfg.domain, cfg.grading);
  table.has_ocp = cfg.with_ocp;

  MeshBuilder builder(cfg.domain);
  for (int level = 1; level <= cfg.level_max; ++level) {
    builder.refine_to_level(level, cfg.grading);
    if (level < cfg.level_min) continue;
    try {
      const TriMesh mesh = builder.snapshot();
      if (cfg.verbose)
        std::cerr << "level " << level << ": " << mesh.num_nodes() << " nodes, "
                  << mesh.num_tris() << " triangles\n";

      AssembledSystem sys = assemble_state(mesh, mc.coeffs, cfg.quad);
      const Eigen::VectorXd load_f =
          assemble_domain_load(mesh, mc.f, mc.coeffs.singular_points, cfg.quad);
      const Eigen::VectorXd load_dny = assemble_boundary_load(mesh, mc.dn_y, cfg.quad);
      const Eigen::VectorXd load_gy = assemble_boundary_load(mesh, mc.g_y, cfg.quad);
      const Eigen::VectorXd load_gphi = assemble_boundary_load(mesh, mc.g_phi, cfg.quad);
      const Eigen::VectorXd load_yd =
          assemble_domain_load(mesh, mc.y_d, mc.coeffs.singular_points, cfg.quad);
      const double yd_sq = integrate_domain(
          mesh, [&](const Vec2& x) { const double v = mc.y_d(x); return v * v; },
          mc.coeffs.singular_points, cfg.quad);
      sys.load_f = load_f;
      sys.load_g = load_gy;

      OcpProblem problem(std::move(sys), cfg.nu, cfg.bounds, load_f + load_gy, load_yd, yd_sq,
                         load_gphi, cfg.solver);

      ErrorRecord rec;
      rec.level = level;
      rec.h = mesh.h_nominal;
      rec.ndof = static_cast<std::size_t>(mesh.num_nodes());

      // Boundary value problem pair: state driven by the exact control,
      // adjoint driven by the exact state.
      const Eigen::VectorXd y_bvp = problem.solver().solve(load_f + load_dny);
      rec.err_y_L2 =
          error_L2_domain(mesh, y_bvp, mc.exact_y, mc.coeffs.singular_points, cfg.quad);
      rec.err_y_H1 = error_H1_domain(mesh, y_bvp, mc.exact_y, mc.grad_y,
                                     mc.coeffs.singular_points, cfg.quad);
      const Eigen::VectorXd load_ymyd =
          assemble_domain_load(mesh, mc.y_minus_yd, mc.coeffs.singular_points, cfg.quad);
      const Eigen::VectorXd phi_bvp = problem.solver().solve_transposed(load_ymyd + load_gphi);
      rec.err_phi_L2 =
          error_L2_domain(mesh, phi_bvp, mc.exact_phi, mc.coeffs.singular_points, cfg.quad);
      rec.err_phi_H1 = error_H1_domain(mesh, phi_bvp, mc.exact_phi, mc.grad_phi,
                                       mc.coeffs.singular_points, cfg.quad);

      if (cfg.with_ocp) {
        const OcpSolution sol = cfg.bounds.finite() ? solve_box(problem, cfg.ocp)
                                                    : solve_unconstrained(problem, cfg.ocp);
        rec.err_u_L2G = error_L2_boundary(mesh, sol.u, mc.exact_u, cfg.quad.edge_degree);
        if (cfg.verbose)
          std::cerr << "  ocp: " << sol.method << ", residual " << sol.opt_residual << ", "
                    << sol.iterations << " iterations\n";
      }
      table.rows.push_back(rec);
    } catch (const NumericalError& err) {
      throw NumericalError("level " + std::to_string(level) + ": " + err.what());
    }
  }
  return table;
}

void write_csv(const EocTable& table, std::ostream& os) {
  os << "level,h,ndof,err_y_L2,eoc_y_L2,err_y_H1,eoc_y_H1,err_phi_L2,eoc_phi_L2,"
        "err_phi_H1,eoc_phi_H1,err_u_L2G,eoc_u_L2G\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.6e", v);
    return std::string(buf);
  };
  auto ord = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return std::string(buf);
  };
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const ErrorRecord& r = table.rows[k];
    const ErrorRecord* prev = k > 0 ? &table.rows[k - 1] : nullptr;
    auto cell = [&](double ErrorRecord::* col) {
      std::string s = num(r.*col) + ",";
      if (prev) s += ord(EocTable::eoc(prev->*col, r.*col));
      return s;
    };
    os << r.level << "," << num(r.h) << "," << r.ndof << "," << cell(&ErrorRecord::err_y_L2)
       << "," << cell(&ErrorRecord::err_y_H1) << "," << cell(&ErrorRecord::err_phi_L2) << ","
       << cell(&ErrorRecord::err_phi_H1) << ",";
    if (table.has_ocp)
      os << cell(&ErrorRecord::err_u_L2G);
    else
      os << ",";
    os << "\n";
  }
  os << "# expected,,," << ord(table.expected.y_l2) << ",," << ord(table.expected.y_h1) << ",,"
     << ord(table.expected.phi_l2) << ",," << ord(table.expected.phi_h1) << ",,";
  if (table.has_ocp) os << ord(table.expected.u_l2);
  os << ",\n";
}

void print_table(const EocTable& table, std::ostream& os) {
  char line[256];
  os << "  j |   y L2    EOC |   y H1    EOC | phi L2    EOC | phi H1    EOC |   u L2G   EOC\n";
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const ErrorRecord& r = table.rows[k];
    const ErrorRecord* prev = k > 0 ? &table.rows[k - 1] : nullptr;
    auto eoc_str = [&](double ErrorRecord::* col, char* out) {
      if (prev)
        std::snprintf(out, 8, "%5.2f", EocTable::eoc(prev->*col, r.*col));
      else
        std::snprintf(out, 8, "     ");
    };
    char e1[8], e2[8], e3[8], e4[8], e5[8];
    eoc_str(&ErrorRecord::err_y_L2, e1);
    eoc_str(&ErrorRecord::err_y_H1, e2);
    eoc_str(&ErrorRecord::err_phi_L2, e3);
    eoc_str(&ErrorRecord::err_phi_H1, e4);
    eoc_str(&ErrorRecord::err_u_L2G, e5);
    if (table.has_ocp)
      std::snprintf(line, sizeof line,
                    "%3d | %.2e %s | %.2e %s | %.2e %s | %.2e %s | %.2e %s\n", r.level,
                    r.err_y_L2, e1, r.err_y_H1, e2, r.err_phi_L2, e3, r.err_phi_H1, e4,
                    r.err_u_L2G, e5);
    else
      std::snprintf(line, sizeof line, "%3d | %.2e %s | %.2e %s | %.2e %s | %.2e %s |\n",
                    r.level, r.err_y_L2, e1, r.err_y_H1, e2, r.err_phi_L2, e3, r.err_phi_H1,
                    e4);
    os << line;
  }
  std::snprintf(line, sizeof line,
                "exp |          %4.2f |          %4.2f |          %4.2f |          %4.2f |  "
                "        %4.2f\n",
                table.expected.y_l2, table.expected.y_h1, table.expected.phi_l2,
                table.expected.phi_h1, table.expected.u_l2);
  os << line;
}

}  // namespace ncfem
