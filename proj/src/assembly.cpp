#include "ncfem/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace ncfem {

namespace {

// Sparsity pattern of the node-adjacency graph, entries zero-initialized.
Eigen::SparseMatrix<double> make_pattern(const TriMesh& mesh) {
  const int n = mesh.num_nodes();
  std::vector<std::vector<int>> rows(static_cast<size_t>(n));
  for (const auto& v : mesh.tris)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) rows[size_t(v[size_t(j)])].push_back(v[size_t(i)]);
  Eigen::SparseMatrix<double> A(n, n);
  Eigen::VectorXi counts(n);
  for (int j = 0; j < n; ++j) {
    auto& r = rows[size_t(j)];
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    counts[j] = static_cast<int>(r.size());
  }
  A.reserve(counts);
  for (int j = 0; j < n; ++j)
    for (int i : rows[size_t(j)]) A.insert(i, j) = 0.0;
  A.makeCompressed();
  return A;
}

// Position of entry (i, j) in the compressed storage.
inline double& coeff_at(Eigen::SparseMatrix<double>& A, int i, int j) {
  const int* inner = A.innerIndexPtr();
  const int begin = A.outerIndexPtr()[j];
  const int end = A.outerIndexPtr()[j + 1];
  const int* it = std::lower_bound(inner + begin, inner + end, i);
  return A.valuePtr()[it - inner];
}

struct P1Element {
  std::array<int, 3> glob;
  Vec2 p[3];
  Vec2 grad[3];
  double area;
};

P1Element element_geometry(const TriMesh& mesh, int t, int rotate) {
  P1Element e;
  const auto& v = mesh.tris[size_t(t)];
  for (int k = 0; k < 3; ++k) {
    e.glob[size_t(k)] = v[size_t((k + rotate) % 3)];
    e.p[k] = mesh.nodes[size_t(e.glob[size_t(k)])];
  }
  const Vec2 d1 = e.p[1] - e.p[0], d2 = e.p[2] - e.p[0];
  e.area = 0.5 * (d1.x() * d2.y() - d1.y() * d2.x());
  const double inv2A = 1.0 / (2.0 * e.area);
  for (int k = 0; k < 3; ++k) {
    const Vec2 d = e.p[(k + 1) % 3] - e.p[(k + 2) % 3];
    e.grad[k] = Vec2(d.y(), -d.x()) * inv2A;
  }
  return e;
}

using Local9 = std::array<double, 9>;
using Local3 = std::array<double, 3>;

}  // namespace

std::vector<int> singular_vertex_of_tris(const TriMesh& mesh,
                                         const std::vector<Vec2>& singular_points) {
  std::vector<int> result(static_cast<size_t>(mesh.num_tris()), -1);
  if (singular_points.empty()) return result;
  std::vector<int> singular_nodes;
  for (int i = 0; i < mesh.num_nodes(); ++i)
    for (const Vec2& s : singular_points)
      if ((mesh.nodes[size_t(i)] - s).norm() < 1e-14) singular_nodes.push_back(i);
  if (singular_nodes.empty()) return result;
  for (int t = 0; t < mesh.num_tris(); ++t) {
    const auto& v = mesh.tris[size_t(t)];
    for (int k = 0; k < 3; ++k)
      if (std::find(singular_nodes.begin(), singular_nodes.end(), v[size_t(k)]) !=
          singular_nodes.end()) {
        result[size_t(t)] = k;
        break;
      }
  }
  return result;
}

Eigen::VectorXd BoundaryMass::apply(const Eigen::VectorXd& u_edge) const {
  Eigen::VectorXd load = Eigen::VectorXd::Zero(n);
  for (int e = 0; e < num_edges(); ++e) {
    const double half = 0.5 * h[e] * u_edge[e];
    load[edge_nodes[size_t(e)][0]] += half;
    load[edge_nodes[size_t(e)][1]] += half;
  }
  return load;
}

Eigen::VectorXd BoundaryMass::edge_average(const Eigen::VectorXd& nodal) const {
  Eigen::VectorXd avg(num_edges());
  for (int e = 0; e < num_edges(); ++e)
    avg[e] = 0.5 * (nodal[edge_nodes[size_t(e)][0]] + nodal[edge_nodes[size_t(e)][1]]);
  return avg;
}

double BoundaryMass::inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
  return (h.array() * u.array() * v.array()).sum();
}

double BoundaryMass::norm(const Eigen::VectorXd& u) const { return std::sqrt(inner(u, u)); }

BoundaryMass assemble_boundary_mass(const TriMesh& mesh) {
  BoundaryMass bm;
  bm.n = mesh.num_nodes();
  bm.h.resize(mesh.num_boundary_edges());
  bm.edge_nodes.reserve(static_cast<size_t>(mesh.num_boundary_edges()));
  for (int e = 0; e < mesh.num_boundary_edges(); ++e) {
    const BoundaryEdge& be = mesh.boundary[size_t(e)];
    bm.edge_nodes.push_back({be.a, be.b});
    bm.h[e] = be.length;
  }
  return bm;
}

AssembledSystem assemble_state(const TriMesh& mesh, const CoefficientSet& coeffs,
                               const AssemblyOptions& opts) {
  AssembledSystem sys;
  sys.n = mesh.num_nodes();
  sys.K = make_pattern(mesh);
  sys.M_omega = sys.K;
  sys.gamma = assemble_boundary_mass(mesh);

  const TriRule& rule = tri_rule(opts.tri_degree);
  const std::vector<int> sing = singular_vertex_of_tris(mesh, coeffs.singular_points);
  const int nt = mesh.num_tris();

  std::vector<Local9> locK(static_cast<size_t>(nt));
  std::vector<Local9> locM(static_cast<size_t>(nt));
  std::vector<std::array<int, 3>> globs(static_cast<size_t>(nt));

  auto kernel = [&](int t) {
    const int rot = std::max(sing[size_t(t)], 0);
    const P1Element e = element_geometry(mesh, t, rot);
    globs[size_t(t)] = e.glob;
    Local9 K{}, M{};
    const CornerSubdivision* sub = sing[size_t(t)] >= 0 ? &opts.corner : nullptr;
    for_each_tri_point(
        e.p[0], e.p[1], e.p[2], rule, sub,
        [&](const Vec2& x, double w, const std::array<double, 3>& bary) {
          const Eigen::Matrix2d a = coeffs.a(x);
          const double a0 = coeffs.a0(x);
          const Vec2 b = coeffs.has_convection ? coeffs.b(x) : Vec2::Zero().eval();
          for (int j = 0; j < 3; ++j) {
            const Vec2 agj = a * e.grad[j];
            const double bgj = coeffs.has_convection ? b.dot(e.grad[j]) : 0.0;
            for (int i = 0; i < 3; ++i) {
              K[size_t(3 * i + j)] +=
                  w * (e.grad[i].dot(agj) + (bgj + a0 * bary[size_t(j)]) * bary[size_t(i)]);
              M[size_t(3 * i + j)] += w * bary[size_t(i)] * bary[size_t(j)];
            }
          }
        });
    locK[size_t(t)] = K;
    locM[size_t(t)] = M;
  };

  if (opts.parallel) {
#pragma omp parallel for schedule(static)
    for (int t = 0; t < nt; ++t) kernel(t);
  } else {
    for (int t = 0; t < nt; ++t) kernel(t);
  }

  // Deterministic merge in element order.
  for (int t = 0; t < nt; ++t) {
    const auto& g = globs[size_t(t)];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        coeff_at(sys.K, g[size_t(i)], g[size_t(j)]) += locK[size_t(t)][size_t(3 * i + j)];
        coeff_at(sys.M_omega, g[size_t(i)], g[size_t(j)]) += locM[size_t(t)][size_t(3 * i + j)];
      }
  }
  return sys;
}

Eigen::SparseMatrix<double> assemble_adjoint_direct(const TriMesh& mesh,
                                                    const CoefficientSet& coeffs,
                                                    const AssemblyOptions& opts) {
  Eigen::SparseMatrix<double> D = make_pattern(mesh);
  const TriRule& rule = tri_rule(opts.tri_degree);
  const std::vector<int> sing = singular_vertex_of_tris(mesh, coeffs.singular_points);
  const int nt = mesh.num_tris();

  std::vector<Local9> loc(static_cast<size_t>(nt));
  std::vector<std::array<int, 3>> globs(static_cast<size_t>(nt));

  auto kernel = [&](int t) {
    const int rot = std::max(sing[size_t(t)], 0);
    const P1Element e = element_geometry(mesh, t, rot);
    globs[size_t(t)] = e.glob;
    Local9 Dl{};
    const CornerSubdivision* sub = sing[size_t(t)] >= 0 ? &opts.corner : nullptr;
    for_each_tri_point(
        e.p[0], e.p[1], e.p[2], rule, sub,
        [&](const Vec2& x, double w, const std::array<double, 3>& bary) {
          const Eigen::Matrix2d a = coeffs.a(x);
          const double a0 = coeffs.a0(x);
          const Vec2 b = coeffs.b(x);
          const double db = coeffs.div_b(x);
          for (int j = 0; j < 3; ++j) {
            const Vec2 agj = a * e.grad[j];
            const double bgj = b.dot(e.grad[j]);
            for (int i = 0; i < 3; ++i) {
              Dl[size_t(3 * i + j)] +=
                  w * (e.grad[i].dot(agj) +
                       ((a0 - db) * bary[size_t(j)] - bgj) * bary[size_t(i)]);
            }
          }
        });
    loc[size_t(t)] = Dl;
  };

  if (opts.parallel) {
#pragma omp parallel for schedule(static)
    for (int t = 0; t < nt; ++t) kernel(t);
  } else {
    for (int t = 0; t < nt; ++t) kernel(t);
  }
  for (int t = 0; t < nt; ++t) {
    const auto& g = globs[size_t(t)];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        coeff_at(D, g[size_t(i)], g[size_t(j)]) += loc[size_t(t)][size_t(3 * i + j)];
  }

  // Boundary term int_E phi_i phi_j (b . n).
  const EdgeRule& erule = edge_rule(opts.edge_degree);
  for (const BoundaryEdge& be : mesh.boundary) {
    const Vec2& pa = mesh.nodes[size_t(be.a)];
    const Vec2& pb = mesh.nodes[size_t(be.b)];
    const Vec2 tangent = (pb - pa).normalized();
    const Vec2 normal(tangent.y(), -tangent.x());
    double m00 = 0, m01 = 0, m11 = 0;
    for (std::size_t q = 0; q < erule.t.size(); ++q) {
      const double s = erule.t[q];
      const Vec2 x = pa + s * (pb - pa);
      const double bn = coeffs.b_dot_n(x, normal) * erule.weights[q] * be.length;
      m00 += bn * (1.0 - s) * (1.0 - s);
      m01 += bn * (1.0 - s) * s;
      m11 += bn * s * s;
    }
    coeff_at(D, be.a, be.a) += m00;
    coeff_at(D, be.a, be.b) += m01;
    coeff_at(D, be.b, be.a) += m01;
    coeff_at(D, be.b, be.b) += m11;
  }
  return D;
}

Eigen::VectorXd assemble_domain_load(const TriMesh& mesh, const ScalarField& f,
                                     const std::vector<Vec2>& singular_points,
                                     const AssemblyOptions& opts) {
  const TriRule& rule = tri_rule(opts.tri_degree);
  const std::vector<int> sing = singular_vertex_of_tris(mesh, singular_points);
  const int nt = mesh.num_tris();
  std::vector<Local3> loc(static_cast<size_t>(nt));
  std::vector<std::array<int, 3>> globs(static_cast<size_t>(nt));

  auto kernel = [&](int t) {
    const int rot = std::max(sing[size_t(t)], 0);
    const P1Element e = element_geometry(mesh, t, rot);
    globs[size_t(t)] = e.glob;
    Local3 l{};
    const CornerSubdivision* sub = sing[size_t(t)] >= 0 ? &opts.corner : nullptr;
    for_each_tri_point(e.p[0], e.p[1], e.p[2], rule, sub,
                       [&](const Vec2& x, double w, const std::array<double, 3>& bary) {
                         const double fw = w * f(x);
                         for (int i = 0; i < 3; ++i) l[size_t(i)] += fw * bary[size_t(i)];
                       });
    loc[size_t(t)] = l;
  };

  if (opts.parallel) {
#pragma omp parallel for schedule(static)
    for (int t = 0; t < nt; ++t) kernel(t);
  } else {
    for (int t = 0; t < nt; ++t) kernel(t);
  }
  Eigen::VectorXd load = Eigen::VectorXd::Zero(mesh.num_nodes());
  for (int t = 0; t < nt; ++t)
    for (int i = 0; i < 3; ++i) load[globs[size_t(t)][size_t(i)]] += loc[size_t(t)][size_t(i)];
  return load;
}

Eigen::VectorXd assemble_boundary_load(const TriMesh& mesh, const BoundaryField& g,
                                       const AssemblyOptions& opts) {
  const EdgeRule& erule = edge_rule(opts.edge_degree);
  Eigen::VectorXd load = Eigen::VectorXd::Zero(mesh.num_nodes());
  for (const BoundaryEdge& be : mesh.boundary) {
    const Vec2& pa = mesh.nodes[size_t(be.a)];
    const Vec2& pb = mesh.nodes[size_t(be.b)];
    const Vec2 tangent = (pb - pa).normalized();
    const Vec2 normal(tangent.y(), -tangent.x());
    double la = 0, lb = 0;
    for (std::size_t q = 0; q < erule.t.size(); ++q) {
      const double s = erule.t[q];
      const Vec2 x = pa + s * (pb - pa);
      const double gv = g(x, normal) * erule.weights[q] * be.length;
      la += gv * (1.0 - s);
      lb += gv * s;
    }
    load[be.a] += la;
    load[be.b] += lb;
  }
  return load;
}

void write_matrix_dump(const Eigen::SparseMatrix<double>& A, std::ostream& os) {
  os << A.rows() << " " << A.nonZeros() << "\n";
  os.precision(17);
  for (int j = 0; j < A.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, j); it; ++it)
      os << it.row() << " " << it.col() << " " << it.value() << "\n";
}

}  // namespace ncfem
