#include "ncfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace ncfem {

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double tri_area_of(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * cross2(b - a, c - a);
}

double tri_diam_of(const Vec2& a, const Vec2& b, const Vec2& c) {
  return std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
}

double min_angle_of(const Vec2& a, const Vec2& b, const Vec2& c) {
  auto corner = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    const Vec2 u = q - p, v = r - p;
    return std::atan2(std::abs(cross2(u, v)), u.dot(v));
  };
  return std::min({corner(a, b, c), corner(b, c, a), corner(c, a, b)});
}

// Rotates the triple so the vertex opposite the longest edge comes first.
// Ties are broken by the sorted node-id pair of the edge, which keeps the
// longest-edge order a strict total order (that is what guarantees that
// recursive bisection closure terminates).
std::array<int, 3> mark_longest_edge(const std::array<int, 3>& v,
                                     const std::vector<Vec2>& nodes) {
  auto edge_rank = [&](int p, int q) {
    const double len = (nodes[size_t(p)] - nodes[size_t(q)]).norm();
    const auto lo = std::minmax(p, q);
    return std::tuple<double, int, int>(len, lo.first, lo.second);
  };
  // Edge opposite v[k] is (v[k+1], v[k+2]).
  int best = 0;
  auto best_rank = edge_rank(v[1], v[2]);
  for (int k = 1; k < 3; ++k) {
    auto r = edge_rank(v[(k + 1) % 3], v[(k + 2) % 3]);
    if (r > best_rank) {
      best_rank = r;
      best = k;
    }
  }
  return {v[size_t(best)], v[size_t((best + 1) % 3)], v[size_t((best + 2) % 3)]};
}

bool is_lshape_vertices(const PolygonDomain& dom) {
  static const std::vector<Vec2> ref = {{0, 0}, {1, 0}, {1, 1}, {-1, 1}, {-1, -1}, {0, -1}};
  if (dom.num_vertices() != 6) return false;
  for (int j = 0; j < 6; ++j)
    if ((dom.vertex(j) - ref[size_t(j)]).norm() > 1e-15) return false;
  return true;
}

TriMesh ear_clip(const PolygonDomain& dom) {
  const int m = dom.num_vertices();
  TriMesh mesh;
  mesh.nodes = dom.vertices();
  std::vector<int> ring(static_cast<size_t>(m));
  for (int j = 0; j < m; ++j) ring[size_t(j)] = j;

  auto inside = [&](const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
    const double d1 = cross2(b - a, p - a);
    const double d2 = cross2(c - b, p - b);
    const double d3 = cross2(a - c, p - c);
    return d1 >= -1e-14 && d2 >= -1e-14 && d3 >= -1e-14;
  };

  while (ring.size() > 3) {
    bool clipped = false;
    const int n = static_cast<int>(ring.size());
    for (int i = 0; i < n; ++i) {
      const int ip = ring[size_t((i + n - 1) % n)];
      const int ic = ring[size_t(i)];
      const int in = ring[size_t((i + 1) % n)];
      const Vec2 &a = mesh.nodes[size_t(ip)], &b = mesh.nodes[size_t(ic)],
                 &c = mesh.nodes[size_t(in)];
      if (cross2(b - a, c - a) <= 1e-14) continue;  // reflex or degenerate
      bool ear = true;
      for (int k : ring) {
        if (k == ip || k == ic || k == in) continue;
        if (inside(mesh.nodes[size_t(k)], a, b, c)) {
          ear = false;
          break;
        }
      }
      if (!ear) continue;
      mesh.tris.push_back({ip, ic, in});
      ring.erase(ring.begin() + i);
      clipped = true;
      break;
    }
    if (!clipped) throw std::invalid_argument("polygon triangulation failed (ear clipping)");
  }
  mesh.tris.push_back({ring[0], ring[1], ring[2]});
  return mesh;
}

}  // namespace

double TriMesh::tri_area(int t) const {
  const auto& v = tris[size_t(t)];
  return tri_area_of(nodes[size_t(v[0])], nodes[size_t(v[1])], nodes[size_t(v[2])]);
}

double TriMesh::tri_diameter(int t) const {
  const auto& v = tris[size_t(t)];
  return tri_diam_of(nodes[size_t(v[0])], nodes[size_t(v[1])], nodes[size_t(v[2])]);
}

double TriMesh::min_angle_deg() const {
  double a = std::numbers::pi;
  for (const auto& v : tris)
    a = std::min(a, min_angle_of(nodes[size_t(v[0])], nodes[size_t(v[1])], nodes[size_t(v[2])]));
  return a * 180.0 / std::numbers::pi;
}

GradingSpec GradingSpec::uniform(const PolygonDomain& dom) {
  GradingSpec g;
  g.mu.assign(static_cast<size_t>(dom.num_vertices()), 1.0);
  return g;
}

GradingSpec GradingSpec::from_domain(const PolygonDomain& dom) {
  GradingSpec g;
  g.mu.reserve(static_cast<size_t>(dom.num_vertices()));
  for (const CornerData& c : dom.corners()) g.mu.push_back(c.mu);
  return g;
}

GradingSpec GradingSpec::with_mu(const PolygonDomain& dom, double mu_all) {
  GradingSpec g;
  g.mu.assign(static_cast<size_t>(dom.num_vertices()), mu_all);
  return g;
}

TriMesh initial_triangulation(const PolygonDomain& dom) {
  TriMesh mesh;
  if (is_lshape_vertices(dom)) {
    mesh.nodes = dom.vertices();
    mesh.nodes.push_back({0.0, 1.0});   // node 6
    mesh.nodes.push_back({-1.0, 0.0});  // node 7
    mesh.tris = {{0, 1, 6}, {2, 6, 1}, {0, 6, 7}, {3, 7, 6}, {0, 7, 5}, {4, 5, 7}};
    mesh.boundary = {{0, 1, 0, 0}, {1, 2, 1, 0}, {2, 6, 2, 0}, {6, 3, 2, 0},
                     {3, 7, 3, 0}, {7, 4, 3, 0}, {4, 5, 4, 0}, {5, 0, 5, 0}};
  } else {
    mesh = ear_clip(dom);
    for (auto& t : mesh.tris) t = mark_longest_edge(t, mesh.nodes);
    const int m = dom.num_vertices();
    for (int j = 0; j < m; ++j) mesh.boundary.push_back({j, (j + 1) % m, j, 0.0});
  }
  for (auto& e : mesh.boundary)
    e.length = (mesh.nodes[size_t(e.b)] - mesh.nodes[size_t(e.a)]).norm();
  mesh.level = 0;
  double dmax = 0.0;
  for (int t = 0; t < mesh.num_tris(); ++t) dmax = std::max(dmax, mesh.tri_diameter(t));
  mesh.h_nominal = dmax;
  return mesh;
}

std::uint64_t MeshBuilder::edge_key(int a, int b) {
  const std::uint64_t lo = static_cast<std::uint64_t>(std::min(a, b));
  const std::uint64_t hi = static_cast<std::uint64_t>(std::max(a, b));
  return (hi << 32) | lo;
}

MeshBuilder::MeshBuilder(const PolygonDomain& dom) : dom_(dom) {
  const TriMesh init = initial_triangulation(dom_);
  nodes_ = init.nodes;
  tris_.reserve(init.tris.size());
  double dmax = 0.0;
  for (int t = 0; t < init.num_tris(); ++t) {
    tris_.push_back({init.tris[size_t(t)], true});
    attach(t);
    dmax = std::max(dmax, init.tri_diameter(t));
  }
  for (const BoundaryEdge& e : init.boundary) boundary_side_[edge_key(e.a, e.b)] = e.side;
  h0_ = 0.25 * dmax;
  level_ = 0;
}

double MeshBuilder::level_h(int level) const { return h0_ * std::ldexp(1.0, 1 - level); }

double MeshBuilder::tri_diam(const Tri& t) const {
  return tri_diam_of(nodes_[size_t(t.v[0])], nodes_[size_t(t.v[1])], nodes_[size_t(t.v[2])]);
}

double MeshBuilder::tri_target(const Tri& t, double h, const GradingSpec& g) const {
  const int m = dom_.num_vertices();
  // Corner vertices are nodes 0..m-1 by construction.
  double target = std::numeric_limits<double>::infinity();
  bool touches = false;
  for (int k = 0; k < 3; ++k) {
    const int v = t.v[size_t(k)];
    if (v < m) {
      touches = true;
      target = std::min(target, g.c * std::pow(h, 1.0 / g.mu[size_t(v)]));
    }
  }
  if (touches) return target;
  const Vec2 bary = (nodes_[size_t(t.v[0])] + nodes_[size_t(t.v[1])] + nodes_[size_t(t.v[2])]) / 3.0;
  double r = std::numeric_limits<double>::infinity();
  int nearest = -1;
  for (int j = 0; j < m; ++j) {
    const double d = (bary - dom_.vertex(j)).norm();
    if (d < r) {
      r = d;
      nearest = j;
    }
  }
  if (r < g.radius) return g.c * h * std::pow(r, 1.0 - g.mu[size_t(nearest)]);
  return g.c * h;
}

int MeshBuilder::midpoint(int a, int b) {
  const std::uint64_t key = edge_key(a, b);
  auto it = midpoints_.find(key);
  if (it != midpoints_.end()) return it->second;
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(0.5 * (nodes_[size_t(a)] + nodes_[size_t(b)]));
  midpoints_.emplace(key, id);
  return id;
}

// Edge slots store triangle id + 1; zero marks an empty slot.
void MeshBuilder::attach(int t) {
  const auto& v = tris_[size_t(t)].v;
  for (int k = 0; k < 3; ++k) {
    auto& slots = edge_tris_[edge_key(v[size_t(k)], v[size_t((k + 1) % 3)])];
    if (slots[0] == 0) {
      slots[0] = t + 1;
    } else if (slots[1] == 0) {
      slots[1] = t + 1;
    } else {
      throw std::logic_error("mesh edge shared by more than two triangles");
    }
  }
}

void MeshBuilder::detach(int t) {
  const auto& v = tris_[size_t(t)].v;
  for (int k = 0; k < 3; ++k) {
    auto it = edge_tris_.find(edge_key(v[size_t(k)], v[size_t((k + 1) % 3)]));
    if (it == edge_tris_.end()) continue;
    auto& slots = it->second;
    if (slots[0] == t + 1) slots[0] = 0;
    if (slots[1] == t + 1) slots[1] = 0;
    if (slots[0] == 0 && slots[1] == 0) edge_tris_.erase(it);
  }
}

void MeshBuilder::bisect(int t) {
  const std::array<int, 3> v = tris_[size_t(t)].v;  // (peak, a, b)
  const int p = v[0], a = v[1], b = v[2];
  const int m = midpoint(a, b);
  detach(t);
  tris_[size_t(t)].alive = false;

  const int c1 = static_cast<int>(tris_.size());
  tris_.push_back({{m, p, a}, true});
  const int c2 = static_cast<int>(tris_.size());
  tris_.push_back({{m, b, p}, true});
  attach(c1);
  attach(c2);

  auto bit = boundary_side_.find(edge_key(a, b));
  if (bit != boundary_side_.end()) {
    const int side = bit->second;
    boundary_side_.erase(bit);
    boundary_side_[edge_key(a, m)] = side;
    boundary_side_[edge_key(m, b)] = side;
  }
}

void MeshBuilder::refine_closure(int t) {
  std::vector<int> stack{t};
  while (!stack.empty()) {
    const int cur = stack.back();
    if (!tris_[size_t(cur)].alive) {
      stack.pop_back();
      continue;
    }
    const auto& v = tris_[size_t(cur)].v;
    const std::uint64_t key = edge_key(v[1], v[2]);
    auto it = edge_tris_.find(key);
    int nb = 0;
    if (it != edge_tris_.end()) {
      if (it->second[0] != 0 && it->second[0] != cur + 1) nb = it->second[0];
      if (it->second[1] != 0 && it->second[1] != cur + 1) nb = it->second[1];
    }
    if (nb == 0) {  // refinement edge on the boundary
      bisect(cur);
      stack.pop_back();
      continue;
    }
    const int n = nb - 1;
    const auto& w = tris_[size_t(n)].v;
    if (edge_key(w[1], w[2]) == key) {
      bisect(cur);
      bisect(n);
      stack.pop_back();
    } else {
      stack.push_back(n);
      if (stack.size() > tris_.size() + 16)
        throw std::logic_error("bisection closure did not terminate");
    }
  }
}

void MeshBuilder::enforce(double h, const GradingSpec& g) {
  for (;;) {
    bool any = false;
    const int n = static_cast<int>(tris_.size());
    for (int t = 0; t < n; ++t) {
      if (!tris_[size_t(t)].alive) continue;
      const Tri& tri = tris_[size_t(t)];
      if (tri_diam(tri) > tri_target(tri, h, g) * (1.0 + 1e-9)) {
        refine_closure(t);
        any = true;
      }
    }
    if (!any) return;
  }
}

void MeshBuilder::refine_to_level(int level, const GradingSpec& grading) {
  if (level < 1) throw std::invalid_argument("mesh level must be >= 1");
  if (grading.mu.size() != static_cast<size_t>(dom_.num_vertices()))
    throw std::invalid_argument("grading spec needs one mu per polygon vertex");
  for (double mu : grading.mu)
    if (!(mu > 0.0 && mu <= 1.0)) throw std::invalid_argument("mu must lie in (0, 1]");
  if (!(grading.radius > 0.0)) throw std::invalid_argument("grading radius must be positive");
  for (int l = level_ + 1; l <= level; ++l) enforce(level_h(l), grading);
  level_ = std::max(level_, level);
}

TriMesh MeshBuilder::snapshot() const {
  TriMesh mesh;
  mesh.nodes = nodes_;
  mesh.tris.reserve(tris_.size());
  for (const Tri& t : tris_)
    if (t.alive) mesh.tris.push_back(t.v);
  mesh.level = level_;
  mesh.h_nominal = level_h(level_);

  mesh.boundary.reserve(boundary_side_.size());
  for (const auto& [key, side] : boundary_side_) {
    int a = static_cast<int>(key & 0xffffffffull);
    int b = static_cast<int>(key >> 32);
    const Vec2 t = dom_.side_tangent(side);
    if ((nodes_[size_t(b)] - nodes_[size_t(a)]).dot(t) < 0.0) std::swap(a, b);
    mesh.boundary.push_back(
        {a, b, side, (nodes_[size_t(b)] - nodes_[size_t(a)]).norm()});
  }
  std::sort(mesh.boundary.begin(), mesh.boundary.end(),
            [&](const BoundaryEdge& x, const BoundaryEdge& y) {
              if (x.side != y.side) return x.side < y.side;
              const Vec2 t = dom_.side_tangent(x.side);
              const Vec2 origin = dom_.vertex(x.side);
              const double px = (nodes_[size_t(x.a)] - origin).dot(t);
              const double py = (nodes_[size_t(y.a)] - origin).dot(t);
              return px < py;
            });
  return mesh;
}

TriMesh build_graded_mesh(const PolygonDomain& dom, int level, const GradingSpec& grading) {
  MeshBuilder builder(dom);
  builder.refine_to_level(level, grading);
  return builder.snapshot();
}

const std::vector<BoundaryEdge>& boundary_segmentation(const TriMesh& mesh) {
  return mesh.boundary;
}

MeshQuality mesh_quality_report(const TriMesh& mesh, const PolygonDomain& dom,
                                const GradingSpec& grading) {
  MeshQuality q;
  q.level = mesh.level;
  q.h = mesh.h_nominal;
  q.nodes = mesh.nodes.size();
  q.tris = mesh.tris.size();
  q.min_angle_deg = mesh.min_angle_deg();

  const int m = dom.num_vertices();
  const double h = mesh.h_nominal;
  for (int t = 0; t < mesh.num_tris(); ++t) {
    const auto& v = mesh.tris[size_t(t)];
    const double diam = mesh.tri_diameter(t);
    q.max_diam = std::max(q.max_diam, diam);
    double target = std::numeric_limits<double>::infinity();
    bool touches = false;
    for (int k = 0; k < 3; ++k) {
      if (v[size_t(k)] < m) {
        touches = true;
        target = std::min(target, grading.c * std::pow(h, 1.0 / grading.mu[size_t(v[size_t(k)])]));
      }
    }
    if (!touches) {
      const Vec2 bary =
          (mesh.nodes[size_t(v[0])] + mesh.nodes[size_t(v[1])] + mesh.nodes[size_t(v[2])]) / 3.0;
      double r = std::numeric_limits<double>::infinity();
      int nearest = -1;
      for (int j = 0; j < m; ++j) {
        const double d = (bary - dom.vertex(j)).norm();
        if (d < r) {
          r = d;
          nearest = j;
        }
      }
      target = (r < grading.radius) ? grading.c * h * std::pow(r, 1.0 - grading.mu[size_t(nearest)])
                                    : grading.c * h;
    }
    if (diam > target * (1.0 + 1e-9)) ++q.grading_violations;
  }
  return q;
}

void write_mesh_dump(const TriMesh& mesh, std::ostream& os) {
  os << "nodes " << mesh.num_nodes() << "\n";
  os.precision(17);
  for (int i = 0; i < mesh.num_nodes(); ++i)
    os << i << " " << mesh.nodes[size_t(i)].x() << " " << mesh.nodes[size_t(i)].y() << "\n";
  os << "triangles " << mesh.num_tris() << "\n";
  for (int t = 0; t < mesh.num_tris(); ++t) {
    const auto& v = mesh.tris[size_t(t)];
    os << t << " " << v[0] << " " << v[1] << " " << v[2] << "\n";
  }
  os << "boundary_edges " << mesh.num_boundary_edges() << "\n";
  for (const BoundaryEdge& e : mesh.boundary) os << e.a << " " << e.b << " " << e.side << "\n";
}

void check_conforming(const TriMesh& mesh, const PolygonDomain& dom) {
  std::unordered_map<std::uint64_t, int> edge_count;
  auto key = [](int a, int b) {
    return (static_cast<std::uint64_t>(std::max(a, b)) << 32) |
           static_cast<std::uint64_t>(std::min(a, b));
  };
  for (int t = 0; t < mesh.num_tris(); ++t) {
    if (mesh.tri_area(t) <= 0.0) throw std::logic_error("nonpositive triangle area");
    const auto& v = mesh.tris[size_t(t)];
    for (int k = 0; k < 3; ++k) ++edge_count[key(v[size_t(k)], v[size_t((k + 1) % 3)])];
  }
  std::unordered_map<std::uint64_t, int> boundary_count;
  for (const BoundaryEdge& e : mesh.boundary) ++boundary_count[key(e.a, e.b)];
  for (const auto& [k, c] : edge_count) {
    if (c == 2) {
      if (boundary_count.count(k)) throw std::logic_error("interior edge listed as boundary");
    } else if (c == 1) {
      if (boundary_count.find(k) == boundary_count.end() || boundary_count[k] != 1)
        throw std::logic_error("hanging node: boundary edge of a single triangle not on the boundary list");
    } else {
      throw std::logic_error("edge shared by more than two triangles");
    }
  }
  // Boundary edges cover each polygon side, and lie on it.
  std::vector<double> covered(static_cast<size_t>(dom.num_sides()), 0.0);
  for (const BoundaryEdge& e : mesh.boundary) {
    const Vec2& a = mesh.nodes[size_t(e.a)];
    const Vec2& b = mesh.nodes[size_t(e.b)];
    const Vec2 o = dom.vertex(e.side);
    const Vec2 t = dom.side_tangent(e.side);
    const Vec2 n(t.y(), -t.x());
    if (std::abs((a - o).dot(n)) > 1e-12 || std::abs((b - o).dot(n)) > 1e-12)
      throw std::logic_error("boundary edge does not lie on its polygon side");
    covered[size_t(e.side)] += e.length;
  }
  for (int j = 0; j < dom.num_sides(); ++j)
    if (std::abs(covered[size_t(j)] - dom.side_length(j)) > 1e-10)
      throw std::logic_error("boundary edges do not cover a polygon side");
  for (int j = 0; j < dom.num_vertices(); ++j) {
    bool found = false;
    for (const Vec2& p : mesh.nodes)
      if ((p - dom.vertex(j)).norm() < 1e-14) {
        found = true;
        break;
      }
    if (!found) throw std::logic_error("polygon vertex is not a mesh node");
  }
}

}  // namespace ncfem
