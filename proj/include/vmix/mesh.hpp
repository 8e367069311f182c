#pragma once

// Uniform interval partitions, structured triangulations of the unit square
// and degree-of-freedom numbering.

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "vmix/errors.hpp"

namespace vmix {

struct Mesh1D {
  std::vector<double> nodes;

  std::size_t n_elements() const { return nodes.size() - 1; }
  double length() const { return nodes.back(); }
  double left(std::size_t i) const { return nodes[i]; }
  double right(std::size_t i) const { return nodes[i + 1]; }
  double h() const {
    double m = 0.0;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) m = std::max(m, nodes[i + 1] - nodes[i]);
    return m;
  }
  bool has_node(double x, double tol = 1e-12) const {
    for (double v : nodes)
      if (std::abs(v - x) <= tol * std::max(1.0, std::abs(x))) return true;
    return false;
  }
};

inline Mesh1D uniform_mesh1d(double L, std::size_t n) {
  if (n == 0) throw ParameterError("uniform_mesh1d: need at least one element");
  if (!(L > 0.0) || !std::isfinite(L)) throw ParameterError("uniform_mesh1d: L must be positive");
  Mesh1D m;
  m.nodes.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i)
    m.nodes[i] = L * static_cast<double>(i) / static_cast<double>(n);
  m.nodes.back() = L;
  return m;
}

struct Vertex {
  double x, y;
};

/// Edge from vertex a to vertex b with a < b; the global unit normal is the
/// tangent (b - a)/|e| rotated clockwise.
struct Edge {
  std::size_t a, b;
  bool boundary = false;
};

struct TriMesh {
  std::vector<Vertex> vertices;
  std::vector<std::array<std::size_t, 3>> triangles;     // counter-clockwise
  std::vector<Edge> edges;
  std::vector<std::array<std::size_t, 3>> tri_edges;     // edge opposite local vertex i
  std::vector<std::array<std::size_t, 2>> edge_tris;     // second entry == npos on the boundary
  std::size_t divisions = 0;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  double area(std::size_t t) const {
    const auto& v = triangles[t];
    const auto& p = vertices[v[0]];
    const auto& q = vertices[v[1]];
    const auto& r = vertices[v[2]];
    return 0.5 * ((q.x - p.x) * (r.y - p.y) - (r.x - p.x) * (q.y - p.y));
  }
  double edge_length(std::size_t e) const {
    const auto& p = vertices[edges[e].a];
    const auto& q = vertices[edges[e].b];
    return std::hypot(q.x - p.x, q.y - p.y);
  }
  double h() const { return divisions > 0 ? std::sqrt(2.0) / static_cast<double>(divisions) : 0.0; }

  /// Plain-text listing for debugging.
  void dump(std::ostream& os) const {
    os << "vertices " << vertices.size() << "\n";
    for (std::size_t i = 0; i < vertices.size(); ++i)
      os << i << " " << vertices[i].x << " " << vertices[i].y << "\n";
    os << "triangles " << triangles.size() << "\n";
    for (std::size_t i = 0; i < triangles.size(); ++i)
      os << i << " " << triangles[i][0] << " " << triangles[i][1] << " " << triangles[i][2] << "\n";
  }
};

/// m x m cells, each split along its SW-NE diagonal. Vertex (i, j) has index
/// j (m + 1) + i. Edges are numbered in order of first appearance.
inline TriMesh structured_unit_square(std::size_t m) {
  if (m == 0) throw ParameterError("structured_unit_square: m must be >= 1");
  TriMesh mesh;
  mesh.divisions = m;
  const double hm = 1.0 / static_cast<double>(m);
  for (std::size_t j = 0; j <= m; ++j)
    for (std::size_t i = 0; i <= m; ++i)
      mesh.vertices.push_back({i == m ? 1.0 : static_cast<double>(i) * hm,
                               j == m ? 1.0 : static_cast<double>(j) * hm});
  auto vid = [m](std::size_t i, std::size_t j) { return j * (m + 1) + i; };

  std::map<std::pair<std::size_t, std::size_t>, std::size_t> lookup;
  auto edge_of = [&](std::size_t a, std::size_t b, std::size_t tri) {
    if (a > b) std::swap(a, b);
    auto [it, fresh] = lookup.try_emplace({a, b}, mesh.edges.size());
    if (fresh) {
      mesh.edges.push_back({a, b, false});
      mesh.edge_tris.push_back({tri, TriMesh::npos});
    } else {
      mesh.edge_tris[it->second][1] = tri;
    }
    return it->second;
  };

  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t sw = vid(i, j), se = vid(i + 1, j), ne = vid(i + 1, j + 1),
                        nw = vid(i, j + 1);
      for (const auto& tri : {std::array<std::size_t, 3>{sw, se, ne},
                              std::array<std::size_t, 3>{sw, ne, nw}}) {
        const std::size_t t = mesh.triangles.size();
        mesh.triangles.push_back(tri);
        std::array<std::size_t, 3> te{};
        for (int k = 0; k < 3; ++k) te[k] = edge_of(tri[(k + 1) % 3], tri[(k + 2) % 3], t);
        mesh.tri_edges.push_back(te);
      }
    }
  for (std::size_t e = 0; e < mesh.edges.size(); ++e)
    mesh.edges[e].boundary = mesh.edge_tris[e][1] == TriMesh::npos;
  return mesh;
}

enum class SpaceTag { P1_continuous, P0_discontinuous, RT0, P0_tri };

inline std::string to_string(SpaceTag t) {
  switch (t) {
    case SpaceTag::P1_continuous: return "P1_continuous";
    case SpaceTag::P0_discontinuous: return "P0_discontinuous";
    case SpaceTag::RT0: return "RT0";
    case SpaceTag::P0_tri: return "P0_tri";
  }
  return "?";
}

/// Entity i (node, element, edge or triangle, by tag) carries dof index[i].
struct DofMap {
  SpaceTag tag;
  std::vector<std::size_t> index;
  std::size_t n_dofs = 0;

  bool operator==(const DofMap&) const = default;
};

inline DofMap build_dofmap(const Mesh1D& mesh, SpaceTag tag) {
  std::size_t n = 0;
  switch (tag) {
    case SpaceTag::P1_continuous: n = mesh.nodes.size(); break;
    case SpaceTag::P0_discontinuous: n = mesh.n_elements(); break;
    default:
      throw ConfigError("build_dofmap: space " + to_string(tag) + " needs a triangle mesh");
  }
  DofMap d{tag, std::vector<std::size_t>(n), n};
  for (std::size_t i = 0; i < n; ++i) d.index[i] = i;
  return d;
}

inline DofMap build_dofmap(const TriMesh& mesh, SpaceTag tag) {
  std::size_t n = 0;
  switch (tag) {
    case SpaceTag::RT0: n = mesh.edges.size(); break;
    case SpaceTag::P0_tri: n = mesh.triangles.size(); break;
    default:
      throw ConfigError("build_dofmap: space " + to_string(tag) + " needs an interval mesh");
  }
  DofMap d{tag, std::vector<std::size_t>(n), n};
  for (std::size_t i = 0; i < n; ++i) d.index[i] = i;
  return d;
}

}  // namespace vmix
