#pragma once

#include "ncdr/core.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

namespace ncdr {

/// Local edge k of a tetrahedron joins local vertices kEdgeVertices[k].
inline constexpr std::array<std::array<int, 2>, 6> kEdgeVertices{
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
/// Local face k is opposite local vertex k.
inline constexpr std::array<std::array<int, 3>, 4> kFaceVertices{
    {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}}};

/// Conforming tetrahedral mesh with oriented sub-simplices.
///
/// Global orientation: edges point from the smaller to the larger vertex id,
/// face normals are (v1 - v0) x (v2 - v0) for the ascending triple. Each tet
/// records how its local entities relate to these global choices:
///   tet_edge_sign[t][k] = +1 iff local edge k (local i < j) runs from smaller
///                         to larger global id,
///   tet_face_sign[t][k] = +1 iff the outward normal of face k equals n_F.
struct SimplicialMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<Id, 4>> tets;
  std::vector<std::array<Id, 2>> edges;
  std::vector<std::array<Id, 3>> faces;

  std::vector<std::array<Id, 6>> tet_edges;
  std::vector<std::array<int, 6>> tet_edge_sign;
  std::vector<std::array<Id, 4>> tet_faces;
  std::vector<std::array<int, 4>> tet_face_sign;
  /// Adjacent tets of every face; second entry is -1 on the boundary.
  std::vector<std::array<Id, 2>> face_tets;

  std::vector<char> vertex_on_boundary;
  std::vector<char> edge_on_boundary;
  std::vector<char> face_on_boundary;

  Id interior_vertices = 0;
  Id interior_edges = 0;
  Id interior_faces = 0;

  /// Max tet diameter.
  double h = 0.0;
  /// Subdivisions per axis for structured cube meshes, 0 otherwise.
  int subdivisions = 0;

  Id num_vertices() const { return static_cast<Id>(vertices.size()); }
  Id num_edges() const { return static_cast<Id>(edges.size()); }
  Id num_faces() const { return static_cast<Id>(faces.size()); }
  Id num_tets() const { return static_cast<Id>(tets.size()); }
};

/// Per-tet affine geometry. Edge and face data are expressed in the global
/// orientation taken from the mesh sign tables.
struct TetGeometry {
  std::array<Vec3, 4> vertices;
  double volume = 0.0;
  double diameter = 0.0;
  std::array<Vec3, 4> grad_bary;

  /// Endpoints (local ids) of each local edge ordered by ascending global id;
  /// the tangent points from the first to the second.
  std::array<std::array<int, 2>, 6> edge_ends;
  std::array<Vec3, 6> edge_tangent;
  std::array<double, 6> edge_length;

  /// Global unit normal n_F of local face k and the outward sign
  /// (outward normal = face_sign * face_normal).
  std::array<Vec3, 4> face_normal;
  std::array<int, 4> face_sign;
  std::array<double, 4> face_area;

  Vec3 point(const std::array<double, 4>& bary) const {
    return bary[0] * vertices[0] + bary[1] * vertices[1] + bary[2] * vertices[2] +
           bary[3] * vertices[3];
  }
  Vec3 centroid() const { return point({0.25, 0.25, 0.25, 0.25}); }
  Vec3 outward_normal(int face) const { return face_sign[face] * face_normal[face]; }
};

namespace detail {

template <std::size_t N>
std::array<Id, N> sorted(std::array<Id, N> a) {
  std::sort(a.begin(), a.end());
  return a;
}

template <std::size_t N>
Id find_entity(const std::vector<std::array<Id, N>>& list, const std::array<Id, N>& key) {
  auto it = std::lower_bound(list.begin(), list.end(), key);
  if (it == list.end() || *it != key) throw IntegrityError("entity lookup failed");
  return static_cast<Id>(it - list.begin());
}

inline double signed_volume6(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).dot((c - a).cross(d - a));
}

}  // namespace detail

/// Fills the boundary flags and interior counts from face incidence.
inline void classify_boundary(SimplicialMesh& mesh) {
  const Id nf = mesh.num_faces();
  if (static_cast<Id>(mesh.face_tets.size()) != nf)
    throw IntegrityError("classify_boundary: incidence not built");
  mesh.vertex_on_boundary.assign(mesh.vertices.size(), 0);
  mesh.edge_on_boundary.assign(mesh.edges.size(), 0);
  mesh.face_on_boundary.assign(mesh.faces.size(), 0);

  // Recount incidences so that a corrupted face_tets table is caught.
  std::vector<int> count(nf, 0);
  for (Id t = 0; t < mesh.num_tets(); ++t)
    for (Id f : mesh.tet_faces[t]) ++count[f];
  for (Id f = 0; f < nf; ++f) {
    if (count[f] > 2 || count[f] == 0)
      throw IntegrityError("non-manifold face " + std::to_string(f) + " with " +
                           std::to_string(count[f]) + " incident tets");
    if (count[f] == 1) mesh.face_on_boundary[f] = 1;
  }
  // Edges of boundary faces: look them up through any incident tet.
  for (Id t = 0; t < mesh.num_tets(); ++t) {
    for (int k = 0; k < 4; ++k) {
      if (!mesh.face_on_boundary[mesh.tet_faces[t][k]]) continue;
      for (int e = 0; e < 6; ++e) {
        const auto [a, b] = kEdgeVertices[e];
        if (a != k && b != k) mesh.edge_on_boundary[mesh.tet_edges[t][e]] = 1;
      }
    }
  }
  for (Id e = 0; e < mesh.num_edges(); ++e) {
    if (!mesh.edge_on_boundary[e]) continue;
    mesh.vertex_on_boundary[mesh.edges[e][0]] = 1;
    mesh.vertex_on_boundary[mesh.edges[e][1]] = 1;
  }
  auto interior = [](const std::vector<char>& flags) {
    return static_cast<Id>(std::count(flags.begin(), flags.end(), 0));
  };
  mesh.interior_vertices = interior(mesh.vertex_on_boundary);
  mesh.interior_edges = interior(mesh.edge_on_boundary);
  mesh.interior_faces = interior(mesh.face_on_boundary);
}

/// Derives edges, faces, incidence, orientation signs and boundary flags
/// from vertices and positively oriented tets.
inline void build_topology(SimplicialMesh& mesh) {
  const Id nt = mesh.num_tets();
  std::vector<std::array<Id, 2>> edges;
  std::vector<std::array<Id, 3>> faces;
  edges.reserve(static_cast<std::size_t>(nt) * 6);
  faces.reserve(static_cast<std::size_t>(nt) * 4);
  for (const auto& tet : mesh.tets) {
    for (const auto& [a, b] : kEdgeVertices) edges.push_back(detail::sorted<2>({tet[a], tet[b]}));
    for (const auto& [a, b, c] : kFaceVertices)
      faces.push_back(detail::sorted<3>({tet[a], tet[b], tet[c]}));
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  std::sort(faces.begin(), faces.end());
  faces.erase(std::unique(faces.begin(), faces.end()), faces.end());
  mesh.edges = std::move(edges);
  mesh.faces = std::move(faces);

  mesh.tet_edges.resize(nt);
  mesh.tet_edge_sign.resize(nt);
  mesh.tet_faces.resize(nt);
  mesh.tet_face_sign.resize(nt);
  mesh.face_tets.assign(mesh.faces.size(), {-1, -1});
  double h = 0.0;
  for (Id t = 0; t < nt; ++t) {
    const auto& tet = mesh.tets[t];
    const auto& x = mesh.vertices;
    if (detail::signed_volume6(x[tet[0]], x[tet[1]], x[tet[2]], x[tet[3]]) <= 0.0)
      throw IntegrityError("tet " + std::to_string(t) + " is not positively oriented");
    for (int k = 0; k < 6; ++k) {
      const auto [a, b] = kEdgeVertices[k];
      mesh.tet_edges[t][k] = detail::find_entity(mesh.edges, detail::sorted<2>({tet[a], tet[b]}));
      mesh.tet_edge_sign[t][k] = tet[a] < tet[b] ? 1 : -1;
      h = std::max(h, (x[tet[a]] - x[tet[b]]).norm());
    }
    for (int k = 0; k < 4; ++k) {
      const auto [a, b, c] = kFaceVertices[k];
      const auto key = detail::sorted<3>({tet[a], tet[b], tet[c]});
      const Id f = detail::find_entity(mesh.faces, key);
      mesh.tet_faces[t][k] = f;
      const Vec3 nF = (x[key[1]] - x[key[0]]).cross(x[key[2]] - x[key[0]]);
      mesh.tet_face_sign[t][k] = nF.dot(x[key[0]] - x[tet[k]]) > 0.0 ? 1 : -1;
      auto& adj = mesh.face_tets[f];
      if (adj[0] < 0)
        adj[0] = t;
      else if (adj[1] < 0)
        adj[1] = t;
      else
        throw IntegrityError("non-manifold face " + std::to_string(f));
    }
  }
  mesh.h = h;
  classify_boundary(mesh);
}

/// Structured mesh of the unit cube: n^3 subcubes, each split into the six
/// Kuhn (Freudenthal) tets that share the diagonal from its lowest to its
/// highest corner.
inline SimplicialMesh build_unit_cube_mesh(int n) {
  if (n < 1) throw InvalidArgument("build_unit_cube_mesh: n must be >= 1");
  const std::int64_t n64 = n;
  const std::int64_t ntets = 6 * n64 * n64 * n64;
  // Face count is the largest entity count (about 12 n^3).
  if (ntets * 2 + 16 > std::numeric_limits<Id>::max())
    throw InvalidArgument("build_unit_cube_mesh: entity counts overflow for n=" +
                          std::to_string(n));
  SimplicialMesh mesh;
  mesh.subdivisions = n;
  const Id m = n + 1;
  mesh.vertices.reserve(static_cast<std::size_t>(m) * m * m);
  for (Id k = 0; k < m; ++k)
    for (Id j = 0; j < m; ++j)
      for (Id i = 0; i < m; ++i)
        mesh.vertices.emplace_back(double(i) / n, double(j) / n, double(k) / n);

  const std::array<Id, 3> stride{1, m, m * m};
  constexpr std::array<std::array<int, 3>, 6> perms{
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  mesh.tets.reserve(static_cast<std::size_t>(ntets));
  for (Id k = 0; k < n; ++k)
    for (Id j = 0; j < n; ++j)
      for (Id i = 0; i < n; ++i) {
        const Id base = i + m * (j + m * k);
        for (const auto& p : perms) {
          std::array<Id, 4> tet{base, 0, 0, 0};
          for (int s = 0; s < 3; ++s) tet[s + 1] = tet[s] + stride[p[s]];
          const auto& x = mesh.vertices;
          if (detail::signed_volume6(x[tet[0]], x[tet[1]], x[tet[2]], x[tet[3]]) < 0.0)
            std::swap(tet[2], tet[3]);
          mesh.tets.push_back(tet);
        }
      }
  build_topology(mesh);
  return mesh;
}

namespace detail {

inline TetGeometry geometry_from(const std::array<Vec3, 4>& x, const std::array<int, 6>& edge_sign,
                                 const std::array<int, 4>& face_sign) {
  TetGeometry g;
  g.vertices = x;
  Mat3 J;
  J.col(0) = x[1] - x[0];
  J.col(1) = x[2] - x[0];
  J.col(2) = x[3] - x[0];
  const double det = J.determinant();
  double diam = 0.0;
  for (const auto& [a, b] : kEdgeVertices) diam = std::max(diam, (x[a] - x[b]).norm());
  if (!(std::abs(det) > 1e-13 * diam * diam * diam))
    throw DegenerateGeometry("degenerate tetrahedron (volume " + std::to_string(det / 6.0) + ")");
  g.volume = std::abs(det) / 6.0;
  g.diameter = diam;
  const Mat3 Jinv = J.inverse();
  for (int i = 0; i < 3; ++i) g.grad_bary[i + 1] = Jinv.row(i).transpose();
  g.grad_bary[0] = -(g.grad_bary[1] + g.grad_bary[2] + g.grad_bary[3]);

  for (int k = 0; k < 6; ++k) {
    auto [a, b] = kEdgeVertices[k];
    if (edge_sign[k] < 0) std::swap(a, b);
    g.edge_ends[k] = {a, b};
    const Vec3 d = x[b] - x[a];
    g.edge_length[k] = d.norm();
    g.edge_tangent[k] = d / g.edge_length[k];
  }
  for (int k = 0; k < 4; ++k) {
    const auto [a, b, c] = kFaceVertices[k];
    Vec3 n = (x[b] - x[a]).cross(x[c] - x[a]);
    g.face_area[k] = 0.5 * n.norm();
    n.normalize();
    if (n.dot(x[a] - x[k]) < 0.0) n = -n;  // outward
    g.face_sign[k] = face_sign[k];
    g.face_normal[k] = face_sign[k] * n;
  }
  return g;
}

}  // namespace detail

/// Geometry of mesh tet t, oriented by the mesh sign tables.
inline TetGeometry tet_geometry(const SimplicialMesh& mesh, Id t) {
  if (t < 0 || t >= mesh.num_tets()) throw InvalidArgument("tet_geometry: tet id out of range");
  const auto& tet = mesh.tets[t];
  return detail::geometry_from({mesh.vertices[tet[0]], mesh.vertices[tet[1]],
                                mesh.vertices[tet[2]], mesh.vertices[tet[3]]},
                               mesh.tet_edge_sign[t], mesh.tet_face_sign[t]);
}

/// Geometry of a standalone tet whose vertices carry global ids 0..3 in the
/// given order.
inline TetGeometry tet_geometry(const std::array<Vec3, 4>& x) {
  std::array<int, 6> es;
  es.fill(1);
  std::array<int, 4> fs;
  for (int k = 0; k < 4; ++k) {
    const auto [a, b, c] = kFaceVertices[k];
    const Vec3 nF = (x[b] - x[a]).cross(x[c] - x[a]);
    fs[k] = nF.dot(x[a] - x[k]) > 0.0 ? 1 : -1;
  }
  return detail::geometry_from(x, es, fs);
}

/// Legacy VTK ASCII dump (points + tetra cells).
inline void write_vtk(const SimplicialMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path);
  out << "# vtk DataFile Version 3.0\nncdr mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  out.precision(17);
  for (const auto& v : mesh.vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  out << "CELLS " << mesh.num_tets() << ' ' << 5 * mesh.num_tets() << '\n';
  for (const auto& t : mesh.tets) out << "4 " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
  out << "CELL_TYPES " << mesh.num_tets() << '\n';
  for (Id t = 0; t < mesh.num_tets(); ++t) out << "10\n";
}

}  // namespace ncdr
