#pragma once

#include "ncdr/core.hpp"
#include "ncdr/fe_spaces.hpp"
#include "ncdr/mesh.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace ncdr {

/// The six global spaces with homogeneous boundary DoFs removed.
///   Grad    : P2 Lagrange            (V_h^grad)
///   Nedelec : Nedelec second kind    (V_h^ND)
///   Phi     : the enriched element   (Phi_h)
///   W       : H^2-nonconforming      (W_h)
///   RT      : Raviart-Thomas         (V_h^div)
///   Q       : piecewise constants    (Q_h; zero mean imposed at solve time)
enum class Space { Grad, Nedelec, Phi, W, RT, Q };

constexpr ElementKind element_of(Space s) {
  switch (s) {
    case Space::Grad: return ElementKind::LagrangeP2;
    case Space::Nedelec: return ElementKind::Nedelec2;
    case Space::Phi: return ElementKind::PhiNC;
    case Space::W: return ElementKind::WNC;
    case Space::RT: return ElementKind::RT0;
    case Space::Q: return ElementKind::P0;
  }
  return ElementKind::P0;
}

constexpr const char* space_name(Space s) {
  switch (s) {
    case Space::Grad: return "grad";
    case Space::Nedelec: return "nedelec";
    case Space::Phi: return "phi";
    case Space::W: return "w";
    case Space::RT: return "rt";
    case Space::Q: return "q";
  }
  return "?";
}

/// DoFs carried by each entity dimension, in local DoF order
/// (vertices, then edges, then faces, then the cell).
struct DofLayout {
  int per_vertex = 0;
  int per_edge = 0;
  int per_face = 0;
  int per_cell = 0;
};

constexpr DofLayout dof_layout(Space s) {
  switch (s) {
    case Space::Grad: return {1, 1, 0, 0};
    case Space::Nedelec: return {0, 2, 0, 0};
    case Space::Phi: return {0, 2, 1, 0};
    case Space::W: return {1, 1, 1, 0};
    case Space::RT: return {0, 0, 1, 0};
    case Space::Q: return {0, 0, 0, 1};
  }
  return {};
}

/// Global numbering of interior DoFs. Entity-major, ascending entity ids;
/// boundary entities carry no DoFs (-1). Local DoFs are defined in the global
/// orientation (see TetGeometry), so local-to-global is a pure index map.
struct DofMap {
  Space space = Space::Q;
  Id num_dofs = 0;
  int local_dim = 0;
  /// First global DoF of each entity, -1 when on the boundary or absent.
  std::vector<Id> vertex_first;
  std::vector<Id> edge_first;
  std::vector<Id> face_first;
  std::vector<Id> cell_first;
  /// local_dim entries per tet: global DoF or -1.
  std::vector<Id> cell_dofs;
  /// Identifies the mesh this map was built on.
  const SimplicialMesh* mesh = nullptr;

  std::span<const Id> local(Id tet) const {
    return {cell_dofs.data() + static_cast<std::size_t>(tet) * local_dim,
            static_cast<std::size_t>(local_dim)};
  }
};

inline DofMap build_dof_map(Space space, const SimplicialMesh& mesh) {
  if (mesh.vertex_on_boundary.size() != mesh.vertices.size())
    throw IntegrityError("build_dof_map: boundary not classified");
  const DofLayout lay = dof_layout(space);
  DofMap map;
  map.space = space;
  map.mesh = &mesh;
  map.local_dim = element_traits(element_of(space)).dim;
  Id next = 0;
  auto number = [&](std::vector<Id>& first, Id count, int per, const std::vector<char>* boundary) {
    first.assign(count, -1);
    if (per == 0) return;
    for (Id e = 0; e < count; ++e) {
      if (boundary && (*boundary)[e]) continue;
      first[e] = next;
      next += per;
    }
  };
  number(map.vertex_first, mesh.num_vertices(), lay.per_vertex, &mesh.vertex_on_boundary);
  number(map.edge_first, mesh.num_edges(), lay.per_edge, &mesh.edge_on_boundary);
  number(map.face_first, mesh.num_faces(), lay.per_face, &mesh.face_on_boundary);
  number(map.cell_first, mesh.num_tets(), lay.per_cell, nullptr);
  map.num_dofs = next;

  const int ld = map.local_dim;
  map.cell_dofs.assign(static_cast<std::size_t>(mesh.num_tets()) * ld, -1);
  for (Id t = 0; t < mesh.num_tets(); ++t) {
    Id* out = map.cell_dofs.data() + static_cast<std::size_t>(t) * ld;
    int k = 0;
    auto put = [&](Id first, int per) {
      for (int c = 0; c < per; ++c) out[k++] = first < 0 ? -1 : first + c;
    };
    if (lay.per_vertex)
      for (int v = 0; v < 4; ++v) put(map.vertex_first[mesh.tets[t][v]], lay.per_vertex);
    if (lay.per_edge)
      for (int e = 0; e < 6; ++e) put(map.edge_first[mesh.tet_edges[t][e]], lay.per_edge);
    if (lay.per_face)
      for (int f = 0; f < 4; ++f) put(map.face_first[mesh.tet_faces[t][f]], lay.per_face);
    if (lay.per_cell) put(map.cell_first[t], lay.per_cell);
    if (k != ld) throw IntegrityError("build_dof_map: layout does not match element dimension");
  }
  return map;
}

/// Gathers the coefficients of tet t (zero for boundary DoFs).
inline Vector gather(const DofMap& map, Id t, const Vector& coeffs) {
  const auto dofs = map.local(t);
  Vector local(map.local_dim);
  for (int i = 0; i < map.local_dim; ++i) local[i] = dofs[i] < 0 ? 0.0 : coeffs[dofs[i]];
  return local;
}

inline void require_same_mesh(const DofMap& a, const DofMap& b) {
  if (a.mesh != b.mesh)
    throw IntegrityError(std::string("DoF maps for ") + space_name(a.space) + " and " +
                         space_name(b.space) + " were built on different meshes");
}

}  // namespace ncdr
