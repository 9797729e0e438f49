#pragma once

#include "ncdr/core.hpp"
#include "ncdr/dofmap.hpp"
#include "ncdr/fe_spaces.hpp"
#include "ncdr/field.hpp"
#include "ncdr/mesh.hpp"

#include <array>
#include <memory>
#include <string>

namespace ncdr {

/// A mesh together with the DoF maps of all six spaces.
class FeSpaces {
public:
  explicit FeSpaces(SimplicialMesh mesh)
      : mesh_(std::make_shared<const SimplicialMesh>(std::move(mesh))) {
    for (Space s : {Space::Grad, Space::Nedelec, Space::Phi, Space::W, Space::RT, Space::Q})
      maps_[static_cast<int>(s)] = build_dof_map(s, *mesh_);
  }

  const SimplicialMesh& mesh() const { return *mesh_; }
  const DofMap& operator[](Space s) const { return maps_[static_cast<int>(s)]; }
  Id dim(Space s) const { return (*this)[s].num_dofs; }

private:
  std::shared_ptr<const SimplicialMesh> mesh_;
  std::array<DofMap, 6> maps_;
};

/// Discrete field: coefficients over the interior DoFs of one space.
struct FeFunction {
  Space space = Space::Q;
  Vector coeffs;
};

enum class OperatorKind {
  Grad,    // W_h      -> Phi_h
  Curl,    // Phi_h    -> V_h^div
  Div,     // V_h^div  -> Q_h
  Ind,     // Phi_h    -> V_h^ND   (Nedelec interpolation)
  IGrad,   // W_h      -> V_h^grad (Lagrange interpolation)
  GradP2,  // V_h^grad -> V_h^ND
  CurlNd,  // V_h^ND   -> V_h^div
};

struct OperatorSpaces {
  Space domain;
  Space codomain;
};

constexpr OperatorSpaces operator_spaces(OperatorKind k) {
  switch (k) {
    case OperatorKind::Grad: return {Space::W, Space::Phi};
    case OperatorKind::Curl: return {Space::Phi, Space::RT};
    case OperatorKind::Div: return {Space::RT, Space::Q};
    case OperatorKind::Ind: return {Space::Phi, Space::Nedelec};
    case OperatorKind::IGrad: return {Space::W, Space::Grad};
    case OperatorKind::GradP2: return {Space::Grad, Space::Nedelec};
    case OperatorKind::CurlNd: return {Space::Nedelec, Space::RT};
  }
  return {Space::Q, Space::Q};
}

struct OperatorMatrix {
  SparseMatrix matrix;
  Space domain;
  Space codomain;
  OperatorKind kind;
};

namespace detail {

/// Sampler returning a derived quantity of a nodal basis as a "value".
enum class Derived { Value, Gradient, Curl, Divergence };

inline auto derived_sampler(const LocalBasis& basis, const TetGeometry& g, Derived d) {
  return [&basis, &g, d](const Bary& b, bool) {
    FieldSample s;
    switch (d) {
      case Derived::Value: s.value = basis.tabulate(g, b, kValues).values; break;
      case Derived::Gradient: s.value = basis.tabulate(g, b, kGradients).gradients; break;
      case Derived::Curl: s.value = basis.tabulate(g, b, kCurls).curls; break;
      case Derived::Divergence: {
        const Matrix J = basis.tabulate(g, b, kGradients).gradients;
        s.value = J.row(0) + J.row(4) + J.row(8);
        break;
      }
    }
    return s;
  };
}

}  // namespace detail

/// Nedelec interpolation of the Phi nodal basis by evaluating the edge
/// moments with quadrature (12 x 16). Equals [I 0] up to rounding, because
/// the first twelve Phi DoFs are the Nedelec DoFs.
inline Matrix local_ind_by_quadrature(const TetGeometry& g) {
  const LocalBasis phi = local_nodal_basis(ElementKind::PhiNC, g);
  return evaluate_dofs(ElementKind::Nedelec2, g, detail::derived_sampler(phi, g, detail::Derived::Value));
}

/// Element matrix of an inter-space operator: codomain DoFs of the mapped
/// domain nodal basis (codomain_dim x domain_dim).
inline Matrix local_operator(OperatorKind kind, const TetGeometry& g) {
  using detail::Derived;
  switch (kind) {
    case OperatorKind::Ind: {
      Matrix sel = Matrix::Zero(12, 16);
      sel.leftCols(12).setIdentity();
      return sel;
    }
    case OperatorKind::Grad: {
      const LocalBasis w = local_nodal_basis(ElementKind::WNC, g);
      return evaluate_dofs(ElementKind::PhiNC, g, detail::derived_sampler(w, g, Derived::Gradient));
    }
    case OperatorKind::Curl: {
      const LocalBasis phi = local_nodal_basis(ElementKind::PhiNC, g);
      return evaluate_dofs(ElementKind::RT0, g, detail::derived_sampler(phi, g, Derived::Curl));
    }
    case OperatorKind::Div: {
      const LocalBasis rt = local_nodal_basis(ElementKind::RT0, g);
      return evaluate_dofs(ElementKind::P0, g, detail::derived_sampler(rt, g, Derived::Divergence));
    }
    case OperatorKind::IGrad: {
      const LocalBasis w = local_nodal_basis(ElementKind::WNC, g);
      return evaluate_dofs(ElementKind::LagrangeP2, g, detail::derived_sampler(w, g, Derived::Value));
    }
    case OperatorKind::GradP2: {
      const LocalBasis p2 = local_nodal_basis(ElementKind::LagrangeP2, g);
      return evaluate_dofs(ElementKind::Nedelec2, g, detail::derived_sampler(p2, g, Derived::Gradient));
    }
    case OperatorKind::CurlNd: {
      const LocalBasis nd = local_nodal_basis(ElementKind::Nedelec2, g);
      return evaluate_dofs(ElementKind::RT0, g, detail::derived_sampler(nd, g, Derived::Curl));
    }
  }
  throw InvalidArgument("local_operator: unknown operator");
}

/// Global sparse operator. Entries are DoF evaluations of single-valued
/// global basis functions, so every tet sharing an entry computes the same
/// value; the first (lowest tet id) is kept.
inline OperatorMatrix diff_operator_matrix(const FeSpaces& spaces, OperatorKind kind,
                                           const Execution& exec = {}) {
  const auto [dom, cod] = operator_spaces(kind);
  const DofMap& dmap = spaces[dom];
  const DofMap& cmap = spaces[cod];
  require_same_mesh(dmap, cmap);
  const SimplicialMesh& mesh = spaces.mesh();
  SparseMatrix m = assemble_first_wins(
      cmap.num_dofs, dmap.num_dofs, mesh.num_tets(), exec, [&](Id t, std::vector<Triplet>& out) {
        const TetGeometry g = tet_geometry(mesh, t);
        const Matrix L = local_operator(kind, g);
        const auto rows = cmap.local(t);
        const auto cols = dmap.local(t);
        for (int i = 0; i < L.rows(); ++i) {
          if (rows[i] < 0) continue;
          for (int j = 0; j < L.cols(); ++j)
            if (cols[j] >= 0 && L(i, j) != 0.0) out.emplace_back(rows[i], cols[j], L(i, j));
        }
      });
  return {std::move(m), dom, cod, kind};
}

struct InterpolationOptions {
  /// Q_h only: subtract the global mean after elementwise projection.
  bool zero_mean = false;
  DofQuadrature quadrature = kAnalyticDofQuadrature;
};

/// Canonical interpolation: every interior DoF is the DoF functional of the
/// field, evaluated once (on the lowest-id tet containing the entity).
inline FeFunction canonical_interpolate(const FeSpaces& spaces, Space space,
                                        const AnalyticField& field,
                                        const InterpolationOptions& opt = {}) {
  const DofMap& map = spaces[space];
  const SimplicialMesh& mesh = spaces.mesh();
  const ElementKind kind = element_of(space);
  FeFunction fh{space, Vector::Zero(map.num_dofs)};
  std::vector<char> done(map.num_dofs, 0);
  for (Id t = 0; t < mesh.num_tets(); ++t) {
    const auto dofs = map.local(t);
    bool needed = false;
    for (Id d : dofs) needed = needed || (d >= 0 && !done[d]);
    if (!needed) continue;
    const TetGeometry g = tet_geometry(mesh, t);
    const Vector local = apply_dofs(kind, g, field, opt.quadrature);
    for (int i = 0; i < map.local_dim; ++i) {
      const Id d = dofs[i];
      if (d < 0 || done[d]) continue;
      fh.coeffs[d] = local[i];
      done[d] = 1;
    }
  }
  if (space == Space::Q && opt.zero_mean) {
    double mean = 0.0, vol = 0.0;
    for (Id t = 0; t < mesh.num_tets(); ++t) {
      const double v = tet_geometry(mesh, t).volume;
      mean += v * fh.coeffs[t];
      vol += v;
    }
    fh.coeffs.array() -= mean / vol;
  }
  return fh;
}

}  // namespace ncdr
