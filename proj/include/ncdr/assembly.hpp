#pragma once

#include "ncdr/core.hpp"
#include "ncdr/dofmap.hpp"
#include "ncdr/fe_spaces.hpp"
#include "ncdr/field.hpp"
#include "ncdr/interp_ops.hpp"
#include "ncdr/quadrature.hpp"

#include <fstream>
#include <iomanip>
#include <string>

namespace ncdr {

enum class FormKind {
  PoissonP2,           // (grad u, grad v)                 Grad x Grad
  PhiStiffness,        // (grad_h phi, grad_h psi)         Phi x Phi
  IndMass,             // (I^ND phi, I^ND psi)             Phi x Phi
  CurlCoupling,        // (curl I^ND psi, q)               Phi x RT
  DivCoupling,         // (mu, div q)                      Q x RT
  PhiMass,             // (phi, psi)                       Phi x Phi
  CurlCouplingDirect,  // (curl psi, q)                    Phi x RT
  AInterp,             // eps^2 PhiStiffness + IndMass
  ADirect,             // eps^2 PhiStiffness + PhiMass
  NdMass,              // (u, v) on V_h^ND
  RtMass,              // (p, q) on V_h^div
  RtDivDiv,            // (div p, div q)
  QMass,               // (lambda, mu) on Q_h
  IndCurlCurl,         // (curl I^ND phi, curl I^ND psi)
  WHessian,            // (grad_h grad w, grad_h grad v)   W x W
  WIndGradient,        // (I^ND grad w, I^ND grad v)       W x W
  WGradient,           // (grad w, grad v)                 W x W
};

struct FormSpaces {
  Space rows;
  Space cols;
};

constexpr FormSpaces form_spaces(FormKind k) {
  switch (k) {
    case FormKind::PoissonP2: return {Space::Grad, Space::Grad};
    case FormKind::PhiStiffness:
    case FormKind::IndMass:
    case FormKind::PhiMass:
    case FormKind::AInterp:
    case FormKind::ADirect:
    case FormKind::IndCurlCurl: return {Space::Phi, Space::Phi};
    case FormKind::CurlCoupling:
    case FormKind::CurlCouplingDirect: return {Space::Phi, Space::RT};
    case FormKind::DivCoupling: return {Space::Q, Space::RT};
    case FormKind::NdMass: return {Space::Nedelec, Space::Nedelec};
    case FormKind::RtMass:
    case FormKind::RtDivDiv: return {Space::RT, Space::RT};
    case FormKind::QMass: return {Space::Q, Space::Q};
    case FormKind::WHessian:
    case FormKind::WIndGradient:
    case FormKind::WGradient: return {Space::W, Space::W};
  }
  return {Space::Q, Space::Q};
}

struct AssembledForm {
  SparseMatrix matrix;
  Space rows;
  Space cols;
  FormKind kind;
  double epsilon = 0.0;
};

/// Tet quadrature degrees for the forms. Products of two Phi functions (or
/// their gradients) are integrated with `phi`; forms whose integrands are
/// piecewise polynomials of degree <= 2 use `low`.
struct FormQuadrature {
  int phi = 8;
  int low = 2;
};

namespace detail {

inline Bary bary_row(const Matrix& pts, Eigen::Index q) {
  return {pts(q, 0), pts(q, 1), pts(q, 2), pts(q, 3)};
}

/// Embeds a 12-column Nedelec block into the 16 Phi columns.
inline Matrix embed_edge_block(const Matrix& nd_block_rows_are_nd) {
  Matrix out = Matrix::Zero(16, nd_block_rows_are_nd.cols());
  out.topRows(12) = nd_block_rows_are_nd;
  return out;
}

inline Matrix local_form(FormKind kind, const TetGeometry& g, const FormQuadrature& fq) {
  const double vol = g.volume;
  switch (kind) {
    case FormKind::PoissonP2: {
      const LocalBasis p2 = local_nodal_basis(ElementKind::LagrangeP2, g);
      const auto& r = get_rule(EntityKind::Tet, fq.low);
      Matrix K = Matrix::Zero(10, 10);
      for (Eigen::Index q = 0; q < r.size(); ++q) {
        const Matrix G = p2.tabulate(g, bary_row(r.points, q), kGradients).gradients;
        K.noalias() += (r.weights[q] * vol) * G.transpose() * G;
      }
      return K;
    }
    case FormKind::PhiStiffness: {
      const LocalBasis phi = local_nodal_basis(ElementKind::PhiNC, g);
      const auto& r = get_rule(EntityKind::Tet, fq.phi);
      Matrix K = Matrix::Zero(16, 16);
      for (Eigen::Index q = 0; q < r.size(); ++q) {
        const Matrix J = phi.tabulate(g, bary_row(r.points, q), kGradients).gradients;
        K.noalias() += (r.weights[q] * vol) * J.transpose() * J;
      }
      return K;
    }
    case FormKind::PhiMass: {
      const LocalBasis phi = local_nodal_basis(ElementKind::PhiNC, g);
      const auto& r = get_rule(EntityKind::Tet, fq.phi);
      Matrix M = Matrix::Zero(16, 16);
      for (Eigen::Index q = 0; q < r.size(); ++q) {
        const Matrix V = phi.tabulate(g, bary_row(r.points, q), kValues).values;
        M.noalias() += (r.weights[q] * vol) * V.transpose() * V;
      }
      return M;
    }
    case FormKind::NdMass:
    case FormKind::IndMass: {
      const LocalBasis nd = local_nodal_basis(ElementKind::Nedelec2, g);
      const auto& r = get_rule(EntityKind::Tet, fq.low);
      Matrix M = Matrix::Zero(12, 12);
      for (Eigen::Index q = 0; q < r.size(); ++q) {
        const Matrix V = nd.tabulate(g, bary_row(r.points, q), kValues).values;
        M.noalias() += (r.weights[q] * vol) * V.transpose() * V;
      }
      if (kind == FormKind::NdMass) return M;
      Matrix out = Matrix::Zero(16, 16);
      out.topLeftCorner(12, 12) = M;
      return out;
    }
    case FormKind::IndCurlCurl: {
      const LocalBasis nd = local_nodal_basis(ElementKind::Nedelec2, g);
      const Matrix C = nd.tabulate(g, {0.25, 0.25, 0.25, 0.25}, kCurls).curls;
      Matrix out = Matrix::Zero(16, 16);
      out.topLeftCorner(12, 12) = vol * C.transpose() * C;
      return out;
    }
    case FormKind::CurlCoupling:
    case FormKind::CurlCouplingDirect: {
      const bool direct = kind == FormKind::CurlCouplingDirect;
      const LocalBasis trial =
          local_nodal_basis(direct ? ElementKind::PhiNC : ElementKind::Nedelec2, g);
      const LocalBasis rt = local_nodal_basis(ElementKind::RT0, g);
      const auto& r = get_rule(EntityKind::Tet, fq.low);
      Matrix B = Matrix::Zero(trial.coeffs.cols(), 4);
      for (Eigen::Index q = 0; q < r.size(); ++q) {
        const Bary b = bary_row(r.points, q);
        const Matrix C = trial.tabulate(g, b, kCurls).curls;
        const Matrix V = rt.tabulate(g, b, kValues).values;
        B.noalias() += (r.weights[q] * vol) * C.transpose() * V;
      }
      return direct ? B : embed_edge_block(B);
    }
    case FormKind::DivCoupling:
    case FormKind::RtDivDiv: {
      const LocalBasis rt = local_nodal_basis(ElementKind::RT0, g);
      const Matrix J = rt.tabulate(g, {0.25, 0.25, 0.25, 0.25}, kGradients).gradients;
      const Eigen::RowVectorXd div = J.row(0) + J.row(4) + J.row(8);
      if (kind == FormKind::DivCoupling) return vol * div;
      return vol * div.transpose() * div;
    }
    case FormKind::RtMass: {
      const LocalBasis rt = local_nodal_basis(ElementKind::RT0, g);
      const auto& r = get_rule(EntityKind::Tet, fq.low);
      Matrix M = Matrix::Zero(4, 4);
      for (Eigen::Index q = 0; q < r.size(); ++q) {
        const Matrix V = rt.tabulate(g, bary_row(r.points, q), kValues).values;
        M.noalias() += (r.weights[q] * vol) * V.transpose() * V;
      }
      return M;
    }
    case FormKind::QMass: return Matrix::Constant(1, 1, vol);
    case FormKind::WHessian:
    case FormKind::WIndGradient:
    case FormKind::WGradient: {
      // grad W_h lies in Phi_h, so these are Phi forms pulled back by the
      // local gradient operator.
      const FormKind base = kind == FormKind::WHessian       ? FormKind::PhiStiffness
                            : kind == FormKind::WIndGradient ? FormKind::IndMass
                                                             : FormKind::PhiMass;
      const Matrix G = local_operator(OperatorKind::Grad, g);
      return G.transpose() * local_form(base, g, fq) * G;
    }
    case FormKind::AInterp:
    case FormKind::ADirect: break;
  }
  throw InvalidArgument("local_form: composite form has no element kernel");
}

}  // namespace detail

/// Assembles a bilinear form. Symmetric forms are accumulated as
/// (L + L^T) / 2 per element.
inline AssembledForm assemble_bilinear(FormKind kind, const FeSpaces& spaces, double epsilon = 0.0,
                                       const Execution& exec = {}, const FormQuadrature& fq = {}) {
  if (!(epsilon >= 0.0)) throw InvalidArgument("assemble_bilinear: epsilon must be >= 0");
  const auto [rs, cs] = form_spaces(kind);
  if (kind == FormKind::AInterp || kind == FormKind::ADirect) {
    const SparseMatrix K = assemble_bilinear(FormKind::PhiStiffness, spaces, 0.0, exec, fq).matrix;
    const SparseMatrix M =
        assemble_bilinear(kind == FormKind::AInterp ? FormKind::IndMass : FormKind::PhiMass, spaces,
                          0.0, exec, fq)
            .matrix;
    SparseMatrix A = (epsilon * epsilon) * K + M;
    return {std::move(A), rs, cs, kind, epsilon};
  }
  const DofMap& rmap = spaces[rs];
  const DofMap& cmap = spaces[cs];
  const SimplicialMesh& mesh = spaces.mesh();
  const bool symmetric = rs == cs;
  SparseMatrix m = assemble_triplets(
      rmap.num_dofs, cmap.num_dofs, mesh.num_tets(), exec, [&](Id t, std::vector<Triplet>& out) {
        const TetGeometry g = tet_geometry(mesh, t);
        Matrix L = detail::local_form(kind, g, fq);
        if (symmetric) L = 0.5 * (L + L.transpose()).eval();
        const auto rows = rmap.local(t);
        const auto cols = cmap.local(t);
        for (int i = 0; i < L.rows(); ++i) {
          if (rows[i] < 0) continue;
          for (int j = 0; j < L.cols(); ++j)
            if (cols[j] >= 0 && L(i, j) != 0.0) out.emplace_back(rows[i], cols[j], L(i, j));
        }
      });
  return {std::move(m), rs, cs, kind, epsilon};
}

enum class LoadKind {
  FVsP2,           // (f, v),                 v in V_h^grad
  GradwVsIndphi,   // (grad w_h, I^ND psi),   psi in Phi_h
  GradwVsPhi,      // (grad w_h, psi)
  IndphiVsGradP2,  // (I^ND phi_h, grad chi), chi in V_h^grad
  PhiVsGradP2,     // (phi_h, grad chi)
};

namespace detail {

/// Deterministic vector assembly: per-element (index, value) lists merged in
/// element order.
template <class Kernel>
Vector assemble_vector(Id size, Id elements, const Execution& exec, Kernel&& kernel) {
  const unsigned nchunks =
      std::min<unsigned>(exec.threads(), static_cast<unsigned>(std::max<Id>(elements, 1)));
  std::vector<std::vector<std::pair<Id, double>>> buffers(nchunks);
  parallel_chunks(elements, exec, [&](Id begin, Id end, unsigned chunk) {
    for (Id e = begin; e < end; ++e) kernel(e, buffers[chunk]);
  });
  Vector out = Vector::Zero(size);
  for (const auto& b : buffers)
    for (const auto& [i, v] : b) out[i] += v;
  return out;
}

inline void scatter(std::span<const Id> dofs, const Vector& local,
                    std::vector<std::pair<Id, double>>& out) {
  for (Eigen::Index i = 0; i < local.size(); ++i)
    if (dofs[i] >= 0) out.emplace_back(dofs[i], local[i]);
}

}  // namespace detail

/// (f, v) for v in V_h^grad with a tet rule of the given degree.
inline Vector assemble_load(LoadKind kind, const FeSpaces& spaces, const AnalyticField& f,
                            int degree = 10, const Execution& exec = {}) {
  if (kind != LoadKind::FVsP2)
    throw IntegrityError("assemble_load: this load kind takes a discrete field");
  if (f.arity != Arity::Scalar) throw IntegrityError("assemble_load: source must be scalar");
  const DofMap& map = spaces[Space::Grad];
  const SimplicialMesh& mesh = spaces.mesh();
  const auto& r = get_rule(EntityKind::Tet, degree);
  return detail::assemble_vector(map.num_dofs, mesh.num_tets(), exec, [&](Id t, auto& out) {
    const TetGeometry g = tet_geometry(mesh, t);
    const LocalBasis p2 = local_nodal_basis(ElementKind::LagrangeP2, g);
    Vector local = Vector::Zero(10);
    for (Eigen::Index q = 0; q < r.size(); ++q) {
      const Bary b = detail::bary_row(r.points, q);
      const Matrix V = p2.tabulate(g, b, kValues).values;
      local += (r.weights[q] * g.volume * f.value(g.point(b))) * V.row(0).transpose();
    }
    detail::scatter(map.local(t), local, out);
  });
}

/// Loads driven by a discrete field.
inline Vector assemble_load(LoadKind kind, const FeSpaces& spaces, const FeFunction& data,
                            const Execution& exec = {}, const FormQuadrature& fq = {}) {
  const SimplicialMesh& mesh = spaces.mesh();
  auto expect = [&](Space s) {
    if (data.space != s)
      throw IntegrityError(std::string("assemble_load: expected a ") + space_name(s) +
                           " function, got " + space_name(data.space));
    if (data.coeffs.size() != spaces.dim(s))
      throw IntegrityError("assemble_load: coefficient length does not match the DoF map");
  };
  switch (kind) {
    case LoadKind::FVsP2: throw IntegrityError("assemble_load: FVsP2 takes an analytic source");
    case LoadKind::GradwVsIndphi:
    case LoadKind::GradwVsPhi: {
      expect(Space::Grad);
      const bool via_nd = kind == LoadKind::GradwVsIndphi;
      const DofMap& wmap = spaces[Space::Grad];
      const DofMap& pmap = spaces[Space::Phi];
      const auto& r = get_rule(EntityKind::Tet, via_nd ? fq.low : fq.phi);
      return detail::assemble_vector(pmap.num_dofs, mesh.num_tets(), exec, [&](Id t, auto& out) {
        const TetGeometry g = tet_geometry(mesh, t);
        const Vector wl = gather(wmap, t, data.coeffs);
        const LocalBasis p2 = local_nodal_basis(ElementKind::LagrangeP2, g);
        const LocalBasis test =
            local_nodal_basis(via_nd ? ElementKind::Nedelec2 : ElementKind::PhiNC, g);
        Vector local = Vector::Zero(test.coeffs.cols());
        for (Eigen::Index q = 0; q < r.size(); ++q) {
          const Bary b = detail::bary_row(r.points, q);
          const Vec3 gw = p2.tabulate(g, b, kGradients).gradients * wl;
          const Matrix V = test.tabulate(g, b, kValues).values;
          local += (r.weights[q] * g.volume) * (V.transpose() * gw);
        }
        if (via_nd) {
          Vector full = Vector::Zero(16);
          full.head(12) = local;
          local = full;
        }
        detail::scatter(pmap.local(t), local, out);
      });
    }
    case LoadKind::IndphiVsGradP2:
    case LoadKind::PhiVsGradP2: {
      expect(Space::Phi);
      const bool via_nd = kind == LoadKind::IndphiVsGradP2;
      const DofMap& pmap = spaces[Space::Phi];
      const DofMap& umap = spaces[Space::Grad];
      const auto& r = get_rule(EntityKind::Tet, via_nd ? fq.low : fq.phi);
      return detail::assemble_vector(umap.num_dofs, mesh.num_tets(), exec, [&](Id t, auto& out) {
        const TetGeometry g = tet_geometry(mesh, t);
        Vector pl = gather(pmap, t, data.coeffs);
        const LocalBasis p2 = local_nodal_basis(ElementKind::LagrangeP2, g);
        const LocalBasis trial =
            local_nodal_basis(via_nd ? ElementKind::Nedelec2 : ElementKind::PhiNC, g);
        if (via_nd) pl = pl.head(12).eval();
        Vector local = Vector::Zero(10);
        for (Eigen::Index q = 0; q < r.size(); ++q) {
          const Bary b = detail::bary_row(r.points, q);
          const Vec3 v = trial.tabulate(g, b, kValues).values * pl;
          const Matrix G = p2.tabulate(g, b, kGradients).gradients;
          local += (r.weights[q] * g.volume) * (G.transpose() * v);
        }
        detail::scatter(umap.local(t), local, out);
      });
    }
  }
  throw InvalidArgument("assemble_load: unknown load kind");
}

/// MatrixMarket coordinate export (1-based indices).
inline void write_matrix_market(const SparseMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < m.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(m, r); it; ++it)
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

}  // namespace ncdr
