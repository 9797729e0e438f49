#pragma once

#include "ncdr/core.hpp"
#include "ncdr/field.hpp"
#include "ncdr/mesh.hpp"
#include "ncdr/quadrature.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <string>

namespace ncdr {

/// The six local elements.
///   LagrangeP2 : P2, vertex values + edge integrals                   (10)
///   Nedelec2   : P1(T;R^3), two tangential moments per edge          (12)
///   RT0        : lowest-order Raviart-Thomas, face fluxes             (4)
///   P0         : constants, cell mean                                 (1)
///   PhiNC      : P1(T;R^3) + grad(b_T P1), edge moments + face fluxes (16)
///   WNC        : P2 + b_T P1, vertex values, edge integrals and face
///                normal-derivative integrals                          (14)
enum class ElementKind { LagrangeP2, Nedelec2, RT0, P0, PhiNC, WNC };

struct ElementTraits {
  int dim;
  Arity arity;
  const char* name;
};

constexpr ElementTraits element_traits(ElementKind k) {
  switch (k) {
    case ElementKind::LagrangeP2: return {10, Arity::Scalar, "LagrangeP2"};
    case ElementKind::Nedelec2: return {12, Arity::Vector, "Nedelec2"};
    case ElementKind::RT0: return {4, Arity::Vector, "RT0"};
    case ElementKind::P0: return {1, Arity::Scalar, "P0"};
    case ElementKind::PhiNC: return {16, Arity::Vector, "PhiNC"};
    case ElementKind::WNC: return {14, Arity::Scalar, "WNC"};
  }
  return {0, Arity::Scalar, "?"};
}

using Bary = std::array<double, 4>;

enum EvalFlags : unsigned { kValues = 1u, kGradients = 2u, kCurls = 4u };

/// Tabulated quantities, one column per function.
///   values    : 1 x dim (scalar) or 3 x dim (vector)
///   gradients : 3 x dim (scalar) or 9 x dim (vector, row 3 i + k = d v_i / d x_k)
///   curls     : 3 x dim (vector only)
struct ShapeTable {
  Matrix values;
  Matrix gradients;
  Matrix curls;
};

namespace detail {

inline double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

/// lambda^alpha with exponent offsets; zero if any exponent would be negative.
inline double bary_power(const Bary& l, const std::array<int, 4>& a) {
  double r = 1.0;
  for (int i = 0; i < 4; ++i) {
    if (a[i] < 0) return 0.0;
    r *= ipow(l[i], a[i]);
  }
  return r;
}

inline double mono_value(const std::array<int, 4>& a, const Bary& l) { return bary_power(l, a); }

inline Vec3 mono_gradient(const std::array<int, 4>& a, const Bary& l, const TetGeometry& g) {
  Vec3 grad = Vec3::Zero();
  for (int i = 0; i < 4; ++i) {
    if (a[i] == 0) continue;
    auto b = a;
    --b[i];
    grad += a[i] * bary_power(l, b) * g.grad_bary[i];
  }
  return grad;
}

inline Mat3 mono_hessian(const std::array<int, 4>& a, const Bary& l, const TetGeometry& g) {
  Mat3 H = Mat3::Zero();
  for (int i = 0; i < 4; ++i) {
    if (a[i] == 0) continue;
    for (int j = 0; j < 4; ++j) {
      auto b = a;
      --b[i];
      const int c = b[j];
      if (c == 0) continue;
      --b[j];
      H += a[i] * c * bary_power(l, b) * g.grad_bary[i] * g.grad_bary[j].transpose();
    }
  }
  return H;
}

inline constexpr std::array<std::array<int, 2>, 10> kQuadraticPairs{
    {{0, 0}, {0, 1}, {0, 2}, {0, 3}, {1, 1}, {1, 2}, {1, 3}, {2, 2}, {2, 3}, {3, 3}}};

inline std::array<int, 4> pair_exponent(int i, int j) {
  std::array<int, 4> a{0, 0, 0, 0};
  ++a[i];
  ++a[j];
  return a;
}

/// b_T lambda_i
inline std::array<int, 4> bubble_exponent(int i) {
  std::array<int, 4> a{1, 1, 1, 1};
  ++a[i];
  return a;
}

inline void curls_from_jacobians(ShapeTable& t) {
  const auto m = t.gradients.cols();
  t.curls.resize(3, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    auto J = [&](int i, int k) { return t.gradients(3 * i + k, j); };
    t.curls(0, j) = J(2, 1) - J(1, 2);
    t.curls(1, j) = J(0, 2) - J(2, 0);
    t.curls(2, j) = J(1, 0) - J(0, 1);
  }
}

}  // namespace detail

/// Evaluates the fixed monomial basis of the shape space of `kind` at a
/// barycentric point. Monomials:
///   LagrangeP2 : lambda_i lambda_j (i <= j)
///   WNC        : the ten above, then b_T lambda_i
///   Nedelec2   : lambda_i e_k at column 3 i + k
///   PhiNC      : the twelve above, then grad(b_T lambda_i)
///   RT0        : e_0, e_1, e_2, x - centroid
///   P0         : 1
inline ShapeTable eval_shape_basis(ElementKind kind, const TetGeometry& g, const Bary& l,
                                   unsigned what) {
  const auto tr = element_traits(kind);
  const int m = tr.dim;
  ShapeTable t;
  const bool vector = tr.arity == Arity::Vector;
  if ((what & kCurls) && !vector)
    throw CapabilityError(std::string("curls requested for scalar element ") + tr.name);
  const bool want_values = what & kValues;
  const bool want_jac = (what & kGradients) || (what & kCurls);
  if (want_values) t.values = Matrix::Zero(vector ? 3 : 1, m);
  if (want_jac) t.gradients = Matrix::Zero(vector ? 9 : 3, m);

  switch (kind) {
    case ElementKind::P0:
      if (want_values) t.values(0, 0) = 1.0;
      break;
    case ElementKind::LagrangeP2:
    case ElementKind::WNC: {
      for (int c = 0; c < 10; ++c) {
        const auto a = detail::pair_exponent(detail::kQuadraticPairs[c][0], detail::kQuadraticPairs[c][1]);
        if (want_values) t.values(0, c) = detail::mono_value(a, l);
        if (want_jac) t.gradients.col(c) = detail::mono_gradient(a, l, g);
      }
      if (kind == ElementKind::WNC) {
        for (int i = 0; i < 4; ++i) {
          const auto a = detail::bubble_exponent(i);
          if (want_values) t.values(0, 10 + i) = detail::mono_value(a, l);
          if (want_jac) t.gradients.col(10 + i) = detail::mono_gradient(a, l, g);
        }
      }
      break;
    }
    case ElementKind::Nedelec2:
    case ElementKind::PhiNC: {
      for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 3; ++k) {
          const int c = 3 * i + k;
          if (want_values) t.values(k, c) = l[i];
          if (want_jac) t.gradients.block<3, 1>(3 * k, c) = g.grad_bary[i];
        }
      if (kind == ElementKind::PhiNC) {
        for (int i = 0; i < 4; ++i) {
          const auto a = detail::bubble_exponent(i);
          if (want_values) t.values.col(12 + i) = detail::mono_gradient(a, l, g);
          if (want_jac) {
            const Mat3 H = detail::mono_hessian(a, l, g);
            for (int r = 0; r < 3; ++r) t.gradients.block<3, 1>(3 * r, 12 + i) = H.row(r).transpose();
          }
        }
      }
      break;
    }
    case ElementKind::RT0: {
      for (int k = 0; k < 3; ++k)
        if (want_values) t.values(k, k) = 1.0;
      if (want_values) t.values.col(3) = g.point(l) - g.centroid();
      if (want_jac)
        for (int k = 0; k < 3; ++k) t.gradients(3 * k + k, 3) = 1.0;
      break;
    }
  }
  if (what & kCurls) detail::curls_from_jacobians(t);
  if (!(what & kGradients)) t.gradients.resize(0, 0);
  return t;
}

/// Samples of m functions at one point: value is arity x m, gradient is
/// 3 x m (scalar functions, only when requested).
struct FieldSample {
  Matrix value;
  Matrix gradient;
};

/// Quadrature degrees used by the DoF functionals.
struct DofQuadrature {
  int edge = 5;
  int face = 4;
  int cell = 4;
};

/// Degrees used when the argument is a non-polynomial analytic field.
inline constexpr DofQuadrature kAnalyticDofQuadrature{15, 10, 10};

/// Applies the DoF functionals of `kind` to m functions delivered by
/// sample(bary, need_gradient). Returns ndof x m. Edge and face functionals
/// use the global orientation stored in the geometry.
template <class Sampler>
Matrix evaluate_dofs(ElementKind kind, const TetGeometry& g, Sampler&& sample,
                     const DofQuadrature& quad = {}) {
  const auto tr = element_traits(kind);
  const bool vector_dofs = tr.arity == Arity::Vector;
  Matrix dofs;
  int row = 0;
  auto ensure = [&](Eigen::Index m) {
    if (dofs.size() == 0) dofs = Matrix::Zero(tr.dim, m);
  };
  auto check_arity = [&](const FieldSample& s) {
    if ((s.value.rows() == 3) != vector_dofs)
      throw InvalidArgument(std::string("field arity does not match element ") + tr.name);
  };

  auto vertex_values = [&] {
    for (int i = 0; i < 4; ++i) {
      Bary b{0, 0, 0, 0};
      b[i] = 1.0;
      const FieldSample s = sample(b, false);
      check_arity(s);
      ensure(s.value.cols());
      dofs.row(row++) = s.value.row(0);
    }
  };
  auto edge_integrals = [&] {
    const auto& rule = get_rule(EntityKind::Edge, quad.edge);
    for (int k = 0; k < 6; ++k) {
      const auto [a, b] = g.edge_ends[k];
      for (Eigen::Index q = 0; q < rule.size(); ++q) {
        Bary bary{0, 0, 0, 0};
        bary[a] = rule.points(q, 0);
        bary[b] = rule.points(q, 1);
        const FieldSample s = sample(bary, false);
        check_arity(s);
        ensure(s.value.cols());
        dofs.row(row) += rule.weights[q] * g.edge_length[k] * s.value.row(0);
      }
      ++row;
    }
  };
  auto edge_moments = [&] {
    const auto& rule = get_rule(EntityKind::Edge, quad.edge);
    for (int k = 0; k < 6; ++k) {
      const auto [a, b] = g.edge_ends[k];
      const Vec3& t = g.edge_tangent[k];
      for (Eigen::Index q = 0; q < rule.size(); ++q) {
        Bary bary{0, 0, 0, 0};
        bary[a] = rule.points(q, 0);
        bary[b] = rule.points(q, 1);
        const FieldSample s = sample(bary, false);
        check_arity(s);
        ensure(s.value.cols());
        const Eigen::RowVectorXd vt = t.transpose() * s.value;
        const double w = rule.weights[q] * g.edge_length[k];
        dofs.row(row) += w * bary[a] * vt;
        dofs.row(row + 1) += w * bary[b] * vt;
      }
      row += 2;
    }
  };
  auto face_fluxes = [&](bool normal_derivative) {
    const auto& rule = get_rule(EntityKind::Triangle, quad.face);
    for (int k = 0; k < 4; ++k) {
      const auto& fv = kFaceVertices[k];
      const Vec3& n = g.face_normal[k];
      for (Eigen::Index q = 0; q < rule.size(); ++q) {
        Bary bary{0, 0, 0, 0};
        for (int c = 0; c < 3; ++c) bary[fv[c]] = rule.points(q, c);
        const FieldSample s = sample(bary, normal_derivative);
        check_arity(s);
        ensure(s.value.cols());
        const double w = rule.weights[q] * g.face_area[k];
        if (normal_derivative) {
          if (s.gradient.rows() != 3)
            throw CapabilityError("normal-derivative DoFs need the field gradient");
          dofs.row(row) += w * (n.transpose() * s.gradient);
        } else {
          dofs.row(row) += w * (n.transpose() * s.value);
        }
      }
      ++row;
    }
  };

  switch (kind) {
    case ElementKind::LagrangeP2:
      vertex_values();
      edge_integrals();
      break;
    case ElementKind::WNC:
      vertex_values();
      edge_integrals();
      face_fluxes(true);
      break;
    case ElementKind::Nedelec2:
      edge_moments();
      break;
    case ElementKind::PhiNC:
      edge_moments();
      face_fluxes(false);
      break;
    case ElementKind::RT0:
      face_fluxes(false);
      break;
    case ElementKind::P0: {
      const auto& rule = get_rule(EntityKind::Tet, quad.cell);
      for (Eigen::Index q = 0; q < rule.size(); ++q) {
        const Bary b{rule.points(q, 0), rule.points(q, 1), rule.points(q, 2), rule.points(q, 3)};
        const FieldSample s = sample(b, false);
        check_arity(s);
        ensure(s.value.cols());
        dofs.row(0) += rule.weights[q] * s.value.row(0);
      }
      break;
    }
  }
  return dofs;
}

/// Sampler over the monomial basis of an element.
inline auto monomial_sampler(ElementKind kind, const TetGeometry& g) {
  return [kind, &g](const Bary& b, bool need_gradient) {
    ShapeTable t = eval_shape_basis(kind, g, b, kValues | (need_gradient ? kGradients : 0u));
    return FieldSample{std::move(t.values), std::move(t.gradients)};
  };
}

/// Sampler over an analytic field.
inline auto field_sampler(const AnalyticField& f, const TetGeometry& g) {
  return [&f, &g](const Bary& b, bool need_gradient) {
    const Vec3 x = g.point(b);
    FieldSample s;
    if (f.arity == Arity::Scalar) {
      s.value.resize(1, 1);
      s.value(0, 0) = f.value(x);
      if (need_gradient) s.gradient = f.gradient(x);
    } else {
      s.value = f.vector(x);
    }
    return s;
  };
}

/// DoF values of an analytic field on one tet.
inline Vector apply_dofs(ElementKind kind, const TetGeometry& g, const AnalyticField& f,
                         const DofQuadrature& quad = kAnalyticDofQuadrature) {
  if ((f.arity == Arity::Vector) != (element_traits(kind).arity == Arity::Vector))
    throw InvalidArgument("apply_dofs: field '" + f.tag + "' has the wrong arity for " +
                          element_traits(kind).name);
  if (kind == ElementKind::WNC && !f.has_gradient())
    throw CapabilityError("apply_dofs: WNC face DoFs need the gradient of '" + f.tag + "'");
  return evaluate_dofs(kind, g, field_sampler(f, g), quad).col(0);
}

/// Nodal basis of `kind` on one tet: nodal_j = sum_k coeffs(k, j) monomial_k.
struct LocalBasis {
  ElementKind kind = ElementKind::P0;
  Matrix coeffs;

  /// Tabulates the nodal basis.
  ShapeTable tabulate(const TetGeometry& g, const Bary& b, unsigned what) const {
    ShapeTable t = eval_shape_basis(kind, g, b, what);
    if (t.values.size()) t.values = t.values * coeffs;
    if (t.gradients.size()) t.gradients = t.gradients * coeffs;
    if (t.curls.size()) t.curls = t.curls * coeffs;
    return t;
  }

  /// Sampler over the nodal basis, for feeding evaluate_dofs of another element.
  auto sampler(const TetGeometry& g) const {
    return [this, &g](const Bary& b, bool need_gradient) {
      ShapeTable t = tabulate(g, b, kValues | (need_gradient ? kGradients : 0u));
      return FieldSample{std::move(t.values), std::move(t.gradients)};
    };
  }
};

/// Generalized Vandermonde matrix DoF_i(monomial_j).
inline Matrix dof_matrix(ElementKind kind, const TetGeometry& g) {
  return evaluate_dofs(kind, g, monomial_sampler(kind, g));
}

/// Spectral condition number of the DoF matrix.
inline double unisolvence_check(ElementKind kind, const TetGeometry& g) {
  const Matrix V = dof_matrix(kind, g);
  Eigen::JacobiSVD<Matrix> svd(V);
  const auto& s = svd.singularValues();
  const double smin = s[s.size() - 1];
  if (!(smin > 0.0)) return std::numeric_limits<double>::infinity();
  return s[0] / smin;
}

inline LocalBasis local_nodal_basis(ElementKind kind, const TetGeometry& g) {
  const Matrix V = dof_matrix(kind, g);
  Eigen::PartialPivLU<Matrix> lu(V);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14))
    throw UnisolvenceFailure(std::string("DoF matrix of ") + element_traits(kind).name +
                                 " is singular",
                             rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity());
  return {kind, lu.inverse()};
}

}  // namespace ncdr
