#pragma once

#include "ncdr/core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace ncdr {

enum class EntityKind { Edge, Triangle, Tet };

/// Integration rule on a simplex. Points are barycentric (one column per
/// vertex of the simplex); weights sum to 1, so physical integrals are
/// measure * sum_q w_q f(x_q).
struct QuadratureRule {
  EntityKind kind = EntityKind::Tet;
  int degree = 0;
  Matrix points;  // npoints x (dim + 1)
  Vector weights;

  Eigen::Index size() const { return weights.size(); }
};

inline constexpr int kMaxTetDegree = 20;
inline constexpr int kMaxTriangleDegree = 20;

namespace detail {

/// Gauss-Jacobi nodes/weights on [0, 1] for the weight (1 - x)^alpha
/// (Golub-Welsch). Weights are normalized to sum to one.
inline std::pair<Vector, Vector> gauss_jacobi01(int npoints, double alpha) {
  const double beta = 0.0;
  Matrix T = Matrix::Zero(npoints, npoints);
  for (int k = 0; k < npoints; ++k) {
    const double s = 2.0 * k + alpha + beta;
    if (k == 0)
      T(k, k) = (beta - alpha) / (alpha + beta + 2.0);
    else
      T(k, k) = (beta * beta - alpha * alpha) / (s * (s + 2.0));
    if (k + 1 < npoints) {
      const double n = k + 1.0;
      const double sn = 2.0 * n + alpha + beta;
      const double b = std::sqrt(4.0 * n * (n + alpha) * (n + beta) * (n + alpha + beta) /
                                 (sn * sn * (sn + 1.0) * (sn - 1.0)));
      T(k, k + 1) = b;
      T(k + 1, k) = b;
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(T);
  Vector x(npoints), w(npoints);
  for (int i = 0; i < npoints; ++i) {
    // the weight (1 - t)^alpha on [-1, 1] maps to (1 - x)^alpha with x = (1 + t) / 2
    x[i] = 0.5 * (1.0 + eig.eigenvalues()[i]);
    const double v = eig.eigenvectors()(0, i);
    w[i] = v * v;
  }
  w /= w.sum();
  return {x, w};
}

inline int points_for_degree(int degree) { return std::max(1, (degree + 2) / 2); }

inline QuadratureRule make_edge_rule(int degree) {
  const int k = points_for_degree(degree);
  auto [x, w] = gauss_jacobi01(k, 0.0);
  QuadratureRule r;
  r.kind = EntityKind::Edge;
  r.degree = 2 * k - 1;
  r.points.resize(k, 2);
  r.weights = w;
  for (int i = 0; i < k; ++i) {
    r.points(i, 0) = 1.0 - x[i];
    r.points(i, 1) = x[i];
  }
  return r;
}

/// Collapsed (conical product) rule: x = u, y = v (1 - u).
inline QuadratureRule make_triangle_rule(int degree) {
  const int k = points_for_degree(degree);
  auto [u, wu] = gauss_jacobi01(k, 1.0);
  auto [v, wv] = gauss_jacobi01(k, 0.0);
  QuadratureRule r;
  r.kind = EntityKind::Triangle;
  r.degree = 2 * k - 1;
  r.points.resize(k * k, 3);
  r.weights.resize(k * k);
  int q = 0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j, ++q) {
      const double x = u[i], y = v[j] * (1.0 - u[i]);
      r.points.row(q) << 1.0 - x - y, x, y;
      r.weights[q] = wu[i] * wv[j];
    }
  return r;
}

/// Collapsed rule: x = u, y = v (1 - u), z = w (1 - u)(1 - v).
inline QuadratureRule make_tet_rule(int degree) {
  const int k = points_for_degree(degree);
  auto [u, wu] = gauss_jacobi01(k, 2.0);
  auto [v, wv] = gauss_jacobi01(k, 1.0);
  auto [s, ws] = gauss_jacobi01(k, 0.0);
  QuadratureRule r;
  r.kind = EntityKind::Tet;
  r.degree = 2 * k - 1;
  r.points.resize(k * k * k, 4);
  r.weights.resize(k * k * k);
  int q = 0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      for (int l = 0; l < k; ++l, ++q) {
        const double x = u[i];
        const double y = v[j] * (1.0 - u[i]);
        const double z = s[l] * (1.0 - u[i]) * (1.0 - v[j]);
        r.points.row(q) << 1.0 - x - y - z, x, y, z;
        r.weights[q] = wu[i] * wv[j] * ws[l];
      }
  return r;
}

}  // namespace detail

/// Rule of exactness >= degree. Rules are built once and cached; the
/// returned reference stays valid for the lifetime of the program.
inline const QuadratureRule& get_rule(EntityKind kind, int degree) {
  if (degree < 0) throw CapabilityError("quadrature degree must be non-negative");
  if (kind == EntityKind::Tet && degree > kMaxTetDegree)
    throw CapabilityError("tet quadrature supports degree <= " + std::to_string(kMaxTetDegree) +
                          ", requested " + std::to_string(degree));
  if (kind == EntityKind::Triangle && degree > kMaxTriangleDegree)
    throw CapabilityError("triangle quadrature supports degree <= " +
                          std::to_string(kMaxTriangleDegree) + ", requested " +
                          std::to_string(degree));
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<QuadratureRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{static_cast<int>(kind), degree}];
  if (!slot) {
    switch (kind) {
      case EntityKind::Edge: slot = std::make_unique<QuadratureRule>(detail::make_edge_rule(degree)); break;
      case EntityKind::Triangle: slot = std::make_unique<QuadratureRule>(detail::make_triangle_rule(degree)); break;
      case EntityKind::Tet: slot = std::make_unique<QuadratureRule>(detail::make_tet_rule(degree)); break;
    }
  }
  return *slot;
}

}  // namespace ncdr
