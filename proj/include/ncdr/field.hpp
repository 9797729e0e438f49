#pragma once

#include "ncdr/core.hpp"

#include <functional>
#include <string>

namespace ncdr {

enum class Arity { Scalar, Vector };

/// Closed-form field with whichever derivatives its author provides.
/// Missing evaluators raise CapabilityError when requested.
struct AnalyticField {
  std::string tag;
  Arity arity = Arity::Scalar;

  std::function<double(const Vec3&)> scalar_value;
  std::function<Vec3(const Vec3&)> gradient_value;
  std::function<Mat3(const Vec3&)> hessian_value;
  std::function<double(const Vec3&)> laplacian_value;
  std::function<double(const Vec3&)> bilaplacian_value;

  std::function<Vec3(const Vec3&)> vector_value;
  /// jacobian(i, k) = d v_i / d x_k
  std::function<Mat3(const Vec3&)> jacobian_value;

  double value(const Vec3& x) const { return require(scalar_value, "value")(x); }
  Vec3 vector(const Vec3& x) const { return require(vector_value, "vector value")(x); }
  Vec3 gradient(const Vec3& x) const { return require(gradient_value, "gradient")(x); }
  Mat3 hessian(const Vec3& x) const { return require(hessian_value, "hessian")(x); }
  double laplacian(const Vec3& x) const { return require(laplacian_value, "laplacian")(x); }
  double bilaplacian(const Vec3& x) const { return require(bilaplacian_value, "bilaplacian")(x); }
  Mat3 jacobian(const Vec3& x) const { return require(jacobian_value, "jacobian")(x); }

  Vec3 curl(const Vec3& x) const {
    const Mat3 J = jacobian(x);
    return {J(2, 1) - J(1, 2), J(0, 2) - J(2, 0), J(1, 0) - J(0, 1)};
  }

  bool has_gradient() const { return static_cast<bool>(gradient_value); }
  bool has_jacobian() const { return static_cast<bool>(jacobian_value); }

private:
  template <class F>
  const F& require(const F& f, const char* what) const {
    if (!f) throw CapabilityError("field '" + tag + "' does not provide its " + what);
    return f;
  }
};

/// grad u as a vector field (value = gradient, jacobian = hessian).
inline AnalyticField gradient_field(const AnalyticField& u) {
  AnalyticField g;
  g.tag = "grad(" + u.tag + ")";
  g.arity = Arity::Vector;
  g.vector_value = u.gradient_value;
  g.jacobian_value = u.hessian_value;
  return g;
}

}  // namespace ncdr
