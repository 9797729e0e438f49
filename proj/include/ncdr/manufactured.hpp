#pragma once

#include "ncdr/core.hpp"
#include "ncdr/field.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace ncdr {

/// Exact data for one experiment: u, phi = grad u and the source f.
struct ManufacturedCase {
  std::string name;
  AnalyticField u;
  AnalyticField phi;
  AnalyticField f;
  double epsilon = 0.0;
};

namespace detail {

/// One-dimensional factor s(t) with derivatives d[0..4].
using Factor1D = std::array<double, 5> (*)(double);

inline std::array<double, 5> sin_squared(double t) {
  constexpr double pi = std::numbers::pi;
  const double s2 = std::sin(2 * pi * t), c2 = std::cos(2 * pi * t), s = std::sin(pi * t);
  return {s * s, pi * s2, 2 * pi * pi * c2, -4 * pi * pi * pi * s2, -8 * pi * pi * pi * pi * c2};
}

inline std::array<double, 5> plain_sin(double t) {
  constexpr double pi = std::numbers::pi;
  const double s = std::sin(pi * t), c = std::cos(pi * t);
  const double p2 = pi * pi;
  return {s, pi * c, -p2 * s, -p2 * pi * c, p2 * p2 * s};
}

/// u(x) = s(x) s(y) s(z) and its derivatives.
inline AnalyticField tensor_product(std::string tag, Factor1D s) {
  AnalyticField u;
  u.tag = std::move(tag);
  u.arity = Arity::Scalar;
  auto eval = [s](const Vec3& x) {
    return std::array<std::array<double, 5>, 3>{s(x[0]), s(x[1]), s(x[2])};
  };
  u.scalar_value = [eval](const Vec3& x) {
    const auto d = eval(x);
    return d[0][0] * d[1][0] * d[2][0];
  };
  u.gradient_value = [eval](const Vec3& x) {
    const auto d = eval(x);
    return Vec3(d[0][1] * d[1][0] * d[2][0], d[0][0] * d[1][1] * d[2][0],
                d[0][0] * d[1][0] * d[2][1]);
  };
  u.hessian_value = [eval](const Vec3& x) {
    const auto d = eval(x);
    Mat3 H;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double v = 1.0;
        for (int k = 0; k < 3; ++k) v *= d[k][(k == i) + (k == j)];
        H(i, j) = v;
      }
    return H;
  };
  u.laplacian_value = [eval](const Vec3& x) {
    const auto d = eval(x);
    return d[0][2] * d[1][0] * d[2][0] + d[0][0] * d[1][2] * d[2][0] + d[0][0] * d[1][0] * d[2][2];
  };
  u.bilaplacian_value = [eval](const Vec3& x) {
    const auto d = eval(x);
    const double a = d[0][4] * d[1][0] * d[2][0] + d[0][0] * d[1][4] * d[2][0] +
                     d[0][0] * d[1][0] * d[2][4];
    const double b = d[0][2] * d[1][2] * d[2][0] + d[0][2] * d[1][0] * d[2][2] +
                     d[0][0] * d[1][2] * d[2][2];
    return a + 2 * b;
  };
  return u;
}

inline AnalyticField source_field(const AnalyticField& u, double epsilon, std::string tag) {
  AnalyticField f;
  f.tag = std::move(tag);
  f.arity = Arity::Scalar;
  const double e2 = epsilon * epsilon;
  f.scalar_value = [u, e2](const Vec3& x) { return e2 * u.bilaplacian(x) - u.laplacian(x); };
  return f;
}

}  // namespace detail

/// u = sin^2(pi x) sin^2(pi y) sin^2(pi z), f = eps^2 lap^2 u - lap u.
inline ManufacturedCase smooth_case_fields(double epsilon) {
  if (!(epsilon >= 0.0)) throw InvalidArgument("smooth_case_fields: epsilon must be >= 0");
  ManufacturedCase c;
  c.name = "smooth";
  c.epsilon = epsilon;
  c.u = detail::tensor_product("smooth.u", &detail::sin_squared);
  c.phi = gradient_field(c.u);
  c.phi.tag = "smooth.phi";
  c.f = detail::source_field(c.u, epsilon, "smooth.f");
  return c;
}

/// u0 = sin(pi x) sin(pi y) sin(pi z), f = -lap u0 = 3 pi^2 u0. The
/// reference solution is u0 for every epsilon.
inline ManufacturedCase layer_case_fields() {
  ManufacturedCase c;
  c.name = "layer";
  c.u = detail::tensor_product("layer.u0", &detail::plain_sin);
  c.phi = gradient_field(c.u);
  c.phi.tag = "layer.phi0";
  c.f = detail::source_field(c.u, 0.0, "layer.f");
  return c;
}

enum class FdQuantity { Gradient, Hessian, Laplacian, Bilaplacian, Jacobian };

inline const char* fd_quantity_name(FdQuantity q) {
  switch (q) {
    case FdQuantity::Gradient: return "gradient";
    case FdQuantity::Hessian: return "hessian";
    case FdQuantity::Laplacian: return "laplacian";
    case FdQuantity::Bilaplacian: return "bilaplacian";
    case FdQuantity::Jacobian: return "jacobian";
  }
  return "?";
}

struct FdOptions {
  int samples = 50;
  std::uint64_t seed = 20240607;
  double step = 1e-3;
  double tolerance = 1e-5;
};

struct FdReport {
  std::string field;
  std::string quantity;
  int samples = 0;
  /// max |analytic - fd| over the sample divided by max |fd| over the sample
  double max_relative_deviation = 0.0;
  bool passed = false;
};

namespace detail {

/// Richardson-extrapolated central differences along axis k.
template <class G>
auto fd_first(const G& g, const Vec3& x, int k, double h) {
  auto central = [&](double s) {
    Vec3 a = x, b = x;
    a[k] += s;
    b[k] -= s;
    return ((g(a) - g(b)) / (2 * s)).eval();
  };
  return ((4.0 * central(h / 2) - central(h)) / 3.0).eval();
}

template <class G>
double fd_laplacian(const G& g, const Vec3& x, double h) {
  auto second = [&](double s) {
    double acc = 0.0;
    const double g0 = g(x);
    for (int k = 0; k < 3; ++k) {
      Vec3 a = x, b = x;
      a[k] += s;
      b[k] -= s;
      acc += (g(a) - 2 * g0 + g(b)) / (s * s);
    }
    return acc;
  };
  return (4.0 * second(h / 2) - second(h)) / 3.0;
}

inline std::vector<Vec3> interior_samples(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.05, 0.95);
  std::vector<Vec3> pts(static_cast<std::size_t>(count));
  for (auto& p : pts) p = Vec3(dist(rng), dist(rng), dist(rng));
  return pts;
}

inline FdReport fd_compare(std::string field, std::string quantity, const std::vector<Vector>& exact,
                           const std::vector<Vector>& approx, double tol) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    num = std::max(num, (exact[i] - approx[i]).cwiseAbs().maxCoeff());
    den = std::max(den, approx[i].cwiseAbs().maxCoeff());
  }
  FdReport r;
  r.field = std::move(field);
  r.quantity = std::move(quantity);
  r.samples = static_cast<int>(exact.size());
  r.max_relative_deviation = den > 0.0 ? num / den : num;
  r.passed = r.max_relative_deviation <= tol;
  return r;
}

}  // namespace detail

/// Checks a provided derivative against finite differences of the next lower
/// one (gradient from value, hessian from gradient, bilaplacian from
/// laplacian, jacobian from vector value).
inline FdReport fd_validate(const AnalyticField& field, FdQuantity q, const FdOptions& opt = {}) {
  const auto pts = detail::interior_samples(opt.samples, opt.seed);
  std::vector<Vector> exact, approx;
  const double h = opt.step;
  const double h2 = std::max(h, 1e-2);  // second differences need a larger step
  for (const Vec3& x : pts) {
    Vector e, a;
    switch (q) {
      case FdQuantity::Gradient: {
        e = field.gradient(x);
        a = Vector(3);
        auto g = [&](const Vec3& y) { return Eigen::Matrix<double, 1, 1>(field.value(y)); };
        for (int k = 0; k < 3; ++k) a[k] = detail::fd_first(g, x, k, h)[0];
        break;
      }
      case FdQuantity::Hessian:
      case FdQuantity::Jacobian: {
        const Mat3 J = q == FdQuantity::Hessian ? field.hessian(x) : field.jacobian(x);
        e = Eigen::Map<const Vector>(J.data(), 9);
        Mat3 F;
        auto g = [&](const Vec3& y) {
          return q == FdQuantity::Hessian ? field.gradient(y) : field.vector(y);
        };
        for (int k = 0; k < 3; ++k) F.col(k) = detail::fd_first(g, x, k, h);
        a = Eigen::Map<const Vector>(F.data(), 9);
        break;
      }
      case FdQuantity::Laplacian:
        e = Vector::Constant(1, field.laplacian(x));
        a = Vector::Constant(
            1, detail::fd_laplacian([&](const Vec3& y) { return field.value(y); }, x, h2));
        break;
      case FdQuantity::Bilaplacian:
        e = Vector::Constant(1, field.bilaplacian(x));
        a = Vector::Constant(
            1, detail::fd_laplacian([&](const Vec3& y) { return field.laplacian(y); }, x, h2));
        break;
    }
    exact.push_back(std::move(e));
    approx.push_back(std::move(a));
  }
  return detail::fd_compare(field.tag, fd_quantity_name(q), exact, approx, opt.tolerance);
}

/// Checks f = eps^2 lap^2 u - lap u using two nested finite-difference
/// Laplacians of the value of u only.
inline FdReport fd_validate_source(const AnalyticField& u, const AnalyticField& f, double epsilon,
                                   const FdOptions& opt = {}) {
  const auto pts = detail::interior_samples(opt.samples, opt.seed);
  const double h = std::max(opt.step, 1e-2);
  auto lap = [&](const Vec3& y) {
    return detail::fd_laplacian([&](const Vec3& z) { return u.value(z); }, y, h);
  };
  std::vector<Vector> exact, approx;
  for (const Vec3& x : pts) {
    exact.push_back(Vector::Constant(1, f.value(x)));
    const double bil = epsilon > 0.0 ? detail::fd_laplacian(lap, x, 2 * h) : 0.0;
    approx.push_back(Vector::Constant(1, epsilon * epsilon * bil - lap(x)));
  }
  return detail::fd_compare(f.tag, "source", exact, approx, opt.tolerance);
}

}  // namespace ncdr
