#include "ncdr/manufactured.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace ncdr;

TEST(Manufactured, SmoothDerivativesMatchFiniteDifferences) {
  const auto c = smooth_case_fields(0.1);
  for (FdQuantity q : {FdQuantity::Gradient, FdQuantity::Hessian, FdQuantity::Laplacian,
                       FdQuantity::Bilaplacian}) {
    const FdReport r = fd_validate(c.u, q);
    EXPECT_TRUE(r.passed) << r.quantity << " " << r.max_relative_deviation;
  }
  EXPECT_TRUE(fd_validate(c.phi, FdQuantity::Jacobian).passed);
  EXPECT_TRUE(fd_validate_source(c.u, c.f, 0.1).passed);
}

TEST(Manufactured, LayerSource) {
  const auto c = layer_case_fields();
  const double pi2 = std::numbers::pi * std::numbers::pi;
  for (const Vec3& x : {Vec3(0.3, 0.4, 0.5), Vec3(0.1, 0.9, 0.25)})
    EXPECT_NEAR(c.f.value(x), 3.0 * pi2 * c.u.value(x), 1e-12);
  EXPECT_TRUE(fd_validate(c.u, FdQuantity::Gradient).passed);
  EXPECT_TRUE(fd_validate(c.u, FdQuantity::Hessian).passed);
}

TEST(Manufactured, SmoothVanishesWithGradientOnBoundary) {
  const auto c = smooth_case_fields(1.0);
  const Vec3 x(0.0, 0.37, 0.61);
  EXPECT_NEAR(c.u.value(x), 0.0, 1e-30);
  EXPECT_LT(c.u.gradient(x).norm(), 1e-15);
}

TEST(Manufactured, DetectsWrongDerivative) {
  auto c = smooth_case_fields(1.0);
  c.u.laplacian_value = [](const Vec3&) { return 1.0; };
  EXPECT_FALSE(fd_validate(c.u, FdQuantity::Bilaplacian).passed);
}

TEST(Manufactured, NegativeEpsilonThrows) {
  EXPECT_THROW(smooth_case_fields(-1.0), InvalidArgument);
}
