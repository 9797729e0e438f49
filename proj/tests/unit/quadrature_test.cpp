#include "ncdr/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ncdr;

namespace {

// Mean of l0^a l1^b ... over the reference simplex of dimension d.
double simplex_mean(const std::vector<int>& a) {
  const int d = static_cast<int>(a.size()) - 1;
  double lnum = std::lgamma(d + 1.0);
  int total = 0;
  for (int e : a) {
    lnum += std::lgamma(e + 1.0);
    total += e;
  }
  return std::exp(lnum - std::lgamma(total + d + 1.0));
}

double apply(const QuadratureRule& r, const std::vector<int>& a) {
  double s = 0.0;
  for (Eigen::Index q = 0; q < r.size(); ++q) {
    double v = 1.0;
    for (std::size_t c = 0; c < a.size(); ++c) v *= std::pow(r.points(q, static_cast<Eigen::Index>(c)), a[c]);
    s += r.weights[q] * v;
  }
  return s;
}

}  // namespace

TEST(Quadrature, WeightsArePositiveAndNormalized) {
  for (EntityKind k : {EntityKind::Edge, EntityKind::Triangle, EntityKind::Tet})
    for (int deg : {0, 1, 4, 8, 10}) {
      const auto& r = get_rule(k, deg);
      EXPECT_NEAR(r.weights.sum(), 1.0, 1e-14);
      EXPECT_GT(r.weights.minCoeff(), 0.0);
      EXPECT_GE(r.degree, deg);
      EXPECT_LT((r.points.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-14);
    }
}

TEST(Quadrature, TetMonomialExactness) {
  for (int deg = 0; deg <= 10; ++deg) {
    const auto& r = get_rule(EntityKind::Tet, deg);
    for (int a = 0; a <= deg; ++a)
      for (int b = 0; a + b <= deg; ++b)
        for (int c = 0; a + b + c <= deg; ++c) {
          const std::vector<int> e{a, b, c, deg - a - b - c};
          EXPECT_NEAR(apply(r, e), simplex_mean(e), 1e-13 * simplex_mean(e)) << deg;
        }
  }
}

TEST(Quadrature, TriangleMonomialExactness) {
  for (int deg = 0; deg <= 10; ++deg) {
    const auto& r = get_rule(EntityKind::Triangle, deg);
    for (int a = 0; a <= deg; ++a)
      for (int b = 0; a + b <= deg; ++b) {
        const std::vector<int> e{a, b, deg - a - b};
        EXPECT_NEAR(apply(r, e), simplex_mean(e), 1e-13 * simplex_mean(e));
      }
  }
}

TEST(Quadrature, CachedReference) {
  EXPECT_EQ(&get_rule(EntityKind::Tet, 8), &get_rule(EntityKind::Tet, 8));
}

TEST(Quadrature, UnsupportedDegree) {
  EXPECT_THROW(get_rule(EntityKind::Tet, kMaxTetDegree + 1), CapabilityError);
  EXPECT_THROW(get_rule(EntityKind::Triangle, kMaxTriangleDegree + 1), CapabilityError);
  EXPECT_THROW(get_rule(EntityKind::Edge, -1), CapabilityError);
}
