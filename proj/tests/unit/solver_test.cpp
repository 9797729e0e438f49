#include "ncdr/solver.hpp"
#include "ncdr/manufactured.hpp"

#include <gtest/gtest.h>

using namespace ncdr;

namespace {

SparseMatrix laplace_1d(Id n) {
  std::vector<Triplet> t;
  for (Id i = 0; i < n; ++i) {
    t.emplace_back(i, i, 2.0);
    if (i + 1 < n) {
      t.emplace_back(i, i + 1, -1.0);
      t.emplace_back(i + 1, i, -1.0);
    }
  }
  SparseMatrix K(n, n);
  K.setFromTriplets(t.begin(), t.end());
  return K;
}

}  // namespace

TEST(Spd, ConjugateGradientMatchesDirect) {
  const SparseMatrix K = laplace_1d(200);
  const Vector b = Vector::LinSpaced(200, -1.0, 1.0);
  SolverConfig cg, direct;
  direct.spd = SpdSolver::Direct;
  SpdStats st;
  const Vector x = solve_spd(K, b, cg, &st);
  const Vector y = solve_spd(K, b, direct);
  EXPECT_LT((x - y).norm() / y.norm(), 1e-10);
  EXPECT_LE(st.relative_residual, cg.spd_tolerance);
  EXPECT_GT(st.iterations, 0);
}

TEST(Spd, IterationCapRaisesSolverFailure) {
  SolverConfig cfg;
  cfg.spd_max_iterations = 3;
  EXPECT_THROW(solve_spd(laplace_1d(200), Vector::Ones(200), cfg), SolverFailure);
}

TEST(Spd, DimensionMismatchThrows) {
  EXPECT_THROW(solve_spd(laplace_1d(5), Vector::Ones(4), SolverConfig{}), InvalidArgument);
}

TEST(Spd, IndefiniteMatrixIsRejected) {
  SparseMatrix K = laplace_1d(10);
  K.coeffRef(3, 3) = -2.0;
  EXPECT_THROW(solve_spd(K, Vector::Ones(10), SolverConfig{}), SolverFailure);
}

TEST(SolverConfig, Validation) {
  SolverConfig c;
  c.epsilon = -1.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.spd_tolerance = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.spd_max_iterations = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Saddle, BlockDimensionsChecked) {
  SaddleBlocks b;
  b.A = laplace_1d(3);
  b.C = SparseMatrix(2, 2);
  b.D = SparseMatrix(1, 2);
  b.m = Vector::Ones(1);
  EXPECT_THROW(saddle_matrix(b), InvalidArgument);
}

TEST(Decoupled, DirectAndReducedBackendsAgree) {
  auto spaces = std::make_shared<const FeSpaces>(build_unit_cube_mesh(3));
  const auto c = smooth_case_fields(0.1);
  for (Method m : {Method::Interp, Method::NoInterp}) {
    SolverConfig a, b;
    a.saddle_backend = SaddleBackend::Direct;
    b.saddle_backend = SaddleBackend::Reduced;
    DecoupledSolver sa(spaces, m, a), sb(spaces, m, b);
    EXPECT_EQ(sa.backend(), SaddleBackend::Direct);
    EXPECT_EQ(sb.backend(), SaddleBackend::Reduced);
    const auto x = sa.solve(c.f, 0.1), y = sb.solve(c.f, 0.1);
    EXPECT_LT((x.phi.coeffs - y.phi.coeffs).norm() / x.phi.coeffs.norm(), 1e-8) << method_name(m);
    EXPECT_LT((x.u.coeffs - y.u.coeffs).norm() / x.u.coeffs.norm(), 1e-8) << method_name(m);
  }
}

TEST(Decoupled, AutoPicksDirectOnSmallMeshes) {
  auto spaces = std::make_shared<const FeSpaces>(build_unit_cube_mesh(2));
  DecoupledSolver s(spaces, Method::Interp);
  EXPECT_EQ(s.backend(), SaddleBackend::Direct);
}

TEST(Decoupled, IdentitiesHold) {
  const auto c = smooth_case_fields(1e-4);
  SolverConfig cfg;
  cfg.epsilon = 1e-4;
  const auto sol = decoupled_solve(c.f, build_unit_cube_mesh(2), cfg);
  EXPECT_LT(sol.lambda_l2, 1e-8);
  EXPECT_LT(sol.div_p_l2, 1e-8);
  EXPECT_LT(sol.curl_phi_l2, 1e-8);
  EXPECT_LT(sol.ind_minus_grad, 1e-8);
  EXPECT_EQ(sol.stages.size() >= 3, true);
}

TEST(Decoupled, SolveRejectsNegativeEpsilon) {
  auto spaces = std::make_shared<const FeSpaces>(build_unit_cube_mesh(1));
  DecoupledSolver s(spaces, Method::Interp);
  EXPECT_THROW(s.solve(layer_case_fields().f, -1.0), InvalidArgument);
}
