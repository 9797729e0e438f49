#include "ncdr/assembly.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

using namespace ncdr;

namespace {

double asym(const SparseMatrix& m) {
  const SparseMatrix d = m - SparseMatrix(m.transpose());
  return d.norm() / std::max(1.0, m.norm());
}

}  // namespace

TEST(Assembly, SymmetricForms) {
  const FeSpaces s(build_unit_cube_mesh(2));
  for (FormKind k : {FormKind::PoissonP2, FormKind::PhiStiffness, FormKind::IndMass, FormKind::PhiMass,
                     FormKind::RtMass, FormKind::QMass, FormKind::WHessian, FormKind::WIndGradient})
    EXPECT_LT(asym(assemble_bilinear(k, s).matrix), 1e-14);
}

TEST(Assembly, PoissonIsPositiveDefinite) {
  const FeSpaces s(build_unit_cube_mesh(2));
  const Matrix K(assemble_bilinear(FormKind::PoissonP2, s).matrix);
  Eigen::SelfAdjointEigenSolver<Matrix> es(K);
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}

TEST(Assembly, AFormIsEpsilonCombination) {
  const FeSpaces s(build_unit_cube_mesh(1));
  const double eps = 0.3;
  const SparseMatrix A = assemble_bilinear(FormKind::AInterp, s, eps).matrix;
  const SparseMatrix K = assemble_bilinear(FormKind::PhiStiffness, s).matrix;
  const SparseMatrix M = assemble_bilinear(FormKind::IndMass, s).matrix;
  const SparseMatrix ref = (eps * eps) * K + M;
  EXPECT_LT(SparseMatrix(A - ref).norm(), 1e-14);
  EXPECT_THROW(assemble_bilinear(FormKind::AInterp, s, -1.0), InvalidArgument);
}

TEST(Assembly, WFormsAreGradientPullbacks) {
  // (grad w, grad v) on W equals G^T (phi, psi) G with the gradient operator G.
  const FeSpaces s(build_unit_cube_mesh(2));
  const SparseMatrix G = diff_operator_matrix(s, OperatorKind::Grad).matrix;
  const SparseMatrix M = assemble_bilinear(FormKind::PhiMass, s).matrix;
  const SparseMatrix MG = M * G;
  const SparseMatrix ref = SparseMatrix(G.transpose()) * MG;
  const SparseMatrix W = assemble_bilinear(FormKind::WGradient, s).matrix;
  EXPECT_LT(SparseMatrix(W - ref).norm() / ref.norm(), 1e-12);
}

TEST(Assembly, ConstantLoadMatchesEdgeBubbleIntegral) {
  // The P2 basis dual to the edge integral on e = (a, b) is 6 l_a l_b / |e|,
  // whose integral over a tet containing e is 6 |T| / (20 |e|).
  const FeSpaces s(build_unit_cube_mesh(2));
  AnalyticField one;
  one.tag = "1";
  one.scalar_value = [](const Vec3&) { return 1.0; };
  const Vector b = assemble_load(LoadKind::FVsP2, s, one, 2);
  const DofMap& map = s[Space::Grad];
  Vector ref = Vector::Zero(b.size());
  for (Id t = 0; t < s.mesh().num_tets(); ++t) {
    const TetGeometry g = tet_geometry(s.mesh(), t);
    for (int e = 0; e < 6; ++e) {
      const Id d = map.local(t)[4 + e];
      if (d >= 0) ref[d] += 6.0 * g.volume / (20.0 * g.edge_length[e]);
    }
  }
  for (Id e = 0; e < s.mesh().num_edges(); ++e) {
    const Id d = map.edge_first[e];
    if (d >= 0) EXPECT_NEAR(b[d], ref[d], 1e-14);
  }
}

TEST(Assembly, LinearLoadIsExactAtDegreeThree) {
  const FeSpaces s(build_unit_cube_mesh(2));
  AnalyticField f;
  f.tag = "linear";
  f.scalar_value = [](const Vec3& x) { return 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[2]; };
  const Vector a = assemble_load(LoadKind::FVsP2, s, f, 3);
  const Vector b = assemble_load(LoadKind::FVsP2, s, f, 12);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Assembly, LoadQuadratureConverges) {
  const FeSpaces s(build_unit_cube_mesh(2));
  AnalyticField f;
  f.tag = "sin";
  f.scalar_value = [](const Vec3& x) { return std::sin(std::numbers::pi * x[0]) * std::cos(x[1]); };
  const Vector a = assemble_load(LoadKind::FVsP2, s, f, 10);
  const Vector b = assemble_load(LoadKind::FVsP2, s, f, 14);
  EXPECT_LT((a - b).norm() / b.norm(), 1e-9);
}

TEST(Assembly, LoadRejectsWrongSpace) {
  const FeSpaces s(build_unit_cube_mesh(1));
  FeFunction w{Space::Q, Vector::Zero(s.dim(Space::Q))};
  EXPECT_THROW(assemble_load(LoadKind::GradwVsIndphi, s, w), IntegrityError);
}

TEST(Assembly, SerialAndThreadedAgree) {
  const FeSpaces s(build_unit_cube_mesh(3));
  Execution par;
  par.serial = false;
  const SparseMatrix a = assemble_bilinear(FormKind::PhiStiffness, s, 0.0, Execution{}).matrix;
  const SparseMatrix b = assemble_bilinear(FormKind::PhiStiffness, s, 0.0, par).matrix;
  EXPECT_EQ(SparseMatrix(a - b).norm(), 0.0);
}

TEST(Assembly, MatrixMarketExport) {
  const FeSpaces s(build_unit_cube_mesh(1));
  const SparseMatrix m = assemble_bilinear(FormKind::QMass, s).matrix;
  const std::string path = ::testing::TempDir() + "qmass.mtx";
  write_matrix_market(m, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "%%MatrixMarket matrix coordinate real general");
  Eigen::Index r, c, nnz;
  in >> r >> c >> nnz;
  EXPECT_EQ(r, 6);
  EXPECT_EQ(nnz, 6);
  std::remove(path.c_str());
}
