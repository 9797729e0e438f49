#include "ncdr/mesh.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ncdr;

TEST(Mesh, SingleCubeCounts) {
  const auto m = build_unit_cube_mesh(1);
  EXPECT_EQ(m.num_vertices(), 8);
  EXPECT_EQ(m.num_tets(), 6);
  EXPECT_EQ(m.num_edges(), 19);
  EXPECT_EQ(m.num_faces(), 18);
  EXPECT_EQ(m.interior_vertices, 0);
  EXPECT_EQ(m.interior_edges, 1);
  EXPECT_EQ(m.interior_faces, 6);
}

TEST(Mesh, CountsAndEuler) {
  for (int n : {1, 2, 3, 4}) {
    const auto m = build_unit_cube_mesh(n);
    EXPECT_EQ(m.num_vertices(), (n + 1) * (n + 1) * (n + 1));
    EXPECT_EQ(m.num_tets(), 6 * n * n * n);
    EXPECT_EQ(m.num_vertices() - m.num_edges() + m.num_faces() - m.num_tets(), 1);
    EXPECT_EQ(m.interior_vertices, (n - 1) * (n - 1) * (n - 1));
    EXPECT_EQ(m.num_faces() - m.interior_faces, 12 * n * n);
    EXPECT_NEAR(m.h, std::sqrt(3.0) / n, 1e-14);
  }
}

TEST(Mesh, FaceAdjacency) {
  const auto m = build_unit_cube_mesh(3);
  for (Id f = 0; f < m.num_faces(); ++f) {
    const bool interior = m.face_tets[f][1] >= 0;
    EXPECT_EQ(interior, !m.face_on_boundary[f]);
  }
}

TEST(Mesh, OrientationConventions) {
  const auto m = build_unit_cube_mesh(2);
  for (const auto& e : m.edges) EXPECT_LT(e[0], e[1]);
  for (const auto& f : m.faces) EXPECT_TRUE(f[0] < f[1] && f[1] < f[2]);
  for (Id t = 0; t < m.num_tets(); ++t) {
    const TetGeometry g = tet_geometry(m, t);
    EXPECT_GT(g.volume, 0.0);
    for (int k = 0; k < 6; ++k) {
      const auto [a, b] = g.edge_ends[k];
      const Vec3 d = g.vertices[b] - g.vertices[a];
      EXPECT_NEAR(d.normalized().dot(g.edge_tangent[k]), 1.0, 1e-14);
    }
    for (int k = 0; k < 4; ++k) {
      const Vec3 out = g.outward_normal(k);
      const Vec3 to_opposite = g.vertices[k] - g.vertices[kFaceVertices[k][0]];
      EXPECT_LT(out.dot(to_opposite), 0.0);
    }
  }
}

TEST(Mesh, BarycentricGradients) {
  const auto m = build_unit_cube_mesh(2);
  const TetGeometry g = tet_geometry(m, 5);
  EXPECT_LT((g.grad_bary[0] + g.grad_bary[1] + g.grad_bary[2] + g.grad_bary[3]).norm(), 1e-13);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      // lambda_i(v_j) - lambda_i(v_0) = grad lambda_i . (v_j - v_0)
      const double d = g.grad_bary[i].dot(g.vertices[j] - g.vertices[0]);
      EXPECT_NEAR(d, (i == j ? 1.0 : 0.0) - (i == 0 ? 1.0 : 0.0), 1e-13);
    }
}

TEST(Mesh, Errors) {
  EXPECT_THROW(build_unit_cube_mesh(0), InvalidArgument);
  const auto m = build_unit_cube_mesh(1);
  EXPECT_THROW(tet_geometry(m, 6), InvalidArgument);
  EXPECT_THROW(tet_geometry({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(0, 1, 0)}),
               DegenerateGeometry);
}
