#include "ncdr/errors.hpp"
#include "ncdr/manufactured.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace ncdr;

TEST(Errors, ZeroApproximationGivesExactNorm) {
  const FeSpaces s(build_unit_cube_mesh(2));
  const auto c = layer_case_fields();
  const FeFunction zero{Space::Grad, Vector::Zero(s.dim(Space::Grad))};
  // ||sin(pi x) sin(pi y) sin(pi z)||_0 = (1/2)^{3/2}
  EXPECT_NEAR(compute_error(ErrorKind::L2Scalar, s, zero, c.u, 14), std::pow(0.5, 1.5), 1e-6);
}

TEST(Errors, ExactPiecewiseConstantHasNoError) {
  const FeSpaces s(build_unit_cube_mesh(2));
  AnalyticField q;
  q.tag = "const";
  q.scalar_value = [](const Vec3&) { return 2.5; };
  const FeFunction qh{Space::Q, Vector::Constant(s.dim(Space::Q), 2.5)};
  EXPECT_LT(compute_error(ErrorKind::L2Scalar, s, qh, q), 1e-14);
}

TEST(Errors, DegreeEightQuadratureIsConverged) {
  const FeSpaces s(build_unit_cube_mesh(4));
  const auto c = smooth_case_fields(1.0);
  const FeFunction zero{Space::Phi, Vector::Zero(s.dim(Space::Phi))};
  const double a = compute_error(ErrorKind::BrokenH1SemiVector, s, zero, c.phi, 8);
  const double b = compute_error(ErrorKind::BrokenH1SemiVector, s, zero, c.phi, 16);
  EXPECT_LT(std::abs(a - b) / b, 1e-4);
}

TEST(Errors, ArityMismatchThrows) {
  const FeSpaces s(build_unit_cube_mesh(1));
  const auto c = layer_case_fields();
  const FeFunction phi{Space::Phi, Vector::Zero(s.dim(Space::Phi))};
  EXPECT_THROW(compute_error(ErrorKind::L2Scalar, s, phi, c.u), IntegrityError);
  EXPECT_THROW(compute_error(ErrorKind::L2Vector, s, phi, c.u), IntegrityError);
  const FeFunction bad{Space::Phi, Vector::Zero(3)};
  EXPECT_THROW(compute_error(ErrorKind::L2Vector, s, bad, c.phi), IntegrityError);
}

TEST(Errors, EnergyCombinesBothParts) {
  const FeSpaces s(build_unit_cube_mesh(2));
  const auto c = layer_case_fields();
  const FeFunction zero{Space::Phi, Vector::Zero(s.dim(Space::Phi))};
  const double h1 = compute_error(ErrorKind::BrokenH1SemiVector, s, zero, c.phi);
  const double l2 = compute_error(ErrorKind::L2Vector, s, zero, c.phi);
  EXPECT_NEAR(energy_error(s, zero, c.phi, 0.5, false), std::sqrt(0.25 * h1 * h1 + l2 * l2), 1e-14);
}

TEST(Rates, QuarteringGivesTwo) {
  const auto r = convergence_rates({0.5, 0.25}, {4e-2, 1e-2});
  ASSERT_FALSE(r[0].has_value());
  EXPECT_NEAR(*r[1], 2.0, 1e-14);
}

TEST(Rates, NonHalvingThrows) {
  EXPECT_THROW(convergence_rates({0.5, 0.2}, {1.0, 0.5}), InvalidArgument);
  EXPECT_THROW(convergence_rates({0.5}, {1.0}), InvalidArgument);
  EXPECT_THROW(convergence_rates({0.5, 0.25}, {1.0}), InvalidArgument);
}

TEST(Rates, FillPerGroup) {
  std::vector<ConvergenceRow> rows(3);
  rows[0] = {"smooth", "interp", 1.0, 4, 0.25};
  rows[1] = {"smooth", "interp", 1.0, 8, 0.125};
  rows[2] = {"smooth", "interp", 0.1, 4, 0.25};
  rows[0].err_phi = rows[0].err_u_l2 = rows[0].err_u_h1 = 1.0;
  rows[1].err_phi = rows[1].err_u_l2 = rows[1].err_u_h1 = 0.5;
  rows[2].err_phi = 1.0;
  fill_rates(rows);
  EXPECT_FALSE(rows[0].rate_phi);
  EXPECT_NEAR(*rows[1].rate_phi, 1.0, 1e-14);
  EXPECT_FALSE(rows[2].rate_phi);
}

TEST(Output, CsvHeaderAndEmptyCells) {
  std::vector<ConvergenceRow> rows(1);
  rows[0] = {"layer", "nointerp", 1e-6, 4, 0.25, 10, 20, 0.1, 0.2, 0.3};
  std::ostringstream os;
  write_csv(os, rows);
  std::istringstream in(os.str());
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  EXPECT_EQ(header, kCsvHeader);
  EXPECT_EQ(std::count(line.begin(), line.end(), ','), std::count(header.begin(), header.end(), ','));
  EXPECT_NE(line.find("layer,nointerp,"), std::string::npos);
  EXPECT_NE(line.find(",,"), std::string::npos);
}

TEST(Output, MarkdownHasTableRule) {
  std::vector<ConvergenceRow> rows(1);
  rows[0] = {"smooth", "interp", 1.0, 4, 0.25};
  std::ostringstream os;
  write_markdown(os, rows);
  EXPECT_NE(os.str().find("|--"), std::string::npos);
  EXPECT_NE(os.str().find("smooth"), std::string::npos);
}
