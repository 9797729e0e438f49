#pragma once

#include "ncdr/assembly.hpp"
#include "ncdr/core.hpp"
#include "ncdr/errors.hpp"
#include "ncdr/interp_ops.hpp"
#include "ncdr/solver.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace ncdr {

struct CheckResult {
  std::string name;
  int level = 0;  // mesh subdivisions, 0 when not mesh based
  bool passed = false;
  bool skipped = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
  double seconds = 0.0;
};

struct CertificationReport {
  std::vector<CheckResult> checks;

  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.skipped && !c.passed) return false;
    return true;
  }

  void append(const CertificationReport& other) {
    checks.insert(checks.end(), other.checks.begin(), other.checks.end());
  }

  /// Timings are left out when `with_timing` is false, so serial runs
  /// produce identical output.
  nlohmann::json to_json(bool with_timing = false) const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& c : checks) {
      nlohmann::json e = {{"name", c.name},         {"level", c.level},
                          {"status", c.skipped ? "skipped" : (c.passed ? "pass" : "fail")},
                          {"measured", c.measured}, {"tolerance", c.tolerance},
                          {"detail", c.detail}};
      if (with_timing) e["seconds"] = c.seconds;
      j.push_back(std::move(e));
    }
    return {{"all_passed", all_passed()}, {"checks", std::move(j)}};
  }

  void write_text(std::ostream& os) const {
    for (const auto& c : checks) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%-8s n=%-2d measured=%.3e tol=%.1e  ",
                    c.skipped ? "SKIP" : (c.passed ? "PASS" : "FAIL"), c.level, c.measured,
                    c.tolerance);
      os << buf << c.name;
      if (!c.detail.empty()) os << "  (" << c.detail << ')';
      os << '\n';
    }
  }
};

struct VerifyOptions {
  double zero_tolerance = 1e-12;     // composition entries
  double rank_threshold = 1e-8;      // relative singular value cut
  double commuting_tolerance = 1e-10;
  double continuity_tolerance = 1e-10;
  double identity_tolerance = 1e-8;
  double unisolvence_max_condition = 1e10;
  int random_tets = 100;
  int continuity_samples = 20;
  Id dense_limit = 2000;
  /// Throw instead of reporting the rank checks as skipped above dense_limit.
  bool strict_rank_limit = true;
  std::uint64_t seed = 20240607;
};

namespace detail {

inline CheckResult make_check(std::string name, int level, double measured, double tol,
                              std::string detail = {}) {
  CheckResult c;
  c.name = std::move(name);
  c.level = level;
  c.measured = measured;
  c.tolerance = tol;
  c.passed = measured <= tol;
  c.detail = std::move(detail);
  return c;
}

inline CheckResult make_equality(std::string name, int level, long got, long want) {
  CheckResult c;
  c.name = std::move(name);
  c.level = level;
  c.measured = static_cast<double>(got);
  c.tolerance = 0.0;
  c.passed = got == want;
  c.detail = "got " + std::to_string(got) + ", expected " + std::to_string(want);
  return c;
}

inline double max_abs(const SparseMatrix& m) {
  double v = 0.0;
  for (Eigen::Index r = 0; r < m.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) v = std::max(v, std::abs(it.value()));
  return v;
}

inline long dense_rank(const SparseMatrix& m, double rel) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  const Matrix d(m);
  Eigen::BDCSVD<Matrix> svd(d);
  const auto& s = svd.singularValues();
  const double cut = rel * s[0];
  long r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) r += s[i] > cut;
  return r;
}

/// (x - c)^a (y - c)^b (z - c)^c scaled by 1/s, with derivatives.
inline AnalyticField monomial_field(std::array<int, 3> e, const Vec3& c, double s) {
  AnalyticField f;
  f.tag = "mono(" + std::to_string(e[0]) + "," + std::to_string(e[1]) + "," + std::to_string(e[2]) +
          ")";
  f.arity = Arity::Scalar;
  auto pw = [](double x, int k) { return k < 0 ? 0.0 : std::pow(x, k); };
  auto d1 = [pw](double x, int k) { return k * pw(x, k - 1); };
  auto d2 = [pw](double x, int k) { return k * (k - 1) * pw(x, k - 2); };
  auto y = [c, s](const Vec3& x) { return Vec3((x - c) / s); };
  f.scalar_value = [=](const Vec3& x) {
    const Vec3 t = y(x);
    return pw(t[0], e[0]) * pw(t[1], e[1]) * pw(t[2], e[2]);
  };
  f.gradient_value = [=](const Vec3& x) -> Vec3 {
    const Vec3 t = y(x);
    return Vec3(d1(t[0], e[0]) * pw(t[1], e[1]) * pw(t[2], e[2]),
                pw(t[0], e[0]) * d1(t[1], e[1]) * pw(t[2], e[2]),
                pw(t[0], e[0]) * pw(t[1], e[1]) * d1(t[2], e[2])) /
           s;
  };
  f.hessian_value = [=](const Vec3& x) {
    const Vec3 t = y(x);
    Mat3 H;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double v = 1.0;
        for (int k = 0; k < 3; ++k) {
          const int order = (k == i) + (k == j);
          v *= order == 0 ? pw(t[k], e[k]) : order == 1 ? d1(t[k], e[k]) : d2(t[k], e[k]);
        }
        H(i, j) = v / (s * s);
      }
    return H;
  };
  return f;
}

/// Component k of a vector field set to a scalar field.
inline AnalyticField unit_vector_field(const AnalyticField& m, int k) {
  AnalyticField v;
  v.tag = m.tag + "*e" + std::to_string(k);
  v.arity = Arity::Vector;
  v.vector_value = [m, k](const Vec3& x) {
    Vec3 r = Vec3::Zero();
    r[k] = m.value(x);
    return r;
  };
  v.jacobian_value = [m, k](const Vec3& x) {
    Mat3 J = Mat3::Zero();
    J.row(k) = m.gradient(x).transpose();
    return J;
  };
  return v;
}

inline std::vector<std::array<int, 3>> exponents_up_to(int degree) {
  std::vector<std::array<int, 3>> out;
  for (int d = 0; d <= degree; ++d)
    for (int a = d; a >= 0; --a)
      for (int b = d - a; b >= 0; --b) out.push_back({a, b, d - a - b});
  return out;
}

inline AnalyticField curl_of(const AnalyticField& v) {
  AnalyticField c;
  c.tag = "curl(" + v.tag + ")";
  c.arity = Arity::Vector;
  c.vector_value = [v](const Vec3& x) { return v.curl(x); };
  return c;
}

inline AnalyticField div_of(const AnalyticField& v) {
  AnalyticField c;
  c.tag = "div(" + v.tag + ")";
  c.arity = Arity::Scalar;
  c.scalar_value = [v](const Vec3& x) { return v.jacobian(x).trace(); };
  return c;
}

}  // namespace detail

/// Composition-zero and rank identities of W_h -> Phi_h -> V_h^div -> Q_h.
inline CertificationReport check_complex(const FeSpaces& spaces, const VerifyOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const SimplicialMesh& mesh = spaces.mesh();
  const int n = mesh.subdivisions;
  const SparseMatrix G = diff_operator_matrix(spaces, OperatorKind::Grad).matrix;
  const SparseMatrix C = diff_operator_matrix(spaces, OperatorKind::Curl).matrix;
  const SparseMatrix D = diff_operator_matrix(spaces, OperatorKind::Div).matrix;
  CertificationReport r;
  const SparseMatrix CG = C * G;
  const SparseMatrix DC = D * C;
  r.checks.push_back(detail::make_check("complex.curl_grad_zero", n, detail::max_abs(CG),
                                        opt.zero_tolerance));
  r.checks.push_back(detail::make_check("complex.div_curl_zero", n, detail::max_abs(DC),
                                        opt.zero_tolerance));
  const Id biggest = std::max({spaces.dim(Space::Phi), spaces.dim(Space::W), spaces.dim(Space::RT)});
  if (biggest > opt.dense_limit) {
    if (opt.strict_rank_limit)
      throw CapabilityError("check_complex: dense rank needs dimensions <= " +
                            std::to_string(opt.dense_limit) + "; use a smaller n");
    CheckResult c;
    c.name = "complex.ranks";
    c.level = n;
    c.skipped = true;
    c.detail = "dense rank skipped, dimension " + std::to_string(biggest) + " > " +
               std::to_string(opt.dense_limit);
    r.checks.push_back(std::move(c));
  } else {
    const long rg = detail::dense_rank(G, opt.rank_threshold);
    const long rc = detail::dense_rank(C, opt.rank_threshold);
    const long rd = detail::dense_rank(D, opt.rank_threshold);
    const long e_int = mesh.interior_edges, v_int = mesh.interior_vertices;
    r.checks.push_back(
        detail::make_equality("complex.rank_grad_eq_dim_W", n, rg, spaces.dim(Space::W)));
    r.checks.push_back(
        detail::make_equality("complex.rank_curl_eq_Eint_minus_Vint", n, rc, e_int - v_int));
    r.checks.push_back(detail::make_equality("complex.rank_curl_eq_dimPhi_minus_dimW", n, rc,
                                             spaces.dim(Space::Phi) - spaces.dim(Space::W)));
    r.checks.push_back(
        detail::make_equality("complex.rank_div_eq_dimQ_minus_1", n, rd, spaces.dim(Space::Q) - 1));
    r.checks.push_back(detail::make_equality("complex.nullity_div_eq_rank_curl", n,
                                             spaces.dim(Space::RT) - rd, rc));
  }
  const double secs = detail::seconds_since(t0);
  for (auto& c : r.checks) c.seconds = secs;
  return r;
}

/// Per-element DoF identities for a P3 basis of test fields, plus global
/// identities for smooth fields vanishing to first order on the boundary.
inline CertificationReport check_commuting(const FeSpaces& spaces, const VerifyOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const SimplicialMesh& mesh = spaces.mesh();
  const int n = mesh.subdivisions;
  const auto exps = detail::exponents_up_to(3);
  double grad_res = 0.0, curl_res = 0.0, div_res = 0.0, ind_res = 0.0;
  for (Id t = 0; t < mesh.num_tets(); ++t) {
    const TetGeometry g = tet_geometry(mesh, t);
    const Vec3 c = g.centroid();
    const Matrix LG = local_operator(OperatorKind::Grad, g);
    const Matrix LC = local_operator(OperatorKind::Curl, g);
    const Matrix LD = local_operator(OperatorKind::Div, g);
    const Matrix LI = local_operator(OperatorKind::Ind, g);
    for (const auto& e : exps) {
      const AnalyticField m = detail::monomial_field(e, c, g.diameter);
      const Vector w = apply_dofs(ElementKind::WNC, g, m);
      const Vector gp = apply_dofs(ElementKind::PhiNC, g, gradient_field(m));
      grad_res = std::max(grad_res, (LG * w - gp).cwiseAbs().maxCoeff());
      for (int k = 0; k < 3; ++k) {
        const AnalyticField v = detail::unit_vector_field(m, k);
        const Vector phi = apply_dofs(ElementKind::PhiNC, g, v);
        const Vector rt = apply_dofs(ElementKind::RT0, g, detail::curl_of(v));
        curl_res = std::max(curl_res, (LC * phi - rt).cwiseAbs().maxCoeff());
        const Vector nd = apply_dofs(ElementKind::Nedelec2, g, v);
        ind_res = std::max(ind_res, (LI * phi - nd).cwiseAbs().maxCoeff());
        const Vector rtv = apply_dofs(ElementKind::RT0, g, v);
        const Vector q = apply_dofs(ElementKind::P0, g, detail::div_of(v));
        div_res = std::max(div_res, (LD * rtv - q).cwiseAbs().maxCoeff());
      }
    }
  }
  CertificationReport r;
  const double tol = opt.commuting_tolerance;
  r.checks.push_back(detail::make_check("commuting.local_grad_IW_eq_IPhi_grad", n, grad_res, tol));
  r.checks.push_back(detail::make_check("commuting.local_curl_IPhi_eq_IRT_curl", n, curl_res, tol));
  r.checks.push_back(detail::make_check("commuting.local_div_IRT_eq_IQ_div", n, div_res, tol));
  r.checks.push_back(detail::make_check("commuting.local_ind_IPhi_eq_IND", n, ind_res, tol));

  // Global: u = (x(1-x) y(1-y) z(1-z))^2 vanishes with its gradient on the
  // boundary; DoF quadrature is exact for the polynomial degrees involved.
  AnalyticField u;
  u.tag = "bump";
  u.arity = Arity::Scalar;
  auto q = [](double t) { return t * t * (1 - t) * (1 - t); };
  auto dq = [](double t) { return 2 * t * (1 - t) * (1 - 2 * t); };
  auto ddq = [](double t) { return 2 - 12 * t + 12 * t * t; };
  u.scalar_value = [=](const Vec3& x) { return q(x[0]) * q(x[1]) * q(x[2]); };
  u.gradient_value = [=](const Vec3& x) -> Vec3 {
    return Vec3(dq(x[0]) * q(x[1]) * q(x[2]), q(x[0]) * dq(x[1]) * q(x[2]),
                q(x[0]) * q(x[1]) * dq(x[2]));
  };
  u.hessian_value = [=](const Vec3& x) {
    std::array<std::array<double, 3>, 3> d;
    for (int k = 0; k < 3; ++k) d[k] = {q(x[k]), dq(x[k]), ddq(x[k])};
    Mat3 H;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double v = 1.0;
        for (int k = 0; k < 3; ++k) v *= d[k][(k == i) + (k == j)];
        H(i, j) = v;
      }
    return H;
  };
  // v = u * (1, x, y^2)
  AnalyticField v;
  v.tag = "bump*(1,x,y^2)";
  v.arity = Arity::Vector;
  v.vector_value = [u](const Vec3& x) -> Vec3 { return u.value(x) * Vec3(1.0, x[0], x[1] * x[1]); };
  v.jacobian_value = [u](const Vec3& x) {
    const Vec3 a(1.0, x[0], x[1] * x[1]);
    Mat3 J = a * u.gradient(x).transpose();
    J(1, 0) += u.value(x);
    J(2, 1) += 2 * x[1] * u.value(x);
    return J;
  };
  const SparseMatrix G = diff_operator_matrix(spaces, OperatorKind::Grad).matrix;
  const SparseMatrix C = diff_operator_matrix(spaces, OperatorKind::Curl).matrix;
  const SparseMatrix I = diff_operator_matrix(spaces, OperatorKind::Ind).matrix;
  const InterpolationOptions exact{false, DofQuadrature{18, 18, 18}};
  const Vector iw = canonical_interpolate(spaces, Space::W, u, exact).coeffs;
  const Vector ig = canonical_interpolate(spaces, Space::Phi, gradient_field(u), exact).coeffs;
  const Vector iv = canonical_interpolate(spaces, Space::Phi, v, exact).coeffs;
  const Vector ic = canonical_interpolate(spaces, Space::RT, detail::curl_of(v), exact).coeffs;
  const Vector in = canonical_interpolate(spaces, Space::Nedelec, v, exact).coeffs;
  auto maxabs = [](const Vector& x) { return x.size() ? x.cwiseAbs().maxCoeff() : 0.0; };
  r.checks.push_back(
      detail::make_check("commuting.global_grad_IW_eq_IPhi_grad", n, maxabs(G * iw - ig), tol));
  r.checks.push_back(
      detail::make_check("commuting.global_curl_IPhi_eq_IRT_curl", n, maxabs(C * iv - ic), tol));
  r.checks.push_back(
      detail::make_check("commuting.global_ind_IPhi_eq_IND", n, maxabs(I * iv - in), tol));
  const double secs = detail::seconds_since(t0);
  for (auto& c : r.checks) c.seconds = secs;
  return r;
}

/// Integral of the jump of random Phi_h functions over every interior face,
/// evaluated from both neighbours.
inline CertificationReport check_weak_continuity(const FeSpaces& spaces,
                                                 const VerifyOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const SimplicialMesh& mesh = spaces.mesh();
  const DofMap& map = spaces[Space::Phi];
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const auto& rule = get_rule(EntityKind::Triangle, 4);
  std::vector<LocalBasis> bases;
  std::vector<TetGeometry> geoms;
  for (Id t = 0; t < mesh.num_tets(); ++t) {
    geoms.push_back(tet_geometry(mesh, t));
    bases.push_back(local_nodal_basis(ElementKind::PhiNC, geoms.back()));
  }
  // Barycentric coordinates inside tet t of the points of face f.
  auto face_point = [&](Id t, Id f, Eigen::Index q) {
    const auto& fv = mesh.faces[f];
    const auto& tv = mesh.tets[t];
    Bary b{0, 0, 0, 0};
    for (int a = 0; a < 3; ++a)
      for (int k = 0; k < 4; ++k)
        if (tv[k] == fv[a]) b[k] = rule.points(q, a);
    return b;
  };
  double worst = 0.0;
  for (int s = 0; s < opt.continuity_samples; ++s) {
    Vector coeffs(map.num_dofs);
    for (Id i = 0; i < map.num_dofs; ++i) coeffs[i] = dist(rng);
    for (Id f = 0; f < static_cast<Id>(mesh.faces.size()); ++f) {
      const auto [t0f, t1f] = mesh.face_tets[f];
      if (t1f < 0) continue;
      Vec3 jump = Vec3::Zero();
      double area = 0.0;
      for (int side = 0; side < 2; ++side) {
        const Id t = side == 0 ? t0f : t1f;
        const Vector c = gather(map, t, coeffs);
        const TetGeometry& g = geoms[static_cast<std::size_t>(t)];
        int lf = 0;
        for (int k = 0; k < 4; ++k)
          if (mesh.tet_faces[t][k] == f) lf = k;
        area = g.face_area[lf];
        Vec3 integral = Vec3::Zero();
        for (Eigen::Index q = 0; q < rule.size(); ++q) {
          const Matrix V = bases[static_cast<std::size_t>(t)].tabulate(g, face_point(t, f, q), kValues).values;
          integral += rule.weights[q] * (V * c);
        }
        jump += (side == 0 ? 1.0 : -1.0) * area * integral;
      }
      worst = std::max(worst, jump.cwiseAbs().maxCoeff());
    }
  }
  CertificationReport r;
  r.checks.push_back(detail::make_check("weak_continuity.phi_face_mean_jump", mesh.subdivisions,
                                        worst, opt.continuity_tolerance,
                                        std::to_string(opt.continuity_samples) + " random fields"));
  r.checks.back().seconds = detail::seconds_since(t0);
  return r;
}

/// Condition numbers of the DoF matrices of Phi(T) and W(T) (and the other
/// elements) on random shape-regular tets.
inline CertificationReport check_unisolvence(const VerifyOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  const ElementKind kinds[] = {ElementKind::PhiNC, ElementKind::WNC, ElementKind::LagrangeP2,
                               ElementKind::Nedelec2, ElementKind::RT0, ElementKind::P0};
  std::array<double, 6> worst{};
  int accepted = 0;
  while (accepted < opt.random_tets) {
    std::array<Vec3, 4> x;
    for (auto& p : x) p = Vec3(dist(rng), dist(rng), dist(rng));
    const double vol = std::abs((x[1] - x[0]).cross(x[2] - x[0]).dot(x[3] - x[0])) / 6.0;
    double diam = 0.0;
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) diam = std::max(diam, (x[a] - x[b]).norm());
    if (vol < 0.01 * diam * diam * diam) continue;  // shape regularity
    if ((x[1] - x[0]).cross(x[2] - x[0]).dot(x[3] - x[0]) < 0) std::swap(x[2], x[3]);
    const TetGeometry g = tet_geometry(x);
    for (std::size_t k = 0; k < 6; ++k)
      worst[k] = std::max(worst[k], unisolvence_check(kinds[k], g));
    ++accepted;
  }
  CertificationReport r;
  for (std::size_t k = 0; k < 6; ++k)
    r.checks.push_back(detail::make_check(std::string("unisolvence.") + element_traits(kinds[k]).name,
                                          0, worst[k], opt.unisolvence_max_condition,
                                          "max condition over " + std::to_string(opt.random_tets) +
                                              " random tets"));
  const double secs = detail::seconds_since(t0);
  for (auto& c : r.checks) c.seconds = secs;
  return r;
}

/// Identities of a computed solution: lambda_h = 0, div p_h = 0,
/// I^ND phi_h = grad u_h (interp only), curl phi_h = 0 and phi_h in grad W_h.
inline CertificationReport check_solution_identities(const FeSpaces& spaces,
                                                     const DecoupledSolution& sol,
                                                     const VerifyOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = spaces.mesh().subdivisions;
  const double tol = opt.identity_tolerance;
  const std::string tag = std::string(method_name(sol.method)) + " eps=" + detail::fmt("%g", sol.epsilon);
  CertificationReport r;
  r.checks.push_back(detail::make_check("identity.lambda_zero", n, sol.lambda_l2, tol, tag));
  r.checks.push_back(detail::make_check("identity.div_p_zero", n, sol.div_p_l2, tol, tag));
  if (sol.method == Method::Interp)
    r.checks.push_back(detail::make_check("identity.ind_phi_eq_grad_u", n, sol.ind_minus_grad, tol, tag));
  r.checks.push_back(detail::make_check("identity.curl_phi_zero", n, sol.curl_phi_l2, tol, tag));

  const SparseMatrix G = diff_operator_matrix(spaces, OperatorKind::Grad).matrix;
  const SparseMatrix Gt = G.transpose();
  const SparseMatrix GtG = Gt * G;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double, Eigen::ColMajor, Id>> ldlt(GtG);
  double rel = std::numeric_limits<double>::infinity();
  if (ldlt.info() == Eigen::Success) {
    const Vector w = ldlt.solve(Gt * sol.phi.coeffs);
    const double pn = sol.phi.coeffs.norm();
    rel = (G * w - sol.phi.coeffs).norm() / (pn > 0.0 ? pn : 1.0);
  }
  r.checks.push_back(detail::make_check("identity.phi_in_grad_W", n, rel, tol, tag));
  const double secs = detail::seconds_since(t0);
  for (auto& c : r.checks) c.seconds = secs;
  return r;
}

struct InfSupResult {
  double epsilon = 0.0;
  double beta = 0.0;
};

/// Smallest generalized singular value of b_h((psi, mu); q) =
/// (curl I^ND psi, q) - (mu, div q) over ||.||_{eps,h} x L^2 and H(div).
/// Dense; for small meshes only.
inline InfSupResult discrete_infsup(const FeSpaces& spaces, double epsilon, Id dense_limit = 2000) {
  const Id nphi = spaces.dim(Space::Phi), nq = spaces.dim(Space::Q), nrt = spaces.dim(Space::RT);
  if (nphi + nq > dense_limit)
    throw CapabilityError("discrete_infsup: dense eigenproblem too large; use a smaller n");
  const Matrix K(assemble_bilinear(FormKind::PhiStiffness, spaces).matrix);
  const Matrix CC(assemble_bilinear(FormKind::IndCurlCurl, spaces).matrix);
  const Matrix M(assemble_bilinear(FormKind::IndMass, spaces).matrix);
  const Matrix QM(assemble_bilinear(FormKind::QMass, spaces).matrix);
  const Matrix C(assemble_bilinear(FormKind::CurlCoupling, spaces).matrix);
  const Matrix D(assemble_bilinear(FormKind::DivCoupling, spaces).matrix);
  const Matrix RM(assemble_bilinear(FormKind::RtMass, spaces).matrix);
  const Matrix DD(assemble_bilinear(FormKind::RtDivDiv, spaces).matrix);
  Matrix X = Matrix::Zero(nphi + nq, nphi + nq);
  X.topLeftCorner(nphi, nphi) = epsilon * epsilon * K + CC + M;
  X.bottomRightCorner(nq, nq) = QM;
  Matrix B(nphi + nq, nrt);
  B.topRows(nphi) = C;
  B.bottomRows(nq) = -D;
  const Eigen::LLT<Matrix> llt(X);
  if (llt.info() != Eigen::Success) throw SolverFailure("discrete_infsup: norm matrix not SPD");
  const Matrix S = B.transpose() * llt.solve(B);
  const Matrix Y = RM + DD;
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()), Y);
  if (es.info() != Eigen::Success) throw SolverFailure("discrete_infsup: eigensolver failed");
  return {epsilon, std::sqrt(std::max(es.eigenvalues()[0], 0.0))};
}

inline CertificationReport check_infsup(const FeSpaces& spaces, const std::vector<double>& eps,
                                        double floor) {
  CertificationReport r;
  for (double e : eps) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult c;
    c.name = "infsup.beta_h";
    c.level = spaces.mesh().subdivisions;
    c.tolerance = floor;
    c.detail = "eps=" + detail::fmt("%g", e) + ", beta_h >= floor";
    try {
      c.measured = discrete_infsup(spaces, e).beta;
      c.passed = c.measured >= floor;
    } catch (const Error& ex) {
      c.skipped = true;
      c.detail += std::string("; skipped: ") + ex.what();
    }
    c.seconds = detail::seconds_since(t0);
    r.checks.push_back(std::move(c));
  }
  return r;
}

}  // namespace ncdr
