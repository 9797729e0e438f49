#pragma once

#include "ncdr/assembly.hpp"
#include "ncdr/core.hpp"
#include "ncdr/interp_ops.hpp"
#include "ncdr/sparse_direct.hpp"

#include <Eigen/SparseCholesky>

#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ncdr {

enum class Method { Interp, NoInterp };
enum class SpdSolver { ConjugateGradient, Direct };

/// Direct: UMFPACK on the assembled saddle matrix. Reduced: the same system
/// solved through the gradient kernel (see ReducedSaddleSolver). Auto picks
/// Direct up to `direct_saddle_limit` unknowns.
enum class SaddleBackend { Auto, Direct, Reduced };

inline const char* backend_name(SaddleBackend b) {
  switch (b) {
    case SaddleBackend::Auto: return "auto";
    case SaddleBackend::Direct: return "direct";
    case SaddleBackend::Reduced: return "reduced";
  }
  return "?";
}

inline const char* method_name(Method m) { return m == Method::Interp ? "interp" : "nointerp"; }

struct SolverConfig {
  double epsilon = 1.0;
  Method method = Method::Interp;
  SpdSolver spd = SpdSolver::ConjugateGradient;
  double spd_tolerance = 1e-12;
  int spd_max_iterations = 20000;
  double saddle_tolerance = 1e-10;
  int saddle_max_refinements = 3;
  SaddleBackend saddle_backend = SaddleBackend::Auto;
  Id direct_saddle_limit = 30000;
  int load_degree = 10;
  FormQuadrature forms{};
  Execution exec{};

  void validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
      throw InvalidArgument("solver: epsilon must be a finite nonnegative number");
    if (!(spd_tolerance > 0.0 && spd_tolerance < 1.0))
      throw InvalidArgument("solver: SPD tolerance must lie in (0,1)");
    if (!(saddle_tolerance > 0.0 && saddle_tolerance < 1.0))
      throw InvalidArgument("solver: saddle tolerance must lie in (0,1)");
    if (spd_max_iterations < 1) throw InvalidArgument("solver: iteration cap must be positive");
  }
};

struct SpdStats {
  int iterations = 0;
  double relative_residual = 0.0;
  std::vector<double> history;
  bool direct = false;
};

/// Solves K x = b for symmetric positive definite K.
inline Vector solve_spd(const SparseMatrix& K, const Vector& b, const SolverConfig& cfg,
                        SpdStats* stats = nullptr) {
  if (K.rows() != K.cols() || K.rows() != b.size())
    throw InvalidArgument("solve_spd: dimension mismatch");
  const double bnorm = b.norm();
  SpdStats local;
  SpdStats& st = stats ? *stats : local;
  st = {};
  if (bnorm == 0.0) return Vector::Zero(b.size());

  if (cfg.spd == SpdSolver::Direct) {
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double, Eigen::ColMajor, Id>> llt;
    llt.compute(K);
    if (llt.info() != Eigen::Success) throw SolverFailure("solve_spd: Cholesky factorization failed");
    Vector x = llt.solve(b);
    st.direct = true;
    st.relative_residual = (b - K * x).norm() / bnorm;
    st.history = {st.relative_residual};
    return x;
  }

  Vector dinv = K.diagonal();
  for (Eigen::Index i = 0; i < dinv.size(); ++i) {
    if (!(dinv[i] > 0.0)) throw SolverFailure("solve_spd: nonpositive diagonal entry");
    dinv[i] = 1.0 / dinv[i];
  }
  Vector x = Vector::Zero(b.size());
  Vector r = b;
  Vector z = dinv.cwiseProduct(r);
  Vector p = z;
  Vector q(b.size());
  double rz = r.dot(z);
  st.history.push_back(1.0);
  for (int it = 1; it <= cfg.spd_max_iterations; ++it) {
    q.noalias() = K * p;
    const double pq = p.dot(q);
    if (!(pq > 0.0)) throw SolverFailure("solve_spd: matrix is not positive definite", st.history);
    const double alpha = rz / pq;
    x += alpha * p;
    r -= alpha * q;
    const double rel = r.norm() / bnorm;
    st.history.push_back(rel);
    st.iterations = it;
    if (rel <= cfg.spd_tolerance) {
      st.relative_residual = (b - K * x).norm() / bnorm;
      return x;
    }
    z = dinv.cwiseProduct(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  throw SolverFailure("solve_spd: no convergence within " + std::to_string(cfg.spd_max_iterations) +
                         " iterations",
                     st.history);
}

/// Blocks of the saddle system in unknown order [phi, lambda, p, r]:
///
///   [ A    0    C    0 ] [phi]   [g]
///   [ 0    0   -D    m ] [lam] = [0]
///   [ C^T -D^T  0    0 ] [ p ]   [0]
///   [ 0    m^T  0    0 ] [ r ]   [0]
///
/// A: Phi x Phi, C: Phi x RT, D: Q x RT, m_T = |T|.
struct SaddleBlocks {
  SparseMatrix A;
  SparseMatrix C;
  SparseMatrix D;
  Vector m;
};

struct SaddleSolution {
  Vector phi;
  Vector lambda;
  Vector p;
  double multiplier = 0.0;
  FactorStats stats;
};

inline SparseMatrix saddle_matrix(const SaddleBlocks& b) {
  const Id nphi = static_cast<Id>(b.A.rows());
  const Id nq = static_cast<Id>(b.D.rows());
  const Id nrt = static_cast<Id>(b.C.cols());
  if (b.A.cols() != nphi || b.C.rows() != nphi || b.D.cols() != nrt || b.m.size() != nq)
    throw InvalidArgument("saddle_matrix: block dimensions are inconsistent");
  const Id oq = nphi, orr = nphi + nq, om = nphi + nq + nrt, n = om + 1;
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(b.A.nonZeros() + 2 * b.C.nonZeros() + 2 * b.D.nonZeros() +
                                     2 * nq));
  for (Eigen::Index r = 0; r < b.A.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(b.A, r); it; ++it)
      t.emplace_back(static_cast<Id>(it.row()), static_cast<Id>(it.col()), it.value());
  for (Eigen::Index r = 0; r < b.C.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(b.C, r); it; ++it) {
      t.emplace_back(static_cast<Id>(it.row()), orr + static_cast<Id>(it.col()), it.value());
      t.emplace_back(orr + static_cast<Id>(it.col()), static_cast<Id>(it.row()), it.value());
    }
  for (Eigen::Index r = 0; r < b.D.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(b.D, r); it; ++it) {
      t.emplace_back(oq + static_cast<Id>(it.row()), orr + static_cast<Id>(it.col()), -it.value());
      t.emplace_back(orr + static_cast<Id>(it.col()), oq + static_cast<Id>(it.row()), -it.value());
    }
  for (Id i = 0; i < nq; ++i) {
    t.emplace_back(oq + i, om, b.m[i]);
    t.emplace_back(om, oq + i, b.m[i]);
  }
  SparseMatrix K(n, n);
  K.setFromTriplets(t.begin(), t.end());
  return K;
}

/// Direct solve of the saddle system. Pass `lu` to reuse the symbolic
/// analysis across calls with the same pattern (e.g. an epsilon sweep).
inline SaddleSolution solve_saddle(const SaddleBlocks& blocks, const Vector& g,
                                   const SolverConfig& cfg, SparseLU* lu = nullptr) {
  if (g.size() != blocks.A.rows()) throw InvalidArgument("solve_saddle: rhs size mismatch");
  const SparseMatrix K = saddle_matrix(blocks);
  SparseLU own;
  SparseLU& f = lu ? *lu : own;
  f.factor(K);
  Vector rhs = Vector::Zero(K.rows());
  rhs.head(g.size()) = g;
  const Vector x = f.solve(rhs, cfg.saddle_tolerance, 1, 1 + cfg.saddle_max_refinements);
  const Eigen::Index nphi = blocks.A.rows(), nq = blocks.D.rows(), nrt = blocks.C.cols();
  SaddleSolution s;
  s.phi = x.head(nphi);
  s.lambda = x.segment(nphi, nq);
  s.p = x.segment(nphi + nq, nrt);
  s.multiplier = x[nphi + nq + nrt];
  s.stats = f.stats();
  return s;
}


/// Solves the saddle system through the discrete gradient kernel. Exactness
/// of W_h -> Phi_h -> V_h^div -> Q_h gives curl phi = 0 and lambda = 0 for
/// the solution, so phi = G w with
///
///   (eps^2 H + M) w = G^T g,   H = G^T K G,  M = G^T A_0 G,
///
/// both assembled elementwise on W_h. lambda and p are then recovered from
/// the remaining block rows by least squares and the full saddle residual is
/// checked.
class ReducedSaddleSolver {
public:
  ReducedSaddleSolver(SparseMatrix C, SparseMatrix D, Vector m, SparseMatrix G, SparseMatrix H,
                      SparseMatrix M)
      : C_(std::move(C)), D_(std::move(D)), m_(std::move(m)), G_(std::move(G)), H_(std::move(H)),
        M_(std::move(M)) {
    const SparseMatrix Ct = C_.transpose();
    const SparseMatrix Dt = D_.transpose();
    const SparseMatrix CtC = Ct * C_;
    const SparseMatrix DtD = Dt * D_;
    const double dc = CtC.diagonal().sum(), dd = DtD.diagonal().sum();
    alpha_ = dd > 0.0 ? dc / dd : 1.0;
    SparseMatrix np = CtC + alpha_ * DtD;
    p_.factor(np);

    const Id nq = static_cast<Id>(D_.rows());
    const SparseMatrix DDt = D_ * Dt;
    std::vector<Triplet> t;
    for (Eigen::Index r = 0; r < DDt.outerSize(); ++r)
      for (SparseMatrix::InnerIterator it(DDt, r); it; ++it)
        t.emplace_back(static_cast<Id>(it.row()), static_cast<Id>(it.col()), it.value());
    const double ms = DDt.diagonal().mean() / std::max(m_.cwiseAbs().maxCoeff(), 1e-300);
    m_scale_ = ms;
    for (Id i = 0; i < nq; ++i) {
      t.emplace_back(i, nq, ms * m_[i]);
      t.emplace_back(nq, i, ms * m_[i]);
    }
    SparseMatrix L(nq + 1, nq + 1);
    L.setFromTriplets(t.begin(), t.end());
    lambda_.factor(L);
  }

  SaddleSolution solve(const SparseMatrix& A, double epsilon, const Vector& g,
                       const SolverConfig& cfg) {
    if (g.size() != A.rows() || A.rows() != G_.rows())
      throw InvalidArgument("ReducedSaddleSolver: dimension mismatch");
    SparseMatrix R = (epsilon * epsilon) * H_ + M_;
    w_.factor(R);
    const Vector rw = G_.transpose() * g;
    const Vector w = w_.solve(rw, cfg.spd_tolerance, 1, 1 + cfg.saddle_max_refinements, false);

    SaddleSolution s;
    s.phi = G_ * w;
    Vector bl = Vector::Zero(D_.rows() + 1);
    bl.head(D_.rows()) = D_ * (C_.transpose() * s.phi);
    const Vector lz = lambda_.solve(bl, cfg.spd_tolerance, 1, 1 + cfg.saddle_max_refinements, false);
    s.lambda = lz.head(D_.rows());

    const Vector rp = g - A * s.phi;
    const Vector bp = C_.transpose() * rp;
    s.p = p_.solve(bp, cfg.spd_tolerance, 1, 1 + cfg.saddle_max_refinements, false);
    const Vector dp = D_ * s.p;
    const double mm = m_.squaredNorm();
    s.multiplier = mm > 0.0 ? m_.dot(dp) / mm : 0.0;

    const double r1 = (rp - C_ * s.p).squaredNorm();
    const double r2 = (m_ * s.multiplier - dp).squaredNorm();
    const double r3 = (C_.transpose() * s.phi - D_.transpose() * s.lambda).squaredNorm();
    const double r4 = m_.dot(s.lambda);
    const double gn = g.norm();
    const double rel = std::sqrt(r1 + r2 + r3 + r4 * r4) / (gn > 0.0 ? gn : 1.0);

    s.stats = w_.stats();
    s.stats.backend = "reduced";
    s.stats.relative_residual = rel;
    if (!(rel <= cfg.saddle_tolerance))
      throw SolverFailure("reduced saddle: residual " + std::to_string(rel) + " above tolerance",
                          {rel});
    return s;
  }

private:
  SparseMatrix C_, D_;
  Vector m_;
  SparseMatrix G_, H_, M_;
  double alpha_ = 1.0;
  double m_scale_ = 1.0;
  SparseCholesky w_, p_;
  SparseLU lambda_;
};

struct StageDiagnostics {
  std::string stage;
  int iterations = 0;
  double relative_residual = 0.0;
  double seconds = 0.0;
};

struct DecoupledSolution {
  FeFunction w;
  FeFunction phi;
  FeFunction p;
  FeFunction lambda;
  FeFunction u;
  Method method = Method::Interp;
  double epsilon = 0.0;
  std::vector<StageDiagnostics> stages;
  FactorStats saddle;
  double solve_seconds = 0.0;
  // Mirrors of the exact identities; relative values.
  double lambda_l2 = 0.0;
  double div_p_l2 = 0.0;
  double curl_phi_l2 = 0.0;
  double ind_minus_grad = 0.0;
  double source_l2 = 0.0;
};

namespace detail {

inline double q_l2(const FeSpaces& s, const Vector& cell_values) {
  const SimplicialMesh& mesh = s.mesh();
  double acc = 0.0;
  for (Id t = 0; t < mesh.num_tets(); ++t) {
    const Id d = s[Space::Q].cell_first[t];
    if (d >= 0) acc += tet_geometry(mesh, t).volume * cell_values[d] * cell_values[d];
  }
  return std::sqrt(acc);
}

inline double source_norm(const FeSpaces& s, const AnalyticField& f, int degree) {
  const SimplicialMesh& mesh = s.mesh();
  const auto& r = get_rule(EntityKind::Tet, degree);
  double acc = 0.0;
  for (Id t = 0; t < mesh.num_tets(); ++t) {
    const TetGeometry g = tet_geometry(mesh, t);
    for (Eigen::Index q = 0; q < r.size(); ++q) {
      const double v = f.value(g.point(bary_row(r.points, q)));
      acc += r.weights[q] * g.volume * v * v;
    }
  }
  return std::sqrt(acc);
}

template <class F>
auto run_stage(const char* stage, F&& body) {
  try {
    return body();
  } catch (const SolverFailure& e) {
    throw SolverFailure(std::string("stage ") + stage + ": " + e.what(), e.residual_history());
  }
}

}  // namespace detail

/// The decoupled method on a fixed mesh. Epsilon-independent matrices and the
/// symbolic analysis of the saddle system are built once and reused.
class DecoupledSolver {
public:
  DecoupledSolver(std::shared_ptr<const FeSpaces> spaces, Method method, SolverConfig base = {})
      : spaces_(std::move(spaces)), method_(method), base_(base) {
    base_.method = method;
    base_.validate();
    const FeSpaces& s = *spaces_;
    const auto& ex = base_.exec;
    poisson_ = assemble_bilinear(FormKind::PoissonP2, s, 0.0, ex, base_.forms).matrix;
    stiffness_ = assemble_bilinear(FormKind::PhiStiffness, s, 0.0, ex, base_.forms).matrix;
    const bool interp = method == Method::Interp;
    mass_ = assemble_bilinear(interp ? FormKind::IndMass : FormKind::PhiMass, s, 0.0, ex, base_.forms)
                .matrix;
    blocks_.C = assemble_bilinear(interp ? FormKind::CurlCoupling : FormKind::CurlCouplingDirect, s,
                                  0.0, ex, base_.forms)
                    .matrix;
    blocks_.D = assemble_bilinear(FormKind::DivCoupling, s, 0.0, ex, base_.forms).matrix;
    blocks_.m = Vector::Zero(s.dim(Space::Q));
    for (Id t = 0; t < s.mesh().num_tets(); ++t) {
      const Id d = s[Space::Q].cell_first[t];
      if (d >= 0) blocks_.m[d] = tet_geometry(s.mesh(), t).volume;
    }
    ind_ = diff_operator_matrix(s, OperatorKind::Ind, ex).matrix;
    gradp2_ = diff_operator_matrix(s, OperatorKind::GradP2, ex).matrix;
    curl_ = diff_operator_matrix(s, OperatorKind::Curl, ex).matrix;
    div_ = diff_operator_matrix(s, OperatorKind::Div, ex).matrix;

    const Id saddle_size = static_cast<Id>(s.dim(Space::Phi) + s.dim(Space::RT) + s.dim(Space::Q) + 1);
    backend_ = base_.saddle_backend;
    if (backend_ == SaddleBackend::Auto)
      backend_ = saddle_size <= base_.direct_saddle_limit ? SaddleBackend::Direct
                                                          : SaddleBackend::Reduced;
    if (backend_ == SaddleBackend::Reduced) {
      SparseMatrix G = diff_operator_matrix(s, OperatorKind::Grad, ex).matrix;
      SparseMatrix H = assemble_bilinear(FormKind::WHessian, s, 0.0, ex, base_.forms).matrix;
      SparseMatrix M = assemble_bilinear(interp ? FormKind::WIndGradient : FormKind::WGradient, s,
                                         0.0, ex, base_.forms)
                           .matrix;
      reduced_ = std::make_unique<ReducedSaddleSolver>(blocks_.C, blocks_.D, blocks_.m, std::move(G),
                                                       std::move(H), std::move(M));
    }
  }

  SaddleBackend backend() const { return backend_; }

  const FeSpaces& spaces() const { return *spaces_; }
  Method method() const { return method_; }
  const SparseMatrix& poisson() const { return poisson_; }
  const SaddleBlocks& blocks() const { return blocks_; }

  /// A = eps^2 K + M; the sum keeps the union pattern for every eps.
  SparseMatrix a_block(double epsilon) const {
    SparseMatrix A = (epsilon * epsilon) * stiffness_ + mass_;
    return A;
  }

  DecoupledSolution solve(const AnalyticField& f, double epsilon) {
    SolverConfig cfg = base_;
    cfg.epsilon = epsilon;
    cfg.validate();
    const FeSpaces& s = *spaces_;
    const auto t_begin = std::chrono::steady_clock::now();
    auto since = [](auto t0) {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    DecoupledSolution sol;
    sol.method = method_;
    sol.epsilon = epsilon;

    // (CA)
    auto t0 = std::chrono::steady_clock::now();
    const Vector fl = assemble_load(LoadKind::FVsP2, s, f, cfg.load_degree, cfg.exec);
    SpdStats st;
    sol.w = {Space::Grad, detail::run_stage("CA", [&] { return solve_spd(poisson_, fl, cfg, &st); })};
    sol.stages.push_back({"CA", st.iterations, st.relative_residual, since(t0)});

    // (CC)-(CD)
    t0 = std::chrono::steady_clock::now();
    const bool interp = method_ == Method::Interp;
    const Vector g = assemble_load(interp ? LoadKind::GradwVsIndphi : LoadKind::GradwVsPhi, s, sol.w,
                                   cfg.exec, cfg.forms);
    blocks_.A = a_block(epsilon);
    SaddleSolution ss = detail::run_stage("CC-CD", [&] {
      return backend_ == SaddleBackend::Reduced ? reduced_->solve(blocks_.A, epsilon, g, cfg)
                                                : solve_saddle(blocks_, g, cfg, &lu_);
    });
    sol.phi = {Space::Phi, std::move(ss.phi)};
    sol.lambda = {Space::Q, std::move(ss.lambda)};
    sol.p = {Space::RT, std::move(ss.p)};
    sol.saddle = ss.stats;
    sol.stages.push_back(
        {"CC-CD", ss.stats.refinement_steps, ss.stats.relative_residual, since(t0)});

    // (CE)
    t0 = std::chrono::steady_clock::now();
    const Vector ul = assemble_load(interp ? LoadKind::IndphiVsGradP2 : LoadKind::PhiVsGradP2, s,
                                    sol.phi, cfg.exec, cfg.forms);
    sol.u = {Space::Grad, detail::run_stage("CE", [&] { return solve_spd(poisson_, ul, cfg, &st); })};
    sol.stages.push_back({"CE", st.iterations, st.relative_residual, since(t0)});
    sol.solve_seconds = since(t_begin);

    // Identity mirrors.
    sol.source_l2 = detail::source_norm(s, f, cfg.load_degree);
    const double scale = sol.source_l2 > 0.0 ? sol.source_l2 : 1.0;
    sol.lambda_l2 = detail::q_l2(s, sol.lambda.coeffs) / scale;
    sol.div_p_l2 = detail::q_l2(s, div_ * sol.p.coeffs) / scale;
    const Vector c = curl_ * sol.phi.coeffs;
    const double pn = sol.phi.coeffs.norm();
    sol.curl_phi_l2 = pn > 0.0 ? c.norm() / pn : c.norm();
    const Vector ip = ind_ * sol.phi.coeffs;
    const Vector gu = gradp2_ * sol.u.coeffs;
    const double in = ip.norm();
    sol.ind_minus_grad = in > 0.0 ? (ip - gu).norm() / in : (ip - gu).norm();
    return sol;
  }

private:
  std::shared_ptr<const FeSpaces> spaces_;
  Method method_;
  SolverConfig base_;
  SparseMatrix poisson_, stiffness_, mass_;
  SparseMatrix ind_, gradp2_, curl_, div_;
  SaddleBlocks blocks_;
  SparseLU lu_;
  SaddleBackend backend_ = SaddleBackend::Direct;
  std::unique_ptr<ReducedSaddleSolver> reduced_;
};

/// One-shot convenience wrapper.
inline DecoupledSolution decoupled_solve(const AnalyticField& f, const SimplicialMesh& mesh,
                                         const SolverConfig& cfg) {
  auto spaces = std::make_shared<const FeSpaces>(mesh);
  DecoupledSolver solver(spaces, cfg.method, cfg);
  return solver.solve(f, cfg.epsilon);
}

}  // namespace ncdr
