#pragma once

#include "ncdr/core.hpp"

#include <cholmod.h>
#include <umfpack.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <string>

namespace ncdr {

struct FactorStats {
  std::string backend;
  Id size = 0;
  Eigen::Index nonzeros = 0;
  double factor_nonzeros = 0.0;
  double peak_memory_bytes = 0.0;
  /// UMFPACK: min/max |diag(U)|. CHOLMOD: min/max diag(L).
  double rcond = 0.0;
  bool symbolic_reused = false;
  int refinement_steps = 0;
  double relative_residual = 0.0;
  double factor_seconds = 0.0;
};

using CscMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

namespace detail {

inline bool same_pattern(const CscMatrix& a, const CscMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a.nonZeros() == b.nonZeros() &&
         std::equal(a.outerIndexPtr(), a.outerIndexPtr() + a.cols() + 1, b.outerIndexPtr()) &&
         std::equal(a.innerIndexPtr(), a.innerIndexPtr() + a.nonZeros(), b.innerIndexPtr());
}

/// x = A^{-1} b, then at least `min_steps` and at most `max_steps` residual
/// corrections, stopping once the relative residual is below `tol`.
template <class RawSolve>
Vector refine(const CscMatrix& a, const Vector& b, RawSolve&& raw, double tol, int min_steps,
              int max_steps, FactorStats& st, bool strict) {
  const double bnorm = b.norm();
  Vector x = Vector::Zero(b.size());
  st.refinement_steps = 0;
  st.relative_residual = 0.0;
  if (bnorm == 0.0) return x;
  raw(b, x);
  Vector r = b - a * x;
  double rel = r.norm() / bnorm;
  int steps = 0;
  Vector dx(b.size());
  while (steps < max_steps && (steps < min_steps || rel > tol)) {
    raw(r, dx);
    x += dx;
    r = b - a * x;
    rel = r.norm() / bnorm;
    ++steps;
  }
  st.refinement_steps = steps;
  st.relative_residual = rel;
  if (strict && !(rel <= tol)) {
    char buf[96];
    std::snprintf(buf, sizeof buf, ": relative residual %.3e above tolerance %.1e", rel, tol);
    throw SolverFailure(st.backend + buf, {rel});
  }
  return x;
}

}  // namespace detail

/// UMFPACK LU with a cached symbolic analysis, reused while the sparsity
/// pattern is unchanged. Symmetric strategy with METIS ordering by default.
class SparseLU {
public:
  SparseLU() {
    umfpack_di_defaults(control_);
    control_[UMFPACK_IRSTEP] = 0;
    control_[UMFPACK_STRATEGY] = UMFPACK_STRATEGY_SYMMETRIC;
    control_[UMFPACK_ORDERING] = UMFPACK_ORDERING_METIS;
  }
  SparseLU(const SparseLU&) = delete;
  SparseLU& operator=(const SparseLU&) = delete;
  ~SparseLU() { release(true); }

  void factor(const SparseMatrix& m) {
    if (m.rows() != m.cols()) throw InvalidArgument("SparseLU: matrix must be square");
    const auto t0 = std::chrono::steady_clock::now();
    CscMatrix a = m;
    a.makeCompressed();
    const bool reuse = symbolic_ && detail::same_pattern(a, a_);
    release(!reuse);
    a_ = std::move(a);
    stats_ = {};
    stats_.backend = "umfpack";
    stats_.size = static_cast<Id>(a_.rows());
    stats_.nonzeros = a_.nonZeros();
    stats_.symbolic_reused = reuse;
    const int n = static_cast<int>(a_.rows());
    if (!symbolic_) {
      const int s = umfpack_di_symbolic(n, n, a_.outerIndexPtr(), a_.innerIndexPtr(),
                                        a_.valuePtr(), &symbolic_, control_, info_);
      if (s != UMFPACK_OK) {
        symbolic_ = nullptr;
        throw SolverFailure("umfpack: symbolic analysis failed (status " + std::to_string(s) + ")");
      }
    }
    const int s = umfpack_di_numeric(a_.outerIndexPtr(), a_.innerIndexPtr(), a_.valuePtr(),
                                     symbolic_, &numeric_, control_, info_);
    if (s != UMFPACK_OK) {
      release(false);
      if (s == UMFPACK_WARNING_singular_matrix) throw SolverFailure("umfpack: matrix is singular");
      if (s == UMFPACK_ERROR_out_of_memory) throw SolverFailure("umfpack: out of memory");
      throw SolverFailure("umfpack: numeric factorization failed (status " + std::to_string(s) + ")");
    }
    stats_.factor_nonzeros = info_[UMFPACK_LNZ] + info_[UMFPACK_UNZ];
    stats_.peak_memory_bytes = info_[UMFPACK_PEAK_MEMORY] * info_[UMFPACK_SIZE_OF_UNIT];
    stats_.rcond = info_[UMFPACK_RCOND];
    stats_.factor_seconds = detail::seconds_since(t0);
  }

  /// With `strict`, failing to reach `tol` raises SolverFailure; otherwise
  /// the best iterate is returned and stats() records its residual.
  Vector solve(const Vector& b, double tol, int min_steps, int max_steps, bool strict = true) {
    if (!numeric_) throw SolverFailure("umfpack: solve before factor");
    if (b.size() != a_.rows()) throw InvalidArgument("SparseLU: rhs size mismatch");
    return detail::refine(
        a_, b, [this](const Vector& rhs, Vector& x) { raw_solve(rhs, x); }, tol, min_steps,
        max_steps, stats_, strict);
  }

  /// Overrides a UMFPACK control entry; drops any cached analysis.
  void set_control(int index, double value) {
    if (index < 0 || index >= UMFPACK_CONTROL) throw InvalidArgument("SparseLU: bad control index");
    control_[index] = value;
    release(true);
  }

  const FactorStats& stats() const { return stats_; }

private:
  void raw_solve(const Vector& b, Vector& x) {
    const int s = umfpack_di_solve(UMFPACK_A, a_.outerIndexPtr(), a_.innerIndexPtr(), a_.valuePtr(),
                                   x.data(), b.data(), numeric_, control_, info_);
    if (s != UMFPACK_OK) throw SolverFailure("umfpack: solve failed (status " + std::to_string(s) + ")");
  }

  void release(bool symbolic) {
    if (numeric_) umfpack_di_free_numeric(&numeric_);
    numeric_ = nullptr;
    if (symbolic && symbolic_) {
      umfpack_di_free_symbolic(&symbolic_);
      symbolic_ = nullptr;
    }
  }

  CscMatrix a_;
  void* symbolic_ = nullptr;
  void* numeric_ = nullptr;
  double control_[UMFPACK_CONTROL];
  double info_[UMFPACK_INFO];
  FactorStats stats_;
};

/// CHOLMOD Cholesky of a symmetric positive definite matrix (lower triangle
/// used). The analysis is reused while the pattern is unchanged.
class SparseCholesky {
public:
  SparseCholesky() { cholmod_start(&common_); }
  SparseCholesky(const SparseCholesky&) = delete;
  SparseCholesky& operator=(const SparseCholesky&) = delete;
  ~SparseCholesky() {
    if (factor_) cholmod_free_factor(&factor_, &common_);
    cholmod_finish(&common_);
  }

  void factor(const SparseMatrix& m) {
    if (m.rows() != m.cols()) throw InvalidArgument("SparseCholesky: matrix must be square");
    const auto t0 = std::chrono::steady_clock::now();
    CscMatrix a = m;
    a.makeCompressed();
    const bool reuse = factor_ && detail::same_pattern(a, a_);
    if (!reuse && factor_) cholmod_free_factor(&factor_, &common_);
    a_ = std::move(a);
    stats_ = {};
    stats_.backend = "cholmod";
    stats_.size = static_cast<Id>(a_.rows());
    stats_.nonzeros = a_.nonZeros();
    stats_.symbolic_reused = reuse;
    cholmod_sparse view = sparse_view();
    if (!factor_) {
      factor_ = cholmod_analyze(&view, &common_);
      if (!factor_) throw SolverFailure("cholmod: analysis failed");
    }
    cholmod_factorize(&view, factor_, &common_);
    if (common_.status == CHOLMOD_NOT_POSDEF)
      throw SolverFailure("cholmod: matrix is not positive definite (column " +
                          std::to_string(factor_->minor) + ")");
    if (common_.status < CHOLMOD_OK) throw SolverFailure("cholmod: factorization failed");
    stats_.factor_nonzeros = common_.lnz;
    stats_.peak_memory_bytes = static_cast<double>(common_.memory_usage);
    stats_.rcond = cholmod_rcond(factor_, &common_);
    stats_.factor_seconds = detail::seconds_since(t0);
  }

  /// With `strict`, failing to reach `tol` raises SolverFailure; otherwise
  /// the best iterate is returned and stats() records its residual.
  Vector solve(const Vector& b, double tol, int min_steps, int max_steps, bool strict = true) {
    if (!factor_) throw SolverFailure("cholmod: solve before factor");
    if (b.size() != a_.rows()) throw InvalidArgument("SparseCholesky: rhs size mismatch");
    // a_ holds both triangles, so the residual uses the full matrix.
    return detail::refine(
        a_, b, [this](const Vector& rhs, Vector& x) { raw_solve(rhs, x); }, tol, min_steps,
        max_steps, stats_, strict);
  }

  const FactorStats& stats() const { return stats_; }

private:
  cholmod_sparse sparse_view() {
    cholmod_sparse s{};
    s.nrow = s.ncol = static_cast<std::size_t>(a_.rows());
    s.nzmax = static_cast<std::size_t>(a_.nonZeros());
    s.p = a_.outerIndexPtr();
    s.i = a_.innerIndexPtr();
    s.x = a_.valuePtr();
    s.stype = -1;
    s.itype = CHOLMOD_INT;
    s.xtype = CHOLMOD_REAL;
    s.dtype = CHOLMOD_DOUBLE;
    s.sorted = 1;
    s.packed = 1;
    return s;
  }

  void raw_solve(const Vector& b, Vector& x) {
    cholmod_dense d{};
    d.nrow = static_cast<std::size_t>(b.size());
    d.ncol = 1;
    d.nzmax = d.nrow;
    d.d = d.nrow;
    d.x = const_cast<double*>(b.data());
    d.xtype = CHOLMOD_REAL;
    d.dtype = CHOLMOD_DOUBLE;
    cholmod_dense* out = cholmod_solve(CHOLMOD_A, factor_, &d, &common_);
    if (!out) throw SolverFailure("cholmod: solve failed");
    x = Eigen::Map<const Vector>(static_cast<const double*>(out->x), b.size());
    cholmod_free_dense(&out, &common_);
  }

  CscMatrix a_;
  cholmod_common common_;
  cholmod_factor* factor_ = nullptr;
  FactorStats stats_;
};

}  // namespace ncdr
