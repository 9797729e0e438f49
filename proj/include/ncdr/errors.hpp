#pragma once

#include "ncdr/core.hpp"
#include "ncdr/dofmap.hpp"
#include "ncdr/fe_spaces.hpp"
#include "ncdr/field.hpp"
#include "ncdr/interp_ops.hpp"
#include "ncdr/quadrature.hpp"

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ncdr {

enum class ErrorKind {
  L2Scalar,            // ||u - u_h||_0
  H1SemiScalar,        // |u - u_h|_1
  BrokenH1SemiVector,  // |phi - phi_h|_{1,h}
  L2VsInd,             // ||phi - I^ND phi_h||_0
  L2Vector,            // ||phi - phi_h||_0
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::L2Scalar: return "l2_scalar";
    case ErrorKind::H1SemiScalar: return "h1semi_scalar";
    case ErrorKind::BrokenH1SemiVector: return "broken_h1semi_vector";
    case ErrorKind::L2VsInd: return "l2_vs_ind";
    case ErrorKind::L2Vector: return "l2_vector";
  }
  return "?";
}

inline constexpr int kErrorQuadratureDegree = 8;

/// Error in the requested norm. Element contributions are summed in element
/// order.
inline double compute_error(ErrorKind kind, const FeSpaces& spaces, const FeFunction& fe,
                            const AnalyticField& exact, int degree = kErrorQuadratureDegree,
                            const Execution& exec = {}) {
  const ElementKind ek = element_of(fe.space);
  const bool scalar_kind = kind == ErrorKind::L2Scalar || kind == ErrorKind::H1SemiScalar;
  if (scalar_kind != (element_traits(ek).arity == Arity::Scalar))
    throw IntegrityError(std::string("compute_error: ") + error_kind_name(kind) +
                         " does not apply to a " + space_name(fe.space) + " function");
  if (kind == ErrorKind::L2VsInd && fe.space != Space::Phi)
    throw IntegrityError("compute_error: l2_vs_ind needs a Phi function");
  if (fe.coeffs.size() != spaces.dim(fe.space))
    throw IntegrityError("compute_error: coefficient length does not match the DoF map");
  if (exact.arity != (scalar_kind ? Arity::Scalar : Arity::Vector))
    throw IntegrityError("compute_error: exact field has the wrong arity");

  const SimplicialMesh& mesh = spaces.mesh();
  const DofMap& map = spaces[fe.space];
  const auto& r = get_rule(EntityKind::Tet, degree);
  std::vector<double> contrib(static_cast<std::size_t>(mesh.num_tets()), 0.0);
  parallel_chunks(mesh.num_tets(), exec, [&](Id begin, Id end, unsigned) {
    for (Id t = begin; t < end; ++t) {
      const TetGeometry g = tet_geometry(mesh, t);
      Vector c = gather(map, t, fe.coeffs);
      ElementKind use = ek;
      if (kind == ErrorKind::L2VsInd) {
        c = c.head(12).eval();
        use = ElementKind::Nedelec2;
      }
      const LocalBasis basis = local_nodal_basis(use, g);
      const unsigned what =
          (kind == ErrorKind::H1SemiScalar || kind == ErrorKind::BrokenH1SemiVector) ? kGradients
                                                                                      : kValues;
      double acc = 0.0;
      for (Eigen::Index q = 0; q < r.size(); ++q) {
        const Bary b{r.points(q, 0), r.points(q, 1), r.points(q, 2), r.points(q, 3)};
        const Vec3 x = g.point(b);
        const ShapeTable st = basis.tabulate(g, b, what);
        double d2 = 0.0;
        switch (kind) {
          case ErrorKind::L2Scalar: {
            const double e = exact.value(x) - (st.values * c)(0);
            d2 = e * e;
            break;
          }
          case ErrorKind::H1SemiScalar:
            d2 = (exact.gradient(x) - st.gradients * c).squaredNorm();
            break;
          case ErrorKind::BrokenH1SemiVector: {
            const Vector jh = st.gradients * c;  // row 3i+k = d v_i / d x_k
            const Mat3 J = exact.jacobian(x);
            for (int i = 0; i < 3; ++i)
              for (int k = 0; k < 3; ++k) {
                const double e = J(i, k) - jh[3 * i + k];
                d2 += e * e;
              }
            break;
          }
          case ErrorKind::L2VsInd:
          case ErrorKind::L2Vector:
            d2 = (exact.vector(x) - st.values * c).squaredNorm();
            break;
        }
        acc += r.weights[q] * d2;
      }
      contrib[static_cast<std::size_t>(t)] = acc * g.volume;
    }
  });
  double total = 0.0;
  for (double v : contrib) total += v;
  return std::sqrt(total);
}

/// Err(phi) with the Nedelec interpolant, or Err_0(phi) with phi_h itself.
inline double energy_error(const FeSpaces& spaces, const FeFunction& phi_h,
                           const AnalyticField& phi, double epsilon, bool through_ind,
                           int degree = kErrorQuadratureDegree, const Execution& exec = {}) {
  const double h1 = compute_error(ErrorKind::BrokenH1SemiVector, spaces, phi_h, phi, degree, exec);
  const double l2 = compute_error(through_ind ? ErrorKind::L2VsInd : ErrorKind::L2Vector, spaces,
                                  phi_h, phi, degree, exec);
  return std::sqrt(epsilon * epsilon * h1 * h1 + l2 * l2);
}

/// rate_k = log2(e_{k-1} / e_k); the first entry is absent. Consecutive h
/// values must halve.
inline std::vector<std::optional<double>> convergence_rates(const std::vector<double>& h,
                                                            const std::vector<double>& e) {
  if (h.size() != e.size()) throw InvalidArgument("convergence_rates: size mismatch");
  if (h.size() < 2) throw InvalidArgument("convergence_rates: need at least two levels");
  std::vector<std::optional<double>> out(h.size());
  for (std::size_t k = 1; k < h.size(); ++k) {
    if (!(std::abs(h[k - 1] / h[k] - 2.0) <= 1e-9))
      throw InvalidArgument("convergence_rates: level sequence does not halve h");
    out[k] = std::log2(e[k - 1] / e[k]);
  }
  return out;
}

struct ConvergenceRow {
  std::string test;
  std::string method;
  double epsilon = 0.0;
  int n = 0;
  double h = 0.0;
  Id dof_phi = 0;
  Id dof_total = 0;
  double err_phi = 0.0;
  double err_u_l2 = 0.0;
  double err_u_h1 = 0.0;
  std::optional<double> rate_phi, rate_u_l2, rate_u_h1;
  std::optional<double> solve_seconds;
};

/// Fills the rate columns for each run of rows sharing (test, method, eps).
inline void fill_rates(std::vector<ConvergenceRow>& rows) {
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i + 1;
    while (j < rows.size() && rows[j].test == rows[i].test && rows[j].method == rows[i].method &&
           rows[j].epsilon == rows[i].epsilon)
      ++j;
    rows[i].rate_phi = rows[i].rate_u_l2 = rows[i].rate_u_h1 = std::nullopt;
    if (j - i >= 2) {
      std::vector<double> h, a, b, c;
      for (std::size_t k = i; k < j; ++k) {
        h.push_back(rows[k].h);
        a.push_back(rows[k].err_phi);
        b.push_back(rows[k].err_u_l2);
        c.push_back(rows[k].err_u_h1);
      }
      const auto ra = convergence_rates(h, a), rb = convergence_rates(h, b),
                 rc = convergence_rates(h, c);
      for (std::size_t k = i; k < j; ++k) {
        rows[k].rate_phi = ra[k - i];
        rows[k].rate_u_l2 = rb[k - i];
        rows[k].rate_u_h1 = rc[k - i];
      }
    }
    i = j;
  }
}

inline constexpr const char* kCsvHeader =
    "test,method,epsilon,n,h,dof_phi,dof_total,err_phi,rate_phi,err_u_l2,rate_u_l2,err_u_h1,"
    "rate_u_h1,solve_seconds";

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::string opt_fmt(const char* f, const std::optional<double>& v) {
  return v ? fmt(f, *v) : std::string();
}

}  // namespace detail

inline void write_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows) {
  os << kCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.test << ',' << r.method << ',' << detail::fmt("%.6g", r.epsilon) << ',' << r.n << ','
       << detail::fmt("%.10e", r.h) << ',' << r.dof_phi << ',' << r.dof_total << ','
       << detail::fmt("%.10e", r.err_phi) << ',' << detail::opt_fmt("%.4f", r.rate_phi) << ','
       << detail::fmt("%.10e", r.err_u_l2) << ',' << detail::opt_fmt("%.4f", r.rate_u_l2) << ','
       << detail::fmt("%.10e", r.err_u_h1) << ',' << detail::opt_fmt("%.4f", r.rate_u_h1) << ','
       << detail::opt_fmt("%.3f", r.solve_seconds) << '\n';
  }
}

/// Aligned markdown table in the layout of a convergence study.
inline void write_markdown(std::ostream& os, const std::vector<ConvergenceRow>& rows) {
  const std::vector<std::string> head = {"test", "method", "eps",  "n",    "Err(phi)", "rate",
                                         "L2(u)", "rate",  "H1(u)", "rate"};
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows)
    cells.push_back({r.test, r.method, detail::fmt("%g", r.epsilon), std::to_string(r.n),
                     detail::fmt("%.3e", r.err_phi), detail::opt_fmt("%.2f", r.rate_phi),
                     detail::fmt("%.3e", r.err_u_l2), detail::opt_fmt("%.2f", r.rate_u_l2),
                     detail::fmt("%.3e", r.err_u_h1), detail::opt_fmt("%.2f", r.rate_u_h1)});
  std::vector<std::size_t> w(head.size());
  for (std::size_t c = 0; c < head.size(); ++c) {
    w[c] = head[c].size();
    for (const auto& row : cells) w[c] = std::max(w[c], row[c].size());
  }
  auto line = [&](const std::vector<std::string>& v) {
    os << '|';
    for (std::size_t c = 0; c < v.size(); ++c)
      os << ' ' << v[c] << std::string(w[c] - v[c].size(), ' ') << " |";
    os << '\n';
  };
  line(head);
  os << '|';
  for (std::size_t c = 0; c < head.size(); ++c) os << std::string(w[c] + 2, '-') << '|';
  os << '\n';
  for (const auto& row : cells) line(row);
}

}  // namespace ncdr
