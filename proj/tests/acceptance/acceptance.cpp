// Acceptance run. Prints one PASS/FAIL line per criterion followed by
// indented measurements; exits nonzero when any criterion fails.
//
// NCDR_ACCEPT_MAX_LEVEL caps the finest mesh of the table runs (default 16).

#include "ncdr/ncdr.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace ncdr;

namespace {

struct Outcome {
  bool passed = true;
  std::vector<std::string> notes;

  void note(const std::string& s) { notes.push_back(s); }
  void require(bool ok, const std::string& s) {
    if (!ok) passed = false;
    notes.push_back(std::string(ok ? "ok   " : "MISS ") + s);
  }
};

std::vector<std::pair<int, std::string>> g_summary;

void report(int id, const std::string& title, const Outcome& o, double seconds) {
  std::printf("[%s] criterion %d: %s (%.1f s)\n", o.passed ? "PASS" : "FAIL", id, title.c_str(),
              seconds);
  for (const auto& n : o.notes) std::printf("        %s\n", n.c_str());
  std::fflush(stdout);
  g_summary.emplace_back(o.passed ? 1 : 0, "criterion " + std::to_string(id) + ": " + title);
}

std::string f(const char* fmt, double v) { return detail::fmt(fmt, v); }

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

// Reference values: {Err, L2, H1} per level n = 4, 8, 16, 32.
struct RefRow {
  double err, l2, h1;
};
using RefTable = std::map<double, std::vector<RefRow>>;

const RefTable kSmooth = {
    {1.0, {{7.862e+00, 1.098e-01, 6.965e-01}, {4.924e+00, 4.378e-02, 2.887e-01},
           {2.776e+00, 1.429e-02, 9.735e-02}, {1.466e+00, 4.101e-03, 2.857e-02}}},
    {1e-1, {{9.538e-01, 6.889e-02, 4.656e-01}, {5.309e-01, 2.175e-02, 1.610e-01},
            {2.842e-01, 6.373e-03, 4.913e-02}, {1.476e-01, 1.772e-03, 1.395e-02}}},
    {1e-4, {{2.572e-01, 9.082e-03, 1.985e-01}, {7.295e-02, 1.118e-03, 5.645e-02},
            {1.910e-02, 1.376e-04, 1.483e-02}, {4.838e-03, 1.711e-05, 3.765e-03}}},
};
// Rates listed for levels 8, 16, 32.
const std::map<double, std::vector<RefRow>> kSmoothRates = {
    {1.0, {{0.68, 1.33, 1.27}, {0.83, 1.62, 1.57}, {0.92, 1.80, 1.77}}},
    {1e-1, {{0.85, 1.66, 1.53}, {0.90, 1.77, 1.71}, {0.95, 1.85, 1.82}}},
    {1e-4, {{1.82, 3.02, 1.81}, {1.93, 3.02, 1.93}, {1.98, 3.01, 1.98}}},
};
const std::vector<RefRow> kLayerInterp = {{1.692e-01, 4.981e-03, 1.332e-01},
                                          {4.499e-02, 6.038e-04, 3.556e-02},
                                          {1.148e-02, 7.453e-05, 9.089e-03},
                                          {2.888e-03, 9.287e-06, 2.885e-03}};
const std::vector<RefRow> kLayerInterpRates = {{1.91, 3.04, 1.91}, {1.97, 3.02, 1.97}, {1.99, 3.00, 1.99}};
const std::vector<RefRow> kLayerNoInterpRates = {{0.59, 1.12, 0.72}, {0.53, 1.04, 0.61}, {0.51, 1.02, 0.56}};

int level_index(int n) { return n == 4 ? 0 : n == 8 ? 1 : n == 16 ? 2 : 3; }

struct Run {
  ConvergenceRow row;
  double lambda, divp, curl, indgrad;
};

// key: test, method, eps -> rows by level
std::map<std::tuple<std::string, std::string, double>, std::vector<Run>> g_runs;

void solve_tables(const std::vector<int>& levels) {
  for (int n : levels) {
    auto spaces = std::make_shared<const FeSpaces>(build_unit_cube_mesh(n));
    {
      DecoupledSolver s(spaces, Method::Interp);
      for (double eps : {1.0, 1e-1, 1e-4}) {
        const auto mc = smooth_case_fields(eps);
        const auto sol = s.solve(mc.f, eps);
        g_runs[{"smooth", "interp", eps}].push_back(
            {make_row(*spaces, "smooth", sol, mc), sol.lambda_l2, sol.div_p_l2, sol.curl_phi_l2,
             sol.ind_minus_grad});
      }
      for (double eps : {1e-6, 1e-8, 1e-10}) {
        const auto mc = layer_case_fields();
        const auto sol = s.solve(mc.f, eps);
        g_runs[{"layer", "interp", eps}].push_back(
            {make_row(*spaces, "layer", sol, mc), sol.lambda_l2, sol.div_p_l2, sol.curl_phi_l2,
             sol.ind_minus_grad});
      }
    }
    {
      DecoupledSolver s(spaces, Method::NoInterp);
      const auto mc = layer_case_fields();
      const auto sol = s.solve(mc.f, 1e-6);
      g_runs[{"layer", "nointerp", 1e-6}].push_back(
          {make_row(*spaces, "layer", sol, mc), sol.lambda_l2, sol.div_p_l2, sol.curl_phi_l2,
           sol.ind_minus_grad});
    }
    std::printf("        (solved level n=%d)\n", n);
    std::fflush(stdout);
  }
  for (auto& [key, runs] : g_runs) {
    std::vector<ConvergenceRow> rows;
    for (auto& r : runs) rows.push_back(r.row);
    fill_rates(rows);
    for (std::size_t i = 0; i < rows.size(); ++i) runs[i].row = rows[i];
  }
}

void compare_values(Outcome& o, const std::string& label, const ConvergenceRow& r, const RefRow& ref,
                    bool err, bool l2, bool h1, double tol = 0.05) {
  auto one = [&](const char* name, double got, double want) {
    o.require(rel(got, want) <= tol, label + " n=" + std::to_string(r.n) + " " + name + " " +
                                         f("%.4e", got) + " vs " + f("%.3e", want) + " (" +
                                         f("%+.1f%%", 100 * (got - want) / want) + ")");
  };
  if (err) one("Err", r.err_phi, ref.err);
  if (l2) one("L2", r.err_u_l2, ref.l2);
  if (h1) one("H1", r.err_u_h1, ref.h1);
}

void compare_rate(Outcome& o, const std::string& label, int n, const char* name,
                  const std::optional<double>& got, double want, double tol) {
  if (!got) return;
  o.require(std::abs(*got - want) <= tol, label + " n=" + std::to_string(n) + " rate " + name + " " +
                                              f("%.2f", *got) + " vs " + f("%.2f", want) + " (tol " +
                                              f("%.2f", tol) + ")");
}

// 1. Structural identities.
void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  for (int n : {1, 2}) {
    const FeSpaces spaces(build_unit_cube_mesh(n));
    const auto rep = check_complex(spaces);
    for (const auto& c : rep.checks)
      o.require(c.passed, "n=" + std::to_string(n) + " " + c.name + " measured " + f("%.3g", c.measured) +
                              (c.detail.empty() ? "" : " (" + c.detail + ")"));
  }
  const auto uni = check_unisolvence();
  for (const auto& c : uni.checks)
    if (c.name == "unisolvence.PhiNC" || c.name == "unisolvence.WNC")
      o.require(c.passed, c.name + " max condition " + f("%.3g", c.measured) + " over 100 random tets");
  const double secs = detail::seconds_since(t0);
  o.require(secs < 10.0, "runtime " + f("%.2f", secs) + " s < 10 s");
  report(1, "structural identities and unisolvence", o, secs);
}

// 2. Commuting diagrams.
void criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  for (int n : {1, 2}) {
    const FeSpaces spaces(build_unit_cube_mesh(n));
    for (const auto& c : check_commuting(spaces).checks)
      o.require(c.passed, "n=" + std::to_string(n) + " " + c.name + " residual " + f("%.2e", c.measured));
  }
  report(2, "commuting diagrams", o, detail::seconds_since(t0));
}

// 3. Solution identities for every interp solve.
void criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  auto spaces = std::make_shared<const FeSpaces>(build_unit_cube_mesh(4));
  DecoupledSolver s(spaces, Method::Interp);
  double worst = 0.0;
  for (const std::string test : {"smooth", "layer"})
    for (double eps : {1.0, 1e-4, 1e-6, 1e-8, 1e-10}) {
      const auto mc = study_case(test, eps);
      const auto rep = check_solution_identities(*spaces, s.solve(mc.f, eps));
      for (const auto& c : rep.checks) {
        worst = std::max(worst, c.measured);
        if (!c.passed) o.require(false, test + " " + c.name + " " + c.detail + " " + f("%.2e", c.measured));
      }
    }
  o.require(worst <= 1e-8, "n=4 smooth+layer, eps in {1,1e-4,1e-6,1e-8,1e-10}: max identity residual " +
                               f("%.2e", worst));
  double worst_tables = 0.0;
  int count = 0;
  for (const auto& [key, runs] : g_runs) {
    if (std::get<1>(key) != "interp") continue;
    for (const auto& r : runs) {
      worst_tables = std::max({worst_tables, r.lambda, r.divp, r.curl, r.indgrad});
      ++count;
    }
  }
  o.require(worst_tables <= 1e-8, "table runs (" + std::to_string(count) +
                                      " interp solves): max identity residual " + f("%.2e", worst_tables));
  report(3, "solution identities", o, detail::seconds_since(t0));
}

// 4. Smooth case.
void criterion4() {
  Outcome o;
  for (double eps : {1.0, 1e-1, 1e-4}) {
    const auto& runs = g_runs.at({"smooth", "interp", eps});
    const std::string label = "eps=" + f("%g", eps);
    for (const auto& r : runs) {
      const int k = level_index(r.row.n);
      compare_values(o, label, r.row, kSmooth.at(eps)[static_cast<std::size_t>(k)], true, true, true);
      if (k > 0) {
        const auto& rr = kSmoothRates.at(eps)[static_cast<std::size_t>(k - 1)];
        compare_rate(o, label, r.row.n, "Err", r.row.rate_phi, rr.err, 0.1);
        compare_rate(o, label, r.row.n, "L2", r.row.rate_u_l2, rr.l2, 0.1);
        compare_rate(o, label, r.row.n, "H1", r.row.rate_u_h1, rr.h1, 0.1);
      }
    }
  }
  report(4, "smooth case values (5%) and rates (+-0.1)", o, 0.0);
}

// 5. Layer case, interp.
void criterion5() {
  Outcome o;
  for (double eps : {1e-6, 1e-8}) {
    const auto& runs = g_runs.at({"layer", "interp", eps});
    const std::string label = "eps=" + f("%g", eps);
    for (const auto& r : runs) {
      const int k = level_index(r.row.n);
      compare_values(o, label, r.row, kLayerInterp[static_cast<std::size_t>(k)], true, true, true);
      if (k > 0 && k < 3) {
        const auto& rr = kLayerInterpRates[static_cast<std::size_t>(k - 1)];
        compare_rate(o, label, r.row.n, "Err", r.row.rate_phi, rr.err, 0.1);
        compare_rate(o, label, r.row.n, "L2", r.row.rate_u_l2, rr.l2, 0.1);
      }
    }
  }
  const auto& a = g_runs.at({"layer", "interp", 1e-6});
  const auto& b = g_runs.at({"layer", "interp", 1e-8});
  const auto& c = g_runs.at({"layer", "interp", 1e-10});
  double spread = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (const auto* other : {&b[i], &c[i]}) {
      spread = std::max({spread, rel(other->row.err_phi, a[i].row.err_phi),
                         rel(other->row.err_u_l2, a[i].row.err_u_l2),
                         rel(other->row.err_u_h1, a[i].row.err_u_h1)});
    }
  o.require(spread < 5e-4, "eps 1e-6/1e-8/1e-10 rows agree to 3 digits: max relative spread " +
                               f("%.2e", spread));
  report(5, "layer case, interp: values (5%), rates (+-0.1), eps-independence", o, 0.0);
}

// 6. Layer case, nointerp.
void criterion6() {
  Outcome o;
  const auto& runs = g_runs.at({"layer", "nointerp", 1e-6});
  for (const auto& r : runs) {
    const int k = level_index(r.row.n);
    o.note("n=" + std::to_string(r.row.n) + " Err0 " + f("%.4e", r.row.err_phi) + " L2 " +
           f("%.4e", r.row.err_u_l2) + " H1 " + f("%.4e", r.row.err_u_h1));
    if (k > 0) {
      const auto& rr = kLayerNoInterpRates[static_cast<std::size_t>(k - 1)];
      compare_rate(o, "eps=1e-6", r.row.n, "Err0", r.row.rate_phi, rr.err, 0.1);
      compare_rate(o, "eps=1e-6", r.row.n, "H1", r.row.rate_u_h1, rr.h1, 0.15);
    }
  }
  report(6, "layer case, nointerp: half-order rates", o, 0.0);
}

// 7. Oracles.
void criterion7() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  for (double eps : {1.0, 1e-1, 1e-4}) {
    const auto mc = smooth_case_fields(eps);
    const FdReport r = fd_validate_source(mc.u, mc.f, eps);
    o.require(r.passed, "eps=" + f("%g", eps) + " source vs finite differences at " +
                            std::to_string(r.samples) + " points: " + f("%.2e", r.max_relative_deviation));
  }
  // Barycentric monomials: mean over the simplex of prod l_i^a_i = prod a_i! d! / (|a| + d)!.
  double worst = 0.0;
  auto lf = [](int k) { return std::lgamma(k + 1.0); };
  const struct {
    EntityKind kind;
    int dim, max_degree;
  } kinds[] = {{EntityKind::Edge, 1, 30}, {EntityKind::Triangle, 2, kMaxTriangleDegree},
               {EntityKind::Tet, 3, kMaxTetDegree}};
  int rules = 0;
  for (const auto& k : kinds)
    for (int deg = 0; deg <= k.max_degree; ++deg) {
      const auto& rule = get_rule(k.kind, deg);
      ++rules;
      std::vector<int> a(static_cast<std::size_t>(k.dim + 1), 0);
      // Enumerate all exponent vectors with |a| <= deg.
      std::function<void(int, int)> rec = [&](int pos, int left) {
        if (pos == k.dim) {
          a[static_cast<std::size_t>(pos)] = 0;
          for (int last = 0; last <= left; ++last) {
            a[static_cast<std::size_t>(pos)] = last;
            int total = 0;
            double lnum = lf(k.dim);
            for (int e : a) {
              total += e;
              lnum += lf(e);
            }
            const double exact = std::exp(lnum - lf(total + k.dim));
            double q = 0.0;
            for (Eigen::Index i = 0; i < rule.size(); ++i) {
              double v = 1.0;
              for (int c = 0; c <= k.dim; ++c) v *= std::pow(rule.points(i, c), a[static_cast<std::size_t>(c)]);
              q += rule.weights[i] * v;
            }
            worst = std::max(worst, std::abs(q - exact) / exact);
          }
          return;
        }
        for (int e = 0; e <= left; ++e) {
          a[static_cast<std::size_t>(pos)] = e;
          rec(pos + 1, left - e);
        }
      };
      rec(0, deg);
    }
  o.require(worst <= 1e-12, std::to_string(rules) + " rules, exhaustive monomial exactness: max relative error " +
                                f("%.2e", worst));
  report(7, "oracle checks", o, detail::seconds_since(t0));
}

// 8. Determinism.
void criterion8() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  StudyConfig cfg;
  cfg.tests = {"smooth", "layer"};
  cfg.methods = {Method::Interp, Method::NoInterp};
  cfg.epsilons = {1.0, 1e-4};
  cfg.levels = {2, 4};
  cfg.serial = true;
  std::string first, second;
  for (std::string* out : {&first, &second}) {
    std::ostringstream ss;
    write_csv(ss, run_study(cfg).rows);
    *out = ss.str();
  }
  o.require(!first.empty() && first == second,
            "two serial studies (" + std::to_string(std::count(first.begin(), first.end(), '\n')) +
                " CSV lines) byte-identical");
  report(8, "determinism", o, detail::seconds_since(t0));
}

}  // namespace

int main() {
  int max_level = 16;
  if (const char* s = std::getenv("NCDR_ACCEPT_MAX_LEVEL")) max_level = std::atoi(s);
  std::vector<int> levels;
  for (int n = 4; n <= max_level; n *= 2) levels.push_back(n);

  criterion1();
  criterion2();
  criterion7();
  criterion8();
  const auto t0 = std::chrono::steady_clock::now();
  std::printf("        table runs on levels");
  for (int n : levels) std::printf(" %d", n);
  std::printf("\n");
  solve_tables(levels);
  std::printf("        table runs took %.1f s\n", detail::seconds_since(t0));
  criterion3();
  criterion4();
  criterion5();
  criterion6();

  std::printf("\nsummary\n");
  int failed = 0;
  std::sort(g_summary.begin(), g_summary.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  for (const auto& [ok, name] : g_summary) {
    std::printf("  %s %s\n", ok ? "PASS" : "FAIL", name.c_str());
    failed += ok ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(g_summary.size()) - failed, g_summary.size());
  return failed == 0 ? 0 : 1;
}
