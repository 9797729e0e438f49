#pragma once

#include "ncdr/errors.hpp"
#include "ncdr/manufactured.hpp"
#include "ncdr/solver.hpp"
#include "ncdr/verify.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace ncdr {

/// Malformed configuration file or flag value.
class ConfigError : public Error {
public:
  using Error::Error;
};

enum class OutputFormat { Csv, Markdown, Json };

struct StudyConfig {
  std::vector<std::string> tests{"smooth"};
  std::vector<Method> methods{Method::Interp};
  std::vector<double> epsilons{1.0, 1e-1, 1e-4};
  std::vector<int> levels{4, 8};
  int quad_degree = kErrorQuadratureDegree;
  bool serial = false;
  /// Output path prefix; empty writes to the console.
  std::string out;
  std::vector<OutputFormat> formats{OutputFormat::Markdown};
  bool verify = false;
  bool infsup = false;
  std::uint64_t seed = 20240607;
  SolverConfig solver{};

  std::vector<int> verify_levels{1, 2};
  int identity_level = 4;
  std::vector<double> identity_epsilons{1.0, 1e-4, 1e-6, 1e-8, 1e-10};
  std::vector<double> infsup_epsilons{1.0, 1e-3, 1e-6};
  /// Regression floor for the discrete inf-sup constant (n <= 2).
  double infsup_floor = 0.1;
  VerifyOptions checks{};

  void validate() const {
    if (tests.empty()) throw ConfigError("test: at least one test is required");
    for (const auto& t : tests)
      if (t != "smooth" && t != "layer")
        throw ConfigError("test: unknown test '" + t + "' (expected smooth or layer)");
    if (methods.empty()) throw ConfigError("method: at least one method is required");
    if (!verify) {
      if (epsilons.empty()) throw ConfigError("epsilon: at least one value is required");
      for (double e : epsilons)
        if (!(e > 0.0) || !std::isfinite(e))
          throw ConfigError("epsilon: values must be positive, got " + detail::fmt("%g", e));
      check_levels("levels", levels);
    } else {
      check_levels("verify_levels", verify_levels);
    }
    if (quad_degree < 1 || quad_degree > kMaxTetDegree)
      throw ConfigError("quad_degree: must lie in [1, " + std::to_string(kMaxTetDegree) + "]");
    if (formats.empty()) throw ConfigError("format: at least one format is required");
    try {
      solver.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }

private:
  static void check_levels(const char* field, const std::vector<int>& lv) {
    if (lv.empty()) throw ConfigError(std::string(field) + ": at least one level is required");
    for (std::size_t i = 0; i < lv.size(); ++i) {
      const int n = lv[i];
      if (n < 1 || (n & (n - 1)) != 0)
        throw ConfigError(std::string(field) + ": " + std::to_string(n) + " is not a power of two");
      if (i > 0 && n <= lv[i - 1])
        throw ConfigError(std::string(field) + ": levels must be strictly increasing");
    }
  }
};

namespace detail {

inline Method parse_method_one(const std::string& s) {
  if (s == "interp") return Method::Interp;
  if (s == "nointerp") return Method::NoInterp;
  throw ConfigError("method: unknown method '" + s + "' (expected interp, nointerp or both)");
}

inline std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& s : names) {
    if (s == "both") {
      out.push_back(Method::Interp);
      out.push_back(Method::NoInterp);
    } else {
      out.push_back(parse_method_one(s));
    }
  }
  std::vector<Method> uniq;
  for (Method m : out)
    if (std::find(uniq.begin(), uniq.end(), m) == uniq.end()) uniq.push_back(m);
  return uniq;
}

inline OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "markdown" || s == "md") return OutputFormat::Markdown;
  if (s == "json") return OutputFormat::Json;
  throw ConfigError("format: unknown format '" + s + "' (expected csv, markdown or json)");
}

inline SaddleBackend parse_backend(const std::string& s) {
  if (s == "auto") return SaddleBackend::Auto;
  if (s == "direct") return SaddleBackend::Direct;
  if (s == "reduced") return SaddleBackend::Reduced;
  throw ConfigError("solver.saddle_backend: unknown backend '" + s + "'");
}

inline SpdSolver parse_spd(const std::string& s) {
  if (s == "cg") return SpdSolver::ConjugateGradient;
  if (s == "direct") return SpdSolver::Direct;
  throw ConfigError("solver.spd: unknown solver '" + s + "' (expected cg or direct)");
}

/// Line number of a byte offset in text (1-based).
inline std::size_t line_of(const std::string& text, std::size_t byte) {
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(), text.begin() + std::min(byte, text.size()), '\n'));
}

template <class T>
T get_field(const nlohmann::json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + ": wrong type (" + std::string(j.type_name()) + ")");
  }
}

template <class T>
std::vector<T> get_list(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array()) return {get_field<T>(j, path)};
  std::vector<T> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(get_field<T>(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline void apply_solver_json(const nlohmann::json& j, SolverConfig& s) {
  if (!j.is_object()) throw ConfigError("solver: expected an object");
  for (const auto& [key, v] : j.items()) {
    const std::string path = "solver." + key;
    if (key == "spd") s.spd = parse_spd(get_field<std::string>(v, path));
    else if (key == "spd_tolerance") s.spd_tolerance = get_field<double>(v, path);
    else if (key == "spd_max_iterations") s.spd_max_iterations = get_field<int>(v, path);
    else if (key == "saddle_tolerance") s.saddle_tolerance = get_field<double>(v, path);
    else if (key == "saddle_max_refinements") s.saddle_max_refinements = get_field<int>(v, path);
    else if (key == "saddle_backend") s.saddle_backend = parse_backend(get_field<std::string>(v, path));
    else if (key == "direct_saddle_limit") s.direct_saddle_limit = get_field<Id>(v, path);
    else if (key == "load_degree") s.load_degree = get_field<int>(v, path);
    else throw ConfigError(path + ": unknown field");
  }
}

}  // namespace detail

/// Applies a JSON configuration on top of `cfg`. Unknown fields are errors.
inline void apply_config_json(const std::string& text, StudyConfig& cfg) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config: parse error at line " + std::to_string(detail::line_of(text, e.byte)) +
                      ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  using detail::get_field;
  using detail::get_list;
  for (const auto& [key, v] : j.items()) {
    if (key == "test") cfg.tests = get_list<std::string>(v, key);
    else if (key == "method") cfg.methods = detail::parse_methods(get_list<std::string>(v, key));
    else if (key == "epsilon") cfg.epsilons = get_list<double>(v, key);
    else if (key == "levels") cfg.levels = get_list<int>(v, key);
    else if (key == "quad_degree") cfg.quad_degree = get_field<int>(v, key);
    else if (key == "serial") cfg.serial = get_field<bool>(v, key);
    else if (key == "out") cfg.out = get_field<std::string>(v, key);
    else if (key == "format") {
      cfg.formats.clear();
      for (const auto& f : get_list<std::string>(v, key)) cfg.formats.push_back(detail::parse_format(f));
    } else if (key == "verify") cfg.verify = get_field<bool>(v, key);
    else if (key == "infsup") cfg.infsup = get_field<bool>(v, key);
    else if (key == "seed") cfg.seed = get_field<std::uint64_t>(v, key);
    else if (key == "verify_levels") cfg.verify_levels = get_list<int>(v, key);
    else if (key == "identity_level") cfg.identity_level = get_field<int>(v, key);
    else if (key == "identity_epsilon") cfg.identity_epsilons = get_list<double>(v, key);
    else if (key == "infsup_epsilon") cfg.infsup_epsilons = get_list<double>(v, key);
    else if (key == "infsup_floor") cfg.infsup_floor = get_field<double>(v, key);
    else if (key == "solver") detail::apply_solver_json(v, cfg.solver);
    else throw ConfigError(key + ": unknown field");
  }
}

inline void load_config_file(const std::string& path, StudyConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_json(ss.str(), cfg);
}

inline ManufacturedCase study_case(const std::string& test, double epsilon) {
  return test == "layer" ? layer_case_fields() : smooth_case_fields(epsilon);
}

/// Errors of one solve in the layout of a convergence table row (no rates).
inline ConvergenceRow make_row(const FeSpaces& spaces, const std::string& test,
                               const DecoupledSolution& sol, const ManufacturedCase& mc,
                               int quad_degree = kErrorQuadratureDegree, const Execution& exec = {}) {
  ConvergenceRow r;
  r.test = test;
  r.method = method_name(sol.method);
  r.epsilon = sol.epsilon;
  r.n = spaces.mesh().subdivisions;
  r.h = spaces.mesh().h;
  r.dof_phi = spaces.dim(Space::Phi);
  r.dof_total = 2 * spaces.dim(Space::Grad) + r.dof_phi + spaces.dim(Space::RT) + spaces.dim(Space::Q);
  r.err_phi = energy_error(spaces, sol.phi, mc.phi, sol.epsilon, sol.method == Method::Interp,
                           quad_degree, exec);
  r.err_u_l2 = compute_error(ErrorKind::L2Scalar, spaces, sol.u, mc.u, quad_degree, exec);
  r.err_u_h1 = compute_error(ErrorKind::H1SemiScalar, spaces, sol.u, mc.u, quad_degree, exec);
  return r;
}

struct StudyFailure {
  std::string test;
  std::string method;
  double epsilon = 0.0;
  int n = 0;
  std::string message;
};

struct StudyResult {
  std::vector<ConvergenceRow> rows;
  std::vector<StudyFailure> failures;
  bool ok() const { return failures.empty(); }
};

/// Runs every (test, method, eps, n). The solver for a mesh is built once per
/// method and reused across eps. Rows come out grouped by (test, method, eps)
/// with ascending n; a failed run is recorded and the rest continue.
inline StudyResult run_study(const StudyConfig& cfg, std::ostream* log = nullptr) {
  cfg.validate();
  StudyResult res;
  struct Keyed {
    std::size_t t, m, e;
    int n;
    ConvergenceRow row;
  };
  std::vector<Keyed> rows;
  SolverConfig sc = cfg.solver;
  sc.exec.serial = cfg.serial;
  for (int n : cfg.levels) {
    auto spaces = std::make_shared<const FeSpaces>(build_unit_cube_mesh(n));
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
      const Method method = cfg.methods[mi];
      std::unique_ptr<DecoupledSolver> solver;
      std::string setup_error;
      try {
        solver = std::make_unique<DecoupledSolver>(spaces, method, sc);
      } catch (const Error& e) {
        setup_error = e.what();
      }
      for (std::size_t ti = 0; ti < cfg.tests.size(); ++ti)
        for (std::size_t ei = 0; ei < cfg.epsilons.size(); ++ei) {
          const double eps = cfg.epsilons[ei];
          const std::string& test = cfg.tests[ti];
          if (!solver) {
            res.failures.push_back({test, method_name(method), eps, n, setup_error});
            continue;
          }
          try {
            const ManufacturedCase mc = study_case(test, eps);
            const DecoupledSolution sol = solver->solve(mc.f, eps);
            ConvergenceRow r = make_row(*spaces, test, sol, mc, cfg.quad_degree, sc.exec);
            if (!cfg.serial) r.solve_seconds = sol.solve_seconds;
            if (log)
              *log << test << ' ' << r.method << " eps=" << detail::fmt("%g", eps) << " n=" << n
                   << " Err=" << detail::fmt("%.4e", r.err_phi)
                   << " L2=" << detail::fmt("%.4e", r.err_u_l2)
                   << " H1=" << detail::fmt("%.4e", r.err_u_h1) << '\n';
            rows.push_back({ti, mi, ei, n, std::move(r)});
          } catch (const Error& e) {
            res.failures.push_back({test, method_name(method), eps, n, e.what()});
            if (log) *log << "FAILED " << test << ' ' << method_name(method) << " eps=" << eps
                          << " n=" << n << ": " << e.what() << '\n';
          }
        }
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Keyed& a, const Keyed& b) {
    return std::tie(a.t, a.m, a.e, a.n) < std::tie(b.t, b.m, b.e, b.n);
  });
  for (auto& k : rows) res.rows.push_back(std::move(k.row));
  // Rates need consecutive halving levels; gaps from failed runs drop them.
  try {
    fill_rates(res.rows);
  } catch (const InvalidArgument&) {
  }
  return res;
}

inline nlohmann::json study_json(const StudyResult& res) {
  nlohmann::json rows = nlohmann::json::array();
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  for (const auto& r : res.rows)
    rows.push_back({{"test", r.test},
                    {"method", r.method},
                    {"epsilon", r.epsilon},
                    {"n", r.n},
                    {"h", r.h},
                    {"dof_phi", r.dof_phi},
                    {"dof_total", r.dof_total},
                    {"err_phi", r.err_phi},
                    {"rate_phi", opt(r.rate_phi)},
                    {"err_u_l2", r.err_u_l2},
                    {"rate_u_l2", opt(r.rate_u_l2)},
                    {"err_u_h1", r.err_u_h1},
                    {"rate_u_h1", opt(r.rate_u_h1)},
                    {"solve_seconds", opt(r.solve_seconds)}});
  nlohmann::json fails = nlohmann::json::array();
  for (const auto& f : res.failures)
    fails.push_back({{"test", f.test},
                     {"method", f.method},
                     {"epsilon", f.epsilon},
                     {"n", f.n},
                     {"message", f.message}});
  return {{"rows", std::move(rows)}, {"failures", std::move(fails)}};
}

/// Structural checks on every verify level, solution identities at
/// identity_level, and the inf-sup tier when enabled.
inline CertificationReport run_verify(const StudyConfig& cfg, std::ostream* log = nullptr) {
  cfg.validate();
  VerifyOptions opt = cfg.checks;
  opt.seed = cfg.seed;
  opt.strict_rank_limit = false;
  CertificationReport rep;
  auto add = [&](const CertificationReport& r) {
    if (log) r.write_text(*log);
    rep.append(r);
  };
  add(check_unisolvence(opt));
  std::vector<std::pair<int, double>> betas;
  for (int n : cfg.verify_levels) {
    const FeSpaces spaces(build_unit_cube_mesh(n));
    add(check_complex(spaces, opt));
    add(check_commuting(spaces, opt));
    add(check_weak_continuity(spaces, opt));
    if (cfg.infsup) {
      const CertificationReport r = check_infsup(spaces, cfg.infsup_epsilons, cfg.infsup_floor);
      for (const auto& c : r.checks)
        if (!c.skipped) betas.emplace_back(n, c.measured);
      add(r);
    }
  }
  if (!cfg.infsup) {
    CheckResult c;
    c.name = "infsup.beta_h";
    c.skipped = true;
    c.detail = "inf-sup tier disabled";
    CertificationReport r;
    r.checks.push_back(c);
    add(r);
  } else if (cfg.verify_levels.size() >= 2) {
    // Mesh stability: beta_h on the two coarsest levels differ by < 50% per eps.
    const std::size_t ne = cfg.infsup_epsilons.size();
    double worst = 0.0;
    bool have = betas.size() >= 2 * ne;
    for (std::size_t k = 0; have && k < ne; ++k) {
      const double a = betas[k].second, b = betas[ne + k].second;
      worst = std::max(worst, std::abs(a - b) / std::max(a, b));
    }
    if (have) {
      CertificationReport r;
      r.checks.push_back(detail::make_check("infsup.mesh_stability", cfg.verify_levels[1], worst, 0.5,
                                            "relative change of beta_h between the two coarsest levels"));
      add(r);
    }
  }
  SolverConfig sc = cfg.solver;
  sc.exec.serial = cfg.serial;
  auto spaces = std::make_shared<const FeSpaces>(build_unit_cube_mesh(cfg.identity_level));
  for (Method m : cfg.methods) {
    DecoupledSolver solver(spaces, m, sc);
    for (const auto& test : cfg.tests)
      for (double eps : cfg.identity_epsilons) {
        const ManufacturedCase mc = study_case(test, eps);
        CertificationReport r;
        try {
          r = check_solution_identities(*spaces, solver.solve(mc.f, eps), opt);
          for (auto& c : r.checks) c.detail = test + " " + c.detail;
        } catch (const Error& e) {
          CheckResult c;
          c.name = "identity.solve";
          c.level = cfg.identity_level;
          c.detail = test + " " + method_name(m) + " eps=" + detail::fmt("%g", eps) + ": " + e.what();
          r.checks.push_back(c);
        }
        add(r);
      }
  }
  return rep;
}

/// Writes the study in every requested format; `out` empty prints to `console`.
inline void write_study_outputs(const StudyConfig& cfg, const StudyResult& res,
                                std::ostream& console) {
  for (OutputFormat f : cfg.formats) {
    std::ostringstream ss;
    const char* ext = ".csv";
    switch (f) {
      case OutputFormat::Csv: write_csv(ss, res.rows); break;
      case OutputFormat::Markdown:
        write_markdown(ss, res.rows);
        ext = ".md";
        break;
      case OutputFormat::Json:
        ss << study_json(res).dump(2) << '\n';
        ext = ".json";
        break;
    }
    if (cfg.out.empty()) {
      console << ss.str();
    } else {
      const std::string path = cfg.out + ext;
      std::ofstream os(path, std::ios::binary);
      if (!os) throw ConfigError("out: cannot write '" + path + "'");
      os << ss.str();
    }
  }
}

}  // namespace ncdr
