// Batch driver for convergence studies and verification runs.
//
//   ncdr --test smooth --method interp --epsilon 1,1e-1,1e-4 --levels 4,8,16 --format csv
//   ncdr --verify --infsup
//
// Exit status: 0 all runs and checks passed, 1 numeric failure, 2 bad config.

#include "ncdr/study.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

int run(int argc, char** argv) {
  CLI::App app{"Nonconforming de Rham complex toolkit: convergence studies and verification"};
  std::string config_path;
  std::vector<std::string> tests, methods, formats;
  std::vector<double> epsilons;
  std::vector<int> levels;
  int quad_degree = 0;
  bool serial = false, verify = false, infsup = false;
  std::string out, backend;
  std::uint64_t seed = 0;

  app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--test", tests, "smooth, layer (comma list)")->delimiter(',');
  app.add_option("--method", methods, "interp, nointerp or both")->delimiter(',');
  app.add_option("--epsilon", epsilons, "perturbation parameters (comma list)")->delimiter(',');
  app.add_option("--levels", levels, "subdivisions per axis (comma list of powers of two)")
      ->delimiter(',');
  app.add_option("--quad-degree", quad_degree, "error quadrature degree");
  app.add_flag("--serial", serial, "single-threaded, byte-reproducible output (no timings)");
  app.add_option("--out", out, "output path prefix (extension added per format)");
  app.add_option("--format", formats, "csv, markdown, json (comma list)")->delimiter(',');
  app.add_flag("--verify", verify, "run the verification suite instead of a study");
  app.add_flag("--infsup", infsup, "include the dense inf-sup tier in --verify");
  app.add_option("--seed", seed, "seed for randomized checks");
  app.add_option("--backend", backend, "saddle solver: auto, direct, reduced");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  ncdr::StudyConfig cfg;
  try {
    if (!config_path.empty()) ncdr::load_config_file(config_path, cfg);
    if (!tests.empty()) cfg.tests = tests;
    if (!methods.empty()) cfg.methods = ncdr::detail::parse_methods(methods);
    if (!epsilons.empty()) cfg.epsilons = epsilons;
    if (!levels.empty()) {
      if (verify) cfg.verify_levels = levels;
      else cfg.levels = levels;
    }
    if (app.count("--quad-degree")) cfg.quad_degree = quad_degree;
    if (serial) cfg.serial = true;
    if (!out.empty()) cfg.out = out;
    if (!formats.empty()) {
      cfg.formats.clear();
      for (const auto& f : formats) cfg.formats.push_back(ncdr::detail::parse_format(f));
    }
    if (verify) cfg.verify = true;
    if (infsup) cfg.infsup = true;
    if (app.count("--seed")) cfg.seed = seed;
    if (!backend.empty()) cfg.solver.saddle_backend = ncdr::detail::parse_backend(backend);
    cfg.validate();
  } catch (const ncdr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (cfg.verify) {
      const ncdr::CertificationReport rep = ncdr::run_verify(cfg, &std::cerr);
      bool wrote = false;
      for (auto f : cfg.formats) {
        if (f == ncdr::OutputFormat::Json) {
          const std::string text = rep.to_json(!cfg.serial).dump(2) + "\n";
          if (cfg.out.empty()) std::cout << text;
          else std::ofstream(cfg.out + ".json") << text;
          wrote = true;
        }
      }
      if (!wrote) {
        if (cfg.out.empty()) rep.write_text(std::cout);
        else {
          std::ofstream os(cfg.out + ".txt");
          rep.write_text(os);
        }
      }
      std::cerr << (rep.all_passed() ? "all checks passed" : "some checks FAILED") << '\n';
      return rep.all_passed() ? 0 : 1;
    }
    const ncdr::StudyResult res = ncdr::run_study(cfg, &std::cerr);
    ncdr::write_study_outputs(cfg, res, std::cout);
    for (const auto& f : res.failures)
      std::cerr << "failed: " << f.test << ' ' << f.method << " eps=" << f.epsilon << " n=" << f.n
                << ": " << f.message << '\n';
    return res.ok() ? 0 : 1;
  } catch (const ncdr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ncdr::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
