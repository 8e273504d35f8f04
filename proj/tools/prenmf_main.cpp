#include "prenmf/cli.hpp"
#include "prenmf/error.hpp"
#include "prenmf/fixtures.hpp"

#include <CLI11.hpp>

#include <iostream>

using prenmf::cli::RunConfig;

namespace {

void add_input(CLI::App* cmd, RunConfig& cfg, std::string& format) {
  cmd->add_option("--input,-i", cfg.input, "matrix file (CSV or MatrixMarket)");
  cmd->add_option("--fixture", cfg.fixture, "built-in example by name");
  cmd->add_option("--format", format, "csv or mm; guessed from the extension otherwise")
      ->check(CLI::IsMember({"csv", "mm", "mtx", "matrixmarket"}));
  cmd->add_option("--out,-o", cfg.out, "output directory")->capture_default_str();
  cmd->add_option("--zero-tol", cfg.zero_tol, "relative zero threshold")->capture_default_str();
  cmd->add_flag("--allow-duplicates", cfg.allow_duplicates, "accept columns that are multiples of each other");
  cmd->add_option("--epsilon", cfg.epsilons, "relaxation values, one run each")->capture_default_str();
  cmd->add_option("--alpha", cfg.alpha, "interpolation in [0, 1], or 'auto' (rank 3 only)")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preprocessing for well-posed, sparse nonnegative matrix factorization"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string format;
  std::vector<std::string> methods;

  auto* pre = app.add_subcommand("preprocess", "write P(M), B* and rho for each epsilon");
  add_input(pre, cfg, format);

  auto* fac = app.add_subcommand("factorize", "best-of-seeds NMF, Pre-NMF and sNMF with a JSON report");
  add_input(fac, cfg, format);
  fac->add_option("--rank,-r", cfg.rank, "factorization rank (default: numerical rank)");
  fac->add_option("--method", methods, "nmf, pre-nmf, snmf (repeatable)")
      ->check(CLI::IsMember({"nmf", "pre-nmf", "pre_nmf", "snmf"}));
  fac->add_option("--seeds", cfg.seeds, "number of seeds, run as 0..N-1")->capture_default_str();
  fac->add_option("--max-outer", cfg.max_outer, "outer iterations per run")->capture_default_str();
  fac->add_option("--extra-iters", cfg.extra_iters, "fixed-support sweeps for the improved error")->capture_default_str();
  fac->add_option("--target-su", cfg.target_su, "snmf sparsity target when no pre-nmf run is requested");
  fac->add_option("--pgm", cfg.pgm_shape, "HxW: dump each U column as a PGM image");
  fac->add_flag("--serial", cfg.serial, "run seeds one after another");

  auto* npp = app.add_subcommand("npp", "rank-3 geometry: alpha bar, f_k samples, solution polygons");
  add_input(npp, cfg, format);
  npp->add_option("--fk", cfg.fk_steps, "tangent steps in f_k")->capture_default_str();
  npp->add_option("--samples", cfg.fk_samples, "grid size for f_k on [0, 1)")->capture_default_str();

  auto* uq = app.add_subcommand("uniqueness", "sparsity-pattern uniqueness certificate");
  add_input(uq, cfg, format);
  uq->add_option("--rank,-r", cfg.rank, "rank to certify (default: numerical rank)");
  uq->add_option("--seeds", cfg.seeds, "seeds for the fallback factorization")->capture_default_str();
  uq->add_option("--max-outer", cfg.max_outer, "outer iterations of the fallback factorization")->capture_default_str();

  app.add_subcommand("fixtures", "list the built-in examples");

  CLI11_PARSE(app, argc, argv);
  try {
    if (!format.empty()) cfg.format = prenmf::io::format_from_string(format);
    if (!methods.empty()) cfg.methods = methods;
    nlohmann::json report;
    if (app.got_subcommand("fixtures")) {
      for (const auto& name : prenmf::fixture_names()) std::cout << name << '\n';
      return 0;
    } else if (app.got_subcommand(pre)) {
      report = prenmf::cli::cmd_preprocess(cfg);
    } else if (app.got_subcommand(fac)) {
      report = prenmf::cli::cmd_factorize(cfg);
    } else if (app.got_subcommand(npp)) {
      report = prenmf::cli::cmd_npp(cfg);
    } else {
      report = prenmf::cli::cmd_uniqueness(cfg);
    }
    std::cout << report.dump(2) << '\n';
  } catch (const prenmf::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
