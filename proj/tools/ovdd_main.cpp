// Command-line front end: corrupt, solve, energy, phantom.

#include "ovdd/harness.hpp"

#include <CLI11.hpp>

#include <exception>
#include <iostream>

namespace {

void add_model_options(CLI::App& cmd, ovdd::RunConfig& cfg) {
  cmd.add_option("--model", cfg.model, "ccv, tvl1 or hessl1")
      ->check(CLI::IsMember({"ccv", "tvl1", "hessl1"}));
  cmd.add_option("--alpha", cfg.alpha, "Fidelity weight (default 10, 10, 1)");
  cmd.add_option("--c1", cfg.c1, "Chan-Vese foreground intensity");
  cmd.add_option("--c2", cfg.c2, "Chan-Vese background intensity");
  cmd.add_option("--kernel-halfwidth", cfg.kernel_halfwidth, "Blur half-width l (kernel 2l+1)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Overlapping domain decomposition solvers for variational imaging"};
  app.require_subcommand(1);
  ovdd::RunConfig cfg;
  std::string subdomains = "1x1";
  ovdd::Index phantom_size = 128;

  auto* corrupt = app.add_subcommand("corrupt", "Blur and/or add salt-and-pepper noise");
  corrupt->add_option("--input", cfg.input, "Clean PGM image")->required();
  corrupt->add_option("--output", cfg.output, "Corrupted PGM image")->required();
  corrupt->add_option("--kernel-halfwidth", cfg.kernel_halfwidth, "Blur half-width l (kernel 2l+1)");
  corrupt->add_option("--noise-sp", cfg.noise_sp, "Salt-and-pepper fraction in [0, 1]");
  corrupt->add_option("--seed", cfg.seed, "Noise seed");

  auto* solve = app.add_subcommand("solve", "Run the decomposed solver (or the baseline for 1x1)");
  add_model_options(*solve, cfg);
  solve->add_option("--input", cfg.input, "Data image f (PGM)")->required();
  solve->add_option("--ground-truth", cfg.ground_truth, "Clean image for PSNR");
  solve->add_option("--output", cfg.output, "Result image (PGM)");
  solve->add_option("--metrics", cfg.metrics, "Per-iteration metrics CSV");
  solve->add_option("--subdomains", subdomains, "Partition PxQ");
  solve->add_option("--eta", cfg.eta, "Penalty parameter");
  solve->add_option("--tol", cfg.tol, "Stop-rule tolerance");
  solve->add_option("--max-outer", cfg.max_outer, "Outer (or baseline) iteration budget");
  solve->add_option("--inner-iters", cfg.inner_iters, "Local solver iterations per outer step");
  solve->add_option("--workers", cfg.workers, "Worker threads");
  solve->add_option("--reference-energy", cfg.reference_energy, "Known minimum energy E*");
  solve->add_option("--compute-reference-iters", cfg.compute_reference_iters,
                    "Compute E* with this many baseline iterations");
  solve->add_flag("--omit-timing", cfg.omit_timing, "Leave elapsed_s cells empty");

  auto* energy = app.add_subcommand("energy", "Print the model energy of an image");
  add_model_options(*energy, cfg);
  energy->add_option("--input", cfg.input, "Data image f (PGM)")->required();
  energy->add_option("--eval", cfg.eval, "Image u to evaluate (default: the data image)");

  auto* phantom = app.add_subcommand("phantom", "Write the synthetic test scene");
  phantom->add_option("--size", phantom_size, "Image side length")->check(CLI::Range(2, 1 << 14));
  phantom->add_option("--output", cfg.output, "Output PGM")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ovdd::kUsageError;
  }

  try {
    if (*corrupt) return ovdd::cmd_corrupt(cfg, std::cerr);
    if (*energy) return ovdd::cmd_energy(cfg, std::cout);
    if (*phantom) return ovdd::cmd_phantom(phantom_size, phantom_size, cfg.output);
    const auto [P, Q] = ovdd::parse_subdomains(subdomains);
    cfg.row_tiles = P;
    cfg.col_tiles = Q;
    return ovdd::cmd_solve(cfg, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ovdd::kUsageError;
  }
}
