#pragma once

// Experiment plumbing behind the command-line tool: configuration, model
// construction, corruption, solver orchestration and the metrics CSV.

#include "ovdd/alm.hpp"
#include "ovdd/models.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace ovdd {

struct RunConfig {
  std::string model = "ccv";
  std::optional<double> alpha;  // model default when unset
  double c1 = 0.6;
  double c2 = 0.1;
  std::optional<int> kernel_halfwidth;  // TV-L1 defaults to 4 (9x9)
  double noise_sp = 0;
  std::uint64_t seed = 0;
  int row_tiles = 1;
  int col_tiles = 1;
  std::optional<double> eta;
  std::optional<double> tol;
  int max_outer = 1000;
  std::optional<int> inner_iters;
  int workers = 1;
  std::string input;
  std::string ground_truth;
  std::string output;
  std::string metrics;
  std::string eval;  // `energy`: image to evaluate (defaults to the input)
  std::optional<double> reference_energy;
  std::optional<int> compute_reference_iters;
  bool omit_timing = false;
};

/// Exit statuses of the command-line tool.
enum ExitCode : int { kConverged = 0, kUsageError = 1, kBudgetExhausted = 2 };

/// Parses "PxQ" into (P, Q); throws std::invalid_argument when malformed.
std::pair<int, int> parse_subdomains(const std::string& text);

Model<double> build_model(const RunConfig& cfg, ScalarFieldd f);
AlmParams<double> build_params(const RunConfig& cfg, const Model<double>& model);

inline constexpr const char* kCsvHeader =
    "n,energy,rel_gap,consensus_residual,d_n,e_n,psnr,elapsed_s";
std::string csv_row(const DiagRecord& r, bool omit_timing);

/// Path of the thresholded mask written next to a Chan-Vese result.
std::string mask_path(const std::string& output);

int cmd_corrupt(const RunConfig& cfg, std::ostream& log);
int cmd_solve(const RunConfig& cfg, std::ostream& log);
int cmd_energy(const RunConfig& cfg, std::ostream& out);
int cmd_phantom(Index rows, Index cols, const std::string& output);

}  // namespace ovdd
