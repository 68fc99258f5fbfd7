#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "swcs/adapt.hpp"

namespace swcs::cli {

// Exit codes.
inline constexpr int kExitOk = 0;          // converged, or stopped by the wall-clock budget
inline constexpr int kExitRuntime = 1;     // parse failure, numerical failure, failed scan point
inline constexpr int kExitUsage = 2;       // bad flags, invalid values, missing input files
inline constexpr int kExitNotConverged = 3;  // max-iter or stalled

struct RunSpec {
  std::string fcidump;
  std::string method = "adapt";  // adapt | uccsd-vqe
  int epsilon_exp = 2;
  std::size_t ncut = 0;          // 0: no count truncation
  double trunc_threshold = 0.0;  // 0: no threshold truncation
  std::string strategy = "bfgs";
  std::vector<std::size_t> schedule;  // bootstrap n_cut values; 0 means untruncated
  int max_iter = 200;
  double budget_seconds = 0.0;
  int threads = 1;
  std::string out_dir = "swcs_out";
  std::string checkpoint_in;
  std::string pool = "generalized";  // generalized | proper | disjoint
  std::string pool_norm = "two";     // two | max
  double vqe_tol = 1e-6;
};

struct RunOutcome {
  int exit_code = kExitOk;
  std::string status;
  double energy = 0.0;
  std::optional<double> error_mEh;
  std::size_t n_det = 0;
  std::size_t n_theta = 0;
  std::size_t iterations = 0;
  std::string message;
};

// Throws ConfigError for invalid fields and for inputs that do not exist.
void validate(const RunSpec& spec);

// Executes one run and writes run.log, circuit.txt and summary.json into spec.out_dir.
RunOutcome cmd_run(const RunSpec& spec, std::ostream& err);

struct ScanRow {
  std::string tag;
  std::optional<double> r;
  std::string status;
  double e_scf = 0.0;
  double e_mp2 = 0.0;
  std::optional<double> e_fci;
  double energy = 0.0;
  std::optional<double> error_mEh;
  std::size_t n_det = 0;
  std::size_t n_theta = 0;
  std::string message;
};

// Runs every file with the shared settings in `base`; writes <out_dir>/scan.tsv.
std::vector<ScanRow> cmd_scan(const std::vector<std::string>& fcidumps, const RunSpec& base, std::ostream& err);

struct FidelityReport {
  double infidelity = 0.0;
  double energy_a = 0.0;
  double energy_b = 0.0;
  double delta_e = 0.0;  // energy_a - energy_b
  std::size_t n_det_a = 0;
  std::size_t n_det_b = 0;
};

// Inputs may be circuit checkpoints or state files (detected by header).
FidelityReport cmd_fidelity(const std::string& a, const std::string& b, const std::string& fcidump);

// Full command line entry point; returns the process exit code.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace swcs::cli
