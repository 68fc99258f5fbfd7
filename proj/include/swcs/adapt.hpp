#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "swcs/hamiltonian.hpp"
#include "swcs/integrals.hpp"
#include "swcs/optimize.hpp"
#include "swcs/pool.hpp"
#include "swcs/sparse_state.hpp"
#include "swcs/ucc.hpp"

namespace swcs {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class VqeStrategy { full_bfgs, bfgs2, bfgs2f };
enum class PoolNorm { two, max };
enum class AdaptStatus { running, converged, max_iter, stalled, budget, error };

const char* to_string(VqeStrategy s);
const char* to_string(AdaptStatus s);
VqeStrategy parse_strategy(const std::string& s);

struct AdaptRecord {
  int iteration = 0;  // 1-based within the whole (possibly staged) run
  int stage = 0;
  std::size_t selected = 0;
  std::string label;
  double pool_grad_norm = 0.0;
  double energy = 0.0;
  std::size_t n_det = 0;
  std::size_t n_theta = 0;
  int bfgs_iterations = 0;
  int stage1_iterations = 0;
  int stage2_iterations = 0;
  long gradient_evaluations = 0;
  long stage1_evaluations = 0;
  long stage2_evaluations = 0;
  std::string optimizer_stop;
  bool degenerate_truncation = false;
  double wall_seconds = 0.0;  // since the start of the run
};

struct AdaptTrace {
  std::vector<AdaptRecord> records;
  AdaptStatus status = AdaptStatus::running;
  double initial_energy = 0.0;
  double final_energy = 0.0;
  double final_pool_grad_norm = 0.0;
  std::size_t final_n_det = 0;
  std::vector<std::size_t> stage_starts;  // index into records where each stage begins
  std::string message;
};

struct AdaptConfig {
  int epsilon_exponent = 2;
  int max_iterations = 200;
  TruncationPolicy truncation = TruncationPolicy::unbounded();
  VqeStrategy strategy = VqeStrategy::full_bfgs;
  PoolOptions pool_options;  // recorded for logs; the pool itself is passed in
  PoolNorm norm = PoolNorm::two;
  BfgsOptions bfgs;
  ExpMode exp_mode = ExpMode::ordered_product;
  std::optional<AnsatzCircuit> initial_circuit;
  std::optional<SparseState> initial_state;  // default: the closed-shell reference
  int livelock_k = 3;
  double budget_seconds = 0.0;  // <= 0: no budget
  // Called after every iteration with the record and the current circuit.
  std::function<void(const AdaptRecord&, const AnsatzCircuit&)> on_iteration;
};

struct AdaptResult {
  AnsatzCircuit circuit;
  AdaptTrace trace;
};

AdaptResult run_adapt(const AdaptConfig& cfg, const IntegralTable& t, const OperatorPool& pool);

struct BootstrapStage {
  std::size_t n_cut = 0;
  VqeStrategy strategy = VqeStrategy::bfgs2f;
};
using BootstrapSchedule = std::vector<BootstrapStage>;

AdaptResult run_bootstrap(const BootstrapSchedule& schedule, const AdaptConfig& base, const IntegralTable& t,
                          const OperatorPool& pool);

// Full-BFGS VQE of a fixed circuit (used by uccsd-vqe runs and re-optimization).
struct VqeResult {
  AnsatzCircuit circuit;
  OptimizerReport report;
  std::size_t n_det = 0;
};
VqeResult run_vqe(const AnsatzCircuit& c, const IntegralTable& t, const TruncationPolicy& p,
                  const BfgsOptions& opt = {}, ExpMode mode = ExpMode::ordered_product,
                  const std::optional<SparseState>& s0 = std::nullopt);

enum class DedupeMode { drop_duplicates, keep_all };
struct DedupeResult {
  AnsatzCircuit circuit;
  double energy = 0.0;
  std::size_t removed = 0;
  OptimizerReport report;
};
DedupeResult dedupe_and_reoptimize(const AnsatzCircuit& c, const IntegralTable& t, const TruncationPolicy& p,
                                   DedupeMode mode = DedupeMode::drop_duplicates, const BfgsOptions& opt = {});

// Objective over the circuit parameters with prefix caching for masked evaluations.
Objective circuit_objective(const AnsatzCircuit& c, const SparseState& s0, const TruncationPolicy& p,
                            const HamiltonianHandle& h, ExpMode mode);

}  // namespace swcs
