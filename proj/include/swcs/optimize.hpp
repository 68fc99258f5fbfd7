#pragma once

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace swcs {

// f(theta) with gradient. `free` flags which components may move; evaluators may
// skip frozen gradient entries (they are zeroed afterwards either way).
class Objective {
 public:
  using Fn = std::function<double(const Eigen::VectorXd& theta, Eigen::VectorXd* grad, const std::vector<char>& free)>;

  Objective(Fn fn, Eigen::Index dim);

  Eigen::Index dimension() const { return dim_; }
  const std::vector<char>& free() const { return free_; }
  // Copy sharing the call counter, with a different free set.
  Objective with_free(std::vector<char> free) const;
  Objective only_last_free() const;

  double evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) const;
  long calls() const { return *calls_; }

 private:
  Fn fn_;
  Eigen::Index dim_;
  std::vector<char> free_;
  std::shared_ptr<long> calls_;
};

enum class ConvergenceTest { gradient_max_norm, gradient_two_norm, energy_change, step_size };

struct BfgsOptions {
  double tol = 1e-6;
  int max_iterations = 10000;
  ConvergenceTest test = ConvergenceTest::gradient_max_norm;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search = 40;
};

struct OptimizerStep {
  int iteration = 0;
  double energy = 0.0;
  double grad_norm = 0.0;
  double step_length = 0.0;
};

struct OptimizerReport {
  Eigen::VectorXd theta;
  double energy = 0.0;
  int iterations = 0;
  long gradient_evaluations = 0;
  bool converged = false;
  std::string stop_reason;
  // Per-stage breakdown for the two-step strategies (stage 2 is empty for single-stage runs).
  int stage1_iterations = 0;
  long stage1_evaluations = 0;
  int stage2_iterations = 0;
  long stage2_evaluations = 0;
  std::vector<OptimizerStep> trace;
};

OptimizerReport minimize_bfgs(const Objective& obj, const Eigen::VectorXd& theta0, const BfgsOptions& opt = {});

// Stage 1: new (last) parameter alone; stage 2: all free parameters from the stage-1 point.
OptimizerReport optimize_bfgs2(const Objective& obj, const Eigen::VectorXd& theta0, const BfgsOptions& opt = {});
// Stage 1 only; every previous parameter stays frozen.
OptimizerReport optimize_bfgs2f(const Objective& obj, const Eigen::VectorXd& theta0, const BfgsOptions& opt = {});

}  // namespace swcs
