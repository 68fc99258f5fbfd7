#pragma once

#include <Eigen/Core>

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "swcs/determinant.hpp"
#include "swcs/hamiltonian.hpp"
#include "swcs/integrals.hpp"
#include "swcs/sparse_state.hpp"

namespace swcs {

// tau = a+_{create[0]} a+_{create[1]} a_{annihilate[1]} a_{annihilate[0]} with both
// lists sorted by global spin-orbital index; rank 1 uses only the first entries.
// The component contributes coef * (tau - tau^dagger) to its generator.
struct Component {
  int rank = 1;
  std::array<SpinOrbital, 2> create{};
  std::array<SpinOrbital, 2> annihilate{};
  int coef = 1;

  // tau|d> = phase |d'>, or nullopt.
  std::optional<std::pair<Determinant, int>> excite(const Determinant& d) const;
  // tau^dagger|d> = phase |d'>, or nullopt.
  std::optional<std::pair<Determinant, int>> deexcite(const Determinant& d) const;
};

enum class GeneratorKind { single, double_ };
enum class Flavor { occupied_virtual, generalized };
enum class SpinPattern { same, opposite };
enum class ExpMode { ordered_product, summed };

// Anti-Hermitian spin-complemented excitation generator sharing one parameter.
struct Generator {
  GeneratorKind kind = GeneratorKind::single;
  Flavor flavor = Flavor::occupied_virtual;
  // single: (p, q) meaning p -> q; double: (p, q, r, s) meaning p -> r, q -> s.
  std::array<int, 4> spatial{};
  SpinPattern pattern = SpinPattern::opposite;
  std::vector<Component> components;

  // Canonical identity: equal keys <=> identical operator.
  std::vector<int> key(int n_spatial = 64) const;
  std::string label() const;
  int irrep(const std::vector<int>& orb_irrep) const;
};

struct BuildOptions {
  // Drop components whose create and annihilate strings share a spin-orbital.
  bool proper_only = false;
};

// Returns nullopt when the generator vanishes identically. `sign` (optional) receives
// s such that the canonical generator equals s times the generator written by the label.
std::optional<Generator> make_single(int p, int q, Flavor flavor, int* sign = nullptr, BuildOptions opt = {});
std::optional<Generator> make_double(int p, int q, int r, int s, SpinPattern pattern, Flavor flavor,
                                     int* sign = nullptr, BuildOptions opt = {});

struct CircuitOp {
  Generator gen;
  double theta = 0.0;
};

struct AnsatzCircuit {
  std::vector<CircuitOp> ops;  // application order: ops[0] acts first

  std::size_t size() const { return ops.size(); }
  Eigen::VectorXd params() const;
  void set_params(const Eigen::VectorXd& theta);
};

// K|s> for the summed generator (sum over components of coef * (tau - tau^dagger)).
SparseState apply_generator(const Generator& g, const SparseState& s);

SparseState apply_generator_exponential(const Generator& g, double theta, const SparseState& s,
                                        ExpMode mode = ExpMode::ordered_product);

// Exact inverse of apply_generator_exponential. In ordered-product mode this reverses the
// component order, so it differs from (g, -theta) when components do not commute.
SparseState apply_inverse_exponential(const Generator& g, double theta, const SparseState& s,
                                      ExpMode mode = ExpMode::ordered_product);

struct EvalReport {
  std::size_t truncations = 0;  // operators after which something was dropped
  bool degenerate = false;
};

SparseState evaluate_circuit(const AnsatzCircuit& c, const SparseState& s0, const TruncationPolicy& p,
                             ExpMode mode = ExpMode::ordered_product, EvalReport* report = nullptr);

// State after the first `count` operators.
SparseState evaluate_prefix(const AnsatzCircuit& c, std::size_t count, const SparseState& s0,
                            const TruncationPolicy& p, ExpMode mode = ExpMode::ordered_product,
                            EvalReport* report = nullptr);

struct GradientResult {
  double energy = 0.0;
  Eigen::VectorXd gradient;  // full length; entries before `begin` are 0
  SparseState state;
  bool degenerate = false;
};

// Energy and exact gradient of the masked objective. Operators before `begin`
// are treated as fixed: `state_before` must be the circuit state after the first
// `begin` operators (evaluate_prefix) and only gradient entries >= begin are computed.
GradientResult circuit_gradient(const AnsatzCircuit& c, const SparseState& s0, const TruncationPolicy& p,
                                const HamiltonianHandle& h, ExpMode mode = ExpMode::ordered_product);
GradientResult circuit_gradient_from(const AnsatzCircuit& c, std::size_t begin, const SparseState& state_before,
                                     const TruncationPolicy& p, const HamiltonianHandle& h,
                                     ExpMode mode = ExpMode::ordered_product);

AnsatzCircuit build_uccsd_circuit(const IntegralTable& t, const ReferenceData& ref, bool symmetry_filter = true);

SparseState reference_state(const IntegralTable& t);

// One operator per line: kind, spatial indices, [pattern], flavor, theta.
void write_circuit(std::ostream& out, const AnsatzCircuit& c);
AnsatzCircuit read_circuit(std::istream& in);
void save_circuit(const std::string& path, const AnsatzCircuit& c);
AnsatzCircuit load_circuit(const std::string& path);

}  // namespace swcs
