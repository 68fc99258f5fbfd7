#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "swcs/hamiltonian.hpp"
#include "swcs/integrals.hpp"
#include "swcs/sparse_state.hpp"
#include "swcs/ucc.hpp"

namespace swcs {

enum class PoolVariant {
  generalized,         // all spin-complemented GSD operators, number-conditioned components included
  proper,              // components sharing a spin-orbital between create and annihilate removed
  spatially_disjoint,  // doubles only when {p,q} and {r,s} share no spatial orbital
};

struct PoolOptions {
  PoolVariant variant = PoolVariant::generalized;
  bool same_spin_doubles = true;  // include the alpha-alpha + beta-beta generators
  bool symmetry_filter = true;
};

struct OperatorPool {
  std::vector<Generator> generators;
  std::size_t size() const { return generators.size(); }
};

OperatorPool build_gsd_pool(const IntegralTable& t, const PoolOptions& opt = {});

// Canonical listing with irrep annotations.
void write_pool(std::ostream& out, const OperatorPool& pool, const IntegralTable& t);

struct PoolGradient {
  Eigen::VectorXd values;
  double norm = 0.0;     // Euclidean
  double max_abs = 0.0;  // max-norm
};

// d/dtheta at theta = 0 of the energy after appending each generator to the state s.
PoolGradient pool_gradient(const OperatorPool& pool, const SparseState& s, const HamiltonianHandle& h);
// Same values, computed with an explicit thread count and chunking (for invariance checks).
PoolGradient pool_gradient_threads(const OperatorPool& pool, const SparseState& s, const HamiltonianHandle& h,
                                   int threads);

struct Selection {
  std::size_t index = 0;
  bool degenerate = false;  // every value was zero
};

Selection select_operator(const PoolGradient& pg);

}  // namespace swcs
