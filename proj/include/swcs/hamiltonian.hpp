#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "swcs/determinant.hpp"
#include "swcs/integrals.hpp"
#include "swcs/sparse_state.hpp"

namespace swcs {

// Read-only view over an IntegralTable with dense integral copies for fast lookup.
// The table must outlive the handle.
class HamiltonianHandle {
 public:
  explicit HamiltonianHandle(const IntegralTable& t);

  const IntegralTable& table() const { return *t_; }
  int n_spatial() const { return n_; }
  int irrep(int p) const { return irrep_[p]; }
  const std::vector<int>& orbitals_with_irrep(int irr) const { return by_irrep_[irr]; }

  double h(int p, int q) const { return h_[static_cast<std::size_t>(p) * n_ + q]; }
  double g(int p, int q, int r, int s) const {
    return g_[((static_cast<std::size_t>(p) * n_ + q) * n_ + r) * n_ + s];
  }

  double diagonal(const Determinant& d) const;

 private:
  const IntegralTable* t_;
  int n_;
  std::vector<int> irrep_;
  std::array<std::vector<int>, 8> by_irrep_;
  std::vector<double> h_;
  std::vector<double> g_;
};

double matrix_element(const HamiltonianHandle& h, const Determinant& d1, const Determinant& d2);

// H|s>, untruncated. Work is split over num_threads() chunks merged in chunk order.
SparseState apply_h(const HamiltonianHandle& h, const SparseState& s);

// <s|H|s> restricted to the support of s (no intermediate H|s> map).
double expectation(const HamiltonianHandle& h, const SparseState& s);

// Rayleigh quotient <s|H|s>/<s|s>.
double energy(const HamiltonianHandle& h, const SparseState& s);

}  // namespace swcs
