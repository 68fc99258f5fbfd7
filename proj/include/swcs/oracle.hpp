#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "swcs/determinant.hpp"
#include "swcs/integrals.hpp"
#include "swcs/sparse_state.hpp"
#include "swcs/ucc.hpp"

// Brute-force references for tests. Nothing here is used by the solver itself.
namespace swcs::oracle {

class CapExceeded : public std::length_error {
 public:
  using std::length_error::length_error;
};

inline constexpr std::size_t kDefaultCap = 20000;

// Basis of one (N_alpha, N_beta, irrep) sector with the Hamiltonian over it.
// H is built from second-quantized strings, not from Slater-Condon rules.
class DenseSector {
 public:
  DenseSector(const IntegralTable& t, std::optional<int> target_irrep = std::nullopt,
              std::size_t cap = kDefaultCap);

  std::size_t dim() const { return basis_.size(); }
  int n_spatial() const { return n_; }
  const std::vector<Determinant>& basis() const { return basis_; }
  std::optional<std::size_t> index(const Determinant& d) const;

  const Eigen::SparseMatrix<double>& hamiltonian() const { return H_; }
  // Throws CapExceeded above `limit` so nobody allocates a 600 MB matrix by accident.
  Eigen::MatrixXd dense_hamiltonian(std::size_t limit = 4000) const;
  Eigen::MatrixXd generator_matrix(const Generator& g) const;

  Eigen::VectorXd embed(const SparseState& s) const;
  SparseState to_sparse(const Eigen::VectorXd& v, double drop = 0.0) const;

 private:
  int n_ = 0;
  std::vector<Determinant> basis_;
  std::map<Determinant, std::size_t> index_;
  Eigen::SparseMatrix<double> H_;
};

struct FciResult {
  double energy = 0.0;
  SparseState state;
};

// Lowest eigenpair of the sector containing the reference determinant (or `target_irrep`).
FciResult fci_ground_state(const IntegralTable& t, std::optional<int> target_irrep = std::nullopt,
                           std::size_t cap = kDefaultCap);
FciResult fci_ground_state(const DenseSector& sector);

// exp(theta * K) v with K the dense generator matrix.
Eigen::VectorXd dense_expm_apply(const Generator& g, double theta, const Eigen::VectorXd& v,
                                 const DenseSector& sector);
// Ordered product of dense exponentials, no truncation.
Eigen::VectorXd dense_circuit_apply(const AnsatzCircuit& c, const Eigen::VectorXd& v, const DenseSector& sector);

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& theta,
                            double step = 1e-5);

// Second-order energy summed over doubly excited determinants of the sector, with
// orbital energies from a Fock build done here.
double mp2_energy(const IntegralTable& t, const DenseSector& sector);

// Jordan-Wigner annihilator for spin-orbital `k` (global order) on n_so modes,
// built as a Kronecker product of Z, sigma- and identity factors. Basis index bit k
// holds the occupation of spin-orbital k.
Eigen::MatrixXd jw_annihilator(int k, int n_so);
std::size_t jw_index(const Determinant& d, int n_spatial);

}  // namespace swcs::oracle
