#include "swcs/oracle.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <string>

namespace swcs::oracle {

namespace {

// Occupation vector over 2n spin-orbitals: alpha 0..n-1 then beta n..2n-1.
using Occ = std::vector<char>;

Occ to_occ(const Determinant& d, int n) {
  Occ o(2 * n, 0);
  for (int p = 0; p < n; ++p) {
    o[p] = (d.alpha >> p) & 1;
    o[n + p] = (d.beta >> p) & 1;
  }
  return o;
}

Determinant from_occ(const Occ& o, int n) {
  Determinant d;
  for (int p = 0; p < n; ++p) {
    if (o[p]) d.alpha |= std::uint64_t{1} << p;
    if (o[n + p]) d.beta |= std::uint64_t{1} << p;
  }
  return d;
}

int sign_before(const Occ& o, int k) {
  int c = 0;
  for (int i = 0; i < k; ++i) c += o[i];
  return (c % 2) ? -1 : 1;
}

// Return false when the operator kills the state.
bool destroy(Occ& o, int k, double& amp) {
  if (!o[k]) return false;
  amp *= sign_before(o, k);
  o[k] = 0;
  return true;
}

bool make(Occ& o, int k, double& amp) {
  if (o[k]) return false;
  amp *= sign_before(o, k);
  o[k] = 1;
  return true;
}

std::size_t checked_dim(std::size_t dim, std::size_t cap) {
  if (dim > cap)
    throw CapExceeded("sector dimension " + std::to_string(dim) + " exceeds the oracle cap " + std::to_string(cap));
  return dim;
}

}  // namespace

DenseSector::DenseSector(const IntegralTable& t, std::optional<int> target_irrep, std::size_t cap)
    : n_(t.n_spatial()) {
  const int irr = target_irrep ? *target_irrep
                               : determinant_irrep(reference_determinant(t.n_alpha(), t.n_beta()), t.orb_irrep());
  basis_ = enumerate_symmetry_sector(n_, t.n_alpha(), t.n_beta(), t.orb_irrep(), irr);
  const std::size_t dim = checked_dim(basis_.size(), cap);
  for (std::size_t k = 0; k < dim; ++k) index_.emplace(basis_[k], k);

  const int nso = 2 * n_;
  auto spatial = [&](int k) { return k % n_; };
  auto spin = [&](int k) { return k / n_; };
  std::vector<Eigen::Triplet<double>> trip;
  std::map<std::size_t, double> row;
  for (std::size_t j = 0; j < dim; ++j) {
    row.clear();
    const Occ o = to_occ(basis_[j], n_);
    row[j] += t.e_core();
    // sum_pq h_pq a+_p a_q over same-spin pairs
    for (int q = 0; q < nso; ++q) {
      if (!o[q]) continue;
      for (int p = 0; p < nso; ++p) {
        if (spin(p) != spin(q)) continue;
        const double hv = t.h(spatial(p), spatial(q));
        if (hv == 0.0) continue;
        Occ w = o;
        double a = 1.0;
        if (!destroy(w, q, a) || !make(w, p, a)) continue;
        auto it = index_.find(from_occ(w, n_));
        if (it != index_.end()) row[it->second] += a * hv;
      }
    }
    // 1/2 sum (pq|rs) a+_p a+_r a_s a_q, p/q share a spin, r/s share a spin
    for (int q = 0; q < nso; ++q) {
      if (!o[q]) continue;
      for (int s = 0; s < nso; ++s) {
        if (s == q || !o[s]) continue;
        for (int r = 0; r < nso; ++r) {
          if (spin(r) != spin(s)) continue;
          for (int p = 0; p < nso; ++p) {
            if (spin(p) != spin(q)) continue;
            const double gv = t.g(spatial(p), spatial(q), spatial(r), spatial(s));
            if (gv == 0.0) continue;
            Occ w = o;
            double a = 0.5;
            if (!destroy(w, q, a) || !destroy(w, s, a) || !make(w, r, a) || !make(w, p, a)) continue;
            auto it = index_.find(from_occ(w, n_));
            if (it != index_.end()) row[it->second] += a * gv;
          }
        }
      }
    }
    for (const auto& [i, v] : row)
      if (v != 0.0) trip.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
  }
  H_.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  H_.setFromTriplets(trip.begin(), trip.end());
}

std::optional<std::size_t> DenseSector::index(const Determinant& d) const {
  auto it = index_.find(d);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Eigen::MatrixXd DenseSector::dense_hamiltonian(std::size_t limit) const {
  checked_dim(dim(), limit);
  return Eigen::MatrixXd(H_);
}

Eigen::MatrixXd DenseSector::generator_matrix(const Generator& g) const {
  const std::size_t n = dim();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    const Occ o = to_occ(basis_[j], n_);
    for (const Component& c : g.components) {
      std::vector<int> cre, ann;
      for (int k = 0; k < c.rank; ++k) {
        cre.push_back(c.create[k].global(n_));
        ann.push_back(c.annihilate[k].global(n_));
      }
      // tau = a+_{c0} a+_{c1} a_{a1} a_{a0}; tau^dagger = a+_{a0} a+_{a1} a_{c1} a_{c0}
      auto apply = [&](const std::vector<int>& up, const std::vector<int>& down, double coef) {
        Occ w = o;
        double a = coef;
        for (int k = 0; k < static_cast<int>(down.size()); ++k)
          if (!destroy(w, down[k], a)) return;
        for (int k = static_cast<int>(up.size()) - 1; k >= 0; --k)
          if (!make(w, up[k], a)) return;
        auto it = index_.find(from_occ(w, n_));
        if (it != index_.end()) K(static_cast<Eigen::Index>(it->second), static_cast<Eigen::Index>(j)) += a;
      };
      apply(cre, ann, c.coef);
      apply(ann, cre, -c.coef);
    }
  }
  return K;
}

Eigen::VectorXd DenseSector::embed(const SparseState& s) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim()));
  for (const auto& [d, a] : s) {
    auto it = index_.find(d);
    if (it == index_.end()) throw std::invalid_argument("state has support outside the sector");
    v[static_cast<Eigen::Index>(it->second)] = a;
  }
  return v;
}

SparseState DenseSector::to_sparse(const Eigen::VectorXd& v, double drop) const {
  SparseState s;
  for (std::size_t k = 0; k < dim(); ++k) {
    const double a = v[static_cast<Eigen::Index>(k)];
    if (a != 0.0 && std::abs(a) > drop) s.set(basis_[k], a);
  }
  return s;
}

namespace {

// Lanczos with full reorthogonalization and restarts from the current Ritz vector.
std::pair<double, Eigen::VectorXd> lanczos_lowest(const Eigen::SparseMatrix<double>& H, Eigen::VectorXd start) {
  const Eigen::Index n = H.rows();
  const int m_max = static_cast<int>(std::min<Eigen::Index>(n, 200));
  Eigen::VectorXd x = start.normalized();
  double theta = 0.0;
  for (int restart = 0; restart < 50; ++restart) {
    Eigen::MatrixXd V(n, m_max);
    std::vector<double> alpha, beta;
    V.col(0) = x;
    int m = 0;
    for (int k = 0; k < m_max; ++k) {
      Eigen::VectorXd w = H * V.col(k);
      alpha.push_back(V.col(k).dot(w));
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i <= k; ++i) w -= V.col(i).dot(w) * V.col(i);
      m = k + 1;
      const double b = w.norm();
      if (k + 1 == m_max || b < 1e-12) break;
      beta.push_back(b);
      V.col(k + 1) = w / b;
    }
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) T(i, i) = alpha[i];
    for (int i = 0; i + 1 < m; ++i) T(i, i + 1) = T(i + 1, i) = beta[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    theta = es.eigenvalues()[0];
    x = (V.leftCols(m) * es.eigenvectors().col(0)).normalized();
    const double resid = (H * x - theta * x).norm();
    if (resid < 1e-10) break;
  }
  return {theta, x};
}

}  // namespace

FciResult fci_ground_state(const DenseSector& sector) {
  if (sector.dim() == 0) throw std::invalid_argument("empty sector");
  Eigen::VectorXd vec;
  double e = 0.0;
  if (sector.dim() <= 2000) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sector.dense_hamiltonian());
    e = es.eigenvalues()[0];
    vec = es.eigenvectors().col(0);
  } else {
    // start from the lowest diagonal element plus a little of everything
    Eigen::VectorXd diag = Eigen::VectorXd(sector.hamiltonian().diagonal());
    Eigen::Index imin = 0;
    diag.minCoeff(&imin);
    Eigen::VectorXd start = Eigen::VectorXd::Constant(diag.size(), 1e-3);
    start[imin] = 1.0;
    std::tie(e, vec) = lanczos_lowest(sector.hamiltonian(), start);
  }
  // fix the overall sign: largest component positive
  Eigen::Index imax = 0;
  vec.cwiseAbs().maxCoeff(&imax);
  if (vec[imax] < 0) vec = -vec;
  return {e, sector.to_sparse(vec)};
}

FciResult fci_ground_state(const IntegralTable& t, std::optional<int> target_irrep, std::size_t cap) {
  return fci_ground_state(DenseSector(t, target_irrep, cap));
}

Eigen::VectorXd dense_expm_apply(const Generator& g, double theta, const Eigen::VectorXd& v,
                                 const DenseSector& sector) {
  if (v.size() != static_cast<Eigen::Index>(sector.dim())) throw std::invalid_argument("vector length != sector dim");
  const Eigen::MatrixXd A = theta * sector.generator_matrix(g);
  const Eigen::MatrixXd U = A.exp();
  return U * v;
}

Eigen::VectorXd dense_circuit_apply(const AnsatzCircuit& c, const Eigen::VectorXd& v, const DenseSector& sector) {
  Eigen::VectorXd x = v;
  for (const auto& op : c.ops) x = dense_expm_apply(op.gen, op.theta, x, sector);
  return x;
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& theta,
                            double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  Eigen::VectorXd g(theta.size());
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    Eigen::VectorXd a = theta, b = theta;
    a[k] += step;
    b[k] -= step;
    g[k] = (f(a) - f(b)) / (2.0 * step);
  }
  return g;
}

double mp2_energy(const IntegralTable& t, const DenseSector& sector) {
  const int n = t.n_spatial();
  if (t.n_alpha() != t.n_beta()) throw std::invalid_argument("closed-shell reference required");
  const int nocc = t.n_alpha();
  std::vector<double> eps(n);
  for (int p = 0; p < n; ++p) {
    double f = t.h(p, p);
    for (int i = 0; i < nocc; ++i) f += 2.0 * t.g(p, p, i, i) - t.g(p, i, i, p);
    eps[p] = f;
  }
  const Determinant ref = reference_determinant(t.n_alpha(), t.n_beta());
  const auto r = sector.index(ref);
  if (!r) throw std::invalid_argument("reference outside the sector");
  const Eigen::SparseMatrix<double>& H = sector.hamiltonian();
  const Occ o0 = to_occ(ref, n);
  double e2 = 0.0;
  for (std::size_t k = 0; k < sector.dim(); ++k) {
    const Occ ok = to_occ(sector.basis()[k], n);
    int diff = 0;
    double de = 0.0;  // sum eps(virtual) - sum eps(hole)
    for (int so = 0; so < 2 * n; ++so) {
      if (o0[so] && !ok[so]) {
        ++diff;
        de -= eps[so % n];
      } else if (!o0[so] && ok[so]) {
        de += eps[so % n];
      }
    }
    if (diff != 2) continue;
    const double v = H.coeff(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(*r));
    e2 -= v * v / de;
  }
  return e2;
}

Eigen::MatrixXd jw_annihilator(int k, int n_so) {
  if (n_so > 12) throw CapExceeded("Jordan-Wigner oracle limited to 12 modes");
  Eigen::Matrix2d Z, L, I;
  Z << 1, 0, 0, -1;
  L << 0, 1, 0, 0;  // |0><1|: empty <- occupied
  I.setIdentity();
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(1, 1);
  for (int q = n_so - 1; q >= 0; --q) {
    const Eigen::Matrix2d& f = q > k ? I : (q == k ? L : Z);
    Eigen::MatrixXd next = Eigen::kroneckerProduct(M, f);
    M = std::move(next);
  }
  return M;
}

std::size_t jw_index(const Determinant& d, int n_spatial) {
  std::size_t x = 0;
  for (int p = 0; p < n_spatial; ++p) {
    if ((d.alpha >> p) & 1) x |= std::size_t{1} << p;
    if ((d.beta >> p) & 1) x |= std::size_t{1} << (n_spatial + p);
  }
  return x;
}

}  // namespace swcs::oracle
