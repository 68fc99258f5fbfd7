#include "swcs/hamiltonian.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "swcs/parallel.hpp"

namespace swcs {

namespace {

constexpr double kScreen = 1e-14;

inline std::uint64_t below(int p) { return (std::uint64_t{1} << p) - 1; }

inline int between_parity(std::uint64_t m, int i, int a) {
  const int lo = i < a ? i : a, hi = i < a ? a : i;
  const std::uint64_t mask = below(hi) & ~below(lo + 1);
  return std::popcount(m & mask) & 1;
}

// Phase of a+_a a+_b a_j a_i on one spin string m (the other string contributes an even count).
inline int same_spin_double_parity(std::uint64_t m, int i, int j, int a, int b) {
  int par = std::popcount(m & below(i));
  m &= ~(std::uint64_t{1} << i);
  par += std::popcount(m & below(j));
  m &= ~(std::uint64_t{1} << j);
  par += std::popcount(m & below(b));
  m |= std::uint64_t{1} << b;
  par += std::popcount(m & below(a));
  return par & 1;
}

inline int bits_to(std::uint64_t m, int* out) {
  int k = 0;
  while (m) {
    out[k++] = std::countr_zero(m);
    m &= m - 1;
  }
  return k;
}

// Calls fn(target, value) for every determinant connected to d by a single or
// double excitation with a non-screened matrix element <target|H|d>.
template <class Fn>
void for_each_connection(const HamiltonianHandle& h, const Determinant& d, Fn&& fn) {
  const int n = h.n_spatial();
  const std::uint64_t full = n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
  int oa[64], ob[64];
  const int na = bits_to(d.alpha, oa);
  const int nb = bits_to(d.beta, ob);
  const std::uint64_t ea = full & ~d.alpha;
  const std::uint64_t eb = full & ~d.beta;

  auto singles = [&](const int* occ, int nocc, const int* other, int nother, std::uint64_t mine, std::uint64_t empty,
                     bool is_alpha) {
    for (int x = 0; x < nocc; ++x) {
      const int i = occ[x];
      for (int a : h.orbitals_with_irrep(h.irrep(i))) {
        if (!((empty >> a) & 1u)) continue;
        double v = h.h(a, i);
        for (int y = 0; y < nocc; ++y) {
          const int j = occ[y];
          v += h.g(a, i, j, j) - h.g(a, j, j, i);
        }
        for (int y = 0; y < nother; ++y) v += h.g(a, i, other[y], other[y]);
        if (std::abs(v) < kScreen) continue;
        const std::uint64_t nm = mine ^ (std::uint64_t{1} << i) ^ (std::uint64_t{1} << a);
        if (between_parity(mine, i, a)) v = -v;
        fn(is_alpha ? Determinant{nm, d.beta} : Determinant{d.alpha, nm}, v);
      }
    }
  };
  singles(oa, na, ob, nb, d.alpha, ea, true);
  singles(ob, nb, oa, na, d.beta, eb, false);

  auto same_spin = [&](const int* occ, int nocc, std::uint64_t mine, std::uint64_t empty, bool is_alpha) {
    for (int x = 0; x < nocc; ++x)
      for (int y = x + 1; y < nocc; ++y) {
        const int i = occ[x], j = occ[y];
        const int sym = h.irrep(i) ^ h.irrep(j);
        for (std::uint64_t em = empty; em; em &= em - 1) {
          const int a = std::countr_zero(em);
          for (int b : h.orbitals_with_irrep(sym ^ h.irrep(a))) {
            if (b <= a || !((empty >> b) & 1u)) continue;
            double v = h.g(a, i, b, j) - h.g(a, j, b, i);
            if (std::abs(v) < kScreen) continue;
            if (same_spin_double_parity(mine, i, j, a, b)) v = -v;
            const std::uint64_t nm = mine ^ (std::uint64_t{1} << i) ^ (std::uint64_t{1} << j) ^
                                     (std::uint64_t{1} << a) ^ (std::uint64_t{1} << b);
            fn(is_alpha ? Determinant{nm, d.beta} : Determinant{d.alpha, nm}, v);
          }
        }
      }
  };
  same_spin(oa, na, d.alpha, ea, true);
  same_spin(ob, nb, d.beta, eb, false);

  for (int x = 0; x < na; ++x)
    for (int y = 0; y < nb; ++y) {
      const int i = oa[x], j = ob[y];
      const int sym = h.irrep(i) ^ h.irrep(j);
      for (std::uint64_t em = ea; em; em &= em - 1) {
        const int a = std::countr_zero(em);
        const int pa = between_parity(d.alpha, i, a);
        const std::uint64_t nal = d.alpha ^ (std::uint64_t{1} << i) ^ (std::uint64_t{1} << a);
        for (int b : h.orbitals_with_irrep(sym ^ h.irrep(a))) {
          if (!((eb >> b) & 1u)) continue;
          double v = h.g(a, i, b, j);
          if (std::abs(v) < kScreen) continue;
          if (pa ^ between_parity(d.beta, j, b)) v = -v;
          fn(Determinant{nal, d.beta ^ (std::uint64_t{1} << j) ^ (std::uint64_t{1} << b)}, v);
        }
      }
    }
}

void check_same_sector(const Determinant& a, const Determinant& b) {
  if (a.n_alpha() != b.n_alpha() || a.n_beta() != b.n_beta())
    throw std::invalid_argument("matrix_element: determinants in different electron-number sectors");
}

// <P1 P2 || Q1 Q2> over spin-orbitals given by global index.
double antisym(const HamiltonianHandle& h, SpinOrbital p1, SpinOrbital p2, SpinOrbital q1, SpinOrbital q2) {
  double v = 0.0;
  if (p1.spin == q1.spin && p2.spin == q2.spin) v += h.g(p1.spatial, q1.spatial, p2.spatial, q2.spatial);
  if (p1.spin == q2.spin && p2.spin == q1.spin) v -= h.g(p1.spatial, q2.spatial, p2.spatial, q1.spatial);
  return v;
}

std::vector<SpinOrbital> spin_orbitals(std::uint64_t alpha, std::uint64_t beta) {
  std::vector<SpinOrbital> out;
  for (std::uint64_t m = alpha; m; m &= m - 1) out.push_back({std::countr_zero(m), Spin::alpha});
  for (std::uint64_t m = beta; m; m &= m - 1) out.push_back({std::countr_zero(m), Spin::beta});
  return out;
}

}  // namespace

HamiltonianHandle::HamiltonianHandle(const IntegralTable& t) : t_(&t), n_(t.n_spatial()), irrep_(t.orb_irrep()) {
  for (int p = 0; p < n_; ++p) {
    if (irrep_[p] < 0 || irrep_[p] > 7) throw std::invalid_argument("irrep label out of range");
    by_irrep_[irrep_[p]].push_back(p);
  }
  h_.resize(static_cast<std::size_t>(n_) * n_);
  for (int p = 0; p < n_; ++p)
    for (int q = 0; q < n_; ++q) h_[static_cast<std::size_t>(p) * n_ + q] = t.h(p, q);
  g_.resize(static_cast<std::size_t>(n_) * n_ * n_ * n_);
  for (int p = 0; p < n_; ++p)
    for (int q = 0; q < n_; ++q)
      for (int r = 0; r < n_; ++r)
        for (int s = 0; s < n_; ++s) g_[((static_cast<std::size_t>(p) * n_ + q) * n_ + r) * n_ + s] = t.g(p, q, r, s);
}

double HamiltonianHandle::diagonal(const Determinant& d) const {
  int oa[64], ob[64];
  const int na = bits_to(d.alpha, oa);
  const int nb = bits_to(d.beta, ob);
  double e = t_->e_core();
  for (int x = 0; x < na; ++x) e += h(oa[x], oa[x]);
  for (int x = 0; x < nb; ++x) e += h(ob[x], ob[x]);
  auto same = [&](const int* o, int k) {
    double acc = 0.0;
    for (int x = 0; x < k; ++x)
      for (int y = x + 1; y < k; ++y) acc += g(o[x], o[x], o[y], o[y]) - g(o[x], o[y], o[y], o[x]);
    return acc;
  };
  e += same(oa, na) + same(ob, nb);
  for (int x = 0; x < na; ++x)
    for (int y = 0; y < nb; ++y) e += g(oa[x], oa[x], ob[y], ob[y]);
  return e;
}

double matrix_element(const HamiltonianHandle& h, const Determinant& d1, const Determinant& d2) {
  check_same_sector(d1, d2);
  const int degree = (std::popcount(d1.alpha ^ d2.alpha) + std::popcount(d1.beta ^ d2.beta)) / 2;
  if (degree == 0) return h.diagonal(d1);
  if (degree > 2) return 0.0;
  // particles: occupied in d1 only; holes: occupied in d2 only.
  const auto parts = spin_orbitals(d1.alpha & ~d2.alpha, d1.beta & ~d2.beta);
  const auto holes = spin_orbitals(d2.alpha & ~d1.alpha, d2.beta & ~d1.beta);
  const int n = h.n_spatial();
  if (degree == 1) {
    const SpinOrbital P = parts[0], Q = holes[0];
    auto r = apply_excitation(d2, std::span(&P, 1), std::span(&Q, 1), n);
    double v = P.spin == Q.spin ? h.h(P.spatial, Q.spatial) : 0.0;
    for (const auto& R : spin_orbitals(d2.alpha, d2.beta))
      if (!(R == Q)) v += antisym(h, P, R, Q, R);
    return r->second * v;
  }
  auto r = apply_excitation(d2, parts, holes, n);
  return r->second * antisym(h, parts[0], parts[1], holes[0], holes[1]);
}

SparseState apply_h(const HamiltonianHandle& h, const SparseState& s) {
  if (s.empty()) return {};
  const auto src = s.sorted_entries();
  const int chunks = num_threads();
  std::vector<AmplitudeMap> parts(chunks);
  parallel_chunks(src.size(), chunks, [&](int c, std::size_t b, std::size_t e) {
    AmplitudeMap& out = parts[c];
    out.reserve((e - b) * 8);
    for (std::size_t k = b; k < e; ++k) {
      const auto& [d, amp] = src[k];
      out[d] += h.diagonal(d) * amp;
      for_each_connection(h, d, [&](const Determinant& t, double v) { out[t] += v * amp; });
    }
  });
  AmplitudeMap merged = std::move(parts[0]);
  for (int c = 1; c < chunks; ++c)
    for (const auto& [d, v] : parts[c]) merged[d] += v;
  return SparseState(std::move(merged));
}

double expectation(const HamiltonianHandle& h, const SparseState& s) {
  const auto src = s.sorted_entries();
  const int chunks = num_threads();
  std::vector<double> partial(chunks, 0.0);
  const auto& m = s.map();
  parallel_chunks(src.size(), chunks, [&](int c, std::size_t b, std::size_t e) {
    double acc = 0.0;
    for (std::size_t k = b; k < e; ++k) {
      const auto& [d, amp] = src[k];
      double row = h.diagonal(d) * amp;
      for_each_connection(h, d, [&](const Determinant& t, double v) {
        auto it = m.find(t);
        if (it != m.end()) row += v * it->second;
      });
      acc += amp * row;
    }
    partial[c] = acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

double energy(const HamiltonianHandle& h, const SparseState& s) {
  const double n = norm2(s);
  if (n == 0.0) throw std::invalid_argument("energy of a zero-norm state");
  return expectation(h, s) / n;
}

}  // namespace swcs
