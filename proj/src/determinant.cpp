#include "swcs/determinant.hpp"

#include <stdexcept>

namespace swcs {

namespace {

void check_range(std::span<const SpinOrbital> ops, int n_spatial) {
  for (const auto& so : ops)
    if (so.spatial < 0 || so.spatial >= n_spatial || so.spatial >= 64)
      throw std::invalid_argument("spin-orbital index " + std::to_string(so.spatial) + " out of range");
}

}  // namespace

std::optional<std::pair<Determinant, int>> apply_excitation(const Determinant& d,
                                                            std::span<const SpinOrbital> create,
                                                            std::span<const SpinOrbital> annihilate,
                                                            int n_spatial) {
  if (create.empty() || create.size() > 2 || annihilate.empty() || annihilate.size() > 2)
    throw std::invalid_argument("excitation needs 1 or 2 creation and annihilation operators");
  check_range(create, n_spatial);
  check_range(annihilate, n_spatial);
  if (create.size() == 2 && create[0] == create[1]) throw std::invalid_argument("duplicate creation operator");
  if (annihilate.size() == 2 && annihilate[0] == annihilate[1])
    throw std::invalid_argument("duplicate annihilation operator");
  Determinant out = d;
  int phase = 1;
  for (std::size_t k = 0; k < annihilate.size(); ++k)
    if (!annihilate_inplace(out, annihilate[k], phase)) return std::nullopt;
  for (std::size_t k = create.size(); k-- > 0;)
    if (!create_inplace(out, create[k], phase)) return std::nullopt;
  return std::make_pair(out, phase);
}

std::vector<Determinant> enumerate_symmetry_sector(int n_spatial, int n_alpha, int n_beta,
                                                   const std::vector<int>& orb_irrep, int target_irrep) {
  if (n_spatial < 0 || n_spatial > 64) throw std::invalid_argument("n_spatial out of range");
  if (n_alpha < 0 || n_beta < 0 || n_alpha > n_spatial || n_beta > n_spatial)
    throw std::invalid_argument("electron count exceeds orbital count");
  if (static_cast<int>(orb_irrep.size()) != n_spatial) throw std::invalid_argument("orb_irrep length mismatch");

  auto combos = [&](int k) {
    std::vector<std::uint64_t> out;
    if (k == 0) {
      out.push_back(0);
      return out;
    }
    const std::uint64_t limit = n_spatial == 64 ? 0 : (std::uint64_t{1} << n_spatial);
    std::uint64_t m = (k == 64) ? ~std::uint64_t{0} : (std::uint64_t{1} << k) - 1;
    while (true) {
      out.push_back(m);
      // Gosper's hack: next integer with the same popcount.
      const std::uint64_t c = m & (~m + 1);
      const std::uint64_t r = m + c;
      if (r == 0) break;
      m = (((r ^ m) >> 2) / c) | r;
      if (limit && m >= limit) break;
    }
    return out;
  };
  auto irrep_of = [&](std::uint64_t m) {
    int x = 0;
    while (m) {
      x ^= orb_irrep[std::countr_zero(m)];
      m &= m - 1;
    }
    return x;
  };
  const auto as = combos(n_alpha);
  const auto bs = combos(n_beta);
  std::vector<int> b_irrep(bs.size());
  for (std::size_t j = 0; j < bs.size(); ++j) b_irrep[j] = irrep_of(bs[j]);
  std::vector<Determinant> out;
  for (std::uint64_t a : as) {
    const int ia = irrep_of(a);
    for (std::size_t j = 0; j < bs.size(); ++j)
      if ((ia ^ b_irrep[j]) == target_irrep) out.push_back({a, bs[j]});
  }
  return out;
}

int determinant_irrep(const Determinant& d, const std::vector<int>& orb_irrep) {
  int x = 0;
  for (std::uint64_t m : {d.alpha, d.beta})
    while (m) {
      x ^= orb_irrep[std::countr_zero(m)];
      m &= m - 1;
    }
  return x;
}

Determinant reference_determinant(int n_alpha, int n_beta) {
  auto low = [](int k) { return k >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << k) - 1; };
  return {low(n_alpha), low(n_beta)};
}

std::string bits_to_string(std::uint64_t mask, int n_spatial) {
  std::string s(n_spatial, '0');
  for (int p = 0; p < n_spatial; ++p)
    if ((mask >> p) & 1u) s[p] = '1';
  return s;
}

std::uint64_t bits_from_string(const std::string& s) {
  if (s.size() > 64) throw std::invalid_argument("bitstring longer than 64 orbitals");
  std::uint64_t m = 0;
  for (std::size_t p = 0; p < s.size(); ++p) {
    if (s[p] == '1') m |= std::uint64_t{1} << p;
    else if (s[p] != '0') throw std::invalid_argument("bitstring has character other than 0/1");
  }
  return m;
}

std::string to_string(const Determinant& d, int n_spatial) {
  return "α:" + bits_to_string(d.alpha, n_spatial) + " β:" + bits_to_string(d.beta, n_spatial);
}

}  // namespace swcs
