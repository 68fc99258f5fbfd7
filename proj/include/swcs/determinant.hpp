#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace swcs {

enum class Spin : std::uint8_t { alpha = 0, beta = 1 };

struct SpinOrbital {
  int spatial = 0;
  Spin spin = Spin::alpha;

  // Position in the global ordering used for phases: all alpha, then all beta.
  int global(int n_spatial) const { return spin == Spin::alpha ? spatial : n_spatial + spatial; }
  static SpinOrbital from_global(int g, int n_spatial) {
    return g < n_spatial ? SpinOrbital{g, Spin::alpha} : SpinOrbital{g - n_spatial, Spin::beta};
  }
  friend auto operator<=>(const SpinOrbital&, const SpinOrbital&) = default;
};

struct Determinant {
  std::uint64_t alpha = 0;
  std::uint64_t beta = 0;

  int n_alpha() const { return std::popcount(alpha); }
  int n_beta() const { return std::popcount(beta); }
  bool occupied(SpinOrbital so) const {
    return ((so.spin == Spin::alpha ? alpha : beta) >> so.spatial) & 1u;
  }
  friend auto operator<=>(const Determinant&, const Determinant&) = default;
};

struct DeterminantHash {
  std::size_t operator()(const Determinant& d) const noexcept {
    std::uint64_t x = d.alpha * 0x9E3779B97F4A7C15ull ^ (d.beta + 0x632BE59BD9B4E019ull + (d.alpha << 6));
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return static_cast<std::size_t>(x);
  }
};

// Number of occupied spin-orbitals strictly before `so` in the global ordering.
inline int occupied_below(const Determinant& d, SpinOrbital so) {
  const std::uint64_t below = (std::uint64_t{1} << so.spatial) - 1;
  if (so.spin == Spin::alpha) return std::popcount(d.alpha & below);
  return std::popcount(d.alpha) + std::popcount(d.beta & below);
}

// tau = a+_{c0} a+_{c1} a_{n1} a_{n0}, operators applied right to left.
// Returns nullopt when tau|d> vanishes.
std::optional<std::pair<Determinant, int>> apply_excitation(const Determinant& d,
                                                            std::span<const SpinOrbital> create,
                                                            std::span<const SpinOrbital> annihilate,
                                                            int n_spatial = 64);

// Single operator helpers; return false if the result vanishes.
inline bool annihilate_inplace(Determinant& d, SpinOrbital so, int& phase) {
  std::uint64_t& m = so.spin == Spin::alpha ? d.alpha : d.beta;
  const std::uint64_t bit = std::uint64_t{1} << so.spatial;
  if (!(m & bit)) return false;
  m &= ~bit;
  if (occupied_below(d, so) & 1) phase = -phase;
  return true;
}

inline bool create_inplace(Determinant& d, SpinOrbital so, int& phase) {
  std::uint64_t& m = so.spin == Spin::alpha ? d.alpha : d.beta;
  const std::uint64_t bit = std::uint64_t{1} << so.spatial;
  if (m & bit) return false;
  if (occupied_below(d, so) & 1) phase = -phase;
  m |= bit;
  return true;
}

std::vector<Determinant> enumerate_symmetry_sector(int n_spatial, int n_alpha, int n_beta,
                                                   const std::vector<int>& orb_irrep, int target_irrep);

// Total irrep of a determinant: XOR of the labels of all occupied spin-orbitals.
int determinant_irrep(const Determinant& d, const std::vector<int>& orb_irrep);

// Closed-shell/aufbau reference: lowest n_alpha alpha and n_beta beta orbitals occupied.
Determinant reference_determinant(int n_alpha, int n_beta);

// "α:10110 β:10100", orbital 0 leftmost.
std::string to_string(const Determinant& d, int n_spatial);
std::string bits_to_string(std::uint64_t mask, int n_spatial);
std::uint64_t bits_from_string(const std::string& s);

}  // namespace swcs
