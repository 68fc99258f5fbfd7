#pragma once

#include <absl/container/flat_hash_map.h>

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "swcs/determinant.hpp"

namespace swcs {

class SectorError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Iteration order is unspecified (absl seeds it per table); sums go through sorted_entries().
using AmplitudeMap = absl::flat_hash_map<Determinant, double, DeterminantHash>;

// Real amplitudes over determinants; absent keys are zero and no stored value is 0.
class SparseState {
 public:
  SparseState() = default;
  SparseState(std::initializer_list<std::pair<Determinant, double>> entries);
  // Adopts a map built elsewhere; exact zeros are dropped, sectors are checked.
  explicit SparseState(AmplitudeMap map);

  static SparseState basis(const Determinant& d) { return SparseState{{d, 1.0}}; }

  std::size_t size() const { return amps_.size(); }
  bool empty() const { return amps_.empty(); }
  double get(const Determinant& d) const {
    auto it = amps_.find(d);
    return it == amps_.end() ? 0.0 : it->second;
  }
  bool contains(const Determinant& d) const { return amps_.contains(d); }
  void set(const Determinant& d, double v);
  void add(const Determinant& d, double v);
  void erase(const Determinant& d) { amps_.erase(d); }
  void reserve(std::size_t n) { amps_.reserve(n); }
  void clear();

  // Electron counts shared by every key, or -1 while the state is empty.
  int n_alpha() const { return n_alpha_; }
  int n_beta() const { return n_beta_; }

  auto begin() const { return amps_.begin(); }
  auto end() const { return amps_.end(); }
  const AmplitudeMap& map() const { return amps_; }

  std::vector<std::pair<Determinant, double>> sorted_entries() const;

  friend bool operator==(const SparseState& a, const SparseState& b) { return a.amps_ == b.amps_; }

 private:
  void check_sector(const Determinant& d);

  AmplitudeMap amps_;
  int n_alpha_ = -1;
  int n_beta_ = -1;
};

struct TruncationPolicy {
  enum class Mode { by_count, by_threshold };
  Mode mode = Mode::by_count;
  std::size_t n_cut = std::numeric_limits<std::size_t>::max();
  double epsilon = 0.0;

  static TruncationPolicy unbounded() { return {}; }
  static TruncationPolicy by_count(std::size_t n);
  static TruncationPolicy by_threshold(double eps);
  bool is_unbounded() const {
    return mode == Mode::by_count ? n_cut == std::numeric_limits<std::size_t>::max() : epsilon == 0.0;
  }
};

struct TruncationReport {
  std::size_t dropped = 0;
  bool degenerate = false;
};

SparseState truncate(const SparseState& s, const TruncationPolicy& p, TruncationReport* report = nullptr);
// In-place variant used in inner loops.
TruncationReport truncate_inplace(SparseState& s, const TruncationPolicy& p);

double norm2(const SparseState& s);
double overlap(const SparseState& a, const SparseState& b);
SparseState scale(const SparseState& s, double c);
// c * x + y
SparseState axpy(double c, const SparseState& x, const SparseState& y);
double infidelity(const SparseState& a, const SparseState& b);

// Lines of "<alpha bits> <beta bits> <amplitude>", canonically sorted.
void write_state(std::ostream& out, const SparseState& s, int n_spatial);
SparseState read_state(std::istream& in);

}  // namespace swcs
