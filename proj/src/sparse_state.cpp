#include "swcs/sparse_state.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "swcs/format.hpp"

namespace swcs {

SparseState::SparseState(std::initializer_list<std::pair<Determinant, double>> entries) {
  for (const auto& [d, v] : entries) add(d, v);
}

SparseState::SparseState(AmplitudeMap map) : amps_(std::move(map)) {
  for (auto it = amps_.begin(); it != amps_.end();) {
    if (it->second == 0.0) {
      amps_.erase(it++);
      continue;
    }
    check_sector(it->first);
    ++it;
  }
}

void SparseState::check_sector(const Determinant& d) {
  if (n_alpha_ < 0) {
    n_alpha_ = d.n_alpha();
    n_beta_ = d.n_beta();
  } else if (d.n_alpha() != n_alpha_ || d.n_beta() != n_beta_) {
    throw SectorError("determinant electron counts differ from the state's sector");
  }
}

void SparseState::set(const Determinant& d, double v) {
  if (v == 0.0) {
    amps_.erase(d);
    return;
  }
  check_sector(d);
  amps_[d] = v;
}

void SparseState::add(const Determinant& d, double v) {
  if (v == 0.0) return;
  check_sector(d);
  auto [it, fresh] = amps_.try_emplace(d, v);
  if (!fresh) {
    it->second += v;
    if (it->second == 0.0) amps_.erase(it);
  }
}

void SparseState::clear() {
  amps_.clear();
  n_alpha_ = n_beta_ = -1;
}

std::vector<std::pair<Determinant, double>> SparseState::sorted_entries() const {
  std::vector<std::pair<Determinant, double>> v(amps_.begin(), amps_.end());
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return v;
}

TruncationPolicy TruncationPolicy::by_count(std::size_t n) {
  if (n < 1) throw std::invalid_argument("n_cut must be >= 1");
  TruncationPolicy p;
  p.n_cut = n;
  return p;
}

TruncationPolicy TruncationPolicy::by_threshold(double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("truncation threshold must be >= 0");
  TruncationPolicy p;
  p.mode = Mode::by_threshold;
  p.epsilon = eps;
  return p;
}

namespace {

bool keeps_before(const std::pair<Determinant, double>& a, const std::pair<Determinant, double>& b) {
  const double x = std::abs(a.second), y = std::abs(b.second);
  if (x != y) return x > y;
  return a.first < b.first;
}

}  // namespace

TruncationReport truncate_inplace(SparseState& s, const TruncationPolicy& p) {
  TruncationReport rep;
  if (p.mode == TruncationPolicy::Mode::by_count) {
    if (s.size() <= p.n_cut) return rep;
    std::vector<std::pair<Determinant, double>> v(s.begin(), s.end());
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(p.n_cut) - 1, v.end(), keeps_before);
    rep.dropped = v.size() - p.n_cut;
    for (std::size_t k = p.n_cut; k < v.size(); ++k) s.erase(v[k].first);
    return rep;
  }
  if (p.epsilon == 0.0 || s.empty()) return rep;
  std::vector<Determinant> drop;
  std::optional<std::pair<Determinant, double>> best;
  for (const auto& e : s) {
    if (std::abs(e.second) < p.epsilon) drop.push_back(e.first);
    if (!best || keeps_before(e, *best)) best = e;
  }
  if (drop.size() == s.size()) {
    const Determinant keep = best->first;
    rep.degenerate = true;
    for (const auto& d : drop)
      if (!(d == keep)) s.erase(d);
    rep.dropped = drop.size() - 1;
    return rep;
  }
  for (const auto& d : drop) s.erase(d);
  rep.dropped = drop.size();
  return rep;
}

SparseState truncate(const SparseState& s, const TruncationPolicy& p, TruncationReport* report) {
  SparseState out = s;
  const auto rep = truncate_inplace(out, p);
  if (report) *report = rep;
  return out;
}

namespace {

void check_compatible(const SparseState& a, const SparseState& b) {
  if (a.empty() || b.empty()) return;
  if (a.n_alpha() != b.n_alpha() || a.n_beta() != b.n_beta())
    throw SectorError("states belong to different electron-number sectors");
}

}  // namespace

double norm2(const SparseState& s) {
  double acc = 0.0;
  for (const auto& [d, v] : s.sorted_entries()) acc += v * v;
  return acc;
}

double overlap(const SparseState& a, const SparseState& b) {
  check_compatible(a, b);
  const SparseState& small = a.size() <= b.size() ? a : b;
  const SparseState& large = a.size() <= b.size() ? b : a;
  double acc = 0.0;
  for (const auto& [d, v] : small.sorted_entries()) {
    auto it = large.map().find(d);
    if (it != large.map().end()) acc += v * it->second;
  }
  return acc;
}

SparseState scale(const SparseState& s, double c) {
  if (c == 0.0) return {};
  AmplitudeMap m = s.map();
  for (auto& [d, v] : m) v *= c;
  return SparseState(std::move(m));
}

SparseState axpy(double c, const SparseState& x, const SparseState& y) {
  check_compatible(x, y);
  SparseState out = y;
  for (const auto& [d, v] : x) out.add(d, c * v);
  return out;
}

double infidelity(const SparseState& a, const SparseState& b) {
  const double na = norm2(a), nb = norm2(b);
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("infidelity of a zero-norm state");
  const double o = overlap(a, b);
  return 1.0 - o * o / (na * nb);
}

void write_state(std::ostream& out, const SparseState& s, int n_spatial) {
  for (const auto& [d, v] : s.sorted_entries())
    out << bits_to_string(d.alpha, n_spatial) << ' ' << bits_to_string(d.beta, n_spatial) << ' ' << fmt17(v) << '\n';
}

SparseState read_state(std::istream& in) {
  SparseState s;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string a, b, v;
    if (!(ls >> a) || a[0] == '#') continue;
    if (!(ls >> b >> v)) throw std::runtime_error("state dump line " + std::to_string(lineno) + ": expected 3 fields");
    auto x = parse_double(v);
    if (!x) throw std::runtime_error("state dump line " + std::to_string(lineno) + ": bad amplitude");
    s.add({bits_from_string(a), bits_from_string(b)}, *x);
  }
  return s;
}

}  // namespace swcs
