#include "swcs/pool.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <stdexcept>

#include "swcs/parallel.hpp"

namespace swcs {

OperatorPool build_gsd_pool(const IntegralTable& t, const PoolOptions& opt) {
  const int n = t.n_spatial();
  auto allowed = [&](int x) { return !opt.symmetry_filter || x == 0; };
  BuildOptions bo;
  bo.proper_only = opt.variant == PoolVariant::proper;
  std::set<std::vector<int>> seen;
  std::vector<std::pair<std::vector<int>, Generator>> found;
  auto keep = [&](std::optional<Generator> g) {
    if (!g) return;
    auto k = g->key();
    if (seen.insert(k).second) found.emplace_back(std::move(k), std::move(*g));
  };
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      if (p != q && allowed(t.irrep(p) ^ t.irrep(q))) keep(make_single(p, q, Flavor::generalized, nullptr, bo));
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) {
          if (!allowed(t.irrep(p) ^ t.irrep(q) ^ t.irrep(r) ^ t.irrep(s))) continue;
          if (opt.variant == PoolVariant::spatially_disjoint && (p == r || p == s || q == r || q == s)) continue;
          if (opt.same_spin_doubles)
            keep(make_double(p, q, r, s, SpinPattern::same, Flavor::generalized, nullptr, bo));
          keep(make_double(p, q, r, s, SpinPattern::opposite, Flavor::generalized, nullptr, bo));
        }
  std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    if (a.second.kind != b.second.kind) return a.second.kind == GeneratorKind::single;
    return a.first < b.first;
  });
  OperatorPool pool;
  pool.generators.reserve(found.size());
  for (auto& f : found) pool.generators.push_back(std::move(f.second));
  return pool;
}

void write_pool(std::ostream& out, const OperatorPool& pool, const IntegralTable& t) {
  out << "# swcs-pool v1 n_pool=" << pool.size() << '\n';
  for (std::size_t k = 0; k < pool.size(); ++k) {
    const auto& g = pool.generators[k];
    out << k << ' ' << g.label() << " irrep=" << g.irrep(t.orb_irrep()) << " components=";
    for (std::size_t c = 0; c < g.components.size(); ++c) {
      const auto& comp = g.components[c];
      if (c) out << ';';
      out << (comp.coef > 0 ? '+' : '-');
      auto so = [&](SpinOrbital x) { out << x.spatial << (x.spin == Spin::alpha ? 'a' : 'b'); };
      for (int i = 0; i < comp.rank; ++i) so(comp.create[i]), out << '^';
      for (int i = comp.rank; i-- > 0;) out << ' ', so(comp.annihilate[i]);
    }
    out << '\n';
  }
}

namespace {

// <r| (tau - tau^dagger) |s> over the entries of s.
double residual_element(const Component& comp, const std::vector<std::pair<Determinant, double>>& s,
                        const AmplitudeMap& r) {
  double acc = 0.0;
  for (const auto& [d, c] : s) {
    if (auto up = comp.excite(d)) {
      auto it = r.find(up->first);
      if (it != r.end()) acc += c * up->second * it->second;
    } else if (auto down = comp.deexcite(d)) {
      auto it = r.find(down->first);
      if (it != r.end()) acc -= c * down->second * it->second;
    }
  }
  return acc;
}

}  // namespace

PoolGradient pool_gradient_threads(const OperatorPool& pool, const SparseState& s, const HamiltonianHandle& h,
                                   int threads) {
  const double nrm = norm2(s);
  if (nrm == 0.0) throw std::invalid_argument("pool gradient of a zero-norm state");
  const SparseState sigma = apply_h(h, s);
  const double e = overlap(s, sigma) / nrm;
  // r = H s - E s; the E term vanishes analytically for real s and anti-Hermitian K.
  AmplitudeMap r = sigma.map();
  for (const auto& [d, v] : s) r[d] -= e * v;
  const auto entries = s.sorted_entries();

  PoolGradient pg;
  pg.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pool.size()));
  parallel_chunks(
      pool.size(), 64,
      [&](int, std::size_t b, std::size_t end) {
        for (std::size_t k = b; k < end; ++k) {
          double v = 0.0;
          for (const auto& comp : pool.generators[k].components) v += comp.coef * residual_element(comp, entries, r);
          pg.values[static_cast<Eigen::Index>(k)] = 2.0 * v / nrm;
        }
      },
      std::max(1, threads));
  pg.norm = pg.values.norm();
  pg.max_abs = pool.size() ? pg.values.cwiseAbs().maxCoeff() : 0.0;
  return pg;
}

PoolGradient pool_gradient(const OperatorPool& pool, const SparseState& s, const HamiltonianHandle& h) {
  return pool_gradient_threads(pool, s, h, num_threads());
}

Selection select_operator(const PoolGradient& pg) {
  if (pg.values.size() == 0) throw std::invalid_argument("empty pool gradient");
  Selection sel;
  double best = -1.0;
  for (Eigen::Index k = 0; k < pg.values.size(); ++k) {
    const double a = std::abs(pg.values[k]);
    if (a > best) best = a, sel.index = static_cast<std::size_t>(k);
  }
  sel.degenerate = best == 0.0;
  return sel;
}

}  // namespace swcs
