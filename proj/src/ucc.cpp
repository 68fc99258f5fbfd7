#include "swcs/ucc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "swcs/format.hpp"

namespace swcs {

std::optional<std::pair<Determinant, int>> Component::excite(const Determinant& d) const {
  Determinant out = d;
  int phase = 1;
  if (!annihilate_inplace(out, annihilate[0], phase)) return std::nullopt;
  if (rank == 2 && !annihilate_inplace(out, annihilate[1], phase)) return std::nullopt;
  if (rank == 2 && !create_inplace(out, create[1], phase)) return std::nullopt;
  if (!create_inplace(out, create[0], phase)) return std::nullopt;
  return std::make_pair(out, phase);
}

std::optional<std::pair<Determinant, int>> Component::deexcite(const Determinant& d) const {
  Determinant out = d;
  int phase = 1;
  if (!annihilate_inplace(out, create[0], phase)) return std::nullopt;
  if (rank == 2 && !annihilate_inplace(out, create[1], phase)) return std::nullopt;
  if (rank == 2 && !create_inplace(out, annihilate[1], phase)) return std::nullopt;
  if (!create_inplace(out, annihilate[0], phase)) return std::nullopt;
  return std::make_pair(out, phase);
}

namespace {

constexpr int kGlobalWidth = 64;

int gidx(SpinOrbital so) { return so.global(kGlobalWidth); }

std::array<int, 5> term_key(const Component& c) {
  return {c.rank, gidx(c.create[0]), c.rank == 2 ? gidx(c.create[1]) : -1, gidx(c.annihilate[0]),
          c.rank == 2 ? gidx(c.annihilate[1]) : -1};
}

// Brings a raw term to canonical form; returns false if it is zero or self-adjoint.
bool canonical_term(Component& c) {
  if (c.rank == 2) {
    if (c.create[0] == c.create[1] || c.annihilate[0] == c.annihilate[1]) return false;
    if (gidx(c.create[0]) > gidx(c.create[1])) std::swap(c.create[0], c.create[1]), c.coef = -c.coef;
    if (gidx(c.annihilate[0]) > gidx(c.annihilate[1]))
      std::swap(c.annihilate[0], c.annihilate[1]), c.coef = -c.coef;
  }
  Component adj = c;
  std::swap(adj.create, adj.annihilate);
  adj.coef = -c.coef;
  const auto k = term_key(c), ka = term_key(adj);
  if (k == ka) return false;
  if (ka < k) c = adj;
  return true;
}

bool shares_spin_orbital(const Component& c) {
  for (int x = 0; x < c.rank; ++x)
    for (int y = 0; y < c.rank; ++y)
      if (c.create[x] == c.annihilate[y]) return true;
  return false;
}

std::optional<Generator> finish(Generator g, std::vector<Component> raw, int* sign, BuildOptions opt) {
  std::vector<Component> terms;
  for (auto& c : raw) {
    if (!canonical_term(c)) continue;
    if (opt.proper_only && shares_spin_orbital(c)) continue;
    bool merged = false;
    for (auto& t : terms)
      if (term_key(t) == term_key(c)) {
        t.coef += c.coef;
        merged = true;
      }
    if (!merged) terms.push_back(c);
  }
  terms.erase(std::remove_if(terms.begin(), terms.end(), [](const Component& c) { return c.coef == 0; }),
              terms.end());
  if (terms.empty()) return std::nullopt;
  std::sort(terms.begin(), terms.end(), [](const Component& a, const Component& b) { return term_key(a) < term_key(b); });
  const int f = terms.front().coef;
  const int af = std::abs(f);
  for (auto& t : terms) {
    if (t.coef % af != 0) throw std::logic_error("generator terms with incommensurate coefficients");
    t.coef /= f;
  }
  if (sign) *sign = f > 0 ? 1 : -1;
  g.components = std::move(terms);
  return g;
}

Component raw_single(SpinOrbital from, SpinOrbital to) {
  Component c;
  c.rank = 1;
  c.create = {to, to};
  c.annihilate = {from, from};
  return c;
}

// a+_{r} a+_{s} a_{q} a_{p}
Component raw_double(SpinOrbital p, SpinOrbital q, SpinOrbital r, SpinOrbital s) {
  Component c;
  c.rank = 2;
  c.create = {r, s};
  c.annihilate = {p, q};
  return c;
}

}  // namespace

std::optional<Generator> make_single(int p, int q, Flavor flavor, int* sign, BuildOptions opt) {
  if (p < 0 || q < 0 || p >= 64 || q >= 64) throw std::invalid_argument("orbital index out of range");
  Generator g;
  g.kind = GeneratorKind::single;
  g.flavor = flavor;
  g.spatial = {p, q, 0, 0};
  std::vector<Component> raw = {raw_single({p, Spin::alpha}, {q, Spin::alpha}),
                                raw_single({p, Spin::beta}, {q, Spin::beta})};
  return finish(std::move(g), std::move(raw), sign, opt);
}

std::optional<Generator> make_double(int p, int q, int r, int s, SpinPattern pattern, Flavor flavor, int* sign,
                                     BuildOptions opt) {
  for (int x : {p, q, r, s})
    if (x < 0 || x >= 64) throw std::invalid_argument("orbital index out of range");
  Generator g;
  g.kind = GeneratorKind::double_;
  g.flavor = flavor;
  g.spatial = {p, q, r, s};
  g.pattern = pattern;
  const Spin A = Spin::alpha, B = Spin::beta;
  std::vector<Component> raw;
  if (pattern == SpinPattern::same) {
    raw.push_back(raw_double({p, A}, {q, A}, {r, A}, {s, A}));
    raw.push_back(raw_double({p, B}, {q, B}, {r, B}, {s, B}));
  } else {
    raw.push_back(raw_double({p, A}, {q, B}, {r, A}, {s, B}));
    raw.push_back(raw_double({p, B}, {q, A}, {r, B}, {s, A}));
  }
  return finish(std::move(g), std::move(raw), sign, opt);
}

std::vector<int> Generator::key(int) const {
  std::vector<int> k;
  k.reserve(components.size() * 6);
  for (const auto& c : components) {
    const auto t = term_key(c);
    k.insert(k.end(), t.begin(), t.end());
    k.push_back(c.coef);
  }
  return k;
}

std::string Generator::label() const {
  std::ostringstream os;
  if (kind == GeneratorKind::single) {
    os << "single " << spatial[0] << ' ' << spatial[1];
  } else {
    os << "double " << spatial[0] << ' ' << spatial[1] << ' ' << spatial[2] << ' ' << spatial[3] << ' '
       << (pattern == SpinPattern::same ? "ss" : "os");
  }
  return os.str();
}

int Generator::irrep(const std::vector<int>& orb_irrep) const {
  if (kind == GeneratorKind::single) return orb_irrep.at(spatial[0]) ^ orb_irrep.at(spatial[1]);
  return orb_irrep.at(spatial[0]) ^ orb_irrep.at(spatial[1]) ^ orb_irrep.at(spatial[2]) ^ orb_irrep.at(spatial[3]);
}

Eigen::VectorXd AnsatzCircuit::params() const {
  Eigen::VectorXd v(ops.size());
  for (std::size_t k = 0; k < ops.size(); ++k) v[k] = ops[k].theta;
  return v;
}

void AnsatzCircuit::set_params(const Eigen::VectorXd& theta) {
  if (static_cast<std::size_t>(theta.size()) != ops.size()) throw std::invalid_argument("parameter length mismatch");
  for (std::size_t k = 0; k < ops.size(); ++k) ops[k].theta = theta[k];
}

namespace {

// exp(angle * (tau - tau^dagger)) applied exactly as independent 2x2 rotations.
SparseState rotate(const Component& comp, double angle, const SparseState& s) {
  if (angle == 0.0) return s;
  const double co = std::cos(angle), si = std::sin(angle);
  const auto& m = s.map();
  AmplitudeMap out;
  out.reserve(s.size() + s.size() / 2);
  for (const auto& [d, c] : m) {
    if (auto up = comp.excite(d)) {
      const auto& [dp, ph] = *up;
      auto it = m.find(dp);
      const double cp = it == m.end() ? 0.0 : it->second;
      out[d] = co * c - si * ph * cp;
      out[dp] = co * cp + si * ph * c;
    } else if (auto down = comp.deexcite(d)) {
      const auto& [dl, ph] = *down;
      if (m.contains(dl)) continue;
      out[d] = co * c;
      out[dl] = -si * ph * c;
    } else {
      out[d] = c;
    }
  }
  return SparseState(std::move(out));
}

// <mu| (tau - tau^dagger) |phi>, summed in canonical order
double component_matrix_element(const Component& comp, const SparseState& mu, const SparseState& phi) {
  const auto& m = mu.map();
  double acc = 0.0;
  for (const auto& [d, c] : phi.sorted_entries()) {
    if (auto up = comp.excite(d)) {
      auto it = m.find(up->first);
      if (it != m.end()) acc += c * up->second * it->second;
    } else if (auto down = comp.deexcite(d)) {
      auto it = m.find(down->first);
      if (it != m.end()) acc -= c * down->second * it->second;
    }
  }
  return acc;
}

SparseState summed_exponential(const Generator& g, double theta, const SparseState& s) {
  if (theta == 0.0) return s;
  const double bound = std::abs(theta) * static_cast<double>(g.components.size());
  const int steps = std::max(1, static_cast<int>(std::ceil(bound / 0.5)));
  const double h = theta / steps;
  SparseState cur = s;
  for (int k = 0; k < steps; ++k) {
    SparseState sum = cur;
    SparseState term = cur;
    const double ref = std::sqrt(norm2(cur));
    for (int n = 1; n < 60; ++n) {
      term = scale(apply_generator(g, term), h / n);
      if (term.empty()) break;
      sum = axpy(1.0, term, sum);
      if (std::sqrt(norm2(term)) <= 1e-17 * ref) break;
    }
    cur = std::move(sum);
  }
  return cur;
}

SparseState restrict_to(const SparseState& mu, const SparseState& support) {
  AmplitudeMap out;
  out.reserve(support.size());
  const auto& m = mu.map();
  for (const auto& [d, v] : support) {
    auto it = m.find(d);
    if (it != m.end()) out.emplace(d, it->second);
  }
  return SparseState(std::move(out));
}

}  // namespace

SparseState apply_generator(const Generator& g, const SparseState& s) {
  AmplitudeMap out;
  const auto entries = s.sorted_entries();
  for (const auto& comp : g.components)
    for (const auto& [d, c] : entries) {
      if (auto up = comp.excite(d)) out[up->first] += comp.coef * up->second * c;
      if (auto down = comp.deexcite(d)) out[down->first] -= comp.coef * down->second * c;
    }
  return SparseState(std::move(out));
}

SparseState apply_generator_exponential(const Generator& g, double theta, const SparseState& s, ExpMode mode) {
  if (mode == ExpMode::summed) return summed_exponential(g, theta, s);
  SparseState cur = s;
  for (const auto& comp : g.components) cur = rotate(comp, comp.coef * theta, cur);
  return cur;
}

SparseState apply_inverse_exponential(const Generator& g, double theta, const SparseState& s, ExpMode mode) {
  if (mode == ExpMode::summed) return summed_exponential(g, -theta, s);
  SparseState cur = s;
  for (std::size_t j = g.components.size(); j-- > 0;)
    cur = rotate(g.components[j], -g.components[j].coef * theta, cur);
  return cur;
}

SparseState evaluate_prefix(const AnsatzCircuit& c, std::size_t count, const SparseState& s0,
                            const TruncationPolicy& p, ExpMode mode, EvalReport* report) {
  if (count > c.size()) throw std::invalid_argument("prefix longer than circuit");
  EvalReport rep;
  SparseState cur = s0;
  for (std::size_t k = 0; k < count; ++k) {
    cur = apply_generator_exponential(c.ops[k].gen, c.ops[k].theta, cur, mode);
    const auto t = truncate_inplace(cur, p);
    if (t.dropped) ++rep.truncations;
    rep.degenerate |= t.degenerate;
  }
  if (report) *report = rep;
  return cur;
}

SparseState evaluate_circuit(const AnsatzCircuit& c, const SparseState& s0, const TruncationPolicy& p, ExpMode mode,
                             EvalReport* report) {
  return evaluate_prefix(c, c.size(), s0, p, mode, report);
}

GradientResult circuit_gradient(const AnsatzCircuit& c, const SparseState& s0, const TruncationPolicy& p,
                                const HamiltonianHandle& h, ExpMode mode) {
  return circuit_gradient_from(c, 0, s0, p, h, mode);
}

GradientResult circuit_gradient_from(const AnsatzCircuit& c, std::size_t begin, const SparseState& state_before,
                                     const TruncationPolicy& p, const HamiltonianHandle& h, ExpMode mode) {
  const std::size_t M = c.size();
  if (begin > M) throw std::invalid_argument("gradient start beyond circuit length");
  GradientResult res;
  res.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(M));

  std::vector<SparseState> before;
  std::vector<char> dropped;
  before.reserve(M - begin);
  SparseState cur = state_before;
  for (std::size_t k = begin; k < M; ++k) {
    before.push_back(cur);
    cur = apply_generator_exponential(c.ops[k].gen, c.ops[k].theta, cur, mode);
    const auto t = truncate_inplace(cur, p);
    dropped.push_back(t.dropped > 0);
    res.degenerate |= t.degenerate;
  }
  const double nrm = norm2(cur);
  if (nrm == 0.0) throw std::invalid_argument("circuit produced a zero-norm state");
  SparseState sigma = apply_h(h, cur);
  const double e = overlap(cur, sigma) / nrm;
  res.energy = e;
  if (begin == M) {
    res.state = std::move(cur);
    return res;
  }

  AmplitudeMap lam = sigma.map();
  for (const auto& [d, v] : cur) lam[d] -= e * v;
  for (auto& [d, v] : lam) v /= nrm;
  SparseState mu(std::move(lam));
  sigma = SparseState();

  for (std::size_t k = M; k-- > begin;) {
    const std::size_t local = k - begin;
    if (dropped[local]) mu = restrict_to(mu, local + 1 < before.size() ? before[local + 1] : cur);
    const Generator& g = c.ops[k].gen;
    const double th = c.ops[k].theta;
    double grad = 0.0;
    if (mode == ExpMode::summed) {
      const SparseState after = summed_exponential(g, th, before[local]);
      grad = 2.0 * overlap(mu, apply_generator(g, after));
      mu = summed_exponential(g, -th, mu);
    } else {
      const std::size_t C = g.components.size();
      std::vector<SparseState> phi;
      phi.reserve(C + 1);
      phi.push_back(before[local]);
      for (std::size_t j = 0; j < C; ++j) phi.push_back(rotate(g.components[j], g.components[j].coef * th, phi.back()));
      for (std::size_t j = C; j-- > 0;) {
        const Component& comp = g.components[j];
        grad += 2.0 * comp.coef * component_matrix_element(comp, mu, phi[j + 1]);
        mu = rotate(comp, -comp.coef * th, mu);
      }
    }
    res.gradient[static_cast<Eigen::Index>(k)] = grad;
  }
  res.state = std::move(cur);
  return res;
}

SparseState reference_state(const IntegralTable& t) {
  return SparseState::basis(reference_determinant(t.n_alpha(), t.n_beta()));
}

AnsatzCircuit build_uccsd_circuit(const IntegralTable& t, const ReferenceData& ref, bool symmetry_filter) {
  const int nocc = t.n_elec() / 2;
  const int n = t.n_spatial();
  auto allowed = [&](std::initializer_list<int> idx) {
    if (!symmetry_filter) return true;
    int x = 0;
    for (int i : idx) x ^= t.irrep(i);
    return x == 0;
  };
  struct Entry {
    CircuitOp op;
    std::tuple<int, int, int, int, int> order;
  };
  std::vector<Entry> doubles, singles;
  auto add_double = [&](int i, int j, int a, int b, SpinPattern pat, double amp) {
    int sign = 1;
    auto g = make_double(i, j, a, b, pat, Flavor::occupied_virtual, &sign);
    if (!g) return;
    doubles.push_back({{*g, sign * amp}, {i, j, a, b, pat == SpinPattern::same ? 0 : 1}});
  };
  for (int i = 0; i < nocc; ++i)
    for (int j = i; j < nocc; ++j)
      for (int a = nocc; a < n; ++a)
        for (int b = a; b < n; ++b) {
          if (!allowed({i, j, a, b})) continue;
          if (i < j && a < b) {
            add_double(i, j, a, b, SpinPattern::same, ref.t2(i, j, a, b) - ref.t2(i, j, b, a));
            add_double(i, j, a, b, SpinPattern::opposite, ref.t2(i, j, a, b));
            add_double(i, j, b, a, SpinPattern::opposite, ref.t2(i, j, b, a));
          } else {
            add_double(i, j, a, b, SpinPattern::opposite, ref.t2(i, j, a, b));
          }
        }
  for (int i = 0; i < nocc; ++i)
    for (int a = nocc; a < n; ++a) {
      if (!allowed({i, a})) continue;
      int sign = 1;
      auto g = make_single(i, a, Flavor::occupied_virtual, &sign);
      if (g) singles.push_back({{*g, 0.0}, {i, a, 0, 0, 0}});
    }
  std::stable_sort(doubles.begin(), doubles.end(), [](const Entry& x, const Entry& y) {
    const double ax = std::abs(x.op.theta), ay = std::abs(y.op.theta);
    if (ax != ay) return ax > ay;
    return x.order < y.order;
  });
  std::sort(singles.begin(), singles.end(), [](const Entry& x, const Entry& y) { return x.order < y.order; });
  AnsatzCircuit c;
  for (auto& e : doubles) c.ops.push_back(std::move(e.op));
  for (auto& e : singles) c.ops.push_back(std::move(e.op));
  return c;
}

void write_circuit(std::ostream& out, const AnsatzCircuit& c) {
  out << "# swcs-circuit v1\n";
  for (const auto& op : c.ops)
    out << op.gen.label() << ' ' << (op.gen.flavor == Flavor::generalized ? "gen" : "ov") << ' ' << fmt17(op.theta)
        << '\n';
}

AnsatzCircuit read_circuit(std::istream& in) {
  AnsatzCircuit c;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# swcs-circuit v1", 0) == 0) header = true;
      continue;
    }
    if (!header) throw std::runtime_error("circuit file: missing '# swcs-circuit v1' header");
    std::istringstream ls(line);
    std::vector<std::string> f;
    for (std::string w; ls >> w;) f.push_back(w);
    auto bad = [&](const std::string& why) {
      return std::runtime_error("circuit line " + std::to_string(lineno) + ": " + why);
    };
    auto idx = [&](const std::string& s) {
      auto v = parse_int(s);
      if (!v || *v < 0 || *v >= 64) throw bad("bad orbital index '" + s + "'");
      return static_cast<int>(*v);
    };
    auto flavor = [&](const std::string& s) {
      if (s == "gen") return Flavor::generalized;
      if (s == "ov") return Flavor::occupied_virtual;
      throw bad("unknown flavor '" + s + "'");
    };
    std::optional<Generator> g;
    std::string theta;
    if (f.size() == 5 && f[0] == "single") {
      g = make_single(idx(f[1]), idx(f[2]), flavor(f[3]));
      theta = f[4];
    } else if (f.size() == 8 && f[0] == "double") {
      SpinPattern pat;
      if (f[5] == "ss") pat = SpinPattern::same;
      else if (f[5] == "os") pat = SpinPattern::opposite;
      else throw bad("unknown spin pattern '" + f[5] + "'");
      g = make_double(idx(f[1]), idx(f[2]), idx(f[3]), idx(f[4]), pat, flavor(f[6]));
      theta = f[7];
    } else {
      throw bad("unrecognized operator record");
    }
    if (!g) throw bad("operator vanishes identically");
    auto v = parse_double(theta);
    if (!v || !std::isfinite(*v)) throw bad("bad parameter '" + theta + "'");
    c.ops.push_back({*g, *v});
  }
  if (!header) throw std::runtime_error("circuit file: missing '# swcs-circuit v1' header");
  return c;
}

void save_circuit(const std::string& path, const AnsatzCircuit& c) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write circuit '" + path + "'");
    write_circuit(out, c);
  }
  std::rename(tmp.c_str(), path.c_str());
}

AnsatzCircuit load_circuit(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open circuit '" + path + "'");
  return read_circuit(in);
}

}  // namespace swcs
