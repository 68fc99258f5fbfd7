#include "swcs/integrals.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "swcs/format.hpp"

namespace swcs {

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line), detail_(what) {}

IntegralTable::IntegralTable(int n_spatial, int n_elec, int ms2)
    : n_(n_spatial), n_elec_(n_elec), ms2_(ms2), irrep_(n_spatial, 0) {
  if (n_spatial < 1 || n_spatial > 64) throw std::invalid_argument("n_spatial out of range");
  if (n_elec < 0 || n_elec > 2 * n_spatial) throw std::invalid_argument("n_elec out of range");
  if ((n_elec + ms2) % 2 != 0) throw std::invalid_argument("n_elec and ms2 parity mismatch");
  h_.assign(static_cast<std::size_t>(n_) * n_, 0.0);
  const std::size_t npair = pair_index(n_ - 1, n_ - 1) + 1;
  g_.assign(npair * (npair + 1) / 2, 0.0);
}

void IntegralTable::set_orb_irrep(std::vector<int> irrep) {
  if (static_cast<int>(irrep.size()) != n_) throw std::invalid_argument("orb_irrep length != n_spatial");
  irrep_ = std::move(irrep);
}

void IntegralTable::set_h(int p, int q, double v) {
  h_[static_cast<std::size_t>(p) * n_ + q] = v;
  h_[static_cast<std::size_t>(q) * n_ + p] = v;
}

IntegralTable IntegralTable::permuted(const std::vector<int>& perm) const {
  IntegralTable out(n_, n_elec_, ms2_);
  out.e_core_ = e_core_;
  std::vector<int> irr(n_);
  for (int k = 0; k < n_; ++k) irr[k] = irrep_[perm[k]];
  out.irrep_ = irr;
  for (int p = 0; p < n_; ++p)
    for (int q = 0; q < n_; ++q) out.h_[static_cast<std::size_t>(p) * n_ + q] = h(perm[p], perm[q]);
  for (int p = 0; p < n_; ++p)
    for (int q = 0; q <= p; ++q)
      for (int r = 0; r < n_; ++r)
        for (int s = 0; s <= r; ++s) out.set_g(p, q, r, s, g(perm[p], perm[q], perm[r], perm[s]));
  return out;
}

namespace {

std::vector<std::string> split_tokens(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(cur), cur.clear();
    } else if (c == '=') {
      if (!cur.empty()) out.push_back(cur), cur.clear();
      out.emplace_back("=");
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

bool is_header_end(const std::string& line) {
  const std::string u = upper(line);
  if (u.find("&END") != std::string::npos) return true;
  std::string trimmed;
  for (char c : u)
    if (!std::isspace(static_cast<unsigned char>(c))) trimmed += c;
  return trimmed == "/";
}

}  // namespace

IntegralTable parse_fcidump(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::string header;
  bool started = false, ended = false;
  std::size_t header_line = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!started) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      if (upper(line).find("&FCI") == std::string::npos)
        throw ParseError(lineno, "expected &FCI header");
      started = true;
      header_line = lineno;
    }
    std::string body = line;
    const std::string u = upper(body);
    if (auto pos = u.find("&FCI"); pos != std::string::npos) body.erase(pos, 4);
    if (is_header_end(line)) {
      std::string u2 = upper(body);
      auto pos = u2.find("&END");
      if (pos != std::string::npos) body.erase(pos);
      else body.clear();
      header += ' ' + body;
      ended = true;
      break;
    }
    header += ' ' + body;
  }
  if (!started) throw ParseError(lineno == 0 ? 1 : lineno, "empty input, missing &FCI header");
  if (!ended) throw ParseError(lineno, "unterminated header (no &END)");

  const auto toks = split_tokens(header);
  std::map<std::string, std::vector<long long>> kv;
  std::string key;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i + 1 < toks.size() && toks[i + 1] == "=") {
      key = upper(toks[i]);
      kv[key];
      ++i;
      continue;
    }
    if (toks[i] == "=" || key.empty()) throw ParseError(header_line, "malformed header near '" + toks[i] + "'");
    auto v = parse_int(toks[i]);
    if (!v) {
      // Non-integer header values (e.g. UHF=.FALSE.) are tolerated for unknown keys only.
      if (key == "NORB" || key == "NELEC" || key == "MS2" || key == "ORBSYM" || key == "ISYM")
        throw ParseError(header_line, "non-integer value '" + toks[i] + "' for " + key);
      continue;
    }
    kv[key].push_back(*v);
  }
  auto scalar = [&](const char* k, bool required, long long dflt) -> long long {
    auto it = kv.find(k);
    if (it == kv.end()) {
      if (required) throw ParseError(header_line, std::string("header missing ") + k);
      return dflt;
    }
    if (it->second.size() != 1) throw ParseError(header_line, std::string("header key ") + k + " needs one value");
    return it->second[0];
  };
  const long long norb = scalar("NORB", true, 0);
  const long long nelec = scalar("NELEC", true, 0);
  const long long ms2 = scalar("MS2", false, 0);
  if (norb < 1 || norb > 64) throw ParseError(header_line, "NORB out of range [1, 64]");
  if (nelec < 0 || nelec > 2 * norb) throw ParseError(header_line, "NELEC out of range");
  if ((nelec + ms2) % 2 != 0 || std::llabs(ms2) > nelec) throw ParseError(header_line, "inconsistent MS2");

  IntegralTable t(static_cast<int>(norb), static_cast<int>(nelec), static_cast<int>(ms2));
  if (auto it = kv.find("ORBSYM"); it != kv.end()) {
    if (static_cast<long long>(it->second.size()) != norb)
      throw ParseError(header_line, "ORBSYM has " + std::to_string(it->second.size()) + " entries, expected " +
                                        std::to_string(norb));
    std::vector<int> irr;
    for (long long s : it->second) {
      if (s < 1 || s > 8) throw ParseError(header_line, "ORBSYM label out of range [1, 8]");
      irr.push_back(static_cast<int>(s - 1));
    }
    t.set_orb_irrep(std::move(irr));
  }

  std::vector<char> seen_g(t.n_unique_g(), 0);
  std::vector<char> seen_h(static_cast<std::size_t>(norb * norb), 0);
  bool seen_core = false;
  auto conflict = [](double a, double b) { return std::abs(a - b) > 1e-12; };
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::vector<std::string> f;
    for (std::string w; ls >> w;) f.push_back(w);
    if (f.empty()) continue;
    if (f.size() != 5) throw ParseError(lineno, "expected 'value i j k l', got " + std::to_string(f.size()) + " fields");
    auto val = parse_double(f[0]);
    if (!val) throw ParseError(lineno, "non-numeric value '" + f[0] + "'");
    if (!std::isfinite(*val)) throw ParseError(lineno, "non-finite value");
    int idx[4];
    for (int k = 0; k < 4; ++k) {
      auto v = parse_int(f[k + 1]);
      if (!v) throw ParseError(lineno, "non-integer index '" + f[k + 1] + "'");
      if (*v < 0 || *v > norb) throw ParseError(lineno, "index " + f[k + 1] + " out of [0, NORB]");
      idx[k] = static_cast<int>(*v);
    }
    const int i = idx[0], j = idx[1], k = idx[2], l = idx[3];
    if (i && j && k && l) {
      const std::size_t q = IntegralTable::quad_index(i - 1, j - 1, k - 1, l - 1);
      if (seen_g[q] && conflict(t.g(i - 1, j - 1, k - 1, l - 1), *val))
        throw ParseError(lineno, "conflicting duplicate two-electron integral");
      seen_g[q] = 1;
      t.set_g(i - 1, j - 1, k - 1, l - 1, *val);
    } else if (i && j && !k && !l) {
      const std::size_t q = static_cast<std::size_t>(std::max(i, j) - 1) * norb + (std::min(i, j) - 1);
      if (seen_h[q] && conflict(t.h(i - 1, j - 1), *val))
        throw ParseError(lineno, "conflicting duplicate one-electron integral");
      seen_h[q] = 1;
      t.set_h(i - 1, j - 1, *val);
    } else if (!i && !j && !k && !l) {
      if (seen_core && conflict(t.e_core(), *val)) throw ParseError(lineno, "conflicting duplicate core energy");
      seen_core = true;
      t.set_e_core(*val);
    } else if (i && !j && !k && !l) {
      // orbital-energy extension line, recomputed from the integrals instead
    } else {
      throw ParseError(lineno, "unsupported index pattern");
    }
  }
  return t;
}

IntegralTable parse_fcidump_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_fcidump(in);
}

IntegralTable read_fcidump(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open FCIDUMP '" + path + "'");
  try {
    return parse_fcidump(in);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.detail() + " in " + path);
  }
}

void write_fcidump(std::ostream& out, const IntegralTable& t) {
  const int n = t.n_spatial();
  out << " &FCI NORB=" << n << ",NELEC=" << t.n_elec() << ",MS2=" << t.ms2() << ",\n  ORBSYM=";
  for (int p = 0; p < n; ++p) out << t.irrep(p) + 1 << ',';
  out << "\n  ISYM=1,\n &END\n";
  for (int p = 0; p < n; ++p)
    for (int q = 0; q <= p; ++q)
      for (int r = 0; r <= p; ++r)
        for (int s = 0; s <= r; ++s) {
          if (IntegralTable::pair_index(r, s) > IntegralTable::pair_index(p, q)) continue;
          const double v = t.g(p, q, r, s);
          if (v != 0.0) out << fmt17(v) << ' ' << p + 1 << ' ' << q + 1 << ' ' << r + 1 << ' ' << s + 1 << '\n';
        }
  for (int p = 0; p < n; ++p)
    for (int q = 0; q <= p; ++q)
      if (t.h(p, q) != 0.0) out << fmt17(t.h(p, q)) << ' ' << p + 1 << ' ' << q + 1 << " 0 0\n";
  out << fmt17(t.e_core()) << " 0 0 0 0\n";
}

namespace {

int n_occ_closed(const IntegralTable& t) {
  if (t.n_elec() % 2 != 0 || t.ms2() != 0)
    throw UnsupportedReference("closed-shell reference requires even n_elec and MS2 = 0");
  return t.n_elec() / 2;
}

}  // namespace

std::vector<double> fock_diagonal(const IntegralTable& t) {
  const int nocc = n_occ_closed(t);
  std::vector<double> eps(t.n_spatial());
  for (int p = 0; p < t.n_spatial(); ++p) {
    double e = t.h(p, p);
    for (int i = 0; i < nocc; ++i) e += 2.0 * t.g(p, p, i, i) - t.g(p, i, i, p);
    eps[p] = e;
  }
  return eps;
}

double scf_energy(const IntegralTable& t) {
  const int nocc = n_occ_closed(t);
  double e = t.e_core();
  for (int i = 0; i < nocc; ++i) e += 2.0 * t.h(i, i);
  for (int i = 0; i < nocc; ++i)
    for (int j = 0; j < nocc; ++j) e += 2.0 * t.g(i, i, j, j) - t.g(i, j, j, i);
  return e;
}

double max_brillouin(const IntegralTable& t) {
  const int nocc = n_occ_closed(t);
  double m = 0.0;
  for (int i = 0; i < nocc; ++i)
    for (int a = nocc; a < t.n_spatial(); ++a) {
      double f = t.h(i, a);
      for (int j = 0; j < nocc; ++j) f += 2.0 * t.g(i, a, j, j) - t.g(i, j, j, a);
      m = std::max(m, std::abs(f));
    }
  return m;
}

double ReferenceData::t2(int i, int j, int a, int b) const {
  auto it = mp2_t2.find({i, j, a, b});
  return it == mp2_t2.end() ? 0.0 : it->second;
}

ReferenceData mp2(const IntegralTable& t) {
  const int nocc = n_occ_closed(t);
  const int n = t.n_spatial();
  ReferenceData r;
  r.orbital_energies = fock_diagonal(t);
  r.e_scf = scf_energy(t);
  const auto& eps = r.orbital_energies;
  double ecorr = 0.0;
  for (int i = 0; i < nocc; ++i)
    for (int j = 0; j < nocc; ++j)
      for (int a = nocc; a < n; ++a)
        for (int b = nocc; b < n; ++b) {
          const double d = eps[i] + eps[j] - eps[a] - eps[b];
          if (std::abs(d) < 1e-10)
            throw DegeneracyError("vanishing MP2 denominator for (" + std::to_string(i) + "," + std::to_string(j) +
                                  "," + std::to_string(a) + "," + std::to_string(b) + ")");
          const double iajb = t.g(i, a, j, b);
          const double ibja = t.g(i, b, j, a);
          ecorr += iajb * (2.0 * iajb - ibja) / d;
          if (iajb != 0.0) r.mp2_t2[{i, j, a, b}] = iajb / d;
        }
  r.e_mp2 = r.e_scf + ecorr;
  return r;
}

std::string FixtureMeta::get(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw std::runtime_error("fixture metadata has no key '" + key + "'");
  return it->second;
}

double FixtureMeta::number(const std::string& key) const {
  auto v = parse_double(get(key));
  if (!v) throw std::runtime_error("fixture metadata key '" + key + "' is not numeric");
  return *v;
}

std::vector<double> FixtureMeta::numbers(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(get(key));
  for (std::string item; std::getline(ss, item, ',');) {
    auto v = parse_double(item);
    if (!v) throw std::runtime_error("fixture metadata key '" + key + "' has a non-numeric entry");
    out.push_back(*v);
  }
  return out;
}

FixtureMeta read_meta(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metadata '" + path + "'");
  FixtureMeta m;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    m.values[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return m;
}

std::string meta_path_for(const std::string& fcidump_path) {
  const auto dot = fcidump_path.rfind('.');
  const auto slash = fcidump_path.rfind('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return fcidump_path + ".meta";
  return fcidump_path.substr(0, dot) + ".meta";
}

}  // namespace swcs
