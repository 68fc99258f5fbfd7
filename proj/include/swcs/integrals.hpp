#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace swcs {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }
  const std::string& detail() const { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

class UnsupportedReference : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One- and two-electron integrals in chemists' notation. Two-electron values
// are stored once per canonical (pq|rs) tuple.
class IntegralTable {
 public:
  IntegralTable() = default;
  IntegralTable(int n_spatial, int n_elec, int ms2);

  int n_spatial() const { return n_; }
  int n_elec() const { return n_elec_; }
  int ms2() const { return ms2_; }
  int n_alpha() const { return (n_elec_ + ms2_) / 2; }
  int n_beta() const { return (n_elec_ - ms2_) / 2; }

  double e_core() const { return e_core_; }
  void set_e_core(double e) { e_core_ = e; }

  const std::vector<int>& orb_irrep() const { return irrep_; }
  void set_orb_irrep(std::vector<int> irrep);
  int irrep(int p) const { return irrep_[p]; }

  double h(int p, int q) const { return h_[static_cast<std::size_t>(p) * n_ + q]; }
  void set_h(int p, int q, double v);

  double g(int p, int q, int r, int s) const { return g_[quad_index(p, q, r, s)]; }
  void set_g(int p, int q, int r, int s, double v) { g_[quad_index(p, q, r, s)] = v; }

  static std::size_t pair_index(int p, int q) {
    const std::size_t a = p > q ? p : q;
    const std::size_t b = p > q ? q : p;
    return a * (a + 1) / 2 + b;
  }
  static std::size_t quad_index(int p, int q, int r, int s) {
    const std::size_t pq = pair_index(p, q);
    const std::size_t rs = pair_index(r, s);
    return pq > rs ? pq * (pq + 1) / 2 + rs : rs * (rs + 1) / 2 + pq;
  }
  std::size_t n_unique_g() const { return g_.size(); }

  // Returns the table with orbitals relabeled so that new orbital k is old perm[k].
  IntegralTable permuted(const std::vector<int>& perm) const;

 private:
  int n_ = 0;
  int n_elec_ = 0;
  int ms2_ = 0;
  double e_core_ = 0.0;
  std::vector<int> irrep_;
  std::vector<double> h_;
  std::vector<double> g_;
};

IntegralTable parse_fcidump(std::istream& in);
IntegralTable parse_fcidump_string(std::string_view text);
IntegralTable read_fcidump(const std::string& path);

void write_fcidump(std::ostream& out, const IntegralTable& t);

struct ReferenceData {
  std::vector<double> orbital_energies;
  double e_scf = 0.0;
  double e_mp2 = 0.0;
  // Keyed by (i, j, a, b) spatial indices; only nonzero amplitudes are kept.
  std::map<std::array<int, 4>, double> mp2_t2;

  double t2(int i, int j, int a, int b) const;
};

std::vector<double> fock_diagonal(const IntegralTable& t);
double scf_energy(const IntegralTable& t);
ReferenceData mp2(const IntegralTable& t);

// Largest |F_ia| between occupied and virtual orbitals of the closed-shell reference.
double max_brillouin(const IntegralTable& t);

// key = value sidecar written next to each fixture.
struct FixtureMeta {
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) != 0; }
  std::string get(const std::string& key) const;
  double number(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;
};

FixtureMeta read_meta(const std::string& path);
// Sidecar path for an FCIDUMP file: same stem with a .meta extension.
std::string meta_path_for(const std::string& fcidump_path);

}  // namespace swcs
