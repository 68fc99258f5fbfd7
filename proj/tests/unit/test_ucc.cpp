#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "swcs/adapt.hpp"
#include "swcs/oracle.hpp"
#include "swcs/pool.hpp"
#include "swcs/ucc.hpp"
#include "test_util.hpp"

using namespace swcs;

namespace {

double max_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

Generator single_component(const Generator& g, std::size_t k) {
  Generator out = g;
  out.components = {g.components[k]};
  return out;
}

// Ordered product of the one-component exponentials, each done densely.
Eigen::VectorXd dense_ordered(const Generator& g, double theta, Eigen::VectorXd v, const oracle::DenseSector& sector) {
  for (std::size_t k = 0; k < g.components.size(); ++k)
    v = oracle::dense_expm_apply(single_component(g, k), theta, v, sector);
  return v;
}

Eigen::VectorXd random_params(std::size_t n, std::mt19937& rng, double width = 0.5) {
  std::uniform_real_distribution<double> u(-width, width);
  Eigen::VectorXd x(static_cast<Eigen::Index>(n));
  for (auto& v : x) v = u(rng);
  return x;
}

double circuit_energy(const AnsatzCircuit& c, const Eigen::VectorXd& theta, const SparseState& s0,
                      const TruncationPolicy& p, const HamiltonianHandle& h) {
  AnsatzCircuit x = c;
  x.set_params(theta);
  return energy(h, evaluate_circuit(x, s0, p));
}

}  // namespace

TEST_CASE("theta = 0 is the identity") {
  const IntegralTable t = test::fixture("lih_sto3g");
  const OperatorPool pool = build_gsd_pool(t);
  const oracle::DenseSector sector(t);
  std::mt19937 rng(1);
  const SparseState s = test::random_state(sector.basis(), rng);
  for (const auto& g : pool.generators) {
    CHECK(apply_generator_exponential(g, 0.0, s) == s);
    CHECK(apply_generator_exponential(g, 0.0, s, ExpMode::summed) == s);
  }
}

TEST_CASE("a quarter turn moves the amplitude to the partner") {
  const IntegralTable t = test::fixture("h2_sto3g");
  const auto g = make_double(0, 0, 1, 1, SpinPattern::opposite, Flavor::occupied_virtual);
  REQUIRE(g);
  REQUIRE(g->components.size() == 1);
  const SparseState s0 = reference_state(t);
  const SparseState s = apply_generator_exponential(*g, std::numbers::pi / 2, s0);
  const Determinant moved{0b10, 0b10};
  CHECK(std::abs(s.get(reference_determinant(1, 1))) < 1e-15);
  CHECK(std::abs(std::abs(s.get(moved)) - 1.0) < 1e-15);
}

TEST_CASE("exponentials match dense matrix exponentials") {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  for (const char* stem : {"lih_sto3g", "h2o_sto3g"}) {
    const IntegralTable t = test::fixture(stem);
    const OperatorPool pool = build_gsd_pool(t);
    const oracle::DenseSector sector(t);
    double worst_ordered = 0.0, worst_summed = 0.0;
    for (std::size_t k = 0; k < pool.size(); k += 3) {
      const Generator& g = pool.generators[k];
      const double theta = angle(rng);
      const SparseState s = test::random_state(sector.basis(), rng, 0.3);
      const Eigen::VectorXd v = sector.embed(s);
      worst_ordered = std::max(
          worst_ordered, max_diff(sector.embed(apply_generator_exponential(g, theta, s)), dense_ordered(g, theta, v, sector)));
      worst_summed =
          std::max(worst_summed, max_diff(sector.embed(apply_generator_exponential(g, theta, s, ExpMode::summed)),
                                          oracle::dense_expm_apply(g, theta, v, sector)));
    }
    CHECK(worst_ordered < 1e-10);
    CHECK(worst_summed < 1e-10);
  }
}

TEST_CASE("one-component generators agree in both modes") {
  const IntegralTable t = test::fixture("h2o_sto3g");
  const OperatorPool pool = build_gsd_pool(t);
  const oracle::DenseSector sector(t);
  std::mt19937 rng(3);
  int seen = 0;
  for (const auto& g : pool.generators) {
    if (g.components.size() != 1) continue;
    ++seen;
    const SparseState s = test::random_state(sector.basis(), rng, 0.3);
    const SparseState a = apply_generator_exponential(g, 0.37, s);
    const SparseState b = apply_generator_exponential(g, 0.37, s, ExpMode::summed);
    CHECK(max_diff(sector.embed(a), sector.embed(b)) < 1e-14);
  }
  CHECK(seen > 0);
}

TEST_CASE("unitarity and inverse") {
  const IntegralTable t = test::fixture("h2o_sto3g");
  const OperatorPool pool = build_gsd_pool(t);
  const oracle::DenseSector sector(t);
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> angle(-2.0, 2.0);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  int commuting = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Generator& g = pool.generators[pick(rng)];
    const double theta = angle(rng);
    const SparseState s = test::random_state(sector.basis(), rng);
    const SparseState u = apply_generator_exponential(g, theta, s);
    CHECK(std::abs(norm2(u) - norm2(s)) < 1e-12);
    CHECK(max_diff(sector.embed(apply_inverse_exponential(g, theta, u)), sector.embed(s)) < 1e-12);
    const SparseState us = apply_generator_exponential(g, theta, s, ExpMode::summed);
    CHECK(std::abs(norm2(us) - norm2(s)) < 1e-12);
    CHECK(max_diff(sector.embed(apply_generator_exponential(g, -theta, us, ExpMode::summed)), sector.embed(s)) < 1e-12);
    // (g, -theta) undoes (g, theta) whenever the components commute
    bool commute = true;
    for (std::size_t i = 0; i < g.components.size(); ++i)
      for (std::size_t j = i + 1; j < g.components.size(); ++j) {
        const Eigen::MatrixXd a = sector.generator_matrix(single_component(g, i));
        const Eigen::MatrixXd b = sector.generator_matrix(single_component(g, j));
        if ((a * b - b * a).cwiseAbs().maxCoeff() > 0.0) commute = false;
      }
    if (!commute) continue;
    ++commuting;
    CHECK(max_diff(sector.embed(apply_generator_exponential(g, -theta, u)), sector.embed(s)) < 1e-12);
  }
  CHECK(commuting > 50);
}

TEST_CASE("inverse circuit restores the input") {
  const IntegralTable t = test::fixture("lih_sto3g");
  const OperatorPool pool = build_gsd_pool(t);
  const oracle::DenseSector sector(t);
  std::mt19937 rng(10);
  AnsatzCircuit c;
  for (std::size_t k = 0; k < pool.size(); k += 2) c.ops.push_back({pool.generators[k], 0.0});
  c.set_params(random_params(c.size(), rng, 1.0));
  const SparseState s = test::random_state(sector.basis(), rng);
  SparseState u = evaluate_circuit(c, s, TruncationPolicy::unbounded());
  for (std::size_t k = c.size(); k-- > 0;) u = apply_inverse_exponential(c.ops[k].gen, c.ops[k].theta, u);
  CHECK(max_diff(sector.embed(u), sector.embed(s)) < 1e-12);
}

TEST_CASE("symmetry-allowed generators keep the irrep") {
  const IntegralTable t = test::fixture("h2o_sto3g");
  const OperatorPool pool = build_gsd_pool(t);
  const int irr = determinant_irrep(reference_determinant(t.n_alpha(), t.n_beta()), t.orb_irrep());
  SparseState s = reference_state(t);
  for (std::size_t k = 0; k < pool.size(); k += 5) s = apply_generator_exponential(pool.generators[k], 0.3, s);
  CHECK(s.size() > 10);
  for (const auto& [d, v] : s) CHECK(determinant_irrep(d, t.orb_irrep()) == irr);
}

TEST_CASE("evaluate_circuit basics") {
  const IntegralTable t = test::fixture("lih_sto3g");
  const SparseState s0 = reference_state(t);
  CHECK(evaluate_circuit(AnsatzCircuit{}, s0, TruncationPolicy::by_count(1)) == s0);
  AnsatzCircuit c = build_uccsd_circuit(t, mp2(t));
  c.set_params(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c.size())));
  const oracle::DenseSector sector(t);
  std::mt19937 rng(5);
  const SparseState s = test::random_state(sector.basis(), rng, 0.9);
  const auto p = TruncationPolicy::by_count(4);
  CHECK(evaluate_circuit(c, s, p) == truncate(s, p));
  SUBCASE("unbounded circuit equals the dense product") {
    c.set_params(random_params(c.size(), rng));
    Eigen::VectorXd v = sector.embed(s);
    for (const auto& op : c.ops) v = dense_ordered(op.gen, op.theta, v, sector);
    CHECK(max_diff(sector.embed(evaluate_circuit(c, s, TruncationPolicy::unbounded())), v) < 1e-10);
  }
}

TEST_CASE("UCCSD is exact for two electrons") {
  const IntegralTable t = test::fixture("h2_sto3g");
  const AnsatzCircuit c = build_uccsd_circuit(t, mp2(t));
  BfgsOptions opt;
  opt.tol = 1e-10;
  const VqeResult r = run_vqe(c, t, TruncationPolicy::unbounded(), opt);
  CHECK(std::abs(r.report.energy - oracle::fci_ground_state(t).energy) < 1e-8);
}

TEST_CASE("UCCSD circuit sizes") {
  CHECK(build_uccsd_circuit(test::fixture("lih_sto3g"), mp2(test::fixture("lih_sto3g"))).size() == 7);
  const IntegralTable c2 = test::fixture("c2_ccpvdz");
  CHECK(build_uccsd_circuit(c2, mp2(c2)).size() == 757);
}

TEST_CASE("UCCSD ordering") {
  const IntegralTable t = test::fixture("h2o_sto3g");
  const ReferenceData ref = mp2(t);
  const AnsatzCircuit c = build_uccsd_circuit(t, ref);
  std::size_t k = 0;
  while (k < c.size() && c.ops[k].gen.kind == GeneratorKind::double_) ++k;
  REQUIRE(k > 0);
  for (std::size_t j = k; j < c.size(); ++j) {
    CHECK(c.ops[j].gen.kind == GeneratorKind::single);
    CHECK(c.ops[j].theta == 0.0);
  }
  for (std::size_t j = 1; j < k; ++j) CHECK(std::abs(c.ops[j - 1].theta) >= std::abs(c.ops[j].theta));
  for (std::size_t j = k + 1; j < c.size(); ++j) CHECK(c.ops[j - 1].gen.spatial < c.ops[j].gen.spatial);
  SUBCASE("ties fall back to index order") {
    ReferenceData flat = ref;
    for (auto& [key, v] : flat.mp2_t2) v = 0.01;
    const AnsatzCircuit a = build_uccsd_circuit(t, flat);
    const AnsatzCircuit b = build_uccsd_circuit(t, flat);
    REQUIRE(a.size() == b.size());
    for (std::size_t j = 0; j < a.size(); ++j) CHECK(a.ops[j].gen.key() == b.ops[j].gen.key());
    std::size_t first_nonzero = 0;
    while (a.ops[first_nonzero].theta == 0.0) ++first_nonzero;
    for (std::size_t j = first_nonzero + 1; j < a.size() && a.ops[j].theta != 0.0; ++j)
      CHECK(a.ops[j - 1].gen.spatial <= a.ops[j].gen.spatial);
  }
}

TEST_CASE("gradient at theta = 0 is the commutator expectation") {
  const IntegralTable t = test::fixture("lih_sto3g");
  const HamiltonianHandle h(t);
  AnsatzCircuit c = build_uccsd_circuit(t, mp2(t));
  c.set_params(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c.size())));
  const SparseState s0 = reference_state(t);
  const GradientResult g = circuit_gradient(c, s0, TruncationPolicy::unbounded(), h);
  const SparseState hs = apply_h(h, s0);
  for (std::size_t k = 0; k < c.size(); ++k)
    CHECK(std::abs(g.gradient[static_cast<Eigen::Index>(k)] - 2.0 * overlap(hs, apply_generator(c.ops[k].gen, s0))) <
          1e-12);
}

TEST_CASE("circuit gradient matches finite differences") {
  std::mt19937 rng(6);
  for (const char* stem : {"h2_sto3g", "lih_sto3g"}) {
    const IntegralTable t = test::fixture(stem);
    const HamiltonianHandle h(t);
    const SparseState s0 = reference_state(t);
    const auto p = TruncationPolicy::unbounded();
    // UCCSD plus a few generalized operators so every parameter matters
    AnsatzCircuit c = build_uccsd_circuit(t, mp2(t));
    const OperatorPool pool = build_gsd_pool(t);
    for (std::size_t k = 0; k < pool.size(); k += 7) c.ops.push_back({pool.generators[k], 0.0});
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::VectorXd theta = random_params(c.size(), rng);
      c.set_params(theta);
      const GradientResult g = circuit_gradient(c, s0, p, h);
      const Eigen::VectorXd fd =
          oracle::fd_gradient([&](const Eigen::VectorXd& x) { return circuit_energy(c, x, s0, p, h); }, theta);
      worst = std::max(worst, max_diff(g.gradient, fd) / std::max(1.0, fd.cwiseAbs().maxCoeff()));
      CHECK(std::abs(g.energy - circuit_energy(c, theta, s0, p, h)) < 1e-12);
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("gradient with truncation matches the fixed-support objective") {
  const IntegralTable t = test::fixture("h2o_sto3g");
  const HamiltonianHandle h(t);
  const SparseState s0 = reference_state(t);
  const OperatorPool pool = build_gsd_pool(t);
  AnsatzCircuit c;
  for (std::size_t k = 0; k < pool.size(); k += 9) c.ops.push_back({pool.generators[k], 0.0});
  std::mt19937 rng(7);
  const Eigen::VectorXd theta = random_params(c.size(), rng, 0.3);
  c.set_params(theta);
  const auto p = TruncationPolicy::by_count(12);
  EvalReport rep;
  evaluate_circuit(c, s0, p, ExpMode::ordered_product, &rep);
  REQUIRE(rep.truncations > 0);
  // supports recorded at the base point
  std::vector<SparseState> kept;
  for (std::size_t k = 1; k <= c.size(); ++k) kept.push_back(evaluate_prefix(c, k, s0, p));
  auto masked = [&](const Eigen::VectorXd& x) {
    SparseState s = s0;
    for (std::size_t k = 0; k < c.size(); ++k) {
      s = apply_generator_exponential(c.ops[k].gen, x[static_cast<Eigen::Index>(k)], s);
      SparseState proj;
      for (const auto& [d, v] : s)
        if (kept[k].contains(d)) proj.set(d, v);
      s = proj;
    }
    return energy(h, s);
  };
  CHECK(std::abs(masked(theta) - circuit_energy(c, theta, s0, p, h)) < 1e-12);
  const GradientResult g = circuit_gradient(c, s0, p, h);
  const Eigen::VectorXd fd = oracle::fd_gradient(masked, theta);
  CHECK(max_diff(g.gradient, fd) / std::max(1.0, fd.cwiseAbs().maxCoeff()) < 1e-6);
}

TEST_CASE("masked gradient from a prefix") {
  const IntegralTable t = test::fixture("lih_sto3g");
  const HamiltonianHandle h(t);
  const SparseState s0 = reference_state(t);
  AnsatzCircuit c = build_uccsd_circuit(t, mp2(t));
  std::mt19937 rng(8);
  c.set_params(random_params(c.size(), rng));
  const auto p = TruncationPolicy::unbounded();
  const GradientResult full = circuit_gradient(c, s0, p, h);
  const GradientResult tail = circuit_gradient_from(c, 4, evaluate_prefix(c, 4, s0, p), p, h);
  CHECK(std::abs(full.energy - tail.energy) < 1e-12);
  for (Eigen::Index k = 0; k < 4; ++k) CHECK(tail.gradient[k] == 0.0);
  CHECK(max_diff(full.gradient.tail(3), tail.gradient.tail(3)) < 1e-12);
}

TEST_CASE("single operator at its optimum is stationary") {
  const IntegralTable t = test::fixture("lih_sto3g");
  const HamiltonianHandle h(t);
  const OperatorPool pool = build_gsd_pool(t);
  const SparseState s0 = reference_state(t);
  const auto sel = select_operator(pool_gradient(pool, s0, h));
  AnsatzCircuit c;
  c.ops.push_back({pool.generators[sel.index], 0.0});
  BfgsOptions opt;
  opt.tol = 1e-11;
  const VqeResult r = run_vqe(c, t, TruncationPolicy::unbounded(), opt);
  const GradientResult g = circuit_gradient(r.circuit, s0, TruncationPolicy::unbounded(), h);
  CHECK(std::abs(g.gradient[0]) < 1e-8);
  CHECK(r.report.energy < scf_energy(t));
}

TEST_CASE("circuit serialization round trip") {
  const IntegralTable t = test::fixture("h2o_sto3g");
  AnsatzCircuit c = build_uccsd_circuit(t, mp2(t));
  const OperatorPool pool = build_gsd_pool(t);
  for (std::size_t k = 0; k < pool.size(); k += 11) c.ops.push_back({pool.generators[k], 0.0});
  std::mt19937 rng(9);
  c.set_params(random_params(c.size(), rng));
  std::ostringstream out;
  write_circuit(out, c);
  std::istringstream in(out.str());
  const AnsatzCircuit d = read_circuit(in);
  REQUIRE(d.size() == c.size());
  for (std::size_t k = 0; k < c.size(); ++k) {
    CHECK(d.ops[k].gen.key() == c.ops[k].gen.key());
    CHECK(d.ops[k].theta == c.ops[k].theta);
    CHECK(d.ops[k].gen.flavor == c.ops[k].gen.flavor);
  }
  const SparseState s0 = reference_state(t);
  CHECK(evaluate_circuit(c, s0, TruncationPolicy::unbounded()) == evaluate_circuit(d, s0, TruncationPolicy::unbounded()));
  std::istringstream bad("# swcs-circuit v1\nS 0 banana ov 0.1\n");
  CHECK_THROWS(read_circuit(bad));
}
