#include "swcs/adapt.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <set>

namespace swcs {

const char* to_string(VqeStrategy s) {
  switch (s) {
    case VqeStrategy::full_bfgs: return "bfgs";
    case VqeStrategy::bfgs2: return "bfgs2";
    case VqeStrategy::bfgs2f: return "bfgs2f";
  }
  return "?";
}

const char* to_string(AdaptStatus s) {
  switch (s) {
    case AdaptStatus::running: return "running";
    case AdaptStatus::converged: return "converged";
    case AdaptStatus::max_iter: return "max-iter";
    case AdaptStatus::stalled: return "stalled";
    case AdaptStatus::budget: return "budget";
    case AdaptStatus::error: return "error";
  }
  return "?";
}

VqeStrategy parse_strategy(const std::string& s) {
  if (s == "bfgs" || s == "full-bfgs") return VqeStrategy::full_bfgs;
  if (s == "bfgs2" || s == "bfgs-2") return VqeStrategy::bfgs2;
  if (s == "bfgs2f" || s == "bfgs-2f") return VqeStrategy::bfgs2f;
  throw ConfigError("unknown VQE strategy '" + s + "'");
}

namespace {

struct PrefixCache {
  std::size_t begin = static_cast<std::size_t>(-1);
  Eigen::VectorXd head;
  SparseState state;
};

void validate(const IntegralTable& t, const OperatorPool& pool, const AdaptConfig& cfg) {
  if (cfg.epsilon_exponent < 1) throw ConfigError("epsilon exponent must be >= 1");
  if (cfg.max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
  if (pool.size() == 0) throw ConfigError("operator pool is empty");
  const int n = t.n_spatial();
  auto check = [&](const Generator& g) {
    const int k = g.kind == GeneratorKind::single ? 2 : 4;
    for (int i = 0; i < k; ++i)
      if (g.spatial[i] >= n) throw ConfigError("generator " + g.label() + " references an orbital beyond NORB");
  };
  for (const auto& g : pool.generators) check(g);
  if (cfg.initial_circuit)
    for (const auto& op : cfg.initial_circuit->ops) check(op.gen);
  if (cfg.initial_state) {
    if (cfg.initial_state->empty()) throw ConfigError("initial state is empty");
    if (cfg.initial_state->n_alpha() != t.n_alpha() || cfg.initial_state->n_beta() != t.n_beta())
      throw ConfigError("initial state electron counts do not match the FCIDUMP header");
  }
  if (t.n_alpha() > n || t.n_beta() > n) throw ConfigError("more electrons than orbitals");
}

}  // namespace

Objective circuit_objective(const AnsatzCircuit& c, const SparseState& s0, const TruncationPolicy& p,
                            const HamiltonianHandle& h, ExpMode mode) {
  auto circ = std::make_shared<AnsatzCircuit>(c);
  auto cache = std::make_shared<PrefixCache>();
  auto fn = [circ, cache, s0, p, &h, mode](const Eigen::VectorXd& theta, Eigen::VectorXd* grad,
                                           const std::vector<char>& free) {
    circ->set_params(theta);
    std::size_t begin = 0;
    while (begin < free.size() && !free[begin]) ++begin;
    if (begin == free.size()) begin = 0;
    const Eigen::VectorXd head = theta.head(static_cast<Eigen::Index>(begin));
    GradientResult r;
    if (begin == 0) {
      r = circuit_gradient_from(*circ, 0, s0, p, h, mode);
    } else {
      if (cache->begin != begin || cache->head.size() != head.size() || cache->head != head) {
        cache->state = evaluate_prefix(*circ, begin, s0, p, mode);
        cache->begin = begin;
        cache->head = head;
      }
      r = circuit_gradient_from(*circ, begin, cache->state, p, h, mode);
    }
    if (grad) *grad = r.gradient;
    return r.energy;
  };
  return Objective(fn, static_cast<Eigen::Index>(c.size()));
}

AdaptResult run_adapt(const AdaptConfig& cfg, const IntegralTable& t, const OperatorPool& pool) {
  validate(t, pool, cfg);
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  const HamiltonianHandle h(t);
  const SparseState s0 = cfg.initial_state ? *cfg.initial_state : reference_state(t);
  const double threshold = std::pow(10.0, -cfg.epsilon_exponent);

  AdaptResult res;
  if (cfg.initial_circuit) res.circuit = *cfg.initial_circuit;
  AdaptTrace& tr = res.trace;
  tr.stage_starts.push_back(0);

  EvalReport ev;
  SparseState state = evaluate_circuit(res.circuit, s0, cfg.truncation, cfg.exp_mode, &ev);
  double e_cur = energy(h, state);
  tr.initial_energy = e_cur;
  std::size_t last_sel = static_cast<std::size_t>(-1);
  int repeats = 0;
  for (int it = 1;; ++it) {
    const PoolGradient pg = pool_gradient(pool, state, h);
    const double measure = cfg.norm == PoolNorm::two ? pg.norm : pg.max_abs;
    tr.final_pool_grad_norm = measure;
    if (measure < threshold) {
      tr.status = AdaptStatus::converged;
      break;
    }
    if (it > cfg.max_iterations) {
      tr.status = AdaptStatus::max_iter;
      break;
    }
    if (cfg.budget_seconds > 0.0 && elapsed() >= cfg.budget_seconds) {
      tr.status = AdaptStatus::budget;
      break;
    }
    const Selection sel = select_operator(pg);
    res.circuit.ops.push_back({pool.generators[sel.index], 0.0});

    const Objective obj = circuit_objective(res.circuit, s0, cfg.truncation, h, cfg.exp_mode);
    const Eigen::VectorXd theta0 = res.circuit.params();
    OptimizerReport rep;
    switch (cfg.strategy) {
      case VqeStrategy::full_bfgs: rep = minimize_bfgs(obj, theta0, cfg.bfgs); break;
      case VqeStrategy::bfgs2: rep = optimize_bfgs2(obj, theta0, cfg.bfgs); break;
      case VqeStrategy::bfgs2f: rep = optimize_bfgs2f(obj, theta0, cfg.bfgs); break;
    }
    res.circuit.set_params(rep.theta);
    state = evaluate_circuit(res.circuit, s0, cfg.truncation, cfg.exp_mode, &ev);
    const double e_new = rep.energy;

    AdaptRecord rec;
    rec.iteration = it;
    rec.selected = sel.index;
    rec.label = pool.generators[sel.index].label();
    rec.pool_grad_norm = measure;
    rec.energy = e_new;
    rec.n_det = state.size();
    rec.n_theta = res.circuit.size();
    rec.bfgs_iterations = rep.iterations;
    rec.stage1_iterations = rep.stage1_iterations;
    rec.stage2_iterations = rep.stage2_iterations;
    rec.gradient_evaluations = rep.gradient_evaluations;
    rec.stage1_evaluations = rep.stage1_evaluations;
    rec.stage2_evaluations = rep.stage2_evaluations;
    rec.optimizer_stop = rep.stop_reason;
    rec.degenerate_truncation = ev.degenerate || sel.degenerate;
    rec.wall_seconds = elapsed();
    tr.records.push_back(rec);
    if (cfg.on_iteration) cfg.on_iteration(rec, res.circuit);

    // livelock: the same operator keeps coming back and the energy does not move
    if (sel.index == last_sel && !(e_new < e_cur - 1e-12)) ++repeats;
    else repeats = 0;
    last_sel = sel.index;
    e_cur = e_new;
    if (cfg.livelock_k > 1 && repeats + 1 >= cfg.livelock_k) {
      tr.status = AdaptStatus::stalled;
      tr.message = "operator " + rec.label + " selected " + std::to_string(repeats + 1) +
                   " times in a row without energy improvement";
      break;
    }
  }
  tr.final_energy = energy(h, state);
  tr.final_n_det = state.size();
  return res;
}

AdaptResult run_bootstrap(const BootstrapSchedule& schedule, const AdaptConfig& base, const IntegralTable& t,
                          const OperatorPool& pool) {
  if (schedule.empty()) throw ConfigError("bootstrap schedule is empty");
  auto eff = [](std::size_t n) { return n == 0 ? std::numeric_limits<std::size_t>::max() : n; };
  for (std::size_t k = 1; k < schedule.size(); ++k)
    if (eff(schedule[k].n_cut) <= eff(schedule[k - 1].n_cut))
      throw ConfigError("bootstrap n_cut values must increase (0 = untruncated, last only)");
  AdaptResult out;
  out.circuit = base.initial_circuit ? *base.initial_circuit : AnsatzCircuit{};
  int offset = 0;
  double t_offset = 0.0;
  for (std::size_t st = 0; st < schedule.size(); ++st) {
    AdaptConfig cfg = base;
    cfg.truncation = schedule[st].n_cut == 0 ? TruncationPolicy::unbounded() : TruncationPolicy::by_count(schedule[st].n_cut);
    cfg.strategy = schedule[st].strategy;
    cfg.initial_circuit = out.circuit;
    auto user_cb = base.on_iteration;
    cfg.on_iteration = [&, st, user_cb](const AdaptRecord& r, const AnsatzCircuit& c) {
      AdaptRecord rr = r;
      rr.iteration += offset;
      rr.stage = static_cast<int>(st);
      rr.wall_seconds += t_offset;
      if (user_cb) user_cb(rr, c);
    };
    AdaptResult r;
    try {
      r = run_adapt(cfg, t, pool);
    } catch (const std::exception& e) {
      out.trace.status = AdaptStatus::error;
      out.trace.message = "stage " + std::to_string(st) + ": " + e.what();
      return out;
    }
    out.trace.stage_starts.push_back(out.trace.records.size());
    if (st == 0) out.trace.initial_energy = r.trace.initial_energy;
    for (auto rec : r.trace.records) {
      rec.iteration += offset;
      rec.stage = static_cast<int>(st);
      rec.wall_seconds += t_offset;
      out.trace.records.push_back(rec);
    }
    offset += static_cast<int>(r.trace.records.size());
    if (!r.trace.records.empty()) t_offset = out.trace.records.back().wall_seconds;
    out.circuit = r.circuit;
    out.trace.status = r.trace.status;
    out.trace.final_energy = r.trace.final_energy;
    out.trace.final_n_det = r.trace.final_n_det;
    out.trace.final_pool_grad_norm = r.trace.final_pool_grad_norm;
    out.trace.message = r.trace.message;
    // a stalled or capped stage hands its circuit on; only the budget and errors stop the schedule
    if (r.trace.status == AdaptStatus::budget || r.trace.status == AdaptStatus::error) break;
  }
  out.trace.stage_starts.erase(out.trace.stage_starts.begin());
  return out;
}

VqeResult run_vqe(const AnsatzCircuit& c, const IntegralTable& t, const TruncationPolicy& p, const BfgsOptions& opt,
                  ExpMode mode, const std::optional<SparseState>& s0) {
  const HamiltonianHandle h(t);
  const SparseState start = s0 ? *s0 : reference_state(t);
  VqeResult res;
  res.circuit = c;
  const Objective obj = circuit_objective(c, start, p, h, mode);
  res.report = minimize_bfgs(obj, c.params(), opt);
  res.circuit.set_params(res.report.theta);
  res.n_det = evaluate_circuit(res.circuit, start, p, mode).size();
  return res;
}

DedupeResult dedupe_and_reoptimize(const AnsatzCircuit& c, const IntegralTable& t, const TruncationPolicy& p,
                                   DedupeMode mode, const BfgsOptions& opt) {
  DedupeResult out;
  AnsatzCircuit work;
  if (mode == DedupeMode::drop_duplicates) {
    std::set<std::vector<int>> seen;
    for (const auto& op : c.ops)
      if (seen.insert(op.gen.key()).second) work.ops.push_back(op);
    out.removed = c.size() - work.size();
  } else {
    work = c;
  }
  const VqeResult v = run_vqe(work, t, p, opt);
  out.circuit = v.circuit;
  out.energy = v.report.energy;
  out.report = v.report;
  return out;
}

}  // namespace swcs
