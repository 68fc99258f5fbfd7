#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "swcs/format.hpp"
#include "swcs/parallel.hpp"

namespace swcs::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kLogVersion = 1;

PoolVariant parse_pool(const std::string& s) {
  if (s == "generalized") return PoolVariant::generalized;
  if (s == "proper") return PoolVariant::proper;
  if (s == "disjoint") return PoolVariant::spatially_disjoint;
  throw ConfigError("unknown pool variant '" + s + "' (generalized, proper, disjoint)");
}

TruncationPolicy truncation_of(const RunSpec& s) {
  if (s.ncut > 0) return TruncationPolicy::by_count(s.ncut);
  if (s.trunc_threshold > 0.0) return TruncationPolicy::by_threshold(s.trunc_threshold);
  return TruncationPolicy::unbounded();
}

json spec_json(const RunSpec& s) {
  // out_dir is left out on purpose: it does not affect results and the log lives inside it
  json j;
  j["fcidump"] = s.fcidump;
  j["method"] = s.method;
  j["epsilon_exp"] = s.epsilon_exp;
  j["ncut"] = s.ncut;
  j["trunc_threshold"] = s.trunc_threshold;
  j["strategy"] = s.strategy;
  j["schedule"] = s.schedule;
  j["max_iter"] = s.max_iter;
  j["budget_seconds"] = s.budget_seconds;
  j["threads"] = s.threads;
  j["checkpoint_in"] = s.checkpoint_in;
  j["pool"] = s.pool;
  j["pool_norm"] = s.pool_norm;
  j["vqe_tol"] = s.vqe_tol;
  return j;
}

class LogWriter {
 public:
  explicit LogWriter(const fs::path& p) : out_(p) {
    if (!out_) throw std::runtime_error("cannot write " + p.string());
  }
  void write(const json& j) {
    out_ << j.dump() << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

json record_json(const AdaptRecord& r, std::optional<double> e_fci) {
  json j;
  j["record"] = "iteration";
  j["iteration"] = r.iteration;
  j["stage"] = r.stage;
  j["selected"] = r.selected;
  j["operator"] = r.label;
  j["pool_grad_norm"] = r.pool_grad_norm;
  j["energy"] = r.energy;
  if (e_fci) j["error_mEh"] = (r.energy - *e_fci) * 1000.0;
  j["n_det"] = r.n_det;
  j["n_theta"] = r.n_theta;
  j["bfgs_iterations"] = r.bfgs_iterations;
  j["stage1_iterations"] = r.stage1_iterations;
  j["stage2_iterations"] = r.stage2_iterations;
  j["gradient_evaluations"] = r.gradient_evaluations;
  j["stage1_evaluations"] = r.stage1_evaluations;
  j["stage2_evaluations"] = r.stage2_evaluations;
  j["optimizer_stop"] = r.optimizer_stop;
  j["degenerate_truncation"] = r.degenerate_truncation;
  j["wall_seconds"] = r.wall_seconds;
  return j;
}

int exit_for(AdaptStatus s) {
  switch (s) {
    case AdaptStatus::converged:
    case AdaptStatus::budget: return kExitOk;
    case AdaptStatus::max_iter:
    case AdaptStatus::stalled: return kExitNotConverged;
    default: return kExitRuntime;
  }
}

std::optional<double> fixture_fci(const std::string& fcidump) {
  const std::string mp = meta_path_for(fcidump);
  if (!fs::exists(mp)) return std::nullopt;
  const FixtureMeta m = read_meta(mp);
  if (!m.has("e_fci")) return std::nullopt;
  return m.number("e_fci");
}

bool is_circuit_file(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) return line.rfind("# swcs-circuit", 0) == 0;
  return false;
}

}  // namespace

void validate(const RunSpec& s) {
  if (s.fcidump.empty()) throw ConfigError("--fcidump is required");
  if (!fs::exists(s.fcidump)) throw ConfigError("FCIDUMP file not found: " + s.fcidump);
  if (s.method != "adapt" && s.method != "uccsd-vqe") throw ConfigError("--method must be adapt or uccsd-vqe");
  if (s.epsilon_exp < 1 || s.epsilon_exp > 12) throw ConfigError("--epsilon-exp must be in [1, 12]");
  if (s.ncut > 0 && s.trunc_threshold > 0.0) throw ConfigError("--ncut and --trunc-threshold are exclusive");
  if (s.trunc_threshold < 0.0 || !std::isfinite(s.trunc_threshold))
    throw ConfigError("--trunc-threshold must be finite and >= 0");
  parse_strategy(s.strategy);
  parse_pool(s.pool);
  if (s.pool_norm != "two" && s.pool_norm != "max") throw ConfigError("--pool-norm must be two or max");
  if (!s.schedule.empty()) {
    if (s.method != "adapt") throw ConfigError("--schedule applies to the adapt method only");
    if (s.ncut > 0 || s.trunc_threshold > 0.0) throw ConfigError("--schedule replaces --ncut/--trunc-threshold");
    for (std::size_t k = 0; k + 1 < s.schedule.size(); ++k)
      if (s.schedule[k] == 0) throw ConfigError("untruncated stage (0) may only appear last in --schedule");
  }
  if (s.max_iter < 1) throw ConfigError("--max-iter must be >= 1");
  if (s.budget_seconds < 0.0) throw ConfigError("--budget-seconds must be >= 0");
  if (s.threads < 1 || s.threads > 1024) throw ConfigError("--threads must be in [1, 1024]");
  if (!(s.vqe_tol > 0.0)) throw ConfigError("--vqe-tol must be > 0");
  if (!s.checkpoint_in.empty() && !fs::exists(s.checkpoint_in))
    throw ConfigError("checkpoint not found: " + s.checkpoint_in);
  if (s.out_dir.empty()) throw ConfigError("--out-dir must not be empty");
}

RunOutcome cmd_run(const RunSpec& spec, std::ostream& err) {
  validate(spec);
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  set_num_threads(spec.threads);
  fs::create_directories(spec.out_dir);
  const fs::path dir(spec.out_dir);
  LogWriter log(dir / "run.log");
  const std::string ckpt = (dir / "circuit.txt").string();

  json header;
  header["record"] = "header";
  header["format"] = "swcs-run-log";
  header["version"] = kLogVersion;
  header["config"] = spec_json(spec);
  log.write(header);

  const IntegralTable t = read_fcidump(spec.fcidump);
  const std::optional<double> e_fci = fixture_fci(spec.fcidump);
  const ReferenceData ref = mp2(t);
  const double brill = max_brillouin(t);
  if (brill > 1e-4)
    err << "warning: orbitals are not canonical (max |F_ia| = " << brill << "); MP2 ordering may be poor\n";

  PoolOptions po;
  po.variant = parse_pool(spec.pool);
  json info;
  info["record"] = "reference";
  info["n_spatial"] = t.n_spatial();
  info["n_alpha"] = t.n_alpha();
  info["n_beta"] = t.n_beta();
  info["e_scf"] = ref.e_scf;
  info["e_mp2"] = ref.e_mp2;
  if (e_fci) info["e_fci"] = *e_fci;
  info["max_brillouin"] = brill;

  RunOutcome out;
  const TruncationPolicy trunc = truncation_of(spec);
  BfgsOptions bo;
  bo.tol = spec.vqe_tol;

  if (spec.method == "uccsd-vqe") {
    AnsatzCircuit c = spec.checkpoint_in.empty() ? build_uccsd_circuit(t, ref) : load_circuit(spec.checkpoint_in);
    info["n_theta"] = c.size();
    log.write(info);
    const VqeResult v = run_vqe(c, t, trunc, bo);
    for (const auto& st : v.report.trace) {
      json j;
      j["record"] = "vqe_step";
      j["iteration"] = st.iteration;
      j["energy"] = st.energy;
      j["grad_norm"] = st.grad_norm;
      j["step_length"] = st.step_length;
      log.write(j);
    }
    save_circuit(ckpt, v.circuit);
    out.status = v.report.converged ? "converged" : v.report.stop_reason;
    out.exit_code = v.report.converged ? kExitOk : kExitNotConverged;
    out.energy = v.report.energy;
    out.n_det = v.n_det;
    out.n_theta = v.circuit.size();
    out.iterations = static_cast<std::size_t>(v.report.iterations);
  } else {
    const OperatorPool pool = build_gsd_pool(t, po);
    info["n_pool"] = pool.size();
    log.write(info);
    AdaptConfig cfg;
    cfg.epsilon_exponent = spec.epsilon_exp;
    cfg.max_iterations = spec.max_iter;
    cfg.truncation = trunc;
    cfg.strategy = parse_strategy(spec.strategy);
    cfg.pool_options = po;
    cfg.norm = spec.pool_norm == "max" ? PoolNorm::max : PoolNorm::two;
    cfg.bfgs = bo;
    cfg.budget_seconds = spec.budget_seconds;
    if (!spec.checkpoint_in.empty()) cfg.initial_circuit = load_circuit(spec.checkpoint_in);
    cfg.on_iteration = [&](const AdaptRecord& r, const AnsatzCircuit& c) {
      log.write(record_json(r, e_fci));
      save_circuit(ckpt, c);
    };
    AdaptResult res;
    if (spec.schedule.empty()) {
      res = run_adapt(cfg, t, pool);
    } else {
      BootstrapSchedule sched;
      for (std::size_t n : spec.schedule) sched.push_back({n, cfg.strategy});
      res = run_bootstrap(sched, cfg, t, pool);
      // stage_starts lists the later stages only; stage 0 starts at record 0
      std::vector<std::size_t> starts{0};
      starts.insert(starts.end(), res.trace.stage_starts.begin(), res.trace.stage_starts.end());
      for (std::size_t k = 0; k < starts.size(); ++k) {
        const std::size_t end = k + 1 < starts.size() ? starts[k + 1] : res.trace.records.size();
        json j;
        j["record"] = "stage";
        j["stage"] = k;
        j["n_cut"] = spec.schedule[k];
        j["iterations"] = end - starts[k];
        if (end > starts[k]) j["final_energy"] = res.trace.records[end - 1].energy;
        log.write(j);
      }
    }
    save_circuit(ckpt, res.circuit);
    out.status = to_string(res.trace.status);
    out.exit_code = exit_for(res.trace.status);
    out.energy = res.trace.final_energy;
    out.n_det = res.trace.final_n_det;
    out.n_theta = res.circuit.size();
    out.iterations = res.trace.records.size();
    out.message = res.trace.message;
  }
  if (e_fci) out.error_mEh = (out.energy - *e_fci) * 1000.0;

  json fin;
  fin["record"] = "final";
  fin["status"] = out.status;
  fin["energy"] = out.energy;
  if (out.error_mEh) fin["error_mEh"] = *out.error_mEh;
  fin["n_det"] = out.n_det;
  fin["n_theta"] = out.n_theta;
  fin["iterations"] = out.iterations;
  if (!out.message.empty()) fin["message"] = out.message;
  fin["wall_seconds"] = elapsed();
  log.write(fin);

  json summary = fin;
  summary.erase("record");
  summary["method"] = spec.method;
  summary["fcidump"] = spec.fcidump;
  if (e_fci) summary["e_fci"] = *e_fci;
  summary["e_scf"] = ref.e_scf;
  std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
  return out;
}

std::vector<ScanRow> cmd_scan(const std::vector<std::string>& fcidumps, const RunSpec& base, std::ostream& err) {
  if (fcidumps.empty()) throw ConfigError("scan needs at least one --fcidump");
  std::vector<ScanRow> rows;
  for (const auto& f : fcidumps) {
    ScanRow row;
    row.tag = fs::path(f).stem().string();
    const auto rpos = row.tag.rfind("_r");
    if (rpos != std::string::npos) {
      try {
        std::size_t used = 0;
        const std::string num = row.tag.substr(rpos + 2);
        const double r = std::stod(num, &used);
        if (used == num.size()) row.r = r;
      } catch (const std::exception&) {
      }
    }
    RunSpec s = base;
    s.fcidump = f;
    s.out_dir = (fs::path(base.out_dir) / row.tag).string();
    try {
      const IntegralTable t = read_fcidump(f);
      const ReferenceData ref = mp2(t);
      row.e_scf = ref.e_scf;
      row.e_mp2 = ref.e_mp2;
      row.e_fci = fixture_fci(f);
      const RunOutcome o = cmd_run(s, err);
      row.status = o.status;
      row.energy = o.energy;
      row.error_mEh = o.error_mEh;
      row.n_det = o.n_det;
      row.n_theta = o.n_theta;
    } catch (const std::exception& e) {
      row.status = "error";
      row.message = e.what();
      err << "scan point " << f << " failed: " << e.what() << '\n';
    }
    rows.push_back(row);
  }
  if (std::all_of(rows.begin(), rows.end(), [](const ScanRow& r) { return r.r.has_value(); }))
    std::stable_sort(rows.begin(), rows.end(), [](const ScanRow& a, const ScanRow& b) { return *a.r < *b.r; });

  fs::create_directories(base.out_dir);
  std::ofstream tsv(fs::path(base.out_dir) / "scan.tsv");
  tsv << "tag\tr\tstatus\te_scf\te_mp2\te_fci\tenergy\terror_mEh\tn_det\tn_theta\tmessage\n";
  auto num = [](std::optional<double> v) {
    if (!v) return std::string("NA");
    std::ostringstream o;
    o.precision(12);
    o << *v;
    return o.str();
  };
  for (const auto& r : rows) {
    const bool ok = r.status != "error";
    tsv << r.tag << '\t' << num(r.r) << '\t' << r.status << '\t' << (ok ? num(r.e_scf) : "NA") << '\t'
        << (ok ? num(r.e_mp2) : "NA") << '\t' << num(r.e_fci) << '\t' << (ok ? num(r.energy) : "NA") << '\t'
        << num(r.error_mEh) << '\t' << r.n_det << '\t' << r.n_theta << '\t' << r.message << '\n';
  }
  return rows;
}

FidelityReport cmd_fidelity(const std::string& a, const std::string& b, const std::string& fcidump) {
  for (const auto& p : {a, b, fcidump})
    if (!fs::exists(p)) throw ConfigError("file not found: " + p);
  const IntegralTable t = read_fcidump(fcidump);
  const HamiltonianHandle h(t);
  auto load = [&](const std::string& p) {
    if (is_circuit_file(p))
      return evaluate_circuit(load_circuit(p), reference_state(t), TruncationPolicy::unbounded(),
                              ExpMode::ordered_product);
    std::ifstream in(p);
    return read_state(in);
  };
  const SparseState sa = load(a);
  const SparseState sb = load(b);
  if (sa.n_alpha() != sb.n_alpha() || sa.n_beta() != sb.n_beta() || sa.n_alpha() != t.n_alpha() ||
      sa.n_beta() != t.n_beta())
    throw SectorError("the two states do not live in the same electron-number sector");
  FidelityReport r;
  r.infidelity = infidelity(sa, sb);
  r.energy_a = energy(h, sa);
  r.energy_b = energy(h, sb);
  r.delta_e = r.energy_a - r.energy_b;
  r.n_det_a = sa.size();
  r.n_det_b = sb.size();
  return r;
}

namespace {

void add_run_options(CLI::App* app, RunSpec& s, bool single_fcidump) {
  if (single_fcidump) app->add_option("--fcidump", s.fcidump, "FCIDUMP input")->required();
  app->add_option("--method", s.method, "adapt | uccsd-vqe")->capture_default_str();
  app->add_option("--epsilon-exp", s.epsilon_exp, "ADAPT stops when the pool gradient norm < 10^-k")
      ->capture_default_str();
  app->add_option("--ncut", s.ncut, "keep the N largest amplitudes after every unitary (0: off)");
  app->add_option("--trunc-threshold", s.trunc_threshold, "drop amplitudes below this magnitude (0: off)");
  app->add_option("--strategy", s.strategy, "bfgs | bfgs2 | bfgs2f")->capture_default_str();
  app->add_option("--schedule", s.schedule, "bootstrap n_cut list, e.g. 100,200,0 (0: untruncated)")->delimiter(',');
  app->add_option("--max-iter", s.max_iter, "ADAPT iteration cap")->capture_default_str();
  app->add_option("--budget-seconds", s.budget_seconds, "wall-clock budget (0: none)");
  app->add_option("--threads", s.threads, "worker threads")->capture_default_str();
  app->add_option("--out-dir", s.out_dir, "output directory")->capture_default_str();
  app->add_option("--checkpoint-in", s.checkpoint_in, "start from a saved circuit");
  app->add_option("--pool", s.pool, "generalized | proper | disjoint")->capture_default_str();
  app->add_option("--pool-norm", s.pool_norm, "two | max")->capture_default_str();
  app->add_option("--vqe-tol", s.vqe_tol, "BFGS gradient max-norm tolerance")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"swcs: sparse wavefunction circuit solver for UCCSD and ADAPT-VQE"};
  app.require_subcommand(1);

  RunSpec run_spec;
  auto* run = app.add_subcommand("run", "run one calculation");
  add_run_options(run, run_spec, true);

  RunSpec scan_spec;
  std::vector<std::string> scan_files;
  auto* scan = app.add_subcommand("scan", "run a list of FCIDUMPs (one per geometry)");
  add_run_options(scan, scan_spec, false);
  scan->add_option("--fcidump", scan_files, "FCIDUMP inputs")->required();

  std::string fa, fb, ffd;
  auto* fid = app.add_subcommand("fidelity", "infidelity and energy difference of two checkpoints");
  fid->add_option("--fcidump", ffd, "FCIDUMP input")->required();
  fid->add_option("--a", fa, "circuit checkpoint or state file")->required();
  fid->add_option("--b", fb, "circuit checkpoint or state file")->required();

  std::string info_fd;
  std::string info_pool = "generalized";
  bool info_list = false;
  auto* inf = app.add_subcommand("info", "sector size, reference energies, pool and UCCSD sizes");
  inf->add_option("--fcidump", info_fd, "FCIDUMP input")->required();
  inf->add_option("--pool", info_pool, "generalized | proper | disjoint")->capture_default_str();
  inf->add_flag("--list-pool", info_list, "also print every pool operator");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) {
      const RunOutcome o = cmd_run(run_spec, err);
      out << "status=" << o.status << " energy=" << fmt17(o.energy);
      if (o.error_mEh) out << " error_mEh=" << fmt17(*o.error_mEh);
      out << " n_det=" << o.n_det << " n_theta=" << o.n_theta << '\n';
      if (!o.message.empty()) err << o.message << '\n';
      return o.exit_code;
    }
    if (*scan) {
      const auto rows = cmd_scan(scan_files, scan_spec, err);
      bool failed = false;
      for (const auto& r : rows) {
        out << r.tag << ' ' << r.status;
        if (r.error_mEh) out << " error_mEh=" << fmt17(*r.error_mEh);
        out << '\n';
        failed = failed || r.status == "error";
      }
      return failed ? kExitRuntime : kExitOk;
    }
    if (*fid) {
      const FidelityReport r = cmd_fidelity(fa, fb, ffd);
      json j;
      j["infidelity"] = r.infidelity;
      j["energy_a"] = r.energy_a;
      j["energy_b"] = r.energy_b;
      j["delta_e"] = r.delta_e;
      j["n_det_a"] = r.n_det_a;
      j["n_det_b"] = r.n_det_b;
      out << j.dump() << '\n';
      return kExitOk;
    }
    if (*inf) {
      if (!fs::exists(info_fd)) throw ConfigError("FCIDUMP file not found: " + info_fd);
      const IntegralTable t = read_fcidump(info_fd);
      const ReferenceData ref = mp2(t);
      PoolOptions po;
      po.variant = parse_pool(info_pool);
      const OperatorPool pool = build_gsd_pool(t, po);
      const int irr = determinant_irrep(reference_determinant(t.n_alpha(), t.n_beta()), t.orb_irrep());
      json j;
      j["n_spatial"] = t.n_spatial();
      j["n_elec"] = t.n_elec();
      j["n_qubits"] = 2 * t.n_spatial();
      j["max_n_det"] = enumerate_symmetry_sector(t.n_spatial(), t.n_alpha(), t.n_beta(), t.orb_irrep(), irr).size();
      j["e_scf"] = ref.e_scf;
      j["e_mp2"] = ref.e_mp2;
      j["n_pool"] = pool.size();
      j["uccsd_n_theta"] = build_uccsd_circuit(t, ref).size();
      out << j.dump() << '\n';
      if (info_list) write_pool(out, pool, t);
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace swcs::cli
