#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "cli.hpp"
#include "swcs/sparse_state.hpp"
#include "test_util.hpp"

using namespace swcs;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("swcs_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  args.insert(args.begin(), "swcs");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string strip_timing(const std::string& s) {
  static const std::regex wall(R"("wall_seconds":\s*[-+0-9.eE]+)");
  return std::regex_replace(s, wall, "\"wall_seconds\":_");
}

void copy_fixture(const std::string& stem, const fs::path& dir, const std::string& as) {
  fs::copy_file(test::data(stem + ".fcidump"), dir / (as + ".fcidump"));
  fs::copy_file(test::data(stem + ".meta"), dir / (as + ".meta"));
}

}  // namespace

TEST_CASE("LiH adapt run") {
  const fs::path dir = scratch("lih");
  cli::RunSpec spec;
  spec.fcidump = test::data("lih_sto3g.fcidump");
  spec.out_dir = (dir / "out").string();
  std::ostringstream err;
  const cli::RunOutcome r = cli::cmd_run(spec, err);
  CHECK(r.exit_code == cli::kExitOk);
  CHECK(r.status == "converged");
  REQUIRE(r.error_mEh);
  CHECK(std::abs(*r.error_mEh) <= 0.05);
  CHECK(r.n_theta == 7);
  CHECK(fs::exists(dir / "out" / "run.log"));
  CHECK(fs::exists(dir / "out" / "circuit.txt"));
  const std::string summary = slurp(dir / "out" / "summary.json");
  CHECK(summary.find("\"error_mEh\"") != std::string::npos);
  const std::string log = slurp(dir / "out" / "run.log");
  CHECK(log.rfind("{\"record\":\"header\"", 0) == 0);
  CHECK(log.find("\"record\":\"final\"") != std::string::npos);
}

TEST_CASE("uccsd-vqe run") {
  const fs::path dir = scratch("ucc");
  std::string out;
  const int code = run_cli({"run", "--fcidump", test::data("h2_sto3g.fcidump"), "--method", "uccsd-vqe", "--out-dir",
                            (dir / "o").string()},
                           &out);
  CHECK(code == cli::kExitOk);
  CHECK(slurp(dir / "o" / "run.log").find("\"record\":\"vqe_step\"") != std::string::npos);
}

TEST_CASE("bootstrap schedule writes one stage record per stage") {
  const fs::path dir = scratch("sched");
  const int code = run_cli({"run", "--fcidump", test::data("lih_sto3g.fcidump"), "--schedule", "4,0", "--strategy",
                            "bfgs2f", "--out-dir", (dir / "o").string()});
  CHECK(code != cli::kExitRuntime);
  std::istringstream log(slurp(dir / "o" / "run.log"));
  std::vector<std::string> stages;
  for (std::string line; std::getline(log, line);)
    if (line.find("\"record\":\"stage\"") != std::string::npos) stages.push_back(line);
  REQUIRE(stages.size() == 2);
  CHECK(stages[0].find("\"n_cut\":4") != std::string::npos);
  CHECK(stages[0].find("\"stage\":0") != std::string::npos);
  CHECK(stages[1].find("\"n_cut\":0") != std::string::npos);
}

TEST_CASE("malformed FCIDUMP") {
  const fs::path dir = scratch("bad");
  {
    std::ofstream f(dir / "bad.fcidump");
    f << " &FCI NORB=2,NELEC=2,MS2=0,\n  ORBSYM=1,1,\n  ISYM=1,\n &END\n0.5 1 1 1 1\n0.3 1 x 1 1\n";
  }
  std::string err;
  const int code =
      run_cli({"run", "--fcidump", (dir / "bad.fcidump").string(), "--out-dir", (dir / "o").string()}, nullptr, &err);
  CHECK(code == cli::kExitRuntime);
  CHECK(err.find("line 6") != std::string::npos);
}

TEST_CASE("usage errors") {
  CHECK(run_cli({"run"}) == cli::kExitUsage);
  CHECK(run_cli({"run", "--fcidump", "/nonexistent.fcidump"}) == cli::kExitUsage);
  CHECK(run_cli({"run", "--fcidump", test::data("h2_sto3g.fcidump"), "--strategy", "newton"}) == cli::kExitUsage);
  CHECK(run_cli({"run", "--fcidump", test::data("h2_sto3g.fcidump"), "--epsilon-exp", "0"}) == cli::kExitUsage);
  CHECK(run_cli({"run", "--fcidump", test::data("h2_sto3g.fcidump"), "--ncut", "10", "--trunc-threshold", "0.1"}) ==
        cli::kExitUsage);
  CHECK(run_cli({"bogus"}) == cli::kExitUsage);
  CHECK(run_cli({"--help"}) == cli::kExitOk);
}

TEST_CASE("same spec twice gives the same logs") {
  const fs::path dir = scratch("det");
  const std::vector<std::string> common{"run",     "--fcidump", test::data("beh2_sto3g.fcidump"), "--ncut", "12",
                                        "--strategy", "bfgs2"};
  auto with_out = [&](const std::string& o) {
    auto v = common;
    v.push_back("--out-dir");
    v.push_back((dir / o).string());
    return v;
  };
  run_cli(with_out("a"));
  run_cli(with_out("b"));
  const std::string a = slurp(dir / "a" / "run.log");
  CHECK(a.size() > 100);
  CHECK(strip_timing(a) == strip_timing(slurp(dir / "b" / "run.log")));
  CHECK(strip_timing(slurp(dir / "a" / "summary.json")) == strip_timing(slurp(dir / "b" / "summary.json")));
  CHECK(slurp(dir / "a" / "circuit.txt") == slurp(dir / "b" / "circuit.txt"));
}

TEST_CASE("scan") {
  const fs::path dir = scratch("scan");
  copy_fixture("h2_sto3g", dir, "toy_r1.5");
  copy_fixture("h2_sto3g", dir, "toy_r0.7");
  copy_fixture("h2_sto3g", dir, "toy_r1.0");
  {
    std::ofstream f(dir / "toy_r2.0.fcidump");
    f << "garbage\n";
  }
  cli::RunSpec base;
  base.out_dir = (dir / "out").string();
  std::ostringstream err;
  SUBCASE("three good points") {
    const auto rows = cli::cmd_scan({(dir / "toy_r1.5.fcidump").string(), (dir / "toy_r0.7.fcidump").string(),
                                     (dir / "toy_r1.0.fcidump").string()},
                                    base, err);
    REQUIRE(rows.size() == 3);
    CHECK(*rows[0].r < *rows[1].r);
    CHECK(*rows[1].r < *rows[2].r);
    for (const auto& row : rows) CHECK(row.status == "converged");
    std::ifstream tsv(dir / "out" / "scan.tsv");
    std::string line;
    int lines = 0;
    while (std::getline(tsv, line)) ++lines;
    CHECK(lines == 4);
  }
  SUBCASE("one corrupt file") {
    std::string out_text;
    const int code = run_cli({"scan", "--fcidump", (dir / "toy_r0.7.fcidump").string(), "--fcidump",
                              (dir / "toy_r2.0.fcidump").string(), "--fcidump", (dir / "toy_r1.0.fcidump").string(),
                              "--out-dir", (dir / "out2").string()},
                             &out_text);
    CHECK(code == cli::kExitRuntime);
    const std::string tsv = slurp(dir / "out2" / "scan.tsv");
    CHECK(tsv.find("\terror\t") != std::string::npos);
    CHECK(fs::exists(dir / "out2" / "toy_r1.0" / "summary.json"));
  }
}

TEST_CASE("fidelity") {
  const fs::path dir = scratch("fid");
  cli::RunSpec spec;
  spec.fcidump = test::data("lih_sto3g.fcidump");
  spec.out_dir = (dir / "full").string();
  std::ostringstream err;
  cli::cmd_run(spec, err);
  const std::string circuit = (dir / "full" / "circuit.txt").string();
  SUBCASE("identical checkpoints") {
    const cli::FidelityReport r = cli::cmd_fidelity(circuit, circuit, spec.fcidump);
    CHECK(r.infidelity == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(r.delta_e == 0.0);
  }
  SUBCASE("orthogonal hand-built states") {
    {
      std::ofstream a(dir / "a.state");
      write_state(a, SparseState{{{0b00001, 0b00001}, 1.0}}, 5);
      std::ofstream b(dir / "b.state");
      write_state(b, SparseState{{{0b00010, 0b00010}, 1.0}}, 5);
    }
    const cli::FidelityReport r =
        cli::cmd_fidelity((dir / "a.state").string(), (dir / "b.state").string(), spec.fcidump);
    CHECK(r.infidelity == 1.0);
  }
  SUBCASE("truncated against full") {
    cli::RunSpec trunc = spec;
    trunc.ncut = 4;
    trunc.out_dir = (dir / "trunc").string();
    cli::cmd_run(trunc, err);
    const cli::FidelityReport r = cli::cmd_fidelity((dir / "trunc" / "circuit.txt").string(), circuit, spec.fcidump);
    CHECK(r.infidelity > 0.0);
    CHECK(r.delta_e > 0.0);
  }
  SUBCASE("sector mismatch") {
    {
      std::ofstream a(dir / "c.state");
      write_state(a, SparseState{{{0b00011, 0b00001}, 1.0}}, 5);
    }
    CHECK_THROWS_AS(cli::cmd_fidelity((dir / "c.state").string(), circuit, spec.fcidump), SectorError);
  }
}

TEST_CASE("info") {
  std::string out;
  CHECK(run_cli({"info", "--fcidump", test::data("lih_sto3g.fcidump")}, &out) == cli::kExitOk);
  CHECK(out.find("\"max_n_det\":11") != std::string::npos);
}
