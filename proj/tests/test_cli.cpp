#include "normsol/cli.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <sys/wait.h>

using namespace normsol;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "normsol");
  std::vector<const char *> argv;
  for (const auto &a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string &name) {
  const fs::path p = fs::temp_directory_path() / ("normsol_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

json cubic_config() {
  return json::parse(R"({
    "grid": {"dimension": 1, "half_width": 20, "points": 512},
    "problem": {"mu": [{"coef": 1, "exponent": 4}], "masses": [4, 0]},
    "flow": {"tol_residual": 1e-9, "tol_energy": 1e-13}
  })");
}

fs::path write_config(const fs::path &dir, const std::string &name, const json &j) {
  const fs::path p = dir / name;
  std::ofstream os(p);
  os << j.dump(2);
  return p;
}

std::string slurp(const fs::path &p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

class EnvGuard {
public:
  explicit EnvGuard(const char *value) {
    if (const char *old = std::getenv(cli::threads_env))
      saved_ = old;
    ::setenv(cli::threads_env, value, 1);
  }
  ~EnvGuard() {
    if (saved_)
      ::setenv(cli::threads_env, saved_->c_str(), 1);
    else
      ::unsetenv(cli::threads_env);
  }

private:
  std::optional<std::string> saved_;
};

} // namespace

TEST(CliSolve, BaselineSoliton) {
  const fs::path dir = scratch("solve");
  const fs::path cfg = write_config(dir, "run.json", cubic_config());
  const CliRun r = run({"solve", "--config", cfg.string(), "--output", (dir / "out").string()});
  ASSERT_EQ(r.code, cli::exit_ok) << r.err;
  const auto kv = read_key_values(dir / "out" / "summary.txt");
  EXPECT_NEAR(parse_double(kv.at("E")), -2.0 / 3.0, 1e-3);
  EXPECT_NEAR(parse_double(kv.at("lambda1")), 1.0, 1e-3);
  EXPECT_EQ(kv.at("converged"), "true");
  EXPECT_TRUE(fs::exists(dir / "out" / "u1.snap"));
  EXPECT_TRUE(fs::exists(dir / "out" / "history.csv"));
  EXPECT_NEAR(mass(load_snapshot(dir / "out" / "u1.snap")), 4.0, 1e-10);
}

TEST(CliSolve, SupercriticalExponentIsConfigError) {
  const fs::path dir = scratch("p7");
  json j = cubic_config();
  j["problem"]["mu"][0]["exponent"] = 7;
  const CliRun r = run({"solve", "--config", write_config(dir, "run.json", j).string()});
  EXPECT_EQ(r.code, cli::exit_config);
  EXPECT_NE(r.err.find("mu_terms[0].exponent = 7"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("parameter range"), std::string::npos);
}

TEST(CliSolve, BitwiseDeterministic) {
  const fs::path dir = scratch("det");
  json j = cubic_config();
  j["flow"]["init"] = "random_smooth";
  j["flow"]["restarts"] = 2;
  const fs::path cfg = write_config(dir, "run.json", j);
  ASSERT_EQ(run({"solve", "--config", cfg.string(), "--output", (dir / "a").string()}).code, 0);
  ASSERT_EQ(run({"solve", "--config", cfg.string(), "--output", (dir / "b").string()}).code, 0);
  EXPECT_EQ(slurp(dir / "a" / "u1.snap"), slurp(dir / "b" / "u1.snap"));
  EXPECT_EQ(slurp(dir / "a" / "summary.txt"), slurp(dir / "b" / "summary.txt"));
}

TEST(CliSolve, ResumeReproducesRun) {
  const fs::path dir = scratch("resume");
  json j = cubic_config();
  j["checkpoint_every"] = 20;
  const fs::path cfg = write_config(dir, "run.json", j);
  ASSERT_EQ(run({"solve", "--config", cfg.string(), "--output", (dir / "full").string()}).code, 0);
  const fs::path ckpt = dir / "saved_checkpoint";
  fs::copy(dir / "full" / "checkpoint", ckpt);
  EXPECT_GT(load_checkpoint(ckpt).iteration, 0);
  const CliRun r = run({"solve", "--config", cfg.string(), "--output", (dir / "resumed").string(), "--resume",
                     ckpt.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "full" / "u1.snap"), slurp(dir / "resumed" / "u1.snap"));
  const auto a = read_key_values(dir / "full" / "summary.txt");
  const auto b = read_key_values(dir / "resumed" / "summary.txt");
  EXPECT_EQ(a.at("E"), b.at("E"));
  EXPECT_EQ(a.at("iterations"), b.at("iterations"));
}

TEST(CliSolve, ResumeFromWrongGridRejected) {
  const fs::path dir = scratch("resume_grid");
  const Grid other = testutil::line(256);
  save_checkpoint(dir / "ck", Checkpoint{Field(other), Field(other), 0.5, 3, 0, 0});
  const CliRun r = run({"solve", "--config", write_config(dir, "run.json", cubic_config()).string(), "--resume",
                     (dir / "ck").string()});
  EXPECT_EQ(r.code, cli::exit_config);
}

TEST(CliSweep, SinglePointMatchesSolve) {
  const fs::path dir = scratch("sweep1");
  json j = cubic_config();
  j["sweep"] = {{"masses", {{4, 0}}}};
  const fs::path cfg = write_config(dir, "run.json", j);
  ASSERT_EQ(run({"solve", "--config", cfg.string(), "--output", (dir / "solve").string()}).code, 0);
  const CliRun r = run({"sweep", "--config", cfg.string(), "--output", (dir / "sweep").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const CsvTable t = read_csv(dir / "sweep" / "sweep.csv");
  ASSERT_EQ(t.rows.size(), 1u);
  const auto kv = read_key_values(dir / "solve" / "summary.txt");
  EXPECT_EQ(parse_double(t.rows[0][t.column("C")]), parse_double(kv.at("E")));
  EXPECT_EQ(parse_double(t.rows[0][t.column("E")]), parse_double(kv.at("E")));
  EXPECT_EQ(t.rows[0][t.column("converged")], "1");
}

TEST(CliSweep, GridWritesAuditAndPlots) {
  const fs::path dir = scratch("sweep_grid");
  json j = json::parse(R"({
    "grid": {"dimension": 1, "half_width": 20, "points": 256},
    "problem": {
      "mu": [{"coef": 1, "exponent": 4}], "nu": [{"coef": 1, "exponent": 4}],
      "coupling": [{"coef": 1, "r1": 2, "r2": 2}],
      "potentials": [{"kind": "gaussian_well", "depth": 1, "width": 2}, {"kind": "zero"}],
      "masses": [1, 1]
    },
    "sweep": {"a1": [0, 1, 2], "a2": [0, 1]}
  })");
  const CliRun r = run({"sweep", "--config", write_config(dir, "run.json", j).string(), "--output",
                     (dir / "out").string(), "--threads", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const CsvTable t = read_csv(dir / "out" / "sweep.csv");
  ASSERT_EQ(t.rows.size(), 6u);
  EXPECT_EQ(parse_double(t.rows[0][t.column("C")]), 0.0);
  for (const auto &row : t.rows)
    EXPECT_LE(parse_double(row[t.column("C")]), parse_double(row[t.column("E")]));
  std::ifstream audit(dir / "out" / "audit.txt");
  const VerificationReport rep = read_report(audit);
  EXPECT_TRUE(rep.all_pass()) << to_text(rep);
  EXPECT_TRUE(fs::exists(dir / "out" / "plot" / "C_row1.dat"));
  EXPECT_TRUE(fs::exists(dir / "out" / "plot" / "E_row0.dat"));
}

TEST(CliThreads, EnvironmentHonored) {
  {
    EnvGuard env("3");
    EXPECT_EQ(cli::default_threads(), 3);
  }
  {
    EnvGuard env("zero");
    EXPECT_THROW(cli::default_threads(), ConfigError);
  }
  const fs::path dir = scratch("threads");
  json j = cubic_config();
  j["sweep"] = {{"masses", {{2, 0}, {4, 0}}}};
  const fs::path cfg = write_config(dir, "run.json", j);
  {
    EnvGuard env("0");
    const CliRun r = run({"sweep", "--config", cfg.string(), "--output", (dir / "bad").string()});
    EXPECT_EQ(r.code, cli::exit_config);
    EXPECT_NE(r.err.find(cli::threads_env), std::string::npos);
  }
  {
    EnvGuard env("2");
    EXPECT_EQ(run({"sweep", "--config", cfg.string(), "--output", (dir / "ok").string()}).code, 0);
  }
  EXPECT_EQ(run({"sweep", "--config", cfg.string(), "--threads", "0"}).code, cli::exit_config);
}

TEST(CliVerify, EmptyCheckListPasses) {
  const fs::path dir = scratch("verify_empty");
  json j = cubic_config();
  j["verify"] = {{"checks", json::array()}};
  const CliRun r = run({"verify", "--config", write_config(dir, "run.json", j).string(), "--output",
                     (dir / "out").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "out" / "report.txt"));
}

TEST(CliVerify, CoupledRearrangementNeedsOneDimension) {
  const fs::path dir = scratch("verify_2d");
  json j = json::parse(R"({
    "grid": {"dimension": 2, "half_width": 8, "points": 32},
    "problem": {"mu": [{"coef": 1, "exponent": 3}], "masses": [1, 0]},
    "verify": {"checks": [{"type": "coupled_rearrangement", "input": "nowhere"}]}
  })");
  const CliRun r = run({"verify", "--config", write_config(dir, "run.json", j).string()});
  EXPECT_EQ(r.code, cli::exit_config);
  EXPECT_NE(r.err.find("unsupported"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("verify.checks[0]"), std::string::npos);
}

TEST(CliVerify, MissingSnapshotIsInputError) {
  const fs::path dir = scratch("verify_missing");
  json j = cubic_config();
  j["verify"] = {{"checks", {{{"type", "rearrangement"}, {"input", "no_such_run"}}}}};
  const CliRun r = run({"verify", "--config", write_config(dir, "run.json", j).string(), "--output",
                     (dir / "out").string()});
  EXPECT_EQ(r.code, cli::exit_config);
}

TEST(CliVerify, ChecksOnSolvedRun) {
  const fs::path dir = scratch("verify_run");
  json j = cubic_config();
  j["output"] = "solved";
  j["verify"] = json::parse(R"({"checks": [
    {"type": "rearrangement", "input": "solved"},
    {"type": "coupled_rearrangement", "input": "solved"},
    {"type": "bahri_li", "p": 3, "samples": 1000},
    {"type": "interaction", "gamma1": 2, "gamma2": 2, "eta": 0.5, "samples": 1000}
  ]})");
  const fs::path cfg = write_config(dir, "run.json", j);
  ASSERT_EQ(run({"solve", "--config", cfg.string()}).code, 0);
  const CliRun r = run({"verify", "--config", cfg.string(), "--output", (dir / "report").string()});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  std::ifstream is(dir / "report" / "report.txt");
  const VerificationReport rep = read_report(is);
  EXPECT_NE(rep.find("rearrangement_G"), nullptr);
  EXPECT_NE(rep.find("coupled_lp_additivity"), nullptr);
}

TEST(CliVerify, InvalidEtaIsConfigError) {
  const fs::path dir = scratch("verify_eta");
  json j = cubic_config();
  j["verify"] = json::parse(R"({"checks": [{"type": "interaction", "gamma1": 2, "gamma2": 2, "eta": 1.5}]})");
  const CliRun r = run({"verify", "--config", write_config(dir, "run.json", j).string(), "--output",
                     (dir / "out").string()});
  EXPECT_EQ(r.code, cli::exit_config);
  EXPECT_NE(r.err.find("verify.checks[0]"), std::string::npos);
}

TEST(CliRearrange, RandomizedSuitePasses) {
  const fs::path dir = scratch("rearrange");
  json j = cubic_config();
  j["rearrange"] = {{"trials", 20}, {"seed", 3}};
  const CliRun r = run({"rearrange-check", "--config", write_config(dir, "run.json", j).string(), "--output",
                     (dir / "out").string()});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(dir / "out" / "rearrange_report.txt"));
}

TEST(CliArgs, UsageErrors) {
  EXPECT_EQ(run({"solve"}).code, cli::exit_config);
  EXPECT_EQ(run({"frobnicate", "--config", "x"}).code, cli::exit_config);
  EXPECT_EQ(run({"solve", "--config", "/nonexistent/run.json"}).code, cli::exit_config);
}

TEST(CliBinary, ExitCodesFromProcess) {
  const fs::path dir = scratch("binary");
  json j = cubic_config();
  j["problem"]["mu"][0]["exponent"] = 7;
  const fs::path bad = write_config(dir, "bad.json", j);
  const std::string cmd = std::string(NORMSOL_CLI_PATH) + " solve --config " + bad.string() + " 2> " +
                          (dir / "err.txt").string();
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 1);
  EXPECT_NE(slurp(dir / "err.txt").find("parameter range"), std::string::npos);

  const fs::path good = write_config(dir, "good.json", cubic_config());
  const int ok = std::system((std::string(NORMSOL_CLI_PATH) + " solve --config " + good.string() + " --output " +
                              (dir / "out").string() + " > /dev/null")
                                 .c_str());
  ASSERT_TRUE(WIFEXITED(ok));
  EXPECT_EQ(WEXITSTATUS(ok), 0);
}
