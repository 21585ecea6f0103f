#include "test_util.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace normsol;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
  const fs::path p = fs::temp_directory_path() / ("normsol_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

json base_config() {
  return json::parse(R"({
    "grid": {"dimension": 1, "half_width": 20, "points": 256},
    "problem": {"mu": [{"coef": 1, "exponent": 4}], "masses": [4, 0]}
  })");
}

std::string config_error(const json &j) {
  try {
    parse_config(j, "/tmp");
  } catch (const ConfigError &e) {
    return e.what();
  }
  return {};
}

} // namespace

TEST(Snapshot, RoundTripBitwise) {
  std::mt19937_64 rng(1);
  for (Boundary b : {Boundary::periodic_spectral, Boundary::dirichlet_fd}) {
    const Grid g(2, 3.5, 16, b);
    const Field u = random_smooth_field(g, rng);
    std::stringstream ss;
    write_snapshot(ss, u);
    EXPECT_EQ(ss.str().size(), 8 + 4 + 4 + 8 + 4 + 8 * u.size());
    const Field v = read_snapshot(ss);
    EXPECT_TRUE(v.grid() == g);
    for (std::size_t i = 0; i < u.size(); ++i)
      ASSERT_EQ(u[i], v[i]);
  }
}

TEST(Snapshot, HeaderLayout) {
  const Grid g(1, 2.0, 4);
  std::stringstream ss;
  write_snapshot(ss, Field(g));
  const std::string s = ss.str();
  EXPECT_EQ(s.substr(0, 8), "NSOLFLD1");
  EXPECT_EQ(static_cast<unsigned char>(s[8]), 1u);
  EXPECT_EQ(static_cast<unsigned char>(s[12]), 4u);
}

TEST(Snapshot, MalformedInputsRejected) {
  std::stringstream bad("XXXXXXXX0000");
  EXPECT_THROW(read_snapshot(bad), SnapshotError);

  std::stringstream good;
  write_snapshot(good, testutil::soliton(testutil::line(64)));
  const std::string bytes = good.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_snapshot(truncated), SnapshotError);
  std::stringstream trailing(bytes + "x");
  EXPECT_THROW(read_snapshot(trailing), SnapshotError);
  EXPECT_THROW(load_snapshot("/nonexistent/u1.snap"), SnapshotError);
}

TEST(Checkpoint, RoundTrip) {
  const fs::path dir = scratch("ckpt");
  const Grid g = testutil::line(128);
  const Checkpoint c{testutil::soliton(g), 0.5 * testutil::soliton(g), 0.123456789012345678, 77, 4, 2};
  save_checkpoint(dir, c);
  const Checkpoint d = load_checkpoint(dir);
  EXPECT_EQ(d.dt, c.dt);
  EXPECT_EQ(d.iteration, 77);
  EXPECT_EQ(d.stall_count, 4);
  EXPECT_EQ(d.restart, 2);
  EXPECT_EQ(l2_norm(d.u2 - c.u2), 0.0);
}

TEST(Report, TextRoundTripIsLossless) {
  VerificationReport r;
  r.add("decay_u1", true, -0.7331999999999999, -0.73320000000000002, 0.1, "relative error 1e-5");
  r.add("binding", false, 1.0 / 3.0, 1e-10, 0.0, "");
  r.add("odd", false, std::nan(""), -std::numeric_limits<double>::infinity(), 0.0, "x");
  r.series.push_back({"binding_gap", {{6.0, 0.1 + 0.2}, {8.0, 1e-300}}});
  std::stringstream ss(to_text(r));
  const VerificationReport back = read_report(ss);
  ASSERT_EQ(back.checks.size(), 3u);
  EXPECT_EQ(back.checks[0].measured, r.checks[0].measured);
  EXPECT_EQ(back.checks[0].bound, r.checks[0].bound);
  EXPECT_EQ(back.checks[1].measured, 1.0 / 3.0);
  EXPECT_FALSE(back.checks[1].pass);
  EXPECT_TRUE(std::isnan(back.checks[2].measured));
  EXPECT_EQ(back.checks[2].bound, -std::numeric_limits<double>::infinity());
  EXPECT_EQ(back.series[0].points[0].second, 0.1 + 0.2);
  EXPECT_EQ(back.series[0].points[1].second, 1e-300);
  EXPECT_FALSE(back.all_pass());
  EXPECT_EQ(to_text(back), to_text(r));
}

TEST(Report, FormatAndParseDouble) {
  for (double v : {0.0, -0.0, 1e-310, 6.02214076e23, -2.0 / 3.0})
    EXPECT_EQ(parse_double(format_double(v)), v);
  EXPECT_THROW(parse_double("1.5x"), std::invalid_argument);
}

TEST(Summary, KeyValuesAndCsv) {
  SolveResult r(testutil::soliton(testutil::line(64)), Field(testutil::line(64)));
  r.energy.total_J = -2.0 / 3.0;
  r.potential_free = true;
  r.history = {{0, 1.0, 2.0}, {1, 0.5, 0.25}};
  std::stringstream ss;
  write_summary(ss, r);
  const auto kv = read_key_values(ss);
  EXPECT_EQ(parse_double(kv.at("E")), -2.0 / 3.0);
  EXPECT_EQ(kv.count("C"), 0u);
  EXPECT_EQ(kv.at("lambda1"), "nan");
  std::stringstream cs;
  write_history_csv(cs, r.history);
  const CsvTable t = read_csv(cs);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(parse_double(t.rows[1][t.column("residual")]), 0.25);
  EXPECT_THROW(t.column("missing"), std::out_of_range);
}

TEST(Config, MinimalDocument) {
  const RunConfig cfg = parse_config(base_config(), "/base");
  EXPECT_EQ(cfg.grid.points(), 256);
  EXPECT_TRUE(cfg.grid.periodic());
  EXPECT_EQ(cfg.problem.masses[0], 4.0);
  EXPECT_TRUE(cfg.problem.potential_free());
  EXPECT_EQ(cfg.output, fs::path("normsol_out"));
  EXPECT_EQ(cfg.resolve("snap"), fs::path("/base/snap"));
}

TEST(Config, FlowPotentialsAndSweep) {
  json j = base_config();
  j["flow"] = {{"dt", 0.25}, {"init", "random_smooth"}, {"restarts", 2}};
  j["seed"] = 9;
  j["output"] = "out/run";
  j["problem"]["potentials"] = json::parse(R"([{"kind": "gaussian_well", "depth": 2, "width": 1.5}, {"kind": "zero"}])");
  j["sweep"] = {{"a1", {1, 2}}, {"a2", {0, 3, 4}}};
  const RunConfig cfg = parse_config(j, "/base");
  EXPECT_EQ(cfg.flow.dt, 0.25);
  EXPECT_EQ(cfg.flow.init, InitKind::random_smooth);
  EXPECT_EQ(cfg.flow.seed, 9u);
  EXPECT_EQ(cfg.output, fs::path("/base/out/run"));
  EXPECT_EQ(cfg.problem.potentials[0].kind, PotentialKind::gaussian_well);
  EXPECT_EQ(cfg.problem.potentials[0].depth, 2.0);
  ASSERT_EQ(cfg.sweep_masses.size(), 6u);
  // a2 is the outer loop.
  EXPECT_EQ(cfg.sweep_masses[1], (std::array<double, 2>{2.0, 0.0}));
  EXPECT_EQ(cfg.sweep_masses[2], (std::array<double, 2>{1.0, 3.0}));
}

TEST(Config, ErrorsNameTheKeyPath) {
  json j = base_config();
  j["grid"]["pointz"] = 3;
  EXPECT_NE(config_error(j).find("grid.pointz"), std::string::npos);

  j = base_config();
  j["problem"]["mu"][0]["exponent"] = "four";
  EXPECT_NE(config_error(j).find("problem.mu[0].exponent"), std::string::npos);

  j = base_config();
  j["grid"]["boundary"] = "neumann";
  EXPECT_NE(config_error(j).find("grid.boundary"), std::string::npos);

  j = base_config();
  j["problem"].erase("masses");
  EXPECT_NE(config_error(j).find("problem.masses"), std::string::npos);

  j = base_config();
  j["problem"]["potentials"] = json::array({json::object({{"kind", "zero"}})});
  EXPECT_NE(config_error(j).find("problem.potentials"), std::string::npos);

  j = base_config();
  j["flow"] = {{"dt", -1.0}};
  EXPECT_NE(config_error(j).find("flow.dt"), std::string::npos);

  j = base_config();
  j["problem"]["potentials"] = json::parse(R"([{"kind": "harmonic"}, {"kind": "zero"}])");
  EXPECT_NE(config_error(j).find("problem.potentials[0].kind"), std::string::npos);
}

TEST(Config, SupercriticalExponentFailsValidation) {
  json j = base_config();
  j["problem"]["mu"][0]["exponent"] = 7;
  const RunConfig cfg = parse_config(j, "/tmp");
  const auto rep = validate_spec(cfg.problem, cfg.grid);
  EXPECT_FALSE(rep.admissible());
  ASSERT_FALSE(rep.messages.empty());
  EXPECT_NE(rep.messages.front().find("exponent = 7"), std::string::npos);
  EXPECT_NE(rep.messages.front().find("(2, 6)"), std::string::npos);
}

TEST(Config, LoadFromFileResolvesRelativePaths) {
  const fs::path dir = scratch("cfg");
  {
    std::ofstream os(dir / "run.json");
    json j = base_config();
    j["output"] = "results";
    os << j.dump(2);
  }
  const RunConfig cfg = load_config(dir / "run.json");
  EXPECT_EQ(cfg.output, dir / "results");
  EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
  {
    std::ofstream os(dir / "broken.json");
    os << "{ not json";
  }
  EXPECT_THROW(load_config(dir / "broken.json"), ConfigError);
}

TEST(Config, ShippedConfigsParse) {
  const fs::path dir = fs::path(NORMSOL_SOURCE_DIR) / "configs";
  int seen = 0;
  for (const auto &entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".json")
      continue;
    ++seen;
    EXPECT_NO_THROW(load_config(entry.path())) << entry.path();
  }
  EXPECT_GE(seen, 5);
}
