#ifndef NORMSOL_CONFIG_HPP
#define NORMSOL_CONFIG_HPP

// JSON run configuration. Every parse error names the offending key path,
// e.g. "problem.mu[0].exponent: expected a number".

#include "normsol/errors.hpp"
#include "normsol/grid.hpp"
#include "normsol/model.hpp"
#include "normsol/snapshot.hpp"
#include "normsol/solver.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace normsol {

using json = nlohmann::json;

/// Typed view of one JSON object that remembers where it sits in the document.
class ConfigNode {
public:
  ConfigNode(const json &j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j_->is_object())
      fail("expected an object");
  }

  const std::string &path() const noexcept { return path_; }
  bool has(const std::string &key) const { return j_->contains(key); }
  const json &raw() const noexcept { return *j_; }

  [[noreturn]] void fail(const std::string &msg) const { throw ConfigError(where() + ": " + msg); }
  [[noreturn]] void fail(const std::string &key, const std::string &msg) const {
    throw ConfigError(child_path(key) + ": " + msg);
  }

  std::string child_path(const std::string &key) const { return path_.empty() ? key : path_ + "." + key; }

  ConfigNode object(const std::string &key) const {
    if (!has(key))
      fail(key, "missing required section");
    return ConfigNode(j_->at(key), child_path(key));
  }

  std::optional<ConfigNode> optional_object(const std::string &key) const {
    if (!has(key))
      return std::nullopt;
    return ConfigNode(j_->at(key), child_path(key));
  }

  const json &array(const std::string &key) const {
    if (!has(key))
      fail(key, "missing required list");
    if (!j_->at(key).is_array())
      fail(key, "expected a list");
    return j_->at(key);
  }

  double number(const std::string &key) const {
    if (!has(key))
      fail(key, "missing required number");
    return as_number(j_->at(key), child_path(key));
  }
  double number(const std::string &key, double fallback) const { return has(key) ? number(key) : fallback; }

  long integer(const std::string &key) const {
    if (!has(key))
      fail(key, "missing required integer");
    const json &v = j_->at(key);
    if (!v.is_number_integer())
      throw ConfigError(child_path(key) + ": expected an integer");
    return v.get<long>();
  }
  long integer(const std::string &key, long fallback) const { return has(key) ? integer(key) : fallback; }

  std::uint64_t unsigned_integer(const std::string &key, std::uint64_t fallback) const {
    if (!has(key))
      return fallback;
    const json &v = j_->at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      throw ConfigError(child_path(key) + ": expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string &key, bool fallback) const {
    if (!has(key))
      return fallback;
    if (!j_->at(key).is_boolean())
      fail(key, "expected true or false");
    return j_->at(key).get<bool>();
  }

  std::string string(const std::string &key) const {
    if (!has(key))
      fail(key, "missing required string");
    if (!j_->at(key).is_string())
      fail(key, "expected a string");
    return j_->at(key).get<std::string>();
  }
  std::string string(const std::string &key, const std::string &fallback) const {
    return has(key) ? string(key) : fallback;
  }

  /// Rejects keys outside `allowed` so typos do not pass silently.
  void only(std::initializer_list<const char *> allowed) const {
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      bool ok = false;
      for (const char *a : allowed)
        ok = ok || it.key() == a;
      if (!ok)
        fail(it.key(), "unknown key");
    }
  }

  static double as_number(const json &v, const std::string &path) {
    if (!v.is_number())
      throw ConfigError(path + ": expected a number");
    return v.get<double>();
  }

private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }
  const json *j_;
  std::string path_;
};

struct VerifyCheckConfig {
  std::string type;
  json params;
  std::string path;
};

struct RunConfig {
  Grid grid{1, 20.0, 1024, Boundary::periodic_spectral};
  ProblemSpec problem{NonlinearitySpec({{1.0, 4.0}}, {}, {}, 1), {}, {0.0, 0.0}};
  FlowOptions flow;
  std::filesystem::path base_dir;
  std::filesystem::path output = "normsol_out";
  Constraint constraint = Constraint::sphere;
  int checkpoint_every = 0;
  bool history_csv = true;

  std::vector<std::array<double, 2>> sweep_masses;
  double sweep_margin = 1e-6;

  std::vector<VerifyCheckConfig> verify_checks;

  int rearrange_trials = 200;
  std::uint64_t rearrange_seed = 7;
  std::optional<std::filesystem::path> rearrange_input;

  std::filesystem::path resolve(const std::filesystem::path &p) const {
    return p.is_absolute() ? p : base_dir / p;
  }
};

namespace detail {

inline Boundary parse_boundary(const ConfigNode &n, const std::string &key) {
  const std::string b = n.string(key, "periodic_spectral");
  if (b == "periodic_spectral" || b == "periodic")
    return Boundary::periodic_spectral;
  if (b == "dirichlet_fd" || b == "dirichlet")
    return Boundary::dirichlet_fd;
  n.fail(key, "expected 'periodic_spectral' or 'dirichlet_fd', got '" + b + "'");
}

inline Grid parse_grid(const ConfigNode &n) {
  n.only({"dimension", "half_width", "points", "boundary"});
  try {
    return Grid(static_cast<int>(n.integer("dimension")), n.number("half_width"), static_cast<int>(n.integer("points")),
                parse_boundary(n, "boundary"));
  } catch (const ConfigError &) {
    throw;
  } catch (const std::exception &e) {
    n.fail(e.what());
  }
}

inline std::vector<PowerTerm> parse_power_terms(const ConfigNode &n, const std::string &key) {
  std::vector<PowerTerm> out;
  if (!n.has(key))
    return out;
  const json &list = n.array(key);
  for (std::size_t i = 0; i < list.size(); ++i) {
    const ConfigNode t(list[i], n.child_path(key) + "[" + std::to_string(i) + "]");
    t.only({"coef", "exponent"});
    out.push_back({t.number("coef"), t.number("exponent")});
  }
  return out;
}

inline std::vector<CouplingTerm> parse_coupling_terms(const ConfigNode &n, const std::string &key) {
  std::vector<CouplingTerm> out;
  if (!n.has(key))
    return out;
  const json &list = n.array(key);
  for (std::size_t i = 0; i < list.size(); ++i) {
    const ConfigNode t(list[i], n.child_path(key) + "[" + std::to_string(i) + "]");
    t.only({"coef", "r1", "r2"});
    out.push_back({t.number("coef"), t.number("r1"), t.number("r2")});
  }
  return out;
}

inline PotentialSpec parse_potential(const ConfigNode &n, const Grid &grid, const RunConfig &cfg) {
  const std::string kind = n.string("kind", "zero");
  if (kind == "zero") {
    n.only({"kind"});
    return PotentialSpec::zero();
  }
  if (kind == "gaussian_well") {
    n.only({"kind", "depth", "width"});
    const double d = n.number("depth");
    const double w = n.number("width");
    if (!(d > 0.0))
      n.fail("depth", "must be positive");
    if (!(w > 0.0))
      n.fail("width", "must be positive");
    return PotentialSpec::gaussian_well(d, w);
  }
  if (kind == "power_coulomb") {
    n.only({"kind", "strength", "exponent", "vh1_sigma", "vh1_tau"});
    const double k = n.number("strength");
    const double s = n.number("exponent");
    if (!(k > 0.0))
      n.fail("strength", "must be positive");
    if (!(s > 0.0))
      n.fail("exponent", "must be positive");
    return PotentialSpec::power_coulomb(k, s, n.number("vh1_sigma"), n.number("vh1_tau"));
  }
  if (kind == "tabulated") {
    n.only({"kind", "file", "vh1_sigma", "vh1_tau"});
    Field table = [&] {
      try {
        return load_snapshot(cfg.resolve(n.string("file")));
      } catch (const SnapshotError &e) {
        n.fail("file", e.what());
      }
    }();
    if (!(table.grid() == grid))
      n.fail("file", "tabulated potential grid differs from the run grid");
    return PotentialSpec::tabulated(std::move(table), n.number("vh1_sigma"), n.number("vh1_tau"));
  }
  n.fail("kind", "unknown potential kind '" + kind + "'");
}

inline NonlinearitySpec parse_nonlinearity(const ConfigNode &n, int dimension) {
  auto mu = parse_power_terms(n, "mu");
  auto nu = parse_power_terms(n, "nu");
  auto coupling = parse_coupling_terms(n, "coupling");
  try {
    return NonlinearitySpec(std::move(mu), std::move(nu), std::move(coupling), dimension);
  } catch (const ConfigError &) {
    throw;
  } catch (const std::exception &e) {
    n.fail(e.what());
  }
}

inline std::array<double, 2> parse_pair(const json &v, const std::string &path) {
  if (!v.is_array() || v.size() != 2)
    throw ConfigError(path + ": expected a pair [a1, a2]");
  return {ConfigNode::as_number(v[0], path + "[0]"), ConfigNode::as_number(v[1], path + "[1]")};
}

inline InitKind parse_init(const ConfigNode &n) {
  const std::string s = n.string("init", "gaussian_pair");
  if (s == "gaussian_pair")
    return InitKind::gaussian_pair;
  if (s == "random_smooth")
    return InitKind::random_smooth;
  if (s == "given")
    return InitKind::given;
  n.fail("init", "expected gaussian_pair, random_smooth or given");
}

inline FlowOptions parse_flow(const ConfigNode &n, const RunConfig &cfg) {
  n.only({"dt", "max_iters", "tol_residual", "tol_energy", "backtracking", "init", "given", "seed", "preconditioned",
          "precond_shift", "init_width", "restarts", "stall_window", "recenter_every", "ball_start_fraction"});
  FlowOptions o;
  o.dt = n.number("dt", o.dt);
  o.max_iters = static_cast<int>(n.integer("max_iters", o.max_iters));
  o.tol_residual = n.number("tol_residual", o.tol_residual);
  o.tol_energy = n.number("tol_energy", o.tol_energy);
  o.backtracking = n.boolean("backtracking", o.backtracking);
  o.init = parse_init(n);
  o.seed = n.unsigned_integer("seed", o.seed);
  o.preconditioned = n.boolean("preconditioned", o.preconditioned);
  o.precond_shift = n.number("precond_shift", o.precond_shift);
  o.init_width = n.number("init_width", o.init_width);
  o.restarts = static_cast<int>(n.integer("restarts", o.restarts));
  o.stall_window = static_cast<int>(n.integer("stall_window", o.stall_window));
  o.recenter_every = static_cast<int>(n.integer("recenter_every", o.recenter_every));
  o.ball_start_fraction = n.number("ball_start_fraction", o.ball_start_fraction);
  if (!(o.dt > 0.0))
    n.fail("dt", "must be positive");
  if (o.max_iters <= 0)
    n.fail("max_iters", "must be positive");
  if (!(o.tol_residual > 0.0))
    n.fail("tol_residual", "must be positive");
  if (!(o.tol_energy > 0.0))
    n.fail("tol_energy", "must be positive");
  if (!(o.precond_shift > 0.0))
    n.fail("precond_shift", "must be positive");
  if (!(o.init_width > 0.0))
    n.fail("init_width", "must be positive");
  if (o.restarts < 1)
    n.fail("restarts", "must be at least 1");
  if (o.stall_window < 1)
    n.fail("stall_window", "must be at least 1");
  if (o.recenter_every < 0)
    n.fail("recenter_every", "must be nonnegative");
  if (!(o.ball_start_fraction > 0.0 && o.ball_start_fraction <= 1.0))
    n.fail("ball_start_fraction", "must lie in (0, 1]");
  if (o.init == InitKind::given) {
    const json &files = n.array("given");
    if (files.size() != 2)
      n.fail("given", "expected two snapshot paths");
    for (std::size_t c = 0; c < 2; ++c) {
      const std::string key = n.child_path("given") + "[" + std::to_string(c) + "]";
      if (!files[c].is_string())
        throw ConfigError(key + ": expected a snapshot path");
      try {
        Field f = load_snapshot(cfg.resolve(files[c].get<std::string>()));
        (c == 0 ? o.given_u1 : o.given_u2) = std::move(f);
      } catch (const SnapshotError &e) {
        throw ConfigError(key + ": " + e.what());
      }
    }
  }
  return o;
}

} // namespace detail

inline RunConfig parse_config(const json &root, const std::filesystem::path &base_dir = {}) {
  RunConfig cfg;
  cfg.base_dir = base_dir;
  const ConfigNode top(root, "");
  top.only({"grid", "problem", "flow", "seed", "output", "checkpoint_every", "history_csv", "sweep", "verify",
            "rearrange", "constraint", "comment"});
  cfg.grid = detail::parse_grid(top.object("grid"));

  const ConfigNode prob = top.object("problem");
  prob.only({"mu", "nu", "coupling", "potentials", "masses"});
  cfg.problem.nonlinearity = detail::parse_nonlinearity(prob, cfg.grid.dimension());
  if (prob.has("potentials")) {
    const json &pots = prob.array("potentials");
    if (pots.size() != 2)
      prob.fail("potentials", "expected two entries (one per component)");
    for (std::size_t c = 0; c < 2; ++c)
      cfg.problem.potentials[c] = detail::parse_potential(
          ConfigNode(pots[c], prob.child_path("potentials") + "[" + std::to_string(c) + "]"), cfg.grid, cfg);
  }
  cfg.problem.masses = detail::parse_pair(prob.array("masses"), prob.child_path("masses"));

  if (auto flow = top.optional_object("flow"))
    cfg.flow = detail::parse_flow(*flow, cfg);
  if (top.has("seed"))
    cfg.flow.seed = top.unsigned_integer("seed", cfg.flow.seed);
  if (top.has("output"))
    cfg.output = cfg.resolve(top.string("output"));
  cfg.checkpoint_every = static_cast<int>(top.integer("checkpoint_every", 0));
  if (cfg.checkpoint_every < 0)
    top.fail("checkpoint_every", "must be nonnegative");
  cfg.history_csv = top.boolean("history_csv", true);
  const std::string constraint = top.string("constraint", "sphere");
  if (constraint == "sphere")
    cfg.constraint = Constraint::sphere;
  else if (constraint == "ball")
    cfg.constraint = Constraint::ball;
  else
    top.fail("constraint", "expected 'sphere' or 'ball'");

  if (auto sweep = top.optional_object("sweep")) {
    sweep->only({"masses", "a1", "a2", "margin"});
    if (sweep->has("masses")) {
      const json &list = sweep->array("masses");
      for (std::size_t i = 0; i < list.size(); ++i)
        cfg.sweep_masses.push_back(
            detail::parse_pair(list[i], sweep->child_path("masses") + "[" + std::to_string(i) + "]"));
    } else {
      // Cartesian product, a2 outer so each a2 row is one warm-start chain.
      const json &a1 = sweep->array("a1");
      const json &a2 = sweep->array("a2");
      for (std::size_t j = 0; j < a2.size(); ++j)
        for (std::size_t i = 0; i < a1.size(); ++i)
          cfg.sweep_masses.push_back(
              {ConfigNode::as_number(a1[i], sweep->child_path("a1") + "[" + std::to_string(i) + "]"),
               ConfigNode::as_number(a2[j], sweep->child_path("a2") + "[" + std::to_string(j) + "]")});
    }
    if (cfg.sweep_masses.empty())
      sweep->fail("mass list is empty");
    for (std::size_t i = 0; i < cfg.sweep_masses.size(); ++i)
      if (!(cfg.sweep_masses[i][0] >= 0.0 && cfg.sweep_masses[i][1] >= 0.0))
        sweep->fail("masses", "entry " + std::to_string(i) + " has a negative mass");
    cfg.sweep_margin = sweep->number("margin", cfg.sweep_margin);
  }

  if (auto verify = top.optional_object("verify")) {
    verify->only({"checks"});
    const json &checks = verify->array("checks");
    for (std::size_t i = 0; i < checks.size(); ++i) {
      const std::string path = verify->child_path("checks") + "[" + std::to_string(i) + "]";
      const ConfigNode c(checks[i], path);
      cfg.verify_checks.push_back({c.string("type"), checks[i], path});
    }
  }

  if (auto re = top.optional_object("rearrange")) {
    re->only({"trials", "seed", "input"});
    cfg.rearrange_trials = static_cast<int>(re->integer("trials", cfg.rearrange_trials));
    if (cfg.rearrange_trials < 0)
      re->fail("trials", "must be nonnegative");
    cfg.rearrange_seed = re->unsigned_integer("seed", cfg.rearrange_seed);
    if (re->has("input"))
      cfg.rearrange_input = cfg.resolve(re->string("input"));
  }
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path &path) {
  std::ifstream is(path);
  if (!is)
    throw ConfigError("cannot open config file " + path.string());
  json root;
  try {
    root = json::parse(is, nullptr, true, true);
  } catch (const json::parse_error &e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(root, path.parent_path());
}

} // namespace normsol

#endif
