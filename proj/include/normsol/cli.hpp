#ifndef NORMSOL_CLI_HPP
#define NORMSOL_CLI_HPP

// Command-line driver: solve, sweep, verify, rearrange-check.
//
// Exit codes: 0 success, 1 configuration or input error, 2 numerical failure
// (non-convergence, failed checks).

#include "normsol/config.hpp"
#include "normsol/energy.hpp"
#include "normsol/errors.hpp"
#include "normsol/io.hpp"
#include "normsol/model.hpp"
#include "normsol/rearrange.hpp"
#include "normsol/report.hpp"
#include "normsol/snapshot.hpp"
#include "normsol/solver.hpp"
#include "normsol/verify.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace normsol::cli {

namespace fs = std::filesystem;

inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 1;
inline constexpr int exit_numeric = 2;

inline constexpr const char *threads_env = "NORMSOL_THREADS";

struct Invocation {
  std::string command;
  fs::path config;
  std::optional<fs::path> output;
  std::optional<int> threads;
  std::optional<fs::path> resume;
};

inline int default_threads() {
  if (const char *env = std::getenv(threads_env)) {
    try {
      const int n = std::stoi(env);
      if (n >= 1)
        return n;
    } catch (const std::exception &) {
    }
    throw ConfigError(std::string(threads_env) + ": expected a positive integer");
  }
  return 1;
}

inline void write_text(const fs::path &path, const std::string &text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os)
    throw std::runtime_error("cannot write " + path.string());
  os << text;
}

inline void save_result(const fs::path &dir, const SolveResult &r, bool history) {
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "summary.txt", std::ios::trunc);
    write_summary(os, r);
  }
  save_snapshot(dir / "u1.snap", r.u1);
  save_snapshot(dir / "u2.snap", r.u2);
  if (history) {
    std::ofstream os(dir / "history.csv", std::ios::trunc);
    write_history_csv(os, r.history);
  }
}

inline bool check_admissible(const RunConfig &cfg, std::ostream &err) {
  const AdmissibilityReport rep = validate_spec(cfg.problem, cfg.grid);
  if (rep.admissible())
    return true;
  for (const auto &m : rep.messages)
    err << "config error: " << m << '\n';
  return false;
}

/// Solve with periodic checkpoints (output/checkpoint), optionally resuming one.
inline SolveResult solve_with_checkpoints(const RunConfig &cfg, const std::optional<Checkpoint> &resume,
                                          const fs::path &checkpoint_dir) {
  const DiscreteProblem dp(cfg.problem, cfg.grid);
  std::optional<SolveResult> best;
  const int starts = normsol::detail::start_count(cfg.flow);
  for (int s = 0; s < starts; ++s) {
    const FlowOptions o = normsol::detail::start_options(cfg.flow, s);
    FlowState start = (resume && s == resume->restart)
                          ? FlowState{resume->u1, resume->u2, resume->dt, resume->iteration, resume->stall_count}
                          : normsol::detail::initial_flow_state(dp, o, cfg.constraint);
    auto on_step = [&](const GradientFlow &flow) {
      const FlowState &st = flow.state();
      if (cfg.checkpoint_every > 0 && st.iteration % cfg.checkpoint_every == 0)
        save_checkpoint(checkpoint_dir, Checkpoint{st.u1, st.u2, st.dt, st.iteration, st.stall_count, s});
    };
    SolveResult r = run_flow(dp, o, cfg.constraint, std::move(start), on_step);
    if (normsol::detail::better_result(r, best))
      best = std::move(r);
  }
  return std::move(*best);
}

inline int cmd_solve(const RunConfig &cfg, const Invocation &inv, std::ostream &out, std::ostream &err) {
  if (!check_admissible(cfg, err))
    return exit_config;
  if (cfg.problem.masses[0] == 0.0 && cfg.problem.masses[1] == 0.0) {
    err << "config error: problem.masses: ground states need (a1, a2) != (0, 0)\n";
    return exit_config;
  }
  std::optional<Checkpoint> resume;
  if (inv.resume) {
    resume = load_checkpoint(*inv.resume);
    if (!(resume->u1.grid() == cfg.grid))
      throw ConfigError("--resume: checkpoint grid differs from the configured grid");
    if (resume->restart < 0 || resume->restart >= normsol::detail::start_count(cfg.flow))
      throw ConfigError("--resume: checkpoint restart index out of range");
  }
  const fs::path dir = cfg.output;
  fs::create_directories(dir);
  const SolveResult r = solve_with_checkpoints(cfg, resume, dir / "checkpoint");
  save_result(dir, r, cfg.history_csv);
  write_summary(out, r);
  if (!r.converged)
    err << "solve did not converge: " << r.message << '\n';
  return r.converged ? exit_ok : exit_numeric;
}

/// Strict decrease of C along each mass axis over the sweep table.
inline VerificationReport audit_sweep(const std::vector<SolveResult> &rows, double margin) {
  VerificationReport rep;
  auto axis_audit = [&](int along, const std::string &name) {
    const int fixed = 1 - along;
    std::map<double, std::vector<const SolveResult *>> lines;
    for (const auto &r : rows)
      if (r.converged)
        lines[r.masses[static_cast<std::size_t>(fixed)]].push_back(&r);
    double worst = -std::numeric_limits<double>::infinity();
    double largest_step = 0.0;
    int pairs = 0;
    for (auto &[key, line] : lines) {
      std::sort(line.begin(), line.end(), [&](const SolveResult *a, const SolveResult *b) {
        return a->masses[static_cast<std::size_t>(along)] < b->masses[static_cast<std::size_t>(along)];
      });
      for (std::size_t i = 1; i < line.size(); ++i) {
        if (line[i]->masses[static_cast<std::size_t>(along)] == line[i - 1]->masses[static_cast<std::size_t>(along)])
          continue;
        const double d = line[i]->energy.total_J - line[i - 1]->energy.total_J;
        worst = std::max(worst, d);
        largest_step = std::max(largest_step, std::fabs(d));
        ++pairs;
      }
    }
    if (pairs == 0)
      return;
    rep.add("monotone_" + name, worst < -margin, worst, -margin, 0.0,
            std::to_string(pairs) + " successive pairs; largest |dC| " + format_double(largest_step));
  };
  axis_audit(0, "a1");
  axis_audit(1, "a2");
  return rep;
}

inline void write_plot_series(const fs::path &dir, const std::string &label, const std::vector<SolveResult> &rows) {
  fs::create_directories(dir);
  std::map<double, std::vector<std::pair<double, double>>> by_a2;
  for (const auto &r : rows)
    if (r.converged)
      by_a2[r.masses[1]].emplace_back(r.masses[0], r.energy.total_J);
  int k = 0;
  for (auto &[a2, pts] : by_a2) {
    std::sort(pts.begin(), pts.end());
    std::ofstream os(dir / (label + "_row" + std::to_string(k++) + ".dat"), std::ios::trunc);
    os << "# a1 " << label << " at a2 = " << format_double(a2) << '\n';
    for (const auto &[a1, e] : pts)
      os << format_double(a1) << ' ' << format_double(e) << '\n';
  }
}

inline int cmd_sweep(const RunConfig &cfg, const Invocation &inv, std::ostream &out, std::ostream &err) {
  if (!check_admissible(cfg, err))
    return exit_config;
  if (cfg.sweep_masses.empty())
    throw ConfigError("sweep: missing mass list (sweep.masses or sweep.a1/sweep.a2)");
  const int threads = inv.threads ? *inv.threads : default_threads();
  const std::vector<SolveResult> c_rows = sweep_masses(cfg.problem, cfg.sweep_masses, cfg.grid, cfg.flow, threads);
  const bool free = cfg.problem.potential_free();
  const std::vector<SolveResult> e_rows =
      free ? std::vector<SolveResult>{}
           : sweep_masses(cfg.problem.without_potentials(), cfg.sweep_masses, cfg.grid, cfg.flow, threads);

  const fs::path dir = cfg.output;
  fs::create_directories(dir);
  bool all_converged = true;
  {
    std::ofstream os(dir / "sweep.csv", std::ios::trunc);
    os << "a1,a2,C,E,lambda1,lambda2,converged,iterations,residual\n";
    for (std::size_t i = 0; i < c_rows.size(); ++i) {
      const SolveResult &c = c_rows[i];
      const SolveResult &e = free ? c : e_rows[i];
      const bool ok = c.converged && e.converged;
      all_converged = all_converged && ok;
      os << format_double(c.masses[0]) << ',' << format_double(c.masses[1]) << ',' << format_double(c.energy.total_J)
         << ',' << format_double(free ? c.energy.total_I : e.energy.total_I) << ',' << format_double(c.lambda1)
         << ',' << format_double(c.lambda2) << ',' << (ok ? 1 : 0) << ',' << c.iterations << ','
         << format_double(c.residual) << '\n';
      if (!ok)
        err << "sweep point (" << format_double(c.masses[0]) << ", " << format_double(c.masses[1])
            << ") failed: " << (c.converged ? e.message : c.message) << '\n';
    }
  }
  VerificationReport audit = audit_sweep(c_rows, cfg.sweep_margin);
  write_text(dir / "audit.txt", to_text(audit));
  write_plot_series(dir / "plot", "C", c_rows);
  if (!free)
    write_plot_series(dir / "plot", "E", e_rows);
  out << "points = " << c_rows.size() << '\n';
  out << "all_converged = " << (all_converged ? "true" : "false") << '\n';
  out << "audit_pass = " << (audit.all_pass() ? "true" : "false") << '\n';
  return all_converged ? exit_ok : exit_numeric;
}

inline std::pair<Field, Field> load_pair(const fs::path &dir) {
  Field u1 = load_snapshot(dir / "u1.snap");
  Field u2 = load_snapshot(dir / "u2.snap");
  if (!(u1.grid() == u2.grid()))
    throw SnapshotError("snapshots in " + dir.string() + " live on different grids");
  return {std::move(u1), std::move(u2)};
}

namespace detail {

inline std::vector<double> number_list(const ConfigNode &n, const std::string &key) {
  std::vector<double> out;
  const json &list = n.array(key);
  for (std::size_t i = 0; i < list.size(); ++i)
    out.push_back(ConfigNode::as_number(list[i], n.child_path(key) + "[" + std::to_string(i) + "]"));
  return out;
}

} // namespace detail

inline VerificationReport run_check(const RunConfig &cfg, const VerifyCheckConfig &check) {
  const ConfigNode n(check.params, check.path);
  const double tol = n.number("residual_tol", std::max(cfg.flow.tol_residual, 1e-6));
  auto candidate = [&](const std::string &key, const ProblemSpec &problem) {
    auto [u1, u2] = load_pair(cfg.resolve(n.string(key)));
    if (!(u1.grid() == cfg.grid))
      n.fail(key, "snapshot grid differs from the configured grid");
    return evaluate_candidate(u1, u2, problem, tol);
  };
  const std::string &type = check.type;
  if (type == "decay") {
    n.only({"type", "input", "window", "tolerance", "residual_tol"});
    const SolveResult r = candidate("input", cfg.problem);
    const auto w = normsol::detail::parse_pair(n.array("window"), n.child_path("window"));
    return check_decay(r, cfg.problem.nonlinearity, {w[0], w[1]}, n.number("tolerance", 0.1));
  }
  if (type == "overlap") {
    n.only({"type", "u", "w", "component", "ladder", "tolerance", "residual_tol"});
    const SolveResult u = candidate("u", cfg.problem);
    const SolveResult w = candidate("w", cfg.problem.without_potentials());
    const long c = n.integer("component", 1);
    if (c != 1 && c != 2)
      n.fail("component", "expected 1 or 2");
    const double lam = c == 1 ? u.lambda1 : u.lambda2;
    const double lam_w = c == 1 ? w.lambda1 : w.lambda2;
    const std::vector<double> ladder =
        n.has("ladder") ? detail::number_list(n, "ladder") : default_ladder(std::min(lam, lam_w), cfg.grid);
    return check_overlap_decay(c == 1 ? u.u1 : u.u2, c == 1 ? w.u1 : w.u2, lam, ladder, n.number("tolerance", 0.1));
  }
  if (type == "binding") {
    n.only({"type", "a", "b", "ladder", "threshold", "residual_tol"});
    const SolveResult a = candidate("a", cfg.problem);
    const SolveResult b = candidate("b", cfg.problem.without_potentials());
    double lam_min = std::numeric_limits<double>::infinity();
    for (double l : {a.lambda1, a.lambda2, b.lambda1, b.lambda2})
      if (l > 0.0)
        lam_min = std::min(lam_min, l);
    if (!std::isfinite(lam_min))
      lam_min = 1.0;
    const std::vector<double> ladder =
        n.has("ladder") ? detail::number_list(n, "ladder") : default_ladder(lam_min, cfg.grid);
    return check_binding(a, b, ladder, cfg.problem, n.number("threshold", 1e-10));
  }
  if (type == "bahri_li") {
    n.only({"type", "p", "samples"});
    return check_bahri_li(n.number("p"), static_cast<int>(n.integer("samples", 5000)));
  }
  if (type == "interaction") {
    n.only({"type", "gamma1", "gamma2", "eta", "samples"});
    try {
      check_interaction_parameters(n.number("gamma1"), n.number("gamma2"), n.number("eta"));
    } catch (const DomainError &e) {
      n.fail(e.what());
    }
    return check_interaction(n.number("gamma1"), n.number("gamma2"), n.number("eta"),
                             static_cast<int>(n.integer("samples", 5000)));
  }
  if (type == "young") {
    n.only({"type", "eps", "samples", "s_max"});
    return check_young_splitting(cfg.problem.nonlinearity, detail::number_list(n, "eps"),
                                 static_cast<int>(n.integer("samples", 5000)), n.number("s_max", 10.0));
  }
  if (type == "coercivity") {
    n.only({"type", "trials", "seed"});
    return check_coercivity(cfg.problem, cfg.grid, static_cast<int>(n.integer("trials", 500)), {},
                            n.unsigned_integer("seed", 0xc0e4c1u));
  }
  if (type == "rearrangement") {
    n.only({"type", "input"});
    auto [u1, u2] = load_pair(cfg.resolve(n.string("input")));
    return check_rearrangement_inequalities(abs(u1), abs(u2), cfg.problem);
  }
  if (type == "coupled_rearrangement") {
    n.only({"type", "input"});
    if (cfg.grid.dimension() != 1)
      throw UnsupportedDimension(check.path + ": coupled rearrangement is implemented for N = 1 only (grid has N = " +
                                 std::to_string(cfg.grid.dimension()) + ")");
    auto [u1, u2] = load_pair(cfg.resolve(n.string("input")));
    VerificationReport r;
    const double d = coupled_lp_defect(abs(u1), abs(u2));
    r.add("coupled_lp_additivity", d <= 1e-12, d, 0.0, 1e-12, "worst relative defect over p in {2,3,4}");
    return r;
  }
  n.fail("type", "unknown check type '" + type + "'");
}

inline int cmd_verify(const RunConfig &cfg, const Invocation &, std::ostream &out, std::ostream &) {
  VerificationReport merged;
  for (const auto &check : cfg.verify_checks) {
    if (cfg.grid.dimension() != 1 && check.type == "coupled_rearrangement")
      throw UnsupportedDimension(check.path + ": coupled rearrangement is implemented for N = 1 only (grid has N = " +
                                 std::to_string(cfg.grid.dimension()) + ")");
  }
  for (const auto &check : cfg.verify_checks)
    merged.merge(run_check(cfg, check));
  fs::create_directories(cfg.output);
  write_text(cfg.output / "report.txt", to_text(merged));
  write_report(out, merged);
  return merged.all_pass() ? exit_ok : exit_numeric;
}

inline int cmd_rearrange_check(const RunConfig &cfg, const Invocation &, std::ostream &out, std::ostream &) {
  VerificationReport rep;
  if (cfg.rearrange_input) {
    auto [u1, u2] = load_pair(*cfg.rearrange_input);
    rep = check_rearrangement_inequalities(abs(u1), abs(u2), cfg.problem);
    if (cfg.grid.dimension() == 1) {
      const double d = coupled_lp_defect(abs(u1), abs(u2));
      rep.add("coupled_lp_additivity", d <= 1e-12, d, 0.0, 1e-12, "worst relative defect over p in {2,3,4}");
    }
  } else {
    rep = rearrangement_suite(cfg.grid, cfg.problem, cfg.rearrange_trials, cfg.rearrange_seed);
  }
  fs::create_directories(cfg.output);
  write_text(cfg.output / "rearrange_report.txt", to_text(rep));
  write_report(out, rep);
  return rep.all_pass() ? exit_ok : exit_numeric;
}

inline int dispatch(const Invocation &inv, std::ostream &out, std::ostream &err) {
  try {
    RunConfig cfg = load_config(inv.config);
    if (inv.output)
      cfg.output = *inv.output;
    if (inv.threads && *inv.threads < 1)
      throw ConfigError("--threads: expected a positive integer");
    if (inv.command == "solve")
      return cmd_solve(cfg, inv, out, err);
    if (inv.command == "sweep")
      return cmd_sweep(cfg, inv, out, err);
    if (inv.command == "verify")
      return cmd_verify(cfg, inv, out, err);
    if (inv.command == "rearrange-check")
      return cmd_rearrange_check(cfg, inv, out, err);
    err << "unknown command " << inv.command << '\n';
    return exit_config;
  } catch (const ConfigError &e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const SnapshotError &e) {
    err << "input error: " << e.what() << '\n';
    return exit_config;
  } catch (const UnsupportedDimension &e) {
    err << "unsupported: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception &e) {
    err << "numerical failure: " << e.what() << '\n';
    return exit_numeric;
  }
}

inline int main(int argc, const char *const *argv, std::ostream &out = std::cout, std::ostream &err = std::cerr) {
  CLI::App app{"Normalized ground states of coupled Schrodinger systems"};
  app.require_subcommand(1);
  Invocation inv;
  std::string output, resume;
  int threads = 0;
  for (const char *name : {"solve", "sweep", "verify", "rearrange-check"}) {
    CLI::App *sub = app.add_subcommand(name);
    sub->add_option("--config", inv.config, "run configuration (JSON)")->required();
    sub->add_option("--output", output, "output directory (overrides the config)");
    sub->add_option("--threads", threads, "worker threads for sweeps (default $NORMSOL_THREADS or 1)");
    sub->add_option("--resume", resume, "checkpoint directory to resume a solve from");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    app.exit(e, out, err);
    return exit_config;
  }
  for (CLI::App *sub : app.get_subcommands())
    inv.command = sub->get_name();
  if (!output.empty())
    inv.output = output;
  if (!resume.empty())
    inv.resume = resume;
  if (app.get_subcommands().front()->count("--threads") > 0)
    inv.threads = threads;
  return dispatch(inv, out, err);
}

} // namespace normsol::cli

#endif
