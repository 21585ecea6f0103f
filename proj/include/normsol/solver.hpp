#ifndef NORMSOL_SOLVER_HPP
#define NORMSOL_SOLVER_HPP

// Normalized gradient flow for minimizing J over the mass sphere S_{a1,a2}
// or the ball {|u_i|^2 <= a_i}.
//
// One step: a descent direction d_i is formed from the L^2 gradient g_i, the
// update u_i - dt d_i is clamped to be nonnegative and rescaled back to the
// target mass. Two direction choices are offered:
//   plain           d_i = g_i (the projection alone removes the normal part);
//   preconditioned  d_i = P_i(g_i - c_i u_i), P_i = (s_i - Lap)^{-1} with
//                   s_i = max(shift, lambda_i), c_i chosen so that <u_i, d_i> = 0.
// Both leave exact constrained critical points (g_i = -lambda_i u_i) fixed.

#include "normsol/energy.hpp"
#include "normsol/grid.hpp"
#include "normsol/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace normsol {

enum class InitKind { gaussian_pair, given, random_smooth };

struct FlowOptions {
  double dt = 0.5;
  int max_iters = 20000;
  double tol_residual = 1e-8;
  double tol_energy = 1e-12;
  bool backtracking = true;
  InitKind init = InitKind::gaussian_pair;
  std::optional<Field> given_u1;
  std::optional<Field> given_u2;
  std::uint64_t seed = 1;

  bool preconditioned = true;
  double precond_shift = 1.0;
  double init_width = 1.5;
  /// Independent random starts when init is random_smooth.
  int restarts = 3;
  /// Consecutive iterations that must meet both tolerances.
  int stall_window = 10;
  /// Barycenter recentering period for translation-invariant periodic problems (0 disables).
  int recenter_every = 100;
  /// Relaxed-ball runs start from the initial state scaled to this mass fraction.
  double ball_start_fraction = 0.5;
};

enum class Constraint { sphere, ball };

struct HistoryEntry {
  int iteration;
  double energy;
  double residual;
};

/// Complete state of a flow; enough to resume a run bit-for-bit.
struct FlowState {
  Field u1;
  Field u2;
  double dt;
  int iteration = 0;
  int stall_count = 0;
};

struct SolveResult {
  SolveResult(Field a, Field b) : u1(std::move(a)), u2(std::move(b)) {}
  Field u1;
  Field u2;
  double lambda1 = std::numeric_limits<double>::quiet_NaN();
  double lambda2 = std::numeric_limits<double>::quiet_NaN();
  EnergyBreakdown energy;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  /// True when both potentials vanish, so energy.total_J is a candidate for E rather than C.
  bool potential_free = false;
  std::vector<HistoryEntry> history;
  std::string message;
  std::array<double, 2> masses{0.0, 0.0};
};

namespace detail {

inline Field gaussian_component(const Grid &g, double width) {
  return sample(g, [&](const Point &x) {
    const double r = norm(x);
    return std::exp(-0.5 * r * r / (width * width));
  });
}

inline Field clamp_nonnegative(Field u) {
  for (double &v : u.values())
    v = std::max(0.0, v);
  return u;
}

/// Accept tolerance for "energy did not increase": a few ulps of the energy scale.
inline double energy_slack(const EnergyBreakdown &e) {
  const double scale = 1.0 + e.kinetic1 + e.kinetic2 + e.potential1 + e.potential2 + std::fabs(e.interaction);
  return 64.0 * std::numeric_limits<double>::epsilon() * scale;
}

} // namespace detail

inline std::pair<Field, Field> init_state(const ProblemSpec &problem, const Grid &grid, const FlowOptions &options) {
  const double a1 = problem.masses[0];
  const double a2 = problem.masses[1];
  if (!(a1 >= 0.0) || !(a2 >= 0.0))
    throw DomainError("masses must be nonnegative");
  auto gaussian = [&](double a) { return with_mass(detail::gaussian_component(grid, options.init_width), a); };

  switch (options.init) {
  case InitKind::gaussian_pair:
    return {gaussian(a1), gaussian(a2)};
  case InitKind::random_smooth: {
    std::mt19937_64 rng(options.seed);
    RandomFieldParams params;
    params.center_spread = std::min(2.0, 0.1 * grid.half_width());
    params.min_width = 0.75 * options.init_width;
    params.max_width = 1.5 * options.init_width;
    Field r1 = random_smooth_field(grid, rng, params);
    Field r2 = random_smooth_field(grid, rng, params);
    return {with_mass(std::move(r1), a1), with_mass(std::move(r2), a2)};
  }
  case InitKind::given: {
    if (!options.given_u1 || !options.given_u2)
      throw ConfigError("init 'given' needs two fields");
    auto take = [&](const Field &f, double a) {
      if (!(f.grid() == grid))
        throw DomainError("given initial field lives on a different grid");
      Field u = abs(f);
      if (a > 0.0 && !(mass(u) > 0.0))
        return gaussian(a);
      return with_mass(std::move(u), a);
    };
    return {take(*options.given_u1, a1), take(*options.given_u2, a2)};
  }
  }
  throw ConfigError("unknown init kind");
}

/// Flow engine bound to one problem; caches energy and gradient at the current state.
class GradientFlow {
public:
  GradientFlow(const DiscreteProblem &problem, const FlowOptions &options, Constraint constraint, FlowState state)
      : problem_(problem), options_(options), constraint_(constraint), state_(std::move(state)),
        g_(gradient(state_.u1, state_.u2, problem_)) {
    energy_ = energy(state_.u1, state_.u2, problem_);
    refresh_multipliers();
  }

  const FlowState &state() const noexcept { return state_; }
  const EnergyBreakdown &current_energy() const noexcept { return energy_; }
  double current_residual() const noexcept { return residual_; }
  std::pair<double, double> multipliers() const noexcept { return {lambda1_, lambda2_}; }
  bool converged() const noexcept { return state_.stall_count >= options_.stall_window; }

  /// Advances by one accepted step. Throws NonConvergence on step collapse.
  void step() {
    const double a1 = problem_.target_mass(0);
    const double a2 = problem_.target_mass(1);
    const bool precond = options_.preconditioned;

    std::array<std::optional<Field>, 2> raw;
    std::array<std::optional<Field>, 2> tangent;
    const std::array<const Field *, 2> u{&state_.u1, &state_.u2};
    const std::array<const Field *, 2> g{&g_.first, &g_.second};
    for (int c = 0; c < 2; ++c) {
      const auto ci = static_cast<std::size_t>(c);
      if (problem_.target_mass(c) <= 0.0)
        continue;
      if (precond) {
        // Shifting by the current multiplier keeps P (lambda - Lap) close to the identity.
        const double lam = c == 0 ? lambda1_ : lambda2_;
        const double shift = std::isfinite(lam) ? std::max(options_.precond_shift, lam) : options_.precond_shift;
        const Field pg = resolvent(*g[ci], shift);
        const Field pu = resolvent(*u[ci], shift);
        const double coef = inner(*u[ci], pg) / inner(*u[ci], pu);
        tangent[ci] = pg - coef * pu;
        if (constraint_ == Constraint::ball)
          raw[ci] = pg;
      } else {
        tangent[ci] = *g[ci];
        if (constraint_ == Constraint::ball)
          raw[ci] = *g[ci];
      }
    }

    auto propose = [&](int c, double dt) -> Field {
      const auto ci = static_cast<std::size_t>(c);
      const double a = problem_.target_mass(c);
      if (a <= 0.0)
        return Field(problem_.grid);
      if (constraint_ == Constraint::ball) {
        Field inside = detail::clamp_nonnegative(*u[ci] - dt * *raw[ci]);
        if (mass(inside) <= a && mass(inside) > 0.0)
          return inside;
      }
      Field next = detail::clamp_nonnegative(*u[ci] - dt * *tangent[ci]);
      if (!(mass(next) > 0.0))
        throw NonConvergence("descent step annihilated a component");
      return with_mass(std::move(next), a);
    };

    double dt = state_.dt;
    bool first_try = true;
    for (;;) {
      Field n1 = propose(0, dt);
      Field n2 = propose(1, dt);
      EnergyBreakdown e = energy(n1, n2, problem_);
      const bool accept = !options_.backtracking || e.total_J <= energy_.total_J + detail::energy_slack(energy_);
      if (accept) {
        const double previous = energy_.total_J;
        state_.u1 = std::move(n1);
        state_.u2 = std::move(n2);
        energy_ = e;
        state_.dt = first_try ? std::min(options_.dt, 2.0 * dt) : dt;
        ++state_.iteration;
        if (should_recenter())
          recenter();
        g_ = gradient(state_.u1, state_.u2, problem_);
        refresh_multipliers();
        const double change = std::fabs(energy_.total_J - previous);
        const bool stalled = change <= options_.tol_energy * std::max(1.0, std::fabs(energy_.total_J));
        state_.stall_count = (stalled && residual_ <= options_.tol_residual) ? state_.stall_count + 1 : 0;
        (void)a1;
        (void)a2;
        return;
      }
      dt *= 0.5;
      first_try = false;
      if (dt < 1e-14)
        throw NonConvergence("step size collapsed below 1e-14");
    }
  }

private:
  bool should_recenter() const noexcept {
    return options_.recenter_every > 0 && problem_.grid.periodic() && problem_.spec.potential_free() &&
           state_.iteration % options_.recenter_every == 0;
  }

  /// Circular-mean barycenter of u1^2 + u2^2, rounded to the grid.
  void recenter() {
    const Grid &g = problem_.grid;
    const double h = g.spacing();
    const double half = g.half_width();
    Point shift{0.0, 0.0, 0.0};
    for (int a = 0; a < g.dimension(); ++a) {
      double cs = 0.0;
      double sn = 0.0;
      for (std::size_t i = 0; i < state_.u1.size(); ++i) {
        const double w = state_.u1[i] * state_.u1[i] + state_.u2[i] * state_.u2[i];
        const double theta = std::numbers::pi * g.point(i)[static_cast<std::size_t>(a)] / half;
        cs += w * std::cos(theta);
        sn += w * std::sin(theta);
      }
      if (cs == 0.0 && sn == 0.0)
        continue;
      const double center = std::atan2(sn, cs) * half / std::numbers::pi;
      shift[static_cast<std::size_t>(a)] = -std::round(center / h) * h;
    }
    if (shift[0] == 0.0 && shift[1] == 0.0 && shift[2] == 0.0)
      return;
    state_.u1 = translate(state_.u1, shift);
    state_.u2 = translate(state_.u2, shift);
    energy_ = energy(state_.u1, state_.u2, problem_);
  }

  void refresh_multipliers() {
    lambda1_ = mass(state_.u1) > 0.0 ? multiplier_from_gradient(g_.first, state_.u1)
                                     : std::numeric_limits<double>::quiet_NaN();
    lambda2_ = mass(state_.u2) > 0.0 ? multiplier_from_gradient(g_.second, state_.u2)
                                     : std::numeric_limits<double>::quiet_NaN();
    residual_ = residual_from_gradient(g_.first, g_.second, state_.u1, state_.u2, lambda1_, lambda2_);
  }

  const DiscreteProblem &problem_;
  const FlowOptions &options_;
  Constraint constraint_;
  FlowState state_;
  std::pair<Field, Field> g_;
  EnergyBreakdown energy_;
  double lambda1_ = 0.0;
  double lambda2_ = 0.0;
  double residual_ = 0.0;
};

/// One accepted step of the flow from `state`.
inline FlowState flow_step(const FlowState &state, const DiscreteProblem &problem, const FlowOptions &options,
                           Constraint constraint = Constraint::sphere) {
  GradientFlow flow(problem, options, constraint, state);
  flow.step();
  return flow.state();
}

inline SolveResult zero_result(const Grid &grid, const ProblemSpec &problem) {
  SolveResult r{Field(grid), Field(grid)};
  r.energy = EnergyBreakdown{};
  r.residual = 0.0;
  r.converged = true;
  r.potential_free = problem.potential_free();
  r.message = "zero masses: trivial minimizer";
  return r;
}

/// Runs the flow from an explicit state until convergence or options.max_iters
/// total iterations. `on_iteration`, when given, sees the state after each step.
template <typename Callback>
SolveResult run_flow(const DiscreteProblem &problem, const FlowOptions &options, Constraint constraint,
                     FlowState start, Callback &&on_iteration) {
  GradientFlow flow(problem, options, constraint, std::move(start));
  std::vector<HistoryEntry> history;
  std::string message;
  history.push_back({flow.state().iteration, flow.current_energy().total_J, flow.current_residual()});
  try {
    while (!flow.converged() && flow.state().iteration < options.max_iters) {
      flow.step();
      history.push_back({flow.state().iteration, flow.current_energy().total_J, flow.current_residual()});
      on_iteration(flow);
    }
  } catch (const NonConvergence &e) {
    message = e.what();
  }
  SolveResult r(flow.state().u1, flow.state().u2);
  std::tie(r.lambda1, r.lambda2) = flow.multipliers();
  r.energy = flow.current_energy();
  r.residual = flow.current_residual();
  r.iterations = flow.state().iteration;
  r.converged = flow.converged() && message.empty();
  r.potential_free = problem.spec.potential_free();
  r.history = std::move(history);
  r.masses = problem.spec.masses;
  if (r.converged && constraint == Constraint::ball) {
    for (int c = 0; c < 2; ++c) {
      const double a = problem.target_mass(c);
      const double m = mass(c == 0 ? r.u1 : r.u2);
      if (a > 0.0 && std::fabs(m - a) > 1e-10 * a) {
        r.converged = false;
        message = "relaxed minimizer stayed inside the ball";
      }
    }
  }
  if (message.empty())
    message = r.converged ? "converged" : "iteration limit reached";
  r.message = message;
  return r;
}

inline SolveResult run_flow(const DiscreteProblem &problem, const FlowOptions &options, Constraint constraint,
                            FlowState start) {
  return run_flow(problem, options, constraint, std::move(start), [](const GradientFlow &) {});
}

namespace detail {

inline FlowState initial_flow_state(const DiscreteProblem &dp, const FlowOptions &options, Constraint constraint) {
  auto [u1, u2] = init_state(dp.spec, dp.grid, options);
  if (constraint == Constraint::ball) {
    const double f = std::sqrt(options.ball_start_fraction);
    u1 *= f;
    u2 *= f;
  }
  return FlowState{std::move(u1), std::move(u2), options.dt};
}

/// Multi-start preference: converged beats unconverged, then lower energy.
inline bool better_result(const SolveResult &candidate, const std::optional<SolveResult> &best) {
  return !best || (candidate.converged && !best->converged) ||
         (candidate.converged == best->converged && candidate.energy.total_J < best->energy.total_J);
}

/// Number of independent starts the options ask for.
inline int start_count(const FlowOptions &options) {
  return options.init == InitKind::random_smooth ? std::max(1, options.restarts) : 1;
}

inline FlowOptions start_options(const FlowOptions &options, int start) {
  FlowOptions o = options;
  o.seed = options.seed + static_cast<std::uint64_t>(start);
  return o;
}

inline SolveResult solve_once(const DiscreteProblem &dp, const FlowOptions &options, Constraint constraint) {
  return run_flow(dp, options, constraint, initial_flow_state(dp, options, constraint));
}

inline SolveResult solve(const ProblemSpec &problem, const Grid &grid, const FlowOptions &options,
                         Constraint constraint) {
  if (problem.masses[0] == 0.0 && problem.masses[1] == 0.0)
    throw DomainError("ground states need (a1, a2) != (0, 0)");
  if (problem.nonlinearity.dimension() != grid.dimension())
    throw DomainError("problem and grid dimensions differ");
  const DiscreteProblem dp(problem, grid);
  std::optional<SolveResult> best;
  for (int r = 0; r < start_count(options); ++r) {
    SolveResult res = solve_once(dp, start_options(options, r), constraint);
    if (better_result(res, best))
      best = std::move(res);
  }
  return std::move(*best);
}

} // namespace detail

/// Minimizer candidate of J on S_{a1,a2}. Its energy is the candidate for C
/// (or for E when both potentials vanish, see SolveResult::potential_free).
inline SolveResult solve_ground_state(const ProblemSpec &problem, const Grid &grid, const FlowOptions &options) {
  return detail::solve(problem, grid, options, Constraint::sphere);
}

/// Minimizer of J on the ball {|u_i|^2 <= a_i}; projection is applied only when
/// a step would leave the ball.
inline SolveResult solve_relaxed_ball(const ProblemSpec &problem, const Grid &grid, const FlowOptions &options) {
  return detail::solve(problem, grid, options, Constraint::ball);
}

/// Rebuilds a SolveResult from stored fields: masses are taken from the fields,
/// multipliers and residual are recomputed, and `converged` means residual <= tol.
inline SolveResult evaluate_candidate(const Field &u1, const Field &u2, const ProblemSpec &problem, double tol) {
  const ProblemSpec p = problem.with_masses(mass(u1), mass(u2));
  const DiscreteProblem dp(p, u1.grid());
  SolveResult r{abs(u1), abs(u2)};
  const auto g = gradient(r.u1, r.u2, dp);
  if (mass(r.u1) > 0.0)
    r.lambda1 = multiplier_from_gradient(g.first, r.u1);
  if (mass(r.u2) > 0.0)
    r.lambda2 = multiplier_from_gradient(g.second, r.u2);
  r.residual = residual_from_gradient(g.first, g.second, r.u1, r.u2, r.lambda1, r.lambda2);
  r.energy = energy(r.u1, r.u2, dp);
  r.converged = r.residual <= tol;
  r.potential_free = p.potential_free();
  r.masses = p.masses;
  r.message = r.converged ? "loaded" : "loaded state is not a critical point within tolerance";
  return r;
}

/// Independent solves over a mass list. Consecutive entries sharing a2 form a
/// warm-start chain (each point starts from its predecessor rescaled to the new
/// masses); chains run concurrently on `threads` workers. The chain structure
/// does not depend on the thread count, so results are reproducible.
inline std::vector<SolveResult> sweep_masses(const ProblemSpec &problem, const std::vector<std::array<double, 2>> &masses,
                                             const Grid &grid, const FlowOptions &options, int threads = 1) {
  if (masses.empty())
    throw DomainError("sweep needs a nonempty mass list");
  std::vector<std::pair<std::size_t, std::size_t>> chains;
  for (std::size_t i = 0; i < masses.size();) {
    std::size_t j = i + 1;
    while (j < masses.size() && masses[j][1] == masses[i][1])
      ++j;
    chains.emplace_back(i, j);
    i = j;
  }
  std::vector<std::optional<SolveResult>> results(masses.size());
  std::atomic<std::size_t> next{0};

  auto work = [&]() {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chains.size())
        return;
      const std::optional<SolveResult> *previous = nullptr;
      for (std::size_t i = chains[c].first; i < chains[c].second; ++i) {
        const ProblemSpec p = problem.with_masses(masses[i][0], masses[i][1]);
        SolveResult res{Field(grid), Field(grid)};
        try {
          if (masses[i][0] == 0.0 && masses[i][1] == 0.0) {
            res = zero_result(grid, p);
          } else {
            FlowOptions o = options;
            if (previous != nullptr && previous->has_value() && (*previous)->converged) {
              o.init = InitKind::given;
              o.given_u1 = (*previous)->u1;
              o.given_u2 = (*previous)->u2;
            }
            res = solve_ground_state(p, grid, o);
          }
        } catch (const std::exception &e) {
          res.converged = false;
          res.message = e.what();
        }
        res.masses = {masses[i][0], masses[i][1]};
        results[i] = std::move(res);
        previous = &results[i];
      }
    }
  };

  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(chains.size())));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back(work);
    for (auto &t : pool)
      t.join();
  }
  std::vector<SolveResult> out;
  out.reserve(results.size());
  for (auto &r : results)
    out.push_back(std::move(*r));
  return out;
}

} // namespace normsol

#endif
