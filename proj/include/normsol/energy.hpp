#ifndef NORMSOL_ENERGY_HPP
#define NORMSOL_ENERGY_HPP

#include "normsol/grid.hpp"
#include "normsol/model.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <utility>

namespace normsol {

/// A problem bound to a grid, with both potentials sampled once.
struct DiscreteProblem {
  ProblemSpec spec;
  Grid grid;
  std::array<Field, 2> potential;

  DiscreteProblem(ProblemSpec s, const Grid &g)
      : spec(std::move(s)), grid(g),
        potential{sample_potential(g, spec.potentials[0]), sample_potential(g, spec.potentials[1])} {}

  const NonlinearitySpec &nonlinearity() const noexcept { return spec.nonlinearity; }
  double target_mass(int c) const noexcept { return spec.masses[static_cast<std::size_t>(c)]; }
};

struct EnergyBreakdown {
  double kinetic1 = 0.0;
  double kinetic2 = 0.0;
  double potential1 = 0.0; // int(-V1) u1^2
  double potential2 = 0.0;
  double interaction = 0.0; // int G(|u1|, |u2|)
  double total_J = 0.0;
  double total_I = 0.0;
};

namespace detail {

inline void check_pair(const Field &u1, const Field &u2, const Grid &g) {
  if (!(u1.grid() == u2.grid()) || !(u1.grid() == g))
    throw DomainError("fields and problem must share one grid");
}

inline double weighted_mass(const Field &u, const Field &minus_weight) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    s += -minus_weight[i] * u[i] * u[i];
  return s * u.grid().cell_volume();
}

} // namespace detail

/// The norm int(-V) u^2.
inline double v_norm_sq(const Field &u, const Field &potential) {
  u.check_same(potential);
  return detail::weighted_mass(u, potential);
}

inline double v_norm_sq(const Field &u, const PotentialSpec &p) {
  return v_norm_sq(u, sample_potential(u.grid(), p));
}

inline EnergyBreakdown energy(const Field &u1, const Field &u2, const DiscreteProblem &problem) {
  detail::check_pair(u1, u2, problem.grid);
  EnergyBreakdown e;
  e.kinetic1 = grad_norm_sq(u1);
  e.kinetic2 = grad_norm_sq(u2);
  e.potential1 = detail::weighted_mass(u1, problem.potential[0]);
  e.potential2 = detail::weighted_mass(u2, problem.potential[1]);
  double g = 0.0;
  for (std::size_t i = 0; i < u1.size(); ++i)
    g += G_unchecked(std::fabs(u1[i]), std::fabs(u2[i]), problem.nonlinearity());
  e.interaction = g * problem.grid.cell_volume();
  e.total_I = 0.5 * (e.kinetic1 + e.kinetic2) - e.interaction;
  e.total_J = e.total_I - 0.5 * (e.potential1 + e.potential2);
  return e;
}

inline EnergyBreakdown energy(const Field &u1, const Field &u2, const ProblemSpec &problem) {
  return energy(u1, u2, DiscreteProblem(problem, u1.grid()));
}

/// Strong-form L^2 gradient of J: g_i = -Lap u_i + V_i u_i - d_iG(|u1|,|u2|) sgn(u_i).
inline std::pair<Field, Field> gradient(const Field &u1, const Field &u2, const DiscreteProblem &problem) {
  detail::check_pair(u1, u2, problem.grid);
  Field g1 = laplacian(u1);
  Field g2 = laplacian(u2);
  for (std::size_t i = 0; i < u1.size(); ++i) {
    const auto [d1, d2] = dG_unchecked(std::fabs(u1[i]), std::fabs(u2[i]), problem.nonlinearity());
    const double s1 = u1[i] < 0.0 ? -1.0 : 1.0;
    const double s2 = u2[i] < 0.0 ? -1.0 : 1.0;
    g1[i] = -g1[i] + problem.potential[0][i] * u1[i] - s1 * d1;
    g2[i] = -g2[i] + problem.potential[1][i] * u2[i] - s2 * d2;
  }
  return {std::move(g1), std::move(g2)};
}

inline std::pair<Field, Field> gradient(const Field &u1, const Field &u2, const ProblemSpec &problem) {
  return gradient(u1, u2, DiscreteProblem(problem, u1.grid()));
}

/// lambda_i = -int g_i u_i / int u_i^2 for one component.
inline double multiplier_from_gradient(const Field &g, const Field &u) {
  const double m = mass(u);
  if (!(m > 0.0))
    throw UndefinedMultiplier("multiplier of a zero-mass component is undefined");
  return -inner(g, u) / m;
}

inline std::pair<double, double> extract_multipliers(const Field &u1, const Field &u2,
                                                     const DiscreteProblem &problem) {
  const auto [g1, g2] = gradient(u1, u2, problem);
  return {multiplier_from_gradient(g1, u1), multiplier_from_gradient(g2, u2)};
}

inline std::pair<double, double> extract_multipliers(const Field &u1, const Field &u2, const ProblemSpec &problem) {
  return extract_multipliers(u1, u2, DiscreteProblem(problem, u1.grid()));
}

/// max_i |g_i + lambda_i u_i|_2 / max(1, |u_i|_2). A non-finite multiplier
/// (zero component) counts as zero.
inline double residual_from_gradient(const Field &g1, const Field &g2, const Field &u1, const Field &u2,
                                     double lambda1, double lambda2) {
  auto one = [](const Field &g, const Field &u, double lam) {
    if (!std::isfinite(lam))
      lam = 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double r = g[i] + lam * u[i];
      s += r * r;
    }
    const double res = std::sqrt(s * u.grid().cell_volume());
    return res / std::max(1.0, l2_norm(u));
  };
  return std::max(one(g1, u1, lambda1), one(g2, u2, lambda2));
}

inline double residual(const Field &u1, const Field &u2, double lambda1, double lambda2,
                       const DiscreteProblem &problem) {
  const auto [g1, g2] = gradient(u1, u2, problem);
  return residual_from_gradient(g1, g2, u1, u2, lambda1, lambda2);
}

inline double residual(const Field &u1, const Field &u2, double lambda1, double lambda2, const ProblemSpec &problem) {
  return residual(u1, u2, lambda1, lambda2, DiscreteProblem(problem, u1.grid()));
}

/// Ratio |v|_{2+4/N}^{2+4/N} / (|grad v|^2 |v|_2^{4/N}) on a grid.
inline double gagliardo_nirenberg_ratio(const Field &v) {
  const int n = v.grid().dimension();
  const double p = 2.0 + 4.0 / n;
  const double k = grad_norm_sq(v);
  const double m = mass(v);
  if (!(k > 0.0) || !(m > 0.0))
    return 0.0;
  return lp_norm_pow(v, p) / (k * std::pow(m, 2.0 / n));
}

/// Discrete Gagliardo-Nirenberg constant estimated by maximizing the ratio over
/// random starts, each refined by preconditioned gradient ascent on its log.
inline double gagliardo_nirenberg_constant(const Grid &g, int starts = 8, int ascent_iters = 150,
                                           std::uint64_t seed = 0x6e5eedu) {
  const int n = g.dimension();
  const double p = 2.0 + 4.0 / n;
  std::mt19937_64 rng(seed);
  double best = 0.0;
  auto log_ratio = [&](const Field &v) {
    const double r = gagliardo_nirenberg_ratio(v);
    return r > 0.0 ? std::log(r) : -std::numeric_limits<double>::infinity();
  };
  for (int s = 0; s < starts; ++s) {
    RandomFieldParams params;
    params.bumps = 1 + s % 3;
    params.center_spread = 0.1 * g.half_width();
    params.min_width = 0.5;
    params.max_width = 0.1 * g.half_width() + 0.5;
    Field v = with_mass(random_smooth_field(g, rng, params), 1.0);
    double f = log_ratio(v);
    double step = 0.5;
    for (int it = 0; it < ascent_iters && step > 1e-8; ++it) {
      const double pp = lp_norm_pow(v, p);
      const Field lap = laplacian(v);
      const double k = std::max(1e-300, -inner(v, lap));
      const double m = mass(v);
      Field grad(g);
      for (std::size_t i = 0; i < v.size(); ++i)
        grad[i] = p * std::pow(std::fabs(v[i]), p - 2.0) * v[i] / pp + 2.0 * lap[i] / k - (4.0 / n) * v[i] / m;
      const Field dir = resolvent(grad, 1.0);
      while (step > 1e-8) {
        Field trial = v + step * dir;
        trial = map(trial, [](double x) { return std::fabs(x); });
        if (!(mass(trial) > 0.0)) {
          step *= 0.5;
          continue;
        }
        trial = with_mass(std::move(trial), 1.0);
        const double ft = log_ratio(trial);
        if (ft > f) {
          v = std::move(trial);
          f = ft;
          step *= 1.5;
          break;
        }
        step *= 0.5;
      }
    }
    best = std::max(best, std::exp(f));
  }
  return best;
}

} // namespace normsol

#endif
