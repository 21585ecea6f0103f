#ifndef NORMSOL_REARRANGE_HPP
#define NORMSOL_REARRANGE_HPP

// Discrete symmetric-decreasing rearrangement on grid samples.
//
// A rearrangement is a fixed placement order of the grid points: the k-th
// largest value goes to the k-th point of the order. Because every field uses
// the same order, pointwise-monotone functionals (int G(u*, v*)) can only grow.

#include "normsol/energy.hpp"
#include "normsol/errors.hpp"
#include "normsol/grid.hpp"
#include "normsol/model.hpp"
#include "normsol/report.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <numeric>
#include <vector>

namespace normsol {

/// Center-out order for a run of length m: m/2, m/2+1, m/2-1, m/2+2, ...
inline std::vector<std::size_t> center_out_order(std::size_t m) {
  std::vector<std::size_t> order;
  order.reserve(m);
  const auto c = static_cast<std::ptrdiff_t>(m / 2);
  const auto n = static_cast<std::ptrdiff_t>(m);
  if (m > 0)
    order.push_back(static_cast<std::size_t>(c));
  for (std::ptrdiff_t k = 1; static_cast<std::size_t>(order.size()) < m; ++k) {
    if (c + k < n)
      order.push_back(static_cast<std::size_t>(c + k));
    if (c - k >= 0)
      order.push_back(static_cast<std::size_t>(c - k));
  }
  return order;
}

/// Placement order of grid points: center-out in 1D, by distance from the
/// origin with lexicographic tie-break otherwise.
inline std::vector<std::size_t> placement_order(const Grid &g) {
  if (g.dimension() == 1)
    return center_out_order(g.size());
  const int c = g.points() / 2;
  std::vector<long> dist2(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto idx = g.multi_index(i);
    long d = 0;
    for (int a = 0; a < g.dimension(); ++a) {
      const long k = idx[static_cast<std::size_t>(a)] - c;
      d += k * k;
    }
    dist2[i] = d;
  }
  std::vector<std::size_t> order(g.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Row-major flat index order is lexicographic in the multi-index.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist2[a] < dist2[b]; });
  return order;
}

/// Places `values` (any order) along `order`, largest first.
inline std::vector<double> place_decreasing(std::vector<double> values, const std::vector<std::size_t> &order) {
  std::sort(values.begin(), values.end(), std::greater<>());
  std::vector<double> out(order.size(), 0.0);
  for (std::size_t k = 0; k < order.size() && k < values.size(); ++k)
    out[order[k]] = values[k];
  return out;
}

/// Raw 1D rearrangement of an arbitrary-length sample run.
inline std::vector<double> sym_dec_rearrange_1d(const std::vector<double> &values) {
  for (double v : values)
    if (v < 0.0)
      throw DomainError("rearrangement needs nonnegative samples");
  return place_decreasing(values, center_out_order(values.size()));
}

inline Field sym_dec_rearrange(const Field &u) {
  for (double v : u.values())
    if (v < 0.0)
      throw DomainError("rearrangement needs nonnegative samples");
  std::vector<double> vals(u.values().begin(), u.values().end());
  return Field(u.grid(), place_decreasing(std::move(vals), placement_order(u.grid())));
}

/// Coupled rearrangement: super-level sets of the result are centered runs of
/// length |{u>t}| + |{v>t}|. Values that do not fit in the box are dropped
/// (reported through `dropped_mass` when given).
inline Field coupled_rearrange_1d(const Field &u, const Field &v, double *dropped_mass = nullptr) {
  if (u.grid().dimension() != 1 || v.grid().dimension() != 1)
    throw UnsupportedDimension("coupled rearrangement is implemented for N = 1 only");
  if (!(u.grid() == v.grid()))
    throw DomainError("coupled rearrangement needs a common grid");
  std::vector<double> merged;
  merged.reserve(2 * u.size());
  for (const Field *f : {&u, &v})
    for (double x : f->values()) {
      if (x < 0.0)
        throw DomainError("rearrangement needs nonnegative samples");
      merged.push_back(x);
    }
  std::sort(merged.begin(), merged.end(), std::greater<>());
  if (dropped_mass != nullptr) {
    double lost = 0.0;
    for (std::size_t k = u.size(); k < merged.size(); ++k)
      lost += merged[k] * merged[k];
    *dropped_mass = lost * u.grid().cell_volume();
  }
  merged.resize(u.size());
  return Field(u.grid(), place_decreasing(std::move(merged), center_out_order(u.size())));
}

inline double interaction_integral(const Field &u1, const Field &u2, const NonlinearitySpec &nl) {
  u1.check_same(u2);
  double s = 0.0;
  for (std::size_t i = 0; i < u1.size(); ++i)
    s += G_unchecked(u1[i], u2[i], nl);
  return s * u1.grid().cell_volume();
}

struct RearrangementTolerances {
  /// Relative roundoff allowance for the exact inequalities.
  double exact_rel = 1e-12;
  /// Additive allowance for the 1D difference-energy comparison.
  double polya_szego_1d = 1e-8;
};

/// G, V and Polya-Szego comparisons between (u1, u2) and their rearrangements.
/// The V-check is recorded only for components whose potential is radially
/// nondecreasing (-V radially nonincreasing).
inline VerificationReport check_rearrangement_inequalities(const Field &u1, const Field &u2,
                                                           const ProblemSpec &problem,
                                                           const RearrangementTolerances &tol = {}) {
  VerificationReport r;
  const Grid &g = u1.grid();
  u1.check_same(u2);
  const Field s1 = sym_dec_rearrange(u1);
  const Field s2 = sym_dec_rearrange(u2);
  const auto &nl = problem.nonlinearity;

  const double g0 = interaction_integral(u1, u2, nl);
  const double gs = interaction_integral(s1, s2, nl);
  const double tg = tol.exact_rel * std::max(1.0, std::fabs(g0));
  r.add("rearrangement_G", gs - g0 >= -tg, gs - g0, 0.0, tg, "int G(u*) - int G(u)");

  const std::array<const Field *, 2> orig{&u1, &u2};
  const std::array<const Field *, 2> rear{&s1, &s2};
  for (std::size_t c = 0; c < 2; ++c) {
    const std::string suffix = std::to_string(c + 1);
    const PotentialSpec &p = problem.potentials[c];
    if (!p.is_zero()) {
      const Field v = sample_potential(g, p);
      if (detail::radial_nondecreasing(g, v)) {
        const double before = v_norm_sq(*orig[c], v);
        const double after = v_norm_sq(*rear[c], v);
        const double tv = tol.exact_rel * std::max(1.0, before);
        r.add("rearrangement_V" + suffix, after - before >= -tv, after - before, 0.0, tv,
              "|u*|_V^2 - |u|_V^2");
      }
    }
    if (mass(*orig[c]) > 0.0) {
      // Difference form: exact in 1D for center-out placement; the spectral
      // norm is not monotone under discrete rearrangement of rough samples.
      const double k0 = difference_grad_norm_sq(*orig[c]);
      const double ks = difference_grad_norm_sq(*rear[c]);
      const double tk = g.dimension() == 1 ? tol.polya_szego_1d : g.spacing() * std::max(1.0, k0);
      r.add("polya_szego" + suffix, ks <= k0 + tk, ks - k0, 0.0, tk, "|grad u*|^2 - |grad u|^2");
    }
  }
  return r;
}

/// Relative deviation from int (u*v)^p = int u^p + int v^p, worst over p in {2, 3, 4}.
inline double coupled_lp_defect(const Field &u, const Field &v) {
  const Field c = coupled_rearrange_1d(u, v);
  double worst = 0.0;
  for (double p : {2.0, 3.0, 4.0}) {
    const double lhs = lp_norm_pow(c, p);
    const double rhs = lp_norm_pow(u, p) + lp_norm_pow(v, p);
    worst = std::max(worst, std::fabs(lhs - rhs) / std::max(1e-300, std::fabs(rhs)));
  }
  return worst;
}

namespace detail {

/// Rough nonnegative samples on a random window of about a quarter of the box.
template <typename Rng> Field rough_compact_field(const Grid &g, Rng &rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int m = g.points();
  const int width = std::max(2, m / 8 + static_cast<int>(unit(rng) * (m / 8)));
  const int start = static_cast<int>(unit(rng) * (m - width));
  Field u(g);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto idx = g.multi_index(i);
    bool inside = true;
    for (int a = 0; a < g.dimension(); ++a)
      inside = inside && idx[static_cast<std::size_t>(a)] >= start && idx[static_cast<std::size_t>(a)] < start + width;
    if (inside)
      u[i] = unit(rng);
  }
  return u;
}

} // namespace detail

/// Randomized run of the rearrangement inequalities over `trials` nonnegative
/// field pairs (alternating smooth sums of bumps and rough compact samples).
inline VerificationReport rearrangement_suite(const Grid &grid, const ProblemSpec &problem, int trials,
                                              std::uint64_t seed, const RearrangementTolerances &tol = {}) {
  VerificationReport out;
  std::mt19937_64 rng(seed);
  std::map<std::string, std::pair<int, double>> tally; // violations, worst margin
  double worst_coupled = 0.0;
  for (int t = 0; t < trials; ++t) {
    Field u(grid), v(grid);
    if (t % 2 == 0) {
      RandomFieldParams params;
      params.center_spread = 0.25 * grid.half_width();
      u = random_smooth_field(grid, rng, params);
      v = random_smooth_field(grid, rng, params);
    } else {
      u = detail::rough_compact_field(grid, rng);
      v = detail::rough_compact_field(grid, rng);
    }
    const VerificationReport r = check_rearrangement_inequalities(u, v, problem, tol);
    for (const Check &c : r.checks) {
      // Normalize each record to "margin >= 0 means pass".
      const double margin = c.name.rfind("polya_szego", 0) == 0 ? -c.measured : c.measured;
      auto [it, fresh] = tally.try_emplace(c.name, 0, margin);
      if (!fresh)
        it->second.second = std::min(it->second.second, margin);
      if (!c.pass)
        ++it->second.first;
    }
    if (grid.dimension() == 1 && t % 2 == 1)
      worst_coupled = std::max(worst_coupled, coupled_lp_defect(u, v));
  }
  for (const auto &[name, vw] : tally)
    out.add(name, vw.first == 0, static_cast<double>(vw.first), 0.0, 0.0,
            "violations over " + std::to_string(trials) + " pairs; smallest margin " + format_double(vw.second));
  if (grid.dimension() == 1 && trials > 1)
    out.add("coupled_lp_additivity", worst_coupled <= 1e-12, worst_coupled, 0.0, 1e-12,
            "worst relative defect over p in {2,3,4}");
  return out;
}

} // namespace normsol

#endif
