#ifndef NORMSOL_VERIFY_HPP
#define NORMSOL_VERIFY_HPP

#include "normsol/energy.hpp"
#include "normsol/errors.hpp"
#include "normsol/grid.hpp"
#include "normsol/model.hpp"
#include "normsol/report.hpp"
#include "normsol/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace normsol {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

inline LineFit least_squares(const std::vector<double> &x, const std::vector<double> &y) {
  if (x.size() != y.size() || x.size() < 2)
    throw DomainError("line fit needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0))
    throw DomainError("line fit needs distinct abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

struct DecayWindow {
  double r_min;
  double r_max;
};

struct DecayFit {
  DecayWindow window{0.0, 0.0};
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double predicted_rate = std::numeric_limits<double>::quiet_NaN();
  std::size_t samples = 0;

  bool trusted() const noexcept { return r_squared >= 0.99; }
};

/// Least-squares line through (r, log u) over the window. In 1D every sample
/// with |x| in the window is used; for N >= 2 the samples are first averaged
/// over radial shells of width h.
inline DecayFit fit_decay(const Field &u, DecayWindow window,
                          double predicted_rate = std::numeric_limits<double>::quiet_NaN()) {
  const Grid &g = u.grid();
  if (!(window.r_min >= 0.0) || !(window.r_min < window.r_max))
    throw DomainError("decay window needs 0 <= r_min < r_max");
  if (window.r_max > 0.8 * g.half_width() * (1.0 + 1e-12))
    throw DomainError("decay window must end within 0.8 L to avoid the boundary layer");
  std::vector<double> rs, logs;
  auto take = [&](double r, double v) {
    if (!(v > 0.0))
      throw DomainError("decay window contains nonpositive samples");
    rs.push_back(r);
    logs.push_back(std::log(v));
  };
  if (g.dimension() == 1) {
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double r = std::fabs(g.point(i)[0]);
      if (r >= window.r_min && r <= window.r_max)
        take(r, u[i]);
    }
  } else {
    const double h = g.spacing();
    std::map<long, std::array<double, 3>> shells; // radius sum, value sum, count
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double r = norm(g.point(i));
      if (r < window.r_min || r > window.r_max)
        continue;
      auto &s = shells[std::lround(r / h)];
      s[0] += r;
      s[1] += u[i];
      s[2] += 1.0;
    }
    for (const auto &[key, s] : shells)
      take(s[0] / s[2], s[1] / s[2]);
  }
  if (rs.size() < 2)
    throw DomainError("decay window holds fewer than two samples");
  const LineFit lf = least_squares(rs, logs);
  DecayFit f;
  f.window = window;
  f.slope = lf.slope;
  f.intercept = lf.intercept;
  f.r_squared = lf.r_squared;
  f.predicted_rate = predicted_rate;
  f.samples = rs.size();
  return f;
}

/// Effective tail rates (sqrt of lambda_bar); plain sqrt(lambda) without coupling.
inline std::pair<double, double> predicted_decay_rates(double lambda1, double lambda2, const NonlinearitySpec &nl) {
  if (nl.coupling_terms().empty())
    return {std::sqrt(lambda1), std::sqrt(lambda2)};
  const auto [b1, b2] = lambda_bar(lambda1, lambda2, nl);
  return {std::sqrt(b1), std::sqrt(b2)};
}

/// Tail slopes of a converged pair compared with -sqrt(lambda_bar).
inline VerificationReport check_decay(const SolveResult &res, const NonlinearitySpec &nl, DecayWindow window,
                                      double rel_tol = 0.1) {
  VerificationReport r;
  if (!(res.lambda1 > 0.0) || !(res.lambda2 > 0.0)) {
    r.add("decay", false, std::numeric_limits<double>::quiet_NaN(), 0.0, rel_tol,
          "needs two components with positive multipliers");
    return r;
  }
  const auto [k1, k2] = predicted_decay_rates(res.lambda1, res.lambda2, nl);
  const std::array<const Field *, 2> u{&res.u1, &res.u2};
  const std::array<double, 2> k{k1, k2};
  for (std::size_t c = 0; c < 2; ++c) {
    const std::string name = "decay_u" + std::to_string(c + 1);
    try {
      const DecayFit f = fit_decay(*u[c], window, k[c]);
      const double err = std::fabs(-f.slope - k[c]) / k[c];
      r.add(name, err <= rel_tol && f.trusted(), f.slope, -k[c], rel_tol,
            "relative error " + format_double(err) + ", r^2 " + format_double(f.r_squared));
    } catch (const DomainError &e) {
      r.add(name, false, std::numeric_limits<double>::quiet_NaN(), -k[c], rel_tol, e.what());
    }
  }
  return r;
}

/// R rounded to the nearest multiple of the grid spacing.
inline double grid_aligned(double R, const Grid &g) { return std::round(R / g.spacing()) * g.spacing(); }

/// The ladder {4, 6, ..., 14} / sqrt(lambda_min), grid aligned.
inline std::vector<double> default_ladder(double lambda_min, const Grid &g) {
  std::vector<double> out;
  for (double r : {4.0, 6.0, 8.0, 10.0, 12.0, 14.0})
    out.push_back(grid_aligned(r / std::sqrt(lambda_min), g));
  return out;
}

/// int u(x) w(x - R e1) dx.
inline double overlap_sigma(const Field &u, const Field &w, double R) {
  u.check_same(w);
  return inner(u, translate(w, along_first_axis(R)));
}

/// Fitted slope of log sigma_R against R over the ladder, compared with -sqrt(lambda).
inline VerificationReport check_overlap_decay(const Field &u, const Field &w, double lambda,
                                              const std::vector<double> &ladder, double rel_tol = 0.1) {
  VerificationReport r;
  Series s{"overlap_sigma", {}};
  std::vector<double> xs, ys;
  for (double R : ladder) {
    const double sig = overlap_sigma(u, w, R);
    s.points.emplace_back(R, sig);
    if (sig > 0.0) {
      xs.push_back(R);
      ys.push_back(std::log(sig));
    }
  }
  r.series.push_back(s);
  const double k = std::sqrt(lambda);
  if (xs.size() < 2 || !(lambda > 0.0)) {
    r.add("overlap_decay", false, std::numeric_limits<double>::quiet_NaN(), -k, rel_tol,
          "fewer than two positive overlaps");
    return r;
  }
  const LineFit f = least_squares(xs, ys);
  const double err = std::fabs(-f.slope - k) / k;
  r.add("overlap_decay", err <= rel_tol, f.slope, -k, rel_tol, "relative error " + format_double(err));
  return r;
}

struct GluedTrial {
  Field phi1;
  Field phi2;
  EnergyBreakdown energy;
  std::array<double, 2> tau{1.0, 1.0};
  std::array<double, 2> sigma{0.0, 0.0};
};

/// tau_i (u_i + w_i(. - R e1)) with tau_i^2 = (b+c)/(b+c+2 sigma_i), so the
/// glued masses are b_i + c_i. Energy uses the potentials of `problem_a`.
inline GluedTrial glue_trial(const SolveResult &a, const SolveResult &b, double R, const DiscreteProblem &problem_a) {
  const std::array<const Field *, 2> u{&a.u1, &a.u2};
  const std::array<const Field *, 2> w{&b.u1, &b.u2};
  std::array<std::optional<Field>, 2> phi;
  GluedTrial out{Field(a.u1.grid()), Field(a.u1.grid()), {}, {1.0, 1.0}, {0.0, 0.0}};
  for (std::size_t c = 0; c < 2; ++c) {
    const Field shifted = translate(*w[c], along_first_axis(R));
    const double sig = inner(*u[c], shifted);
    const double total = mass(*u[c]) + mass(*w[c]);
    const double tau = (sig == 0.0 || total == 0.0) ? 1.0 : std::sqrt(total / (total + 2.0 * sig));
    out.sigma[c] = sig;
    out.tau[c] = tau;
    phi[c] = tau * (*u[c] + shifted);
  }
  out.phi1 = std::move(*phi[0]);
  out.phi2 = std::move(*phi[1]);
  out.energy = energy(out.phi1, out.phi2, problem_a);
  return out;
}

inline GluedTrial glue_trial(const SolveResult &a, const SolveResult &b, double R, const ProblemSpec &problem_a) {
  return glue_trial(a, b, R, DiscreteProblem(problem_a, a.u1.grid()));
}

/// Passes iff some R gives J[glued] < J[a] + I[b] - threshold.
inline VerificationReport check_binding(const SolveResult &a, const SolveResult &b, const std::vector<double> &ladder,
                                        const ProblemSpec &problem_a, double threshold = 1e-10) {
  VerificationReport r;
  if (b.u1.is_zero() && b.u2.is_zero()) {
    r.add("binding", false, 0.0, threshold, 0.0, "vacuous input: second minimizer is zero");
    return r;
  }
  auto positive_or_absent = [](double lambda, const Field &u) { return u.is_zero() || lambda > 0.0; };
  if (!a.converged || !b.converged || !positive_or_absent(a.lambda1, a.u1) ||
      !positive_or_absent(a.lambda2, a.u2) || !positive_or_absent(b.lambda1, b.u1) ||
      !positive_or_absent(b.lambda2, b.u2)) {
    r.add("binding", false, std::numeric_limits<double>::quiet_NaN(), threshold, 0.0,
          "inputs must be converged minimizers with positive multipliers");
    return r;
  }
  const DiscreteProblem dp(problem_a, a.u1.grid());
  const double reference = a.energy.total_J + b.energy.total_I;
  Series s{"binding_gap", {}};
  double best_gap = -std::numeric_limits<double>::infinity();
  double best_R = std::numeric_limits<double>::quiet_NaN();
  for (double R : ladder) {
    const GluedTrial t = glue_trial(a, b, R, dp);
    const double gap = reference - t.energy.total_J;
    s.points.emplace_back(R, gap);
    if (gap > best_gap) {
      best_gap = gap;
      best_R = R;
    }
  }
  r.series.push_back(s);
  r.add("binding", best_gap > threshold, best_gap, threshold, 0.0, "largest gap at R = " + format_double(best_R));
  return r;
}

// Empirical constants for pointwise inequalities of the form
//   deficit(x) <= C * weight(x)   (up to roundoff scale),
// certified on an 80/20 train/holdout split with a relative margin.

inline std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

struct InequalitySample {
  double deficit;
  double weight;
  double scale;
};

struct Certificate {
  double train_constant = 0.0;
  double certified = 0.0;
  double holdout_required = 0.0;
  int holdout_violations = 0;
  std::size_t train_size = 0;
  std::size_t holdout_size = 0;
};

namespace detail {

inline constexpr double roundoff_rel = 1e-12;

inline double required_constant(const InequalitySample &s) {
  const double slack = roundoff_rel * s.scale;
  if (s.deficit <= slack)
    return 0.0;
  if (s.weight > 0.0)
    return (s.deficit - slack) / s.weight;
  return std::numeric_limits<double>::infinity();
}

/// Portable uniform in [0, 1).
inline double unit(std::mt19937_64 &rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double log_uniform(std::mt19937_64 &rng, double lo, double hi) {
  return std::exp(std::log(lo) + unit(rng) * (std::log(hi) - std::log(lo)));
}

} // namespace detail

inline Certificate certify(const std::vector<InequalitySample> &samples, double margin = 0.05) {
  Certificate c;
  c.train_size = samples.size() * 4 / 5;
  c.holdout_size = samples.size() - c.train_size;
  for (std::size_t i = 0; i < c.train_size; ++i)
    c.train_constant = std::max(c.train_constant, detail::required_constant(samples[i]));
  c.certified = (1.0 + margin) * c.train_constant;
  for (std::size_t i = c.train_size; i < samples.size(); ++i) {
    const InequalitySample &s = samples[i];
    c.holdout_required = std::max(c.holdout_required, detail::required_constant(s));
    if (s.deficit - c.certified * s.weight > detail::roundoff_rel * s.scale)
      ++c.holdout_violations;
  }
  return c;
}

inline void add_certificate(VerificationReport &r, const std::string &name, const Certificate &c, double margin) {
  r.add(name + "_constant", std::isfinite(c.train_constant), c.train_constant, c.certified, margin,
        "training samples " + std::to_string(c.train_size));
  r.add(name + "_holdout", c.holdout_violations == 0 && c.holdout_required <= c.certified,
        static_cast<double>(c.holdout_violations), 0.0, 0.0,
        "largest holdout requirement " + format_double(c.holdout_required) + " of " +
            std::to_string(c.holdout_size));
}

inline constexpr std::uint64_t inequality_seed = 0x5eed1e55u;

/// (a+b)^p >= a^p + b^p + p a^{p-1} b + p a b^{p-1} - C_p a^{p/2} b^{p/2} on (0, 10]^2.
inline std::vector<InequalitySample> bahri_li_samples(double p, int count, std::uint64_t seed = inequality_seed) {
  std::mt19937_64 rng(seed);
  std::vector<InequalitySample> out;
  for (int i = 0; i < count; ++i) {
    const double a = detail::log_uniform(rng, 1e-4, 10.0);
    const double b = detail::log_uniform(rng, 1e-4, 10.0);
    const double lhs = std::pow(a + b, p);
    const double rhs = std::pow(a, p) + std::pow(b, p) + p * std::pow(a, p - 1) * b + p * a * std::pow(b, p - 1);
    out.push_back({rhs - lhs, std::pow(a * b, 0.5 * p), lhs + rhs});
  }
  return out;
}

inline VerificationReport check_bahri_li(double p, int sample_count = 5000, double margin = 0.05) {
  if (!(p > 2.0))
    throw DomainError("the splitting inequality needs p > 2");
  VerificationReport r;
  add_certificate(r, "bahri_li_p" + short_number(p), certify(bahri_li_samples(p, sample_count), margin), margin);
  return r;
}

/// (1+x)^g1 (1+y)^g2 >= 1 + x^g1 y^g2 + g1 x + g2 y - C (x^{g1-1-eta} y^g2 + x^g1 y^{g2-1-eta}).
inline std::vector<InequalitySample> interaction_samples(double g1, double g2, double eta, int count,
                                                         std::uint64_t seed = inequality_seed, double lo = 1e-4,
                                                         double hi = 100.0) {
  std::mt19937_64 rng(seed);
  std::vector<InequalitySample> out;
  for (int i = 0; i < count; ++i) {
    const double x = detail::log_uniform(rng, lo, hi);
    const double y = detail::log_uniform(rng, lo, hi);
    const double lhs = std::pow(1 + x, g1) * std::pow(1 + y, g2);
    const double rhs = 1 + std::pow(x, g1) * std::pow(y, g2) + g1 * x + g2 * y;
    const double w = std::pow(x, g1 - 1 - eta) * std::pow(y, g2) + std::pow(x, g1) * std::pow(y, g2 - 1 - eta);
    out.push_back({rhs - lhs, w, lhs + rhs});
  }
  return out;
}

inline void check_interaction_parameters(double g1, double g2, double eta) {
  if (!(g1 > 1.0) || !(g2 > 1.0))
    throw DomainError("interaction inequality needs gamma1, gamma2 > 1");
  if (!(eta > 0.0) || !(eta < std::min(g1, g2) - 1.0))
    throw DomainError("interaction inequality needs 0 < eta < min(gamma1, gamma2) - 1");
}

inline VerificationReport check_interaction(double g1, double g2, double eta, int sample_count = 5000,
                                            double margin = 0.05) {
  check_interaction_parameters(g1, g2, eta);
  VerificationReport r;
  const std::string name = "interaction_g" + short_number(g1) + "_" + short_number(g2) + "_eta" + short_number(eta);
  add_certificate(r, name, certify(interaction_samples(g1, g2, eta, sample_count), margin), margin);
  return r;
}

/// G(s,t) <= C_eps (s^2+t^2) + eps (s^k + t^k), k = 2+4/N, on [0, s_max]^2.
inline std::vector<InequalitySample> young_samples(const NonlinearitySpec &nl, double eps, int count,
                                                   double s_max = 10.0, std::uint64_t seed = inequality_seed) {
  std::mt19937_64 rng(seed);
  const double k = nl.critical_exponent();
  std::vector<InequalitySample> out;
  for (int i = 0; i < count; ++i) {
    double s = detail::log_uniform(rng, 1e-4, s_max);
    double t = detail::log_uniform(rng, 1e-4, s_max);
    if (i % 8 == 1)
      s = 0.0;
    else if (i % 8 == 2)
      t = 0.0;
    const double gval = G_unchecked(s, t, nl);
    const double split = eps * (std::pow(s, k) + std::pow(t, k));
    const double q = s * s + t * t;
    out.push_back({gval - split, q, gval + split + q});
  }
  return out;
}

inline VerificationReport check_young_splitting(const NonlinearitySpec &nl, const std::vector<double> &eps_list,
                                                int sample_count = 5000, double s_max = 10.0,
                                                double margin = 0.05) {
  VerificationReport r;
  for (double eps : eps_list) {
    if (!(eps > 0.0))
      throw DomainError("Young splitting needs eps > 0");
    add_certificate(r, "young_eps" + short_number(eps), certify(young_samples(nl, eps, sample_count, s_max), margin),
                    margin);
  }
  return r;
}

/// Constants of the lower bound J >= (sigma/2) K - C_total (a1 + a2).
struct CoercivityConstants {
  double sigma = 0.0;     // (1 - max sigma_i) / 2
  double gn = 0.0;        // discrete Gagliardo-Nirenberg constant
  double eps = 0.0;       // Young splitting parameter
  double young = 0.0;     // certified C_eps on [0, s_max]^2
  double tau_max = 0.0;
  double c_total = 0.0;
  double s_max = 10.0;
};

inline CoercivityConstants coercivity_constants(const ProblemSpec &problem, double gn_constant, double s_max = 10.0) {
  CoercivityConstants k;
  const double sig_max = std::max(problem.potentials[0].vh1_sigma, problem.potentials[1].vh1_sigma);
  k.sigma = 0.5 * (1.0 - sig_max);
  k.gn = gn_constant;
  k.tau_max = std::max(problem.potentials[0].vh1_tau, problem.potentials[1].vh1_tau);
  k.s_max = s_max;
  const int n = problem.nonlinearity.dimension();
  const double a_max = std::max({problem.masses[0], problem.masses[1], 1e-300});
  k.eps = 0.9 * k.sigma / (2.0 * gn_constant * std::pow(a_max, 2.0 / n));
  k.young = 1.05 * young_constant(problem.nonlinearity, k.eps, s_max);
  k.c_total = k.young + 0.5 * k.tau_max;
  return k;
}

struct SweepEnergy {
  double a1;
  double a2;
  double energy;
};

/// Random fields at the problem masses must satisfy J >= (sigma/2) K - C (a1+a2);
/// every supplied sweep energy must satisfy J >= -C (a1+a2) with its own constants.
inline VerificationReport check_coercivity(const ProblemSpec &problem, const Grid &grid, int trials = 500,
                                           const std::vector<SweepEnergy> &sweep = {},
                                           std::uint64_t seed = 0xc0e4c1u) {
  VerificationReport r;
  const double gn = gagliardo_nirenberg_constant(grid);
  const CoercivityConstants k = coercivity_constants(problem, gn);
  const DiscreteProblem dp(problem, grid);
  const double a1 = problem.masses[0];
  const double a2 = problem.masses[1];
  const double floor = -k.c_total * (a1 + a2);

  std::mt19937_64 rng(seed);
  double worst_margin = std::numeric_limits<double>::infinity();
  double lowest = std::numeric_limits<double>::infinity();
  int out_of_domain = 0;
  const double wlo = 2.0 * grid.spacing();
  const double whi = 0.25 * grid.half_width();
  for (int t = 0; t < trials; ++t) {
    RandomFieldParams params;
    params.bumps = 1 + static_cast<int>(rng() % 3);
    params.center_spread = 0.25 * grid.half_width();
    const double w = detail::log_uniform(rng, wlo, whi);
    params.min_width = w;
    params.max_width = 2.0 * w;
    Field u1 = a1 > 0.0 ? with_mass(random_smooth_field(grid, rng, params), a1) : Field(grid);
    Field u2 = a2 > 0.0 ? with_mass(random_smooth_field(grid, rng, params), a2) : Field(grid);
    if (std::max(max_abs(u1), max_abs(u2)) > k.s_max) {
      ++out_of_domain;
      continue;
    }
    const EnergyBreakdown e = energy(u1, u2, dp);
    const double bound = 0.5 * k.sigma * (e.kinetic1 + e.kinetic2) + floor;
    worst_margin = std::min(worst_margin, e.total_J - bound);
    lowest = std::min(lowest, e.total_J);
  }
  const std::string note = "sigma " + format_double(k.sigma) + ", eps " + format_double(k.eps) + ", C_GN " +
                           format_double(k.gn) + ", C_total " + format_double(k.c_total) + ", skipped " +
                           std::to_string(out_of_domain) + " fields above s_max";
  r.add("coercivity_random", worst_margin >= 0.0, worst_margin, 0.0, 0.0, note);
  r.add("coercivity_floor", lowest >= floor, lowest, floor, 0.0, "lowest random-field energy");
  if (!sweep.empty()) {
    double worst = std::numeric_limits<double>::infinity();
    for (const SweepEnergy &s : sweep) {
      const CoercivityConstants ks = coercivity_constants(problem.with_masses(s.a1, s.a2), gn);
      worst = std::min(worst, s.energy + ks.c_total * (s.a1 + s.a2));
    }
    r.add("coercivity_sweep", worst >= 0.0, worst, 0.0, 0.0, "min over sweep of J + C_total (a1+a2)");
  }
  return r;
}

} // namespace normsol

#endif
