#ifndef NORMSOL_MODEL_HPP
#define NORMSOL_MODEL_HPP

// Problem data: the polynomial nonlinearity G, the trapping potentials and
// the admissibility checks that gate every solve.

#include "normsol/errors.hpp"
#include "normsol/grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace normsol {

/// Self-interaction term (coef/exponent) |s|^exponent.
struct PowerTerm {
  double coef;
  double exponent;
};

/// Coupling term coef |s|^r1 |t|^r2.
struct CouplingTerm {
  double coef;
  double r1;
  double r2;
};

/// G(s,t) = sum mu_i/p_i s^p_i + sum nu_j/q_j t^q_j + sum beta_k s^r1k t^r2k.
///
/// Term lists are sorted at construction so that the smallest exponent comes
/// first (coupling terms by (r1, r2)); the decay analysis reads the leading
/// entries. Construction only rejects non-positive coefficients; the exponent
/// range is an admissibility question answered by validate_spec.
class NonlinearitySpec {
public:
  NonlinearitySpec() = default;
  NonlinearitySpec(std::vector<PowerTerm> mu_terms, std::vector<PowerTerm> nu_terms,
                   std::vector<CouplingTerm> coupling_terms, int dimension)
      : mu_(std::move(mu_terms)), nu_(std::move(nu_terms)), coupling_(std::move(coupling_terms)),
        dimension_(dimension) {
    if (dimension < 1)
      throw DomainError("nonlinearity dimension must be positive");
    for (const auto &t : mu_)
      if (!(t.coef > 0.0))
        throw DomainError("mu coefficients must be positive");
    for (const auto &t : nu_)
      if (!(t.coef > 0.0))
        throw DomainError("nu coefficients must be positive");
    for (const auto &t : coupling_)
      if (!(t.coef > 0.0))
        throw DomainError("coupling coefficients must be positive");
    auto by_exp = [](const PowerTerm &a, const PowerTerm &b) { return a.exponent < b.exponent; };
    std::stable_sort(mu_.begin(), mu_.end(), by_exp);
    std::stable_sort(nu_.begin(), nu_.end(), by_exp);
    std::stable_sort(coupling_.begin(), coupling_.end(), [](const CouplingTerm &a, const CouplingTerm &b) {
      return a.r1 != b.r1 ? a.r1 < b.r1 : a.r2 < b.r2;
    });
  }

  const std::vector<PowerTerm> &mu_terms() const noexcept { return mu_; }
  const std::vector<PowerTerm> &nu_terms() const noexcept { return nu_; }
  const std::vector<CouplingTerm> &coupling_terms() const noexcept { return coupling_; }
  int dimension() const noexcept { return dimension_; }

  /// Mass-critical exponent 2 + 4/N.
  double critical_exponent() const noexcept { return 2.0 + 4.0 / dimension_; }

private:
  std::vector<PowerTerm> mu_;
  std::vector<PowerTerm> nu_;
  std::vector<CouplingTerm> coupling_;
  int dimension_ = 1;
};

inline void check_nonnegative(double s, double t) {
  if (!(s >= 0.0) || !(t >= 0.0))
    throw DomainError("G is defined on the nonnegative quadrant");
}

/// Evaluates G without the domain check (callers pass |u|).
inline double G_unchecked(double s, double t, const NonlinearitySpec &spec) noexcept {
  double g = 0.0;
  for (const auto &m : spec.mu_terms())
    g += m.coef / m.exponent * std::pow(s, m.exponent);
  for (const auto &n : spec.nu_terms())
    g += n.coef / n.exponent * std::pow(t, n.exponent);
  for (const auto &c : spec.coupling_terms())
    g += c.coef * std::pow(s, c.r1) * std::pow(t, c.r2);
  return g;
}

inline std::pair<double, double> dG_unchecked(double s, double t, const NonlinearitySpec &spec) noexcept {
  double d1 = 0.0;
  double d2 = 0.0;
  for (const auto &m : spec.mu_terms())
    d1 += m.coef * std::pow(s, m.exponent - 1.0);
  for (const auto &n : spec.nu_terms())
    d2 += n.coef * std::pow(t, n.exponent - 1.0);
  for (const auto &c : spec.coupling_terms()) {
    d1 += c.coef * c.r1 * std::pow(s, c.r1 - 1.0) * std::pow(t, c.r2);
    d2 += c.coef * c.r2 * std::pow(s, c.r1) * std::pow(t, c.r2 - 1.0);
  }
  return {d1, d2};
}

inline double eval_G(double s, double t, const NonlinearitySpec &spec) {
  check_nonnegative(s, t);
  return G_unchecked(s, t, spec);
}

/// Partial derivatives (d/ds G, d/dt G).
inline std::pair<double, double> eval_dG(double s, double t, const NonlinearitySpec &spec) {
  check_nonnegative(s, t);
  return dG_unchecked(s, t, spec);
}

/// Effective tail frequencies built from the leading coupling exponents:
///   bar1 = min{l1, r2^2/(2-r1)_+^2 l2},  bar2 = min{l2, r1^2/(2-r2)_+^2 l1},
/// with a vanishing (2-r)_+ meaning the cross ratio is infinite.
inline std::pair<double, double> lambda_bar(double lambda1, double lambda2, const NonlinearitySpec &spec) {
  if (!(lambda1 > 0.0) || !(lambda2 > 0.0))
    throw DomainError("lambda_bar needs positive multipliers");
  if (spec.coupling_terms().empty())
    throw DomainError("lambda_bar needs at least one coupling term");
  const double r1 = spec.coupling_terms().front().r1;
  const double r2 = spec.coupling_terms().front().r2;
  auto cross = [](double num, double r, double other) {
    const double gap = std::max(0.0, 2.0 - r);
    if (gap == 0.0)
      return std::numeric_limits<double>::infinity();
    return num * num / (gap * gap) * other;
  };
  return {std::min(lambda1, cross(r2, r1, lambda2)), std::min(lambda2, cross(r1, r2, lambda1))};
}

// ---------------------------------------------------------------------------
// Potentials

enum class PotentialKind { zero, gaussian_well, power_coulomb, tabulated };

inline const char *to_string(PotentialKind k) {
  switch (k) {
  case PotentialKind::zero:
    return "zero";
  case PotentialKind::gaussian_well:
    return "gaussian_well";
  case PotentialKind::power_coulomb:
    return "power_coulomb";
  case PotentialKind::tabulated:
    return "tabulated";
  }
  return "unknown";
}

/// A nonpositive potential vanishing at infinity together with the constants
/// (sigma, tau) claimed for the form bound  int(-V)u^2 <= sigma|grad u|^2 + tau|u|^2.
struct PotentialSpec {
  PotentialKind kind = PotentialKind::zero;
  double depth = 0.0;    // gaussian_well: V0
  double width = 1.0;    // gaussian_well: w
  double strength = 0.0; // power_coulomb: kappa
  double exponent = 1.0; // power_coulomb: s
  std::shared_ptr<const Field> table;
  double vh1_sigma = 0.0;
  double vh1_tau = 0.0;

  static PotentialSpec zero() { return {}; }

  static PotentialSpec gaussian_well(double depth, double width) {
    PotentialSpec p;
    p.kind = PotentialKind::gaussian_well;
    p.depth = depth;
    p.width = width;
    p.vh1_sigma = 0.0;
    p.vh1_tau = depth;
    return p;
  }

  static PotentialSpec power_coulomb(double strength, double exponent, double sigma, double tau) {
    PotentialSpec p;
    p.kind = PotentialKind::power_coulomb;
    p.strength = strength;
    p.exponent = exponent;
    p.vh1_sigma = sigma;
    p.vh1_tau = tau;
    return p;
  }

  static PotentialSpec tabulated(Field samples, double sigma, double tau) {
    PotentialSpec p;
    p.kind = PotentialKind::tabulated;
    p.table = std::make_shared<const Field>(std::move(samples));
    p.vh1_sigma = sigma;
    p.vh1_tau = tau;
    return p;
  }

  bool is_zero() const noexcept { return kind == PotentialKind::zero; }
};

/// V(x). Coulomb-type cores are capped at |x| >= h/2; tabulated potentials
/// return the nearest stored sample.
inline double eval_potential(const Point &x, const PotentialSpec &p, double spacing) {
  switch (p.kind) {
  case PotentialKind::zero:
    return 0.0;
  case PotentialKind::gaussian_well: {
    const double r = norm(x);
    return -p.depth * std::exp(-r * r / (p.width * p.width));
  }
  case PotentialKind::power_coulomb: {
    const double r = std::max(norm(x), 0.5 * spacing);
    return -p.strength / std::pow(r, p.exponent);
  }
  case PotentialKind::tabulated: {
    if (!p.table)
      throw ConfigError("tabulated potential without samples");
    const Grid &g = p.table->grid();
    std::size_t flat = 0;
    for (int a = 0; a < g.dimension(); ++a) {
      long k = std::lround((x[static_cast<std::size_t>(a)] + g.half_width()) / g.spacing());
      k = std::clamp(k, 0L, static_cast<long>(g.points() - 1));
      flat = flat * static_cast<std::size_t>(g.points()) + static_cast<std::size_t>(k);
    }
    return (*p.table)[flat];
  }
  }
  throw ConfigError("unknown potential kind");
}

/// Samples V on a grid.
inline Field sample_potential(const Grid &g, const PotentialSpec &p) {
  if (p.kind == PotentialKind::tabulated) {
    if (!p.table)
      throw ConfigError("tabulated potential without samples");
    if (!(p.table->grid() == g))
      throw ConfigError("tabulated potential lives on a different grid");
    return *p.table;
  }
  const double h = g.spacing();
  return sample(g, [&](const Point &x) { return eval_potential(x, p, h); });
}

struct ProblemSpec {
  NonlinearitySpec nonlinearity;
  std::array<PotentialSpec, 2> potentials;
  std::array<double, 2> masses{0.0, 0.0};

  bool potential_free() const noexcept { return potentials[0].is_zero() && potentials[1].is_zero(); }

  /// Same problem with both potentials switched off.
  ProblemSpec without_potentials() const {
    ProblemSpec p = *this;
    p.potentials = {PotentialSpec::zero(), PotentialSpec::zero()};
    return p;
  }

  ProblemSpec with_masses(double a1, double a2) const {
    ProblemSpec p = *this;
    p.masses = {a1, a2};
    return p;
  }
};

// ---------------------------------------------------------------------------
// Admissibility

struct AdmissibilityReport {
  bool range_ok = true;
  bool ordering_ok = true;
  bool high_dim_ok = true;
  std::array<bool, 2> vh1_ok{true, true};
  std::array<double, 2> vh1_observed_sigma{0.0, 0.0};
  bool radial_ok = true;
  bool masses_ok = true;
  std::vector<std::string> messages;

  /// Everything the solver needs; radial_ok only matters for the radial pipeline.
  bool admissible() const noexcept {
    return range_ok && ordering_ok && high_dim_ok && vh1_ok[0] && vh1_ok[1] && masses_ok;
  }
};

/// In dimensions N >= 5 the leading exponents must satisfy p1, q1 <= 2 + 2/(N-2).
inline bool high_dimension_condition(double p1, double q1, int dimension) {
  if (dimension <= 4)
    return true;
  const double cap = 2.0 + 2.0 / (dimension - 2);
  return p1 <= cap && q1 <= cap;
}

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

/// Largest observed (int(-V)u^2 - tau|u|^2)/|grad u|^2 over random trial fields.
inline double observed_vh1_sigma(const Grid &g, const Field &v, double tau, int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double spread = 0.25 * g.half_width();
  std::uniform_real_distribution<double> wlog(std::log(2.0 * g.spacing()), std::log(0.25 * g.half_width()));
  std::uniform_int_distribution<int> nb(1, 3);
  double worst = -std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < trials; ++trial) {
    RandomFieldParams params;
    params.bumps = nb(rng);
    params.center_spread = trial % 2 == 0 ? spread : 0.1 * spread;
    const double w = std::exp(wlog(rng));
    params.min_width = w;
    params.max_width = 2.0 * w;
    const Field u = random_smooth_field(g, rng, params);
    const double kinetic = grad_norm_sq(u);
    if (!(kinetic > 0.0))
      continue;
    double pot = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
      pot += -v[i] * u[i] * u[i];
    pot *= g.cell_volume();
    worst = std::max(worst, (pot - tau * mass(u)) / kinetic);
  }
  return std::max(0.0, worst);
}

inline bool radial_nondecreasing(const Grid &g, const Field &v) {
  std::vector<std::pair<double, double>> rv;
  rv.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    rv.emplace_back(norm(g.point(i)), v[i]);
  std::sort(rv.begin(), rv.end());
  const double scale = std::max(1.0, max_abs(v));
  const double tol = 1e-12 * scale;
  for (std::size_t i = 1; i < rv.size(); ++i) {
    const bool same_radius = std::fabs(rv[i].first - rv[i - 1].first) <= 1e-12 * (1.0 + rv[i].first);
    if (same_radius && std::fabs(rv[i].second - rv[i - 1].second) > tol)
      return false;
    if (!same_radius && rv[i].second < rv[i - 1].second - tol)
      return false;
  }
  return true;
}

} // namespace detail

/// Number of randomized trial fields used to certify the potential form bound.
inline constexpr int vh1_trials = 200;

inline AdmissibilityReport validate_spec(const ProblemSpec &problem, const Grid &grid) {
  AdmissibilityReport rep;
  const NonlinearitySpec &nl = problem.nonlinearity;
  const int n = nl.dimension();
  const double crit = nl.critical_exponent();
  auto range_fail = [&](const std::string &what) {
    rep.range_ok = false;
    rep.messages.push_back(what + " lies outside the mass-subcritical parameter range (2, " + detail::fmt(crit) +
                           ")");
  };

  if (nl.mu_terms().empty() && nl.nu_terms().empty() && nl.coupling_terms().empty()) {
    rep.range_ok = false;
    rep.messages.push_back("nonlinearity has no terms");
  }
  for (std::size_t i = 0; i < nl.mu_terms().size(); ++i) {
    const double p = nl.mu_terms()[i].exponent;
    if (!(p > 2.0 && p < crit))
      range_fail("mu_terms[" + std::to_string(i) + "].exponent = " + detail::fmt(p));
  }
  for (std::size_t j = 0; j < nl.nu_terms().size(); ++j) {
    const double q = nl.nu_terms()[j].exponent;
    if (!(q > 2.0 && q < crit))
      range_fail("nu_terms[" + std::to_string(j) + "].exponent = " + detail::fmt(q));
  }
  for (std::size_t k = 0; k < nl.coupling_terms().size(); ++k) {
    const auto &c = nl.coupling_terms()[k];
    if (!(c.r1 > 1.0 && c.r2 > 1.0)) {
      rep.range_ok = false;
      rep.messages.push_back("coupling_terms[" + std::to_string(k) + "] needs r1, r2 > 1");
    }
    const double sum = c.r1 + c.r2;
    if (!(sum > 2.0 && sum < crit))
      range_fail("coupling_terms[" + std::to_string(k) + "] r1 + r2 = " + detail::fmt(sum));
  }

  // Sorted at construction; this guards specs assembled by other means.
  const auto &mu = nl.mu_terms();
  const auto &nu = nl.nu_terms();
  const auto &cp = nl.coupling_terms();
  for (std::size_t i = 1; i < mu.size(); ++i)
    rep.ordering_ok = rep.ordering_ok && mu[0].exponent <= mu[i].exponent;
  for (std::size_t j = 1; j < nu.size(); ++j)
    rep.ordering_ok = rep.ordering_ok && nu[0].exponent <= nu[j].exponent;
  for (std::size_t k = 1; k < cp.size(); ++k)
    rep.ordering_ok = rep.ordering_ok && cp[0].r1 <= cp[k].r1 && cp[0].r2 <= cp[k].r2;
  if (!rep.ordering_ok)
    rep.messages.push_back("leading coupling term must carry the smallest r1 and r2");

  const double p1 = mu.empty() ? 2.0 : mu[0].exponent;
  const double q1 = nu.empty() ? 2.0 : nu[0].exponent;
  rep.high_dim_ok = high_dimension_condition(p1, q1, n);
  if (!rep.high_dim_ok)
    rep.messages.push_back("dimension >= 5 requires p1, q1 <= 2 + 2/(N-2)");

  if (grid.dimension() != n) {
    rep.range_ok = false;
    rep.messages.push_back("grid dimension differs from the nonlinearity dimension");
  }

  for (int c = 0; c < 2; ++c) {
    const PotentialSpec &p = problem.potentials[static_cast<std::size_t>(c)];
    const std::string tag = "potentials[" + std::to_string(c) + "]";
    bool ok = p.vh1_sigma >= 0.0 && p.vh1_sigma < 1.0 && p.vh1_tau >= 0.0;
    if (!ok)
      rep.messages.push_back(tag + ": need vh1_sigma in [0,1) and vh1_tau >= 0");
    if (p.kind == PotentialKind::gaussian_well && !(p.depth > 0.0 && p.width > 0.0)) {
      ok = false;
      rep.messages.push_back(tag + ": gaussian well needs positive depth and width");
    }
    if (p.kind == PotentialKind::power_coulomb) {
      if (!(p.strength > 0.0) || !(p.exponent > 0.0 && p.exponent <= 2.0)) {
        ok = false;
        rep.messages.push_back(tag + ": power potential needs kappa > 0 and s in (0, 2]");
      }
      if (p.exponent == 2.0 && (n < 3 || !(p.strength < (n - 2.0) * (n - 2.0) / 4.0))) {
        ok = false;
        rep.messages.push_back(tag + ": inverse-square potential needs N >= 3 and kappa < (N-2)^2/4");
      }
    }
    Field v(grid);
    try {
      v = sample_potential(grid, p);
    } catch (const std::exception &e) {
      rep.vh1_ok[static_cast<std::size_t>(c)] = false;
      rep.messages.push_back(tag + ": " + e.what());
      continue;
    }
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] > 0.0 || !std::isfinite(v[i])) {
        ok = false;
        rep.messages.push_back(tag + ": potential must be finite and nonpositive");
        break;
      }
    if (!p.is_zero()) {
      const double sigma = detail::observed_vh1_sigma(grid, v, p.vh1_tau, vh1_trials, 0x5eed0000u + c);
      rep.vh1_observed_sigma[static_cast<std::size_t>(c)] = sigma;
      if (sigma > p.vh1_sigma + 1e-12) {
        ok = false;
        rep.messages.push_back(tag + ": observed form-bound sigma " + detail::fmt(sigma) + " exceeds vh1_sigma " +
                               detail::fmt(p.vh1_sigma));
      }
      if (!detail::radial_nondecreasing(grid, v))
        rep.radial_ok = false;
    }
    rep.vh1_ok[static_cast<std::size_t>(c)] = ok;
  }

  if (!(problem.masses[0] >= 0.0 && problem.masses[1] >= 0.0)) {
    rep.masses_ok = false;
    rep.messages.push_back("masses must be nonnegative");
  } else if (problem.masses[0] == 0.0 && problem.masses[1] == 0.0) {
    rep.masses_ok = false;
    rep.messages.push_back("masses (0, 0) admit no ground state");
  }
  return rep;
}

/// Smallest C with G(s,t) <= C (s^2+t^2) + eps (s^{2+4/N} + t^{2+4/N}) observed
/// on a (samples x samples) grid over [0, s_max]^2 refined near the origin.
inline double young_constant(const NonlinearitySpec &spec, double eps, double s_max = 10.0, int samples = 400) {
  const double crit = spec.critical_exponent();
  double c = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double fs = static_cast<double>(i) / samples;
    const double s = s_max * fs * fs;
    for (int j = 0; j <= samples; ++j) {
      const double ft = static_cast<double>(j) / samples;
      const double t = s_max * ft * ft;
      const double q = s * s + t * t;
      if (q == 0.0)
        continue;
      const double excess = G_unchecked(s, t, spec) - eps * (std::pow(s, crit) + std::pow(t, crit));
      c = std::max(c, excess / q);
    }
  }
  return c;
}

} // namespace normsol

#endif
