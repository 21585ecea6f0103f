#ifndef NORMSOL_GRID_HPP
#define NORMSOL_GRID_HPP

#include "normsol/errors.hpp"
#include "normsol/fft.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace normsol {

enum class Boundary { periodic_spectral, dirichlet_fd };

inline const char *to_string(Boundary b) {
  return b == Boundary::periodic_spectral ? "periodic_spectral" : "dirichlet_fd";
}

/// A point of R^N padded with zeros up to three coordinates.
using Point = std::array<double, 3>;

inline double norm(const Point &x) { return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); }

/// Uniform box [-L, L)^N with M samples per axis at x_k = -L + k h, h = 2L/M.
///
/// Periodic grids treat the box as a torus and use FFT differentiation.
/// Dirichlet grids treat every sample as an interior unknown with zero ghost
/// values at k = -1 and k = M, and use the second-order (2N+1)-point stencil.
class Grid {
public:
  Grid(int dimension, double half_width, int points, Boundary boundary = Boundary::periodic_spectral)
      : dimension_(dimension), half_width_(half_width), points_(points), boundary_(boundary) {
    if (dimension < 1 || dimension > 3)
      throw DomainError("grid dimension must be 1, 2 or 3, got " + std::to_string(dimension));
    if (!(half_width > 0.0) || !std::isfinite(half_width))
      throw DomainError("grid half width must be positive");
    if (points < 2 || points % 2 != 0)
      throw DomainError("points per axis must be a positive even integer, got " + std::to_string(points));
    if (boundary == Boundary::periodic_spectral && (points & (points - 1)) != 0)
      throw DomainError("periodic grids need a power-of-two point count, got " + std::to_string(points));
  }

  int dimension() const noexcept { return dimension_; }
  double half_width() const noexcept { return half_width_; }
  int points() const noexcept { return points_; }
  Boundary boundary() const noexcept { return boundary_; }
  bool periodic() const noexcept { return boundary_ == Boundary::periodic_spectral; }
  double spacing() const noexcept { return 2.0 * half_width_ / points_; }
  double cell_volume() const noexcept { return std::pow(spacing(), dimension_); }
  double coordinate(int k) const noexcept { return -half_width_ + k * spacing(); }

  std::size_t size() const noexcept { return fft::real_size(dimension_, points_); }

  /// Stride of axis `axis` in the row-major layout (last axis fastest).
  std::size_t stride(int axis) const noexcept {
    return fft::real_size(dimension_ - 1 - axis, points_);
  }

  std::array<int, 3> multi_index(std::size_t flat) const noexcept {
    std::array<int, 3> idx{0, 0, 0};
    for (int a = dimension_ - 1; a >= 0; --a) {
      idx[static_cast<std::size_t>(a)] = static_cast<int>(flat % static_cast<std::size_t>(points_));
      flat /= static_cast<std::size_t>(points_);
    }
    return idx;
  }

  Point point(std::size_t flat) const noexcept {
    const auto idx = multi_index(flat);
    Point x{0.0, 0.0, 0.0};
    for (int a = 0; a < dimension_; ++a)
      x[static_cast<std::size_t>(a)] = coordinate(idx[static_cast<std::size_t>(a)]);
    return x;
  }

  /// Flat index of the sample at the origin (index M/2 on every axis).
  std::size_t center_index() const noexcept {
    std::size_t flat = 0;
    for (int a = 0; a < dimension_; ++a)
      flat = flat * static_cast<std::size_t>(points_) + static_cast<std::size_t>(points_ / 2);
    return flat;
  }

  friend bool operator==(const Grid &, const Grid &) = default;

private:
  int dimension_;
  double half_width_;
  int points_;
  Boundary boundary_;
};

/// Real samples of a function on a grid.
class Field {
public:
  explicit Field(Grid grid) : grid_(grid), values_(grid.size(), 0.0) {}
  Field(Grid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size())
      throw DomainError("field value count does not match the grid");
  }

  const Grid &grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double *data() noexcept { return values_.data(); }
  const double *data() const noexcept { return values_.data(); }
  double &operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  bool is_zero() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
  }

  Field &operator+=(const Field &o) {
    check_same(o);
    for (std::size_t i = 0; i < values_.size(); ++i)
      values_[i] += o.values_[i];
    return *this;
  }
  Field &operator-=(const Field &o) {
    check_same(o);
    for (std::size_t i = 0; i < values_.size(); ++i)
      values_[i] -= o.values_[i];
    return *this;
  }
  Field &operator*=(double c) noexcept {
    for (double &v : values_)
      v *= c;
    return *this;
  }

  friend Field operator+(Field a, const Field &b) { return a += b; }
  friend Field operator-(Field a, const Field &b) { return a -= b; }
  friend Field operator*(double c, Field a) { return a *= c; }
  friend Field operator*(Field a, double c) { return a *= c; }

  void check_same(const Field &o) const {
    if (!(grid_ == o.grid_))
      throw DomainError("fields live on different grids");
  }

private:
  Grid grid_;
  std::vector<double> values_;
};

template <typename F> Field sample(const Grid &grid, F &&f) {
  Field out(grid);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = f(grid.point(i));
  return out;
}

template <typename F> Field map(const Field &u, F &&f) {
  Field out(u.grid());
  for (std::size_t i = 0; i < u.size(); ++i)
    out[i] = f(u[i]);
  return out;
}

inline Field abs(const Field &u) {
  return map(u, [](double v) { return std::fabs(v); });
}

/// Rectangle rule h^N sum(f).
inline double integrate(const Field &f) {
  double s = 0.0;
  for (double v : f.values())
    s += v;
  return s * f.grid().cell_volume();
}

inline double inner(const Field &u, const Field &v) {
  u.check_same(v);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    s += u[i] * v[i];
  return s * u.grid().cell_volume();
}

/// L^2 mass, the integral of u^2.
inline double mass(const Field &u) { return inner(u, u); }

inline double l2_norm(const Field &u) { return std::sqrt(mass(u)); }

inline double lp_norm_pow(const Field &u, double p) {
  double s = 0.0;
  for (double v : u.values())
    s += std::pow(std::fabs(v), p);
  return s * u.grid().cell_volume();
}

inline double max_abs(const Field &u) {
  double m = 0.0;
  for (double v : u.values())
    m = std::max(m, std::fabs(v));
  return m;
}

namespace detail {

/// Signed wavenumber of FFT index k on an axis with m samples and period 2L.
inline double wavenumber(int k, int m, double half_width) {
  const int signed_k = k <= m / 2 ? k : k - m;
  return std::numbers::pi * signed_k / half_width;
}

/// Calls f(flat complex index, |xi|^2, r2c multiplicity) over the half spectrum.
template <typename F> void for_each_mode(const Grid &g, F &&f) {
  const int m = g.points();
  const int n = g.dimension();
  const int last = m / 2 + 1;
  const std::size_t total = fft::complex_size(n, m);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    const int k_last = static_cast<int>(rest % static_cast<std::size_t>(last));
    rest /= static_cast<std::size_t>(last);
    const double xl = wavenumber(k_last, m, g.half_width());
    double xi2 = xl * xl;
    for (int a = 0; a < n - 1; ++a) {
      const int k = static_cast<int>(rest % static_cast<std::size_t>(m));
      rest /= static_cast<std::size_t>(m);
      const double x = wavenumber(k, m, g.half_width());
      xi2 += x * x;
    }
    const double mult = (k_last == 0 || k_last == m / 2) ? 1.0 : 2.0;
    f(flat, xi2, mult, k_last);
  }
}

/// Largest |signed index| over axes of a half-spectrum mode.
inline int mode_extent(const Grid &g, std::size_t flat) {
  const int m = g.points();
  const int last = m / 2 + 1;
  int ext = static_cast<int>(flat % static_cast<std::size_t>(last));
  flat /= static_cast<std::size_t>(last);
  for (int a = 0; a < g.dimension() - 1; ++a) {
    int k = static_cast<int>(flat % static_cast<std::size_t>(m));
    flat /= static_cast<std::size_t>(m);
    k = k <= m / 2 ? k : m - k;
    ext = std::max(ext, k);
  }
  return ext;
}

/// Applies a spectral multiplier symbol(|xi|^2) on a periodic grid.
template <typename Symbol> Field spectral_multiply(const Field &u, Symbol &&symbol) {
  const Grid &g = u.grid();
  fft::Buffer<fftw_complex> hat(fft::complex_size(g.dimension(), g.points()));
  fft::forward(g.dimension(), g.points(), u.data(), hat);
  const double norm = 1.0 / static_cast<double>(g.size());
  for_each_mode(g, [&](std::size_t k, double xi2, double, int) {
    const double s = symbol(xi2) * norm;
    hat[k][0] *= s;
    hat[k][1] *= s;
  });
  Field out(g);
  fft::backward(g.dimension(), g.points(), hat, out.data());
  return out;
}

/// Eigenvalue of the Dirichlet second-difference operator -D2 for DST mode k.
inline double dirichlet_eigen(int k, int m, double h) {
  const double s = std::sin(std::numbers::pi * (k + 1) / (2.0 * (m + 1)));
  return 4.0 * s * s / (h * h);
}

} // namespace detail

/// Discrete Laplacian: FFT symbol -|xi|^2 on periodic grids, the standard
/// second-order stencil with zero ghosts on Dirichlet grids.
inline Field laplacian(const Field &u) {
  const Grid &g = u.grid();
  if (g.periodic())
    return detail::spectral_multiply(u, [](double xi2) { return -xi2; });

  Field out(g);
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  const int m = g.points();
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto idx = g.multi_index(i);
    double acc = -2.0 * g.dimension() * u[i];
    for (int a = 0; a < g.dimension(); ++a) {
      const std::size_t s = g.stride(a);
      const int k = idx[static_cast<std::size_t>(a)];
      if (k > 0)
        acc += u[i - s];
      if (k < m - 1)
        acc += u[i + s];
    }
    out[i] = acc * inv_h2;
  }
  return out;
}

/// Solves (shift - Laplacian) w = u exactly in the grid's own discretization.
inline Field resolvent(const Field &u, double shift) {
  const Grid &g = u.grid();
  if (!(shift > 0.0))
    throw DomainError("resolvent shift must be positive");
  if (g.periodic())
    return detail::spectral_multiply(u, [shift](double xi2) { return 1.0 / (shift + xi2); });

  const int n = g.dimension();
  const int m = g.points();
  Field hat(g);
  fft::dst1(n, m, u.data(), hat.data());
  const double h = g.spacing();
  std::vector<double> eig(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k)
    eig[static_cast<std::size_t>(k)] = detail::dirichlet_eigen(k, m, h);
  const double norm = 1.0 / std::pow(2.0 * (m + 1), n);
  for (std::size_t i = 0; i < hat.size(); ++i) {
    const auto idx = g.multi_index(i);
    double lam = shift;
    for (int a = 0; a < n; ++a)
      lam += eig[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])];
    hat[i] *= norm / lam;
  }
  Field out(g);
  fft::dst1(n, m, hat.data(), out.data());
  return out;
}

/// Dirichlet energy computed in self-adjoint form, the integral of u(-Laplacian u).
inline double grad_norm_sq(const Field &u) {
  const Field lap = laplacian(u);
  return std::max(0.0, -inner(u, lap));
}

/// Nearest-neighbour difference energy h^{N-2} sum |u(x + h e_a) - u(x)|^2, with
/// cyclic neighbours on periodic grids and zero ghosts on Dirichlet grids (where
/// it coincides with grad_norm_sq).
inline double difference_grad_norm_sq(const Field &u) {
  const Grid &g = u.grid();
  const int m = g.points();
  double s = 0.0;
  for (int a = 0; a < g.dimension(); ++a) {
    const std::size_t stride = g.stride(a);
    for (std::size_t i = 0; i < u.size(); ++i) {
      const int k = g.multi_index(i)[static_cast<std::size_t>(a)];
      double next = 0.0;
      if (k < m - 1)
        next = u[i + stride];
      else if (g.periodic())
        next = u[i - static_cast<std::size_t>(m - 1) * stride];
      const double d = next - u[i];
      s += d * d;
      if (!g.periodic() && k == 0)
        s += u[i] * u[i];
    }
  }
  const double h = g.spacing();
  return s * g.cell_volume() / (h * h);
}

/// Gradient norm through Parseval, sum |xi|^2 |u_hat|^2 (periodic grids only).
inline double spectral_grad_norm_sq(const Field &u) {
  const Grid &g = u.grid();
  if (!g.periodic())
    throw DomainError("spectral gradient norm needs a periodic grid");
  fft::Buffer<fftw_complex> hat(fft::complex_size(g.dimension(), g.points()));
  fft::forward(g.dimension(), g.points(), u.data(), hat);
  double s = 0.0;
  detail::for_each_mode(g, [&](std::size_t k, double xi2, double mult, int) {
    s += mult * xi2 * (hat[k][0] * hat[k][0] + hat[k][1] * hat[k][1]);
  });
  return s * g.cell_volume() / static_cast<double>(g.size());
}

struct Diagnostics {
  std::vector<std::string> warnings;
};

namespace detail {

/// Row-major 1D interpolation matrix from grid samples to targets t x_j.
inline std::vector<double> fiber_matrix(const Grid &g, double t) {
  const int m = g.points();
  const double half = g.half_width();
  const double h = g.spacing();
  std::vector<double> a(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0.0);
  for (int j = 0; j < m; ++j) {
    const double y = t * g.coordinate(j);
    double *row = a.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(m);
    if (g.periodic()) {
      if (y < -half || y >= half)
        continue;
      for (int k = 0; k < m; ++k) {
        const double d = y - g.coordinate(k);
        const double q = d / h;
        if (std::fabs(q - std::round(q)) < 1e-13) {
          row[k] = std::lround(q) == 0 ? 1.0 : 0.0;
          continue;
        }
        const double theta = std::numbers::pi * d / half;
        row[k] = std::sin(std::numbers::pi * q) * std::cos(0.5 * theta) / (m * std::sin(0.5 * theta));
      }
    } else {
      const double s = (y + half) / h;
      if (s <= -1.0 || s >= m)
        continue;
      const int k0 = static_cast<int>(std::floor(s));
      const double w = s - k0;
      if (k0 >= 0 && k0 < m)
        row[k0] += 1.0 - w;
      if (k0 + 1 >= 0 && k0 + 1 < m)
        row[k0 + 1] += w;
    }
  }
  return a;
}

/// Applies a 1D m x m matrix along one axis of a field.
inline Field apply_along_axis(const Field &u, const std::vector<double> &a, int axis) {
  const Grid &g = u.grid();
  const int m = g.points();
  const std::size_t stride = g.stride(axis);
  const std::size_t block = stride * static_cast<std::size_t>(m);
  Field out(g);
  std::vector<double> line(static_cast<std::size_t>(m));
  for (std::size_t base = 0; base < u.size(); base += block) {
    for (std::size_t off = 0; off < stride; ++off) {
      for (int k = 0; k < m; ++k)
        line[static_cast<std::size_t>(k)] = u[base + off + static_cast<std::size_t>(k) * stride];
      for (int j = 0; j < m; ++j) {
        const double *row = a.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(m);
        double acc = 0.0;
        for (int k = 0; k < m; ++k)
          acc += row[k] * line[static_cast<std::size_t>(k)];
        out[base + off + static_cast<std::size_t>(j) * stride] = acc;
      }
    }
  }
  return out;
}

} // namespace detail

/// Mass-preserving dilation x -> t^{N/2} u(t x), resampled on the same grid
/// (trigonometric interpolation on periodic grids, linear on Dirichlet grids).
/// Samples whose preimage t x leaves the box are set to zero.
inline Field fiber_scale(double t, const Field &u, Diagnostics *diag = nullptr) {
  if (!(t > 0.0) || !std::isfinite(t))
    throw DomainError("fiber scale parameter must be positive");
  if (t == 1.0)
    return u;
  const Grid &g = u.grid();

  if (diag != nullptr) {
    if (g.periodic() && t > 1.0) {
      fft::Buffer<fftw_complex> hat(fft::complex_size(g.dimension(), g.points()));
      fft::forward(g.dimension(), g.points(), u.data(), hat);
      const double cutoff = 0.5 * g.points() / t;
      double total = 0.0;
      double above = 0.0;
      detail::for_each_mode(g, [&](std::size_t k, double, double mult, int) {
        const double e = mult * (hat[k][0] * hat[k][0] + hat[k][1] * hat[k][1]);
        total += e;
        if (detail::mode_extent(g, k) > cutoff)
          above += e;
      });
      if (total > 0.0 && above > 1e-12 * total)
        diag->warnings.push_back("fiber_scale: t = " + std::to_string(t) +
                                 " pushes spectral content past the grid bandwidth");
    }
    if (t < 1.0) {
      const double inner_radius = t * g.half_width();
      double lost = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) {
        const Point x = g.point(i);
        for (int a = 0; a < g.dimension(); ++a)
          if (std::fabs(x[static_cast<std::size_t>(a)]) >= inner_radius) {
            lost += u[i] * u[i];
            break;
          }
      }
      lost *= g.cell_volume();
      const double total = mass(u);
      if (total > 0.0 && lost > 1e-10 * total)
        diag->warnings.push_back("fiber_scale: t = " + std::to_string(t) +
                                 " stretches mass beyond the box");
    }
  }

  const auto a = detail::fiber_matrix(g, t);
  Field out = u;
  for (int axis = 0; axis < g.dimension(); ++axis)
    out = detail::apply_along_axis(out, a, axis);
  out *= std::pow(t, 0.5 * g.dimension());
  return out;
}

/// x -> u(x - shift) for a grid-aligned shift: circular on periodic grids,
/// zero-filled on Dirichlet grids.
inline Field translate(const Field &u, const Point &shift) {
  const Grid &g = u.grid();
  const double h = g.spacing();
  std::array<long, 3> steps{0, 0, 0};
  for (int a = 0; a < 3; ++a) {
    const double s = shift[static_cast<std::size_t>(a)] / h;
    if (a >= g.dimension()) {
      if (shift[static_cast<std::size_t>(a)] != 0.0)
        throw DomainError("translation has components beyond the grid dimension");
      continue;
    }
    const double r = std::round(s);
    if (std::fabs(s - r) > 1e-9)
      throw DomainError("translation is not a multiple of the grid spacing");
    steps[static_cast<std::size_t>(a)] = static_cast<long>(r);
  }
  const long m = g.points();
  Field out(g);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto idx = g.multi_index(i);
    std::size_t src = 0;
    bool inside = true;
    for (int a = 0; a < g.dimension(); ++a) {
      long k = idx[static_cast<std::size_t>(a)] - steps[static_cast<std::size_t>(a)];
      if (g.periodic()) {
        k %= m;
        if (k < 0)
          k += m;
      } else if (k < 0 || k >= m) {
        inside = false;
        break;
      }
      src = src * static_cast<std::size_t>(m) + static_cast<std::size_t>(k);
    }
    out[i] = inside ? u[src] : 0.0;
  }
  return out;
}

inline Point along_first_axis(double r) { return Point{r, 0.0, 0.0}; }

/// Smooth nonnegative random field: a sum of `bumps` Gaussians with random
/// centers in |x_a| <= center_spread, widths in [min_width, max_width] and
/// amplitudes in [0.2, 1].
struct RandomFieldParams {
  int bumps = 3;
  double center_spread = 2.0;
  double min_width = 0.5;
  double max_width = 2.0;
};

template <typename Rng>
Field random_smooth_field(const Grid &g, Rng &rng, const RandomFieldParams &p = {}) {
  std::uniform_real_distribution<double> center(-p.center_spread, p.center_spread);
  std::uniform_real_distribution<double> width(p.min_width, p.max_width);
  std::uniform_real_distribution<double> amp(0.2, 1.0);
  struct Bump {
    Point c;
    double w;
    double a;
  };
  std::vector<Bump> bumps;
  for (int b = 0; b < p.bumps; ++b) {
    Bump bump{{0.0, 0.0, 0.0}, 0.0, 0.0};
    for (int a = 0; a < g.dimension(); ++a)
      bump.c[static_cast<std::size_t>(a)] = center(rng);
    bump.w = width(rng);
    bump.a = amp(rng);
    bumps.push_back(bump);
  }
  return sample(g, [&](const Point &x) {
    double v = 0.0;
    for (const Bump &b : bumps) {
      double r2 = 0.0;
      for (int a = 0; a < 3; ++a) {
        const double d = x[static_cast<std::size_t>(a)] - b.c[static_cast<std::size_t>(a)];
        r2 += d * d;
      }
      v += b.a * std::exp(-r2 / (b.w * b.w));
    }
    return v;
  });
}

/// Rescales u so that mass(u) equals target; a zero target gives the zero field.
inline Field with_mass(Field u, double target) {
  if (target <= 0.0)
    return Field(u.grid());
  const double m = mass(u);
  if (!(m > 0.0))
    throw DomainError("cannot rescale a zero field to positive mass");
  u *= std::sqrt(target / m);
  return u;
}

} // namespace normsol

#endif
