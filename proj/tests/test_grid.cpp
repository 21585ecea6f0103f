#include "test_util.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace normsol;
using testutil::line;

namespace {

Field gaussian(const Grid &g, double w = 1.0) {
  return sample(g, [&](const Point &x) { return std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (w * w)); });
}

double max_diff(const Field &a, const Field &b) { return max_abs(a - b); }

} // namespace

TEST(GridShape, RejectsBadParameters) {
  EXPECT_THROW(Grid(4, 1.0, 8), DomainError);
  EXPECT_THROW(Grid(1, 0.0, 8), DomainError);
  EXPECT_THROW(Grid(1, 1.0, 7), DomainError);
  EXPECT_THROW(Grid(1, 1.0, 12), DomainError);
  EXPECT_NO_THROW(Grid(1, 1.0, 12, Boundary::dirichlet_fd));
}

TEST(GridShape, CenterIndexIsOrigin) {
  const Grid g(2, 3.0, 16);
  const Point x = g.point(g.center_index());
  EXPECT_EQ(x[0], 0.0);
  EXPECT_EQ(x[1], 0.0);
}

TEST(Quadrature, ConstantExact) {
  const Grid g = line(4, 1.0);
  EXPECT_DOUBLE_EQ(integrate(sample(g, [](const Point &) { return 1.0; })), 2.0);
  EXPECT_EQ(integrate(Field(g)), 0.0);
}

TEST(Quadrature, GaussianIntegral) {
  EXPECT_NEAR(integrate(gaussian(line())), std::sqrt(std::numbers::pi), 1e-10);
}

TEST(Quadrature, SolitonMass) {
  EXPECT_NEAR(mass(testutil::soliton(line())), 4.0, 1e-8);
  EXPECT_EQ(mass(Field(line())), 0.0);
}

TEST(Quadrature, GaussianIn3D) {
  const Grid g(3, 6.0, 32);
  EXPECT_NEAR(integrate(gaussian(g)), std::pow(std::numbers::pi, 1.5), 1e-10);
}

TEST(Laplacian, FourierEigenfunction) {
  const double L = 20.0;
  const Grid g = line(1024, L);
  const Field u = sample(g, [&](const Point &x) { return std::sin(std::numbers::pi * x[0] / L); });
  const Field expect = -(std::numbers::pi / L) * (std::numbers::pi / L) * u;
  EXPECT_LT(max_diff(laplacian(u), expect), 1e-10);
}

TEST(Laplacian, ConstantGoesToZero) {
  const Grid g(2, 5.0, 32);
  const Field c = sample(g, [](const Point &) { return 3.0; });
  EXPECT_LT(max_abs(laplacian(c)), 1e-12);
}

TEST(Laplacian, FiniteDifferenceSecondOrder) {
  auto err = [](int m) {
    const Grid g(1, 8.0, m, Boundary::dirichlet_fd);
    const Field u = gaussian(g);
    const Field exact = sample(g, [](const Point &x) { return (4 * x[0] * x[0] - 2) * std::exp(-x[0] * x[0]); });
    return max_diff(laplacian(u), exact);
  };
  const double e1 = err(200), e2 = err(400);
  EXPECT_NEAR(e1 / e2, 4.0, 0.1);
}

TEST(Laplacian, SpectralAndFiniteDifferenceAgree) {
  const int m = 256;
  const Grid gp(1, 8.0, m, Boundary::periodic_spectral);
  const Grid gd(1, 8.0, m, Boundary::dirichlet_fd);
  const Field lp = laplacian(gaussian(gp));
  const Field ld = laplacian(gaussian(gd));
  double worst = 0.0;
  for (std::size_t i = 0; i < lp.size(); ++i)
    worst = std::max(worst, std::fabs(lp[i] - ld[i]));
  const double h = gp.spacing();
  EXPECT_LT(worst, 2.0 * h * h);
}

TEST(Laplacian, SelfAdjoint) {
  std::mt19937_64 rng(11);
  for (Boundary b : {Boundary::periodic_spectral, Boundary::dirichlet_fd}) {
    const Grid g(2, 6.0, 32, b);
    const Field u = random_smooth_field(g, rng);
    const Field v = random_smooth_field(g, rng);
    const double a = inner(u, laplacian(v));
    const double c = inner(laplacian(u), v);
    EXPECT_NEAR(a, c, 1e-12 * std::fabs(a));
  }
}

TEST(Laplacian, ResolventInvertsShiftedOperator) {
  for (Boundary b : {Boundary::periodic_spectral, Boundary::dirichlet_fd}) {
    const Grid g(1, 10.0, 128, b);
    const Field u = gaussian(g);
    const Field f = 2.5 * u - laplacian(u);
    EXPECT_LT(max_diff(resolvent(f, 2.5), u), 1e-12);
  }
}

TEST(Gradient, SolitonDirichletIntegral) {
  EXPECT_NEAR(grad_norm_sq(testutil::soliton(line())), 4.0 / 3.0, 1e-6);
  EXPECT_LT(grad_norm_sq(sample(line(64), [](const Point &) { return 2.0; })), 1e-20);
}

TEST(Gradient, PlancherelMatchesLaplacianPairing) {
  std::mt19937_64 rng(5);
  const Grid g(2, 8.0, 64);
  const Field u = random_smooth_field(g, rng);
  const double k = spectral_grad_norm_sq(u);
  EXPECT_NEAR(k, -inner(u, laplacian(u)), 1e-10 * k);
  EXPECT_NEAR(grad_norm_sq(u), k, 1e-10 * k);
}

TEST(Gradient, FiniteDifferenceEnergyMatchesPairing) {
  const Grid g(1, 8.0, 200, Boundary::dirichlet_fd);
  const Field u = gaussian(g);
  EXPECT_NEAR(grad_norm_sq(u), -inner(u, laplacian(u)), 1e-12);
}

TEST(Gradient, DifferenceEnergyDirichletMatchesPairing) {
  const Grid g(2, 6.0, 40, Boundary::dirichlet_fd);
  const Field u = gaussian(g);
  EXPECT_NEAR(difference_grad_norm_sq(u), -inner(u, laplacian(u)), 1e-12);
}

TEST(Gradient, DifferenceEnergyPeriodicHandValues) {
  // Samples [1, 0, 0, 0] on h = 1: two unit jumps, one across the wrap.
  Field u(Grid(1, 2.0, 4));
  u[0] = 1.0;
  EXPECT_NEAR(difference_grad_norm_sq(u), 2.0, 1e-15);
  EXPECT_NEAR(difference_grad_norm_sq(testutil::soliton(line())), 4.0 / 3.0, 1e-3);
}

TEST(FiberScale, UnitParameterIsIdentity) {
  const Field u = testutil::soliton(line(256));
  const Field v = fiber_scale(1.0, u);
  for (std::size_t i = 0; i < u.size(); ++i)
    EXPECT_EQ(u[i], v[i]);
}

TEST(FiberScale, PreservesMassAndScalesKinetic) {
  const Field u = gaussian(line(), 1.5);
  for (double t : {0.5, 2.0}) {
    const Field v = fiber_scale(t, u);
    EXPECT_NEAR(mass(v), mass(u), 1e-10 * mass(u));
    EXPECT_NEAR(grad_norm_sq(v), t * t * grad_norm_sq(u), 1e-8 * grad_norm_sq(u));
  }
}

TEST(FiberScale, InvalidParameterThrows) {
  const Field u = gaussian(line(64));
  EXPECT_THROW(fiber_scale(0.0, u), DomainError);
  EXPECT_THROW(fiber_scale(-1.0, u), DomainError);
}

TEST(FiberScale, DiagnosticsFlagUnresolvable) {
  const Grid g = line(64, 5.0);
  Diagnostics d;
  fiber_scale(1.1, gaussian(g, 1.0), &d);
  EXPECT_TRUE(d.warnings.empty());
  fiber_scale(20.0, gaussian(g, 0.4), &d);
  EXPECT_FALSE(d.warnings.empty());
  Diagnostics d2;
  fiber_scale(0.1, gaussian(g, 1.0), &d2);
  EXPECT_FALSE(d2.warnings.empty());
}

TEST(Translate, ZeroShiftIdentityAndInverse) {
  const Grid g = line(256);
  const Field u = gaussian(g, 2.0);
  EXPECT_EQ(max_diff(translate(u, {0.0, 0.0, 0.0}), u), 0.0);
  const double R = 10 * g.spacing();
  const Field v = translate(u, along_first_axis(R));
  EXPECT_EQ(mass(v), mass(u));
  EXPECT_EQ(max_diff(translate(v, along_first_axis(-R)), u), 0.0);
  // Peak moves to +R.
  EXPECT_EQ(v[g.center_index() + 10], u[g.center_index()]);
}

TEST(Translate, DirichletZeroFills) {
  const Grid g(1, 5.0, 20, Boundary::dirichlet_fd);
  const Field u = sample(g, [](const Point &) { return 1.0; });
  const Field v = translate(u, along_first_axis(3 * g.spacing()));
  EXPECT_EQ(v[0], 0.0);
  EXPECT_EQ(v[2], 0.0);
  EXPECT_EQ(v[3], 1.0);
}

TEST(Translate, MisalignedShiftThrows) {
  const Grid g = line(256);
  EXPECT_THROW(translate(Field(g), along_first_axis(0.3 * g.spacing())), DomainError);
  EXPECT_THROW(translate(Field(g), {0.0, 1.0, 0.0}), DomainError);
}

TEST(Fields, RandomSmoothIsNonnegativeAndRescales) {
  std::mt19937_64 rng(9);
  const Grid g(2, 6.0, 32);
  const Field u = with_mass(random_smooth_field(g, rng), 3.0);
  for (std::size_t i = 0; i < u.size(); ++i)
    EXPECT_GE(u[i], 0.0);
  EXPECT_NEAR(mass(u), 3.0, 1e-12);
  EXPECT_TRUE(with_mass(u, 0.0).is_zero());
  EXPECT_THROW(with_mass(Field(g), 1.0), DomainError);
}

TEST(Fields, MismatchedGridsThrow) {
  Field a(line(64));
  const Field b(line(128));
  EXPECT_THROW(a += b, DomainError);
  EXPECT_THROW(inner(a, b), DomainError);
}
