#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace normsol;
using testutil::line;

namespace {

std::vector<double> sorted(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  return s;
}

Field indicator(const Grid &g, int start, int width) {
  Field u(g);
  for (int k = start; k < start + width; ++k)
    u[static_cast<std::size_t>(k)] = 1.0;
  return u;
}

ProblemSpec coupled_well() {
  NonlinearitySpec nl({{1.0, 3.5}}, {{1.0, 3.5}}, {{1.0, 1.5, 1.6}}, 1);
  return ProblemSpec{nl, {PotentialSpec::gaussian_well(1.0, 2.0), PotentialSpec::zero()}, {2.0, 2.0}};
}

} // namespace

TEST(SymDec, BruteForceExample) {
  const std::vector<double> got = sym_dec_rearrange_1d({0, 2, 1, 0, 3});
  EXPECT_EQ(got, (std::vector<double>{0, 1, 3, 2, 0}));
}

TEST(SymDec, CenterOutOrder) {
  EXPECT_EQ(center_out_order(5), (std::vector<std::size_t>{2, 3, 1, 4, 0}));
  EXPECT_EQ(center_out_order(4), (std::vector<std::size_t>{2, 3, 1, 0}));
  EXPECT_TRUE(center_out_order(0).empty());
}

TEST(SymDec, SymmetricDecreasingIsFixed) {
  const std::vector<double> v{1, 3, 5, 3, 1};
  EXPECT_EQ(sym_dec_rearrange_1d(v), v);
}

TEST(SymDec, NegativeSampleThrows) {
  EXPECT_THROW(sym_dec_rearrange_1d({1.0, -0.5}), DomainError);
  Field u(line(8));
  u[3] = -1.0;
  EXPECT_THROW(sym_dec_rearrange(u), DomainError);
}

TEST(SymDec, EquimeasurableInTwoDimensions) {
  std::mt19937_64 rng(21);
  const Grid g(2, 6.0, 32);
  const Field u = random_smooth_field(g, rng);
  const Field s = sym_dec_rearrange(u);
  EXPECT_EQ(sorted(u.values()), sorted(s.values()));
  EXPECT_EQ(s[g.center_index()], max_abs(u));
  for (double p : {2.0, 3.0, 4.0})
    EXPECT_NEAR(lp_norm_pow(s, p), lp_norm_pow(u, p), 1e-13 * lp_norm_pow(u, p));
}

TEST(SymDec, RadialOrderInTwoDimensions) {
  const Grid g(2, 4.0, 16);
  const auto order = placement_order(g);
  ASSERT_EQ(order.front(), g.center_index());
  auto r2 = [&](std::size_t i) {
    const Point x = g.point(i);
    return x[0] * x[0] + x[1] * x[1];
  };
  for (std::size_t k = 1; k < order.size(); ++k)
    EXPECT_LE(r2(order[k - 1]), r2(order[k]) + 1e-12);
}

TEST(Coupled, ZeroPartnerGivesSymDec) {
  std::mt19937_64 rng(1);
  const Grid g = line(128);
  const Field u = random_smooth_field(g, rng);
  const Field c = coupled_rearrange_1d(u, Field(g));
  EXPECT_EQ(l2_norm(c - sym_dec_rearrange(u)), 0.0);
}

TEST(Coupled, IndicatorWidthsAdd) {
  const Grid g = line(64);
  double dropped = -1.0;
  const Field c = coupled_rearrange_1d(indicator(g, 3, 7), indicator(g, 40, 5), &dropped);
  EXPECT_EQ(dropped, 0.0);
  EXPECT_EQ(l2_norm(c - sym_dec_rearrange(indicator(g, 0, 12))), 0.0);
  int run = 0;
  for (std::size_t i = 0; i < c.size(); ++i)
    run += c[i] == 1.0;
  EXPECT_EQ(run, 12);
  EXPECT_EQ(c[g.center_index()], 1.0);
}

TEST(Coupled, LpAdditivityAndCommutativity) {
  std::mt19937_64 rng(17);
  const Grid g = line(256);
  RandomFieldParams narrow;
  narrow.max_width = 1.0;
  for (int t = 0; t < 20; ++t) {
    const Field u = random_smooth_field(g, rng, narrow), v = random_smooth_field(g, rng, narrow);
    double dropped = 0.0;
    const Field c = coupled_rearrange_1d(u, v, &dropped);
    EXPECT_EQ(l2_norm(c - coupled_rearrange_1d(v, u)), 0.0);
    if (dropped == 0.0) {
      EXPECT_LE(coupled_lp_defect(u, v), 1e-12);
    }
  }
  const Field a = detail::rough_compact_field(g, rng), b = detail::rough_compact_field(g, rng);
  EXPECT_LE(coupled_lp_defect(a, b), 1e-12);
}

TEST(Coupled, HigherDimensionUnsupported) {
  const Grid g(2, 4.0, 8);
  EXPECT_THROW(coupled_rearrange_1d(Field(g), Field(g)), UnsupportedDimension);
  EXPECT_THROW(coupled_rearrange_1d(Field(line(8)), Field(line(16))), DomainError);
}

TEST(Inequalities, FixedPointGivesEqualities) {
  const Grid g = line(256);
  const Field s = testutil::soliton(g);
  const auto rep = check_rearrangement_inequalities(s, s, coupled_well());
  EXPECT_TRUE(rep.all_pass());
  for (const Check &c : rep.checks)
    EXPECT_NEAR(c.measured, 0.0, 1e-10) << c.name;
  EXPECT_NE(rep.find("rearrangement_V1"), nullptr);
  EXPECT_EQ(rep.find("rearrangement_V2"), nullptr);
}

TEST(Inequalities, RandomPairsSatisfyGInequality) {
  std::mt19937_64 rng(33);
  const Grid g = line(256);
  const auto problem = coupled_well();
  for (int t = 0; t < 200; ++t) {
    RandomFieldParams params;
    params.center_spread = 5.0;
    const Field u = random_smooth_field(g, rng, params), v = random_smooth_field(g, rng, params);
    const double before = interaction_integral(u, v, problem.nonlinearity);
    const double after = interaction_integral(sym_dec_rearrange(u), sym_dec_rearrange(v), problem.nonlinearity);
    EXPECT_GE(after - before, -1e-12 * before) << "trial " << t;
  }
}

TEST(Inequalities, SuiteReportsNoViolations) {
  const auto rep = rearrangement_suite(line(256), coupled_well(), 40, 7);
  EXPECT_TRUE(rep.all_pass()) << to_text(rep);
  EXPECT_NE(rep.find("coupled_lp_additivity"), nullptr);
}

TEST(Inequalities, PolyaSzegoStrictOnTwoBumps) {
  const Grid g = line(512);
  const Field u = sample(g, [](const Point &x) { return std::exp(-(x[0] - 5) * (x[0] - 5)) + std::exp(-(x[0] + 5) * (x[0] + 5)); });
  const Field s = sym_dec_rearrange(u);
  EXPECT_LT(grad_norm_sq(s), 0.9 * grad_norm_sq(u));
  const auto rep = check_rearrangement_inequalities(u, u, coupled_well());
  EXPECT_TRUE(rep.all_pass());
}

TEST(Inequalities, CoupledRearrangementOfMinimizersLowersFreeEnergy) {
  // I[phi * psi] < I[phi] + I[psi] for free minimizers at masses c and d.
  const Grid g = line(1024, 40.0);
  NonlinearitySpec nl({{1.0, 4.0}}, {{1.0, 4.0}}, {{1.0, 2.0, 2.0}}, 1);
  const ProblemSpec free{nl, {}, {1.0, 1.0}};
  const SolveResult phi = solve_ground_state(free.with_masses(2.0, 2.5), g, testutil::tight());
  const SolveResult psi = solve_ground_state(free.with_masses(1.5, 1.0), g, testutil::tight());
  ASSERT_TRUE(phi.converged && psi.converged);
  double d1 = 0.0, d2 = 0.0;
  const Field c1 = coupled_rearrange_1d(phi.u1, psi.u1, &d1);
  const Field c2 = coupled_rearrange_1d(phi.u2, psi.u2, &d2);
  EXPECT_LT(d1 + d2, 1e-6);
  const double joined = energy(c1, c2, free).total_I;
  EXPECT_LT(joined, phi.energy.total_I + psi.energy.total_I - 1e-3);
}
