// Scalar cubic soliton in 1D: compares the computed ground state with the
// closed form u = sqrt(2 lambda) sech(sqrt(lambda) x), mass 4 sqrt(lambda).

#include "normsol/normsol.hpp"

#include <cmath>
#include <cstdio>

using namespace normsol;

int main() {
  const Grid grid(1, 20.0, 1024, Boundary::periodic_spectral);
  const NonlinearitySpec nl({{1.0, 4.0}}, {}, {}, 1);
  FlowOptions options;
  options.tol_residual = 1e-10;

  std::printf("%6s %14s %14s %14s %14s %10s\n", "mass", "lambda", "exact", "energy", "exact", "max|u-u*|");
  for (double a : {2.0, 4.0, 8.0}) {
    const ProblemSpec problem{nl, {}, {a, 0.0}};
    const SolveResult r = solve_ground_state(problem, grid, options);
    const double lam = a * a / 16.0;
    const double e_exact = -(2.0 / 3.0) * std::pow(lam, 1.5);
    const Field exact = sample(grid, [&](const Point &x) { return std::sqrt(2.0 * lam) / std::cosh(std::sqrt(lam) * x[0]); });
    std::printf("%6.2f %14.10f %14.10f %14.10f %14.10f %10.2e%s\n", a, r.lambda1, lam, r.energy.total_J, e_exact,
                max_abs(r.u1 - exact), r.converged ? "" : "  (not converged)");
  }
  return 0;
}
