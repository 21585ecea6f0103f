#ifndef NORMSOL_TEST_UTIL_HPP
#define NORMSOL_TEST_UTIL_HPP

#include "normsol/normsol.hpp"

#include <cmath>

namespace testutil {

inline normsol::Grid line(int m = 1024, double half = 20.0,
                          normsol::Boundary b = normsol::Boundary::periodic_spectral) {
  return normsol::Grid(1, half, m, b);
}

// sqrt(2) sech(x): the lambda = 1 ground state of -u'' + u = u^3.
inline normsol::Field soliton(const normsol::Grid &g, double shift = 0.0) {
  return normsol::sample(g, [&](const normsol::Point &x) { return std::sqrt(2.0) / std::cosh(x[0] - shift); });
}

inline normsol::NonlinearitySpec cubic() { return normsol::NonlinearitySpec({{1.0, 4.0}}, {}, {}, 1); }

inline normsol::ProblemSpec cubic_problem(double a1, double a2 = 0.0) {
  return normsol::ProblemSpec{cubic(), {}, {a1, a2}};
}

inline normsol::FlowOptions tight() {
  normsol::FlowOptions o;
  o.tol_residual = 1e-10;
  o.tol_energy = 1e-14;
  return o;
}

} // namespace testutil

#endif
