#pragma once

#include <functional>

namespace sgp::numerics {

/// Adaptive Simpson quadrature of f over [a, b] (b < a allowed, gives the
/// negated integral). Throws NumericalError when the recursion depth is
/// exhausted before the local error estimate drops below `tol`.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12, int max_depth = 50);

struct BisectionResult {
  double root;
  int iterations;
};

/// Bisection for an increasing function g on [lo, hi] with g(lo) <= 0 <= g(hi).
/// Stops once |g(mid)| <= value_tol or the bracket collapses to machine
/// precision; throws NumericalError after max_iter iterations otherwise.
BisectionResult bisect_increasing(const std::function<double(double)>& g, double lo, double hi,
                                  double value_tol = 1e-12, int max_iter = 200);

} // namespace sgp::numerics
