#include "sgp/numerics.hpp"

#include <cmath>
#include <string>

#include "sgp/errors.hpp"

namespace sgp::numerics {
namespace {

struct SimpsonState {
  const std::function<double(double)>& f;
  int max_depth;
  bool exhausted = false;
};

double simpson_recurse(SimpsonState& st, double a, double b, double fa, double fm, double fb,
                       double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = st.f(lm);
  const double frm = st.f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  if (depth >= st.max_depth) {
    st.exhausted = true;
    return left + right + delta / 15.0;
  }
  return simpson_recurse(st, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
         simpson_recurse(st, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

} // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth) {
  if (a == b) {
    return 0.0;
  }
  if (b < a) {
    return -adaptive_simpson(f, b, a, tol, max_depth);
  }
  SimpsonState st{f, max_depth};
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  // Relative floor: an absolute 1e-12 target is unreachable once the
  // integral itself is large.
  const double scaled_tol = std::max(tol, 1e-15 * std::abs(whole));
  const double value = simpson_recurse(st, a, b, fa, fm, fb, whole, scaled_tol, 0);
  if (st.exhausted || !std::isfinite(value)) {
    throw NumericalError("adaptive Simpson quadrature did not converge on [" + std::to_string(a) +
                         ", " + std::to_string(b) + "]");
  }
  return value;
}

BisectionResult bisect_increasing(const std::function<double(double)>& g, double lo, double hi,
                                  double value_tol, int max_iter) {
  for (int it = 1; it <= max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double v = g(mid);
    if (std::abs(v) <= value_tol || mid <= lo || mid >= hi) {
      return {mid, it};
    }
    (v < 0.0 ? lo : hi) = mid;
  }
  throw NumericalError("bisection did not converge within " + std::to_string(max_iter) +
                       " iterations");
}

} // namespace sgp::numerics
