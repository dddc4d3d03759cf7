#pragma once

#include <cmath>
#include <functional>

#include "saarb/errors.hpp"

namespace saarb::quad {

struct Result {
  double value = 0.0;
  double error_estimate = 0.0;
  bool converged = true;
};

namespace detail {

template <typename F>
Result simpson_recurse(const F& f, double a, double b, double fa, double fm, double fb,
                       double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0) {
    return {left + right + delta / 15.0, std::fabs(delta), false};
  }
  if (std::fabs(delta) <= 15.0 * tol) {
    return {left + right + delta / 15.0, std::fabs(delta) / 15.0, true};
  }
  Result l = simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1);
  Result r = simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
  return {l.value + r.value, l.error_estimate + r.error_estimate, l.converged && r.converged};
}

}  // namespace detail

// Adaptive Simpson with Richardson correction. Tolerance is interpreted as
// rel_tol * |coarse estimate| + abs_tol.
template <typename F>
Result integrate(const F& f, double a, double b, double rel_tol = 1e-10,
                 double abs_tol = 1e-14, int max_depth = 48) {
  if (a == b) return {0.0, 0.0, true};
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  double tol = rel_tol * std::fabs(whole) + abs_tol;
  return detail::simpson_recurse(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

template <typename F>
double integrate_or_throw(const F& f, double a, double b, double rel_tol = 1e-10,
                          double abs_tol = 1e-14, int max_depth = 48) {
  Result r = integrate(f, a, b, rel_tol, abs_tol, max_depth);
  if (!r.converged || !std::isfinite(r.value)) {
    throw divergence_error("quadrature did not converge on the requested interval");
  }
  return r.value;
}

}  // namespace saarb::quad
