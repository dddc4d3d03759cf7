#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "saarb/dist.hpp"
#include "saarb/errors.hpp"

namespace saarb::risk {

using dist::EmpiricalDistribution;

// rho_{p,a}(X) = E[X] + a ||(X - E[X])^+||_p.
struct SemideviationParams {
  double p = 1.0;
  double a = 1.0;

  void validate() const {
    if (!(p >= 1.0)) throw config_error("semideviation: p must be >= 1");
    if (!(a > 0.0 && a <= 1.0)) throw config_error("semideviation: a must lie in (0,1]");
  }
};

// Divergence generator Phi with its Fenchel-Legendre transform Phi* and the
// right-sided derivative of Phi*. x0 > 1 must lie in the effective domain.
struct PhiFamily {
  std::string name;  // avar | entropic | user
  std::function<double(double)> phi;
  std::function<double(double)> phi_star;
  std::function<double(double)> phi_star_rderiv;
  double x0 = 1.5;
  bool phi_star_piecewise_linear = false;
  std::optional<double> alpha;  // set for avar

  static PhiFamily avar(double alpha, std::optional<double> x0 = std::nullopt) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("avar: alpha must lie in (0,1)");
    PhiFamily f;
    f.name = "avar";
    f.alpha = alpha;
    double cap = 1.0 / (1.0 - alpha);
    f.phi = [cap](double x) {
      return x <= cap ? 0.0 : std::numeric_limits<double>::infinity();
    };
    f.phi_star = [alpha](double y) { return std::max(y, 0.0) / (1.0 - alpha); };
    f.phi_star_rderiv = [alpha](double y) { return y >= 0.0 ? 1.0 / (1.0 - alpha) : 0.0; };
    f.phi_star_piecewise_linear = true;
    // x0 must satisfy 1 < x0 < 2 and phi(x0) finite, i.e. x0 <= 1/(1-alpha).
    f.x0 = x0 ? *x0 : std::min(1.5, 0.5 * (1.0 + cap));
    if (!(f.x0 > 1.0 && f.x0 < 2.0 && f.x0 <= cap))
      throw config_error("avar: x0 must lie in (1,2) with phi(x0) finite");
    return f;
  }

  static PhiFamily entropic(double x0 = 2.0) {
    PhiFamily f;
    f.name = "entropic";
    f.phi = [](double x) { return x > 0.0 ? x * std::log(x) - x + 1.0 : (x == 0.0 ? 1.0 : std::numeric_limits<double>::infinity()); };
    f.phi_star = [](double y) { return std::expm1(y); };
    f.phi_star_rderiv = [](double y) { return std::exp(y); };
    f.x0 = x0;
    if (!(f.x0 > 1.0)) throw config_error("entropic: x0 must exceed 1");
    return f;
  }

  // Grid spot-checks of the type invariants; returns failure descriptions.
  std::vector<std::string> validate() const {
    std::vector<std::string> failures;
    if (std::fabs(phi_star(0.0)) > 1e-12) failures.push_back("phi_star(0) != 0");
    if (!(x0 > 1.0)) failures.push_back("x0 <= 1");
    if (!std::isfinite(phi(x0))) failures.push_back("phi(x0) not finite");
    double prev = -std::numeric_limits<double>::infinity();
    double prev_d = -std::numeric_limits<double>::infinity();
    for (int k = -40; k <= 40; ++k) {
      double y = 0.25 * k;
      double v = phi_star(y), dv = phi_star_rderiv(y);
      if (v < prev - 1e-12) failures.push_back("phi_star decreasing near y=" + std::to_string(y));
      if (dv < -1e-12) failures.push_back("phi_star_rderiv negative near y=" + std::to_string(y));
      if (dv < prev_d - 1e-12)
        failures.push_back("phi_star_rderiv decreasing near y=" + std::to_string(y));
      double mid = 0.5 * (phi_star(y - 0.25) + phi_star(y + 0.25));
      if (phi_star(y) > mid + 1e-12)
        failures.push_back("phi_star midpoint convexity fails near y=" + std::to_string(y));
      prev = v;
      prev_d = dv;
    }
    if (alpha) {
      for (int k = -8; k <= 8; ++k) {
        double y = 0.5 * k;
        double expect = std::max(y, 0.0) / (1.0 - *alpha);
        if (phi_star(y) != expect) failures.push_back("avar phi_star not exact");
      }
    }
    return failures;
  }
};

struct RiskFunctional {
  enum class Kind { expectation, semideviation, divergence };
  Kind kind = Kind::expectation;
  SemideviationParams semidev;
  std::optional<PhiFamily> phi;

  static RiskFunctional expectation() { return {}; }
  static RiskFunctional semideviation(SemideviationParams p) {
    p.validate();
    RiskFunctional r;
    r.kind = Kind::semideviation;
    r.semidev = p;
    return r;
  }
  static RiskFunctional divergence(PhiFamily f) {
    RiskFunctional r;
    r.kind = Kind::divergence;
    r.phi = std::move(f);
    return r;
  }
};

// Plug-in estimator: sample mean plus a * Lp-norm of the positive deviations.
inline double mean_upper_semideviation(const EmpiricalDistribution& ed,
                                       const SemideviationParams& params) {
  params.validate();
  double m = ed.mean();
  double acc = 0.0;
  for (double v : ed.values()) {
    double dev = v - m;
    if (dev > 0.0) acc += std::pow(dev, params.p);
  }
  acc /= static_cast<double>(ed.size());
  return m + params.a * std::pow(acc, 1.0 / params.p);
}

// Exact empirical AVaR: tail average with fractional weight on the
// alpha-quantile atom, (1/(1-alpha)) int_alpha^1 F^{<-}(u) du.
inline double avar_closed_form(const EmpiricalDistribution& ed, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("avar: alpha must lie in (0,1)");
  const Vector& v = ed.values();
  auto n = static_cast<double>(v.size());
  auto k = static_cast<std::size_t>(std::ceil(alpha * n));  // 1-based quantile index
  if (k < 1) k = 1;
  if (k > v.size()) k = v.size();
  double tail = (static_cast<double>(k) / n - alpha) * v[k - 1];
  for (std::size_t i = k; i < v.size(); ++i) tail += v[i] / n;
  return tail / (1.0 - alpha);
}

struct OceResult {
  double value = 0.0;
  double argmin = 0.0;  // leftmost minimizer found
};

namespace detail {

inline double oce_objective(const Vector& values, const PhiFamily& phi, double x) {
  double acc = 0.0;
  for (double v : values) {
    double t = phi.phi_star(v + x);
    if (!std::isfinite(t)) throw std::domain_error("oce: phi_star evaluated to a non-finite value");
    acc += t;
  }
  return acc / static_cast<double>(values.size()) - x;
}

}  // namespace detail

// Minimizes h(x) = (1/n) sum phi_star(v_j + x) - x over the bracket. For
// piecewise-linear phi_star the minimum sits at a kink x = -v_j, so kinks are
// enumerated exactly; otherwise golden-section search to 1e-10 in x.
inline OceResult oce_value(const EmpiricalDistribution& ed, const PhiFamily& phi,
                           double bracket_lo, double bracket_hi) {
  if (!(bracket_lo <= bracket_hi)) throw std::domain_error("oce: bracket must satisfy lo <= hi");
  const Vector& values = ed.values();
  auto h = [&](double x) { return detail::oce_objective(values, phi, x); };

  if (phi.phi_star_piecewise_linear) {
    Vector candidates;
    candidates.push_back(bracket_lo);
    for (auto it = values.rbegin(); it != values.rend(); ++it) {
      double x = -*it;
      if (x > bracket_lo && x < bracket_hi) candidates.push_back(x);
    }
    candidates.push_back(bracket_hi);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    OceResult best{std::numeric_limits<double>::infinity(), bracket_lo};
    for (double x : candidates) {
      double value = h(x);
      if (value < best.value) best = {value, x};
    }
    return best;
  }

  // Golden-section on the convex objective.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = bracket_lo, b = bracket_hi;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = h(c), fd = h(d);
  const double tol = 1e-10;
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = h(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = h(d);
    }
  }
  double x = 0.5 * (a + b);
  double value = h(x);
  // The bracket ends can win when the minimizer sits on the boundary.
  double fa = h(bracket_lo), fb = h(bracket_hi);
  OceResult best{value, x};
  if (fa <= best.value) best = {fa, bracket_lo};
  if (fb < best.value) best = {fb, bracket_hi};
  return best;
}

// Minimizer interval of h over the real line, computed from moments of an
// envelope of the law (for the empirical law: moments of |V| itself).
struct OceBracket {
  double lo = 0.0, hi = 0.0;
};

inline OceBracket oce_minimizer_interval(const PhiFamily& phi, double x0, double mean_xi,
                                         double mean_phi_star_xi, double delta) {
  if (!(delta > 0.0)) throw config_error("oce interval: delta must be positive");
  if (!(x0 > 1.0)) throw config_error("oce interval: x0 must exceed 1");
  double phi0 = phi.phi(0.0);
  double phix0 = phi.phi(x0);
  if (!std::isfinite(phix0)) throw config_error("oce interval: phi(x0) must be finite");
  OceBracket b;
  b.lo = -phi0 - delta - mean_phi_star_xi;
  b.hi = (phix0 + (1.0 + x0) * delta + mean_phi_star_xi + x0 * mean_xi) / (x0 - 1.0) + phi0;
  return b;
}

// Dispatcher over the three families. The divergence branch brackets the OCE
// shift with the compactification interval of the empirical law at delta = 1.
inline double apply(const RiskFunctional& risk, const EmpiricalDistribution& ed) {
  switch (risk.kind) {
    case RiskFunctional::Kind::expectation:
      return ed.mean();
    case RiskFunctional::Kind::semideviation:
      return mean_upper_semideviation(ed, risk.semidev);
    case RiskFunctional::Kind::divergence: {
      const PhiFamily& phi = *risk.phi;
      double mean_abs = 0.0, mean_star = 0.0;
      for (double v : ed.values()) {
        mean_abs += std::fabs(v);
        mean_star += phi.phi_star(std::fabs(v));
      }
      auto n = static_cast<double>(ed.size());
      OceBracket bracket = oce_minimizer_interval(phi, phi.x0, mean_abs / n, mean_star / n, 1.0);
      return oce_value(ed, phi, bracket.lo, bracket.hi).value;
    }
  }
  throw config_error("apply: unknown risk kind");
}

}  // namespace saarb::risk
