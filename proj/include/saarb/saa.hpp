#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "saarb/dist.hpp"
#include "saarb/errors.hpp"
#include "saarb/goal.hpp"
#include "saarb/risk.hpp"

namespace saarb::saa {

using goal::Span;

struct GridOptions {
  int points_per_dim = 0;  // 0: 1025 for m <= 2, 129 for m == 3
  int refinements = 2;

  int resolve_points(int m) const {
    if (points_per_dim > 0) return points_per_dim;
    return m <= 2 ? 1025 : 129;
  }
};

struct TrueValueOptions {
  int theta_grid = 100001;
  int quad_atoms = 16384;
};

struct SAAProblem {
  goal::GoalSpec goal;
  goal::ParamBox box;
  dist::SourceDistribution source;
  risk::RiskFunctional risk;
  std::optional<double> true_value;     // closed form when known
  std::optional<Vector> true_theta;     // closed-form minimizer when known
  bool true_value_quadrature = false;   // else solve_true is unsupported
  TrueValueOptions true_opts;
};

struct SolveResult {
  Vector theta_star;
  double value = 0.0;
  double grid_resolution = 0.0;
  int refinement_depth = 0;
  std::optional<double> x_star;                // leftmost minimizer within the bracket
  std::optional<double> x_star_unconstrained;  // leftmost minimizer over the real line
  bool x_on_boundary = false;
};

inline double tol_opt(double value) { return 1e-6 * (1.0 + std::fabs(value)); }

// Flattens the goal variant into one batched evaluation call.
class Evaluator {
 public:
  explicit Evaluator(const goal::GoalSpec& spec) : spec_(&spec) {}

  void operator()(Span theta, const dist::Samples& samples, Vector& out) const {
    out.resize(samples.count());
    if (spec_->batch) {
      spec_->batch(theta, samples, out);
      return;
    }
    if (const auto* h = std::get_if<goal::HoelderGoal>(&spec_->family)) {
      for (std::size_t j = 0; j < samples.count(); ++j) out[j] = h->g(theta, samples.row(j));
      return;
    }
    if (const auto* c = std::get_if<goal::CustomGoal>(&spec_->family)) {
      for (std::size_t j = 0; j < samples.count(); ++j) out[j] = c->g(theta, samples.row(j));
      return;
    }
    const auto& pl = std::get<goal::PLGoal>(spec_->family);
    pl.T.apply(theta, t_image_);
    const int d = samples.dim;
    shifted_.resize(static_cast<std::size_t>(d));
    for (std::size_t j = 0; j < samples.count(); ++j) {
      Span z = samples.row(j);
      for (int i = 0; i < d; ++i)
        shifted_[static_cast<std::size_t>(i)] = t_image_[static_cast<std::size_t>(i)] + z[i];
      Span s(shifted_.data(), shifted_.size());
      double total = 0.0;
      for (const auto& cell : pl.cells)
        if (goal::detail::pl_indicator(cell, s) != 0.0) total += cell.value(s);
      out[j] = total;
    }
  }

 private:
  const goal::GoalSpec* spec_;
  mutable Vector t_image_, shifted_;
};

namespace detail {

// Left/right empirical alpha-quantiles and the exact tail average, obtained
// by selection rather than a full sort. Permutes the scratch buffer.
struct AvarStats {
  double avar = 0.0;
  double q_left = 0.0;
  double q_right = 0.0;
};

inline AvarStats avar_stats(Vector& scratch, double alpha) {
  const std::size_t n = scratch.size();
  const double nd = static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::ceil(alpha * nd));  // 1-based index
  if (k < 1) k = 1;
  if (k > n) k = n;
  auto mid = scratch.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(scratch.begin(), mid, scratch.end());
  AvarStats s;
  s.q_left = *mid;
  double tail = 0.0;
  for (auto it = mid + 1; it != scratch.end(); ++it) tail += *it;
  double atom_weight = static_cast<double>(k) / nd - alpha;
  s.avar = (atom_weight * s.q_left + tail / nd) / (1.0 - alpha);
  // Right quantile differs from the left one only when alpha*n is integral.
  if (std::fabs(static_cast<double>(k) / nd - alpha) < 1e-12 && k < n) {
    double m = std::numeric_limits<double>::infinity();
    for (auto it = mid + 1; it != scratch.end(); ++it) m = std::min(m, *it);
    s.q_right = m;
  } else {
    s.q_right = s.q_left;
  }
  return s;
}

// h(x) = (1/n) sum phi_star(v_j + x) - x for the AVaR transform.
inline double avar_oce_objective(const Vector& values, double alpha, double x) {
  double acc = 0.0;
  for (double v : values) acc += std::max(v + x, 0.0);
  return acc / ((1.0 - alpha) * static_cast<double>(values.size())) - x;
}

struct InnerOce {
  double value = 0.0;
  double x_left = 0.0;        // leftmost constrained minimizer
  double x_left_unc = 0.0;    // leftmost unconstrained minimizer
  bool boundary = false;
};

inline InnerOce avar_inner_oce(const Vector& values, Vector& scratch, double alpha, double x_l,
                               double x_u) {
  scratch = values;
  AvarStats s = avar_stats(scratch, alpha);
  InnerOce r;
  double m_lo = -s.q_right, m_hi = -s.q_left;  // minimizer interval of h
  r.x_left_unc = m_lo;
  if (m_lo > x_u) {
    r.value = avar_oce_objective(values, alpha, x_u);
    r.x_left = x_u;
    r.boundary = true;
  } else if (m_hi < x_l) {
    r.value = avar_oce_objective(values, alpha, x_l);
    r.x_left = x_l;
    r.boundary = true;
  } else {
    r.value = s.avar;
    r.x_left = std::max(m_lo, x_l);
  }
  return r;
}

inline InnerOce smooth_inner_oce(const Vector& values, const risk::PhiFamily& phi, double x_l,
                                 double x_u) {
  dist::EmpiricalDistribution ed{values};
  risk::OceResult res = risk::oce_value(ed, phi, x_l, x_u);
  InnerOce r;
  r.value = res.value;
  r.x_left = res.argmin;
  r.boundary = (res.argmin <= x_l + 1e-12 || res.argmin >= x_u - 1e-12);
  // Unconstrained minimizer: widen the bracket until it is interior.
  double lo = x_l, hi = x_u, width = std::max(1.0, hi - lo);
  for (int round = 0; round < 60; ++round) {
    risk::OceResult wide = risk::oce_value(ed, phi, lo, hi);
    if (wide.argmin > lo + 1e-9 * width && wide.argmin < hi - 1e-9 * width) {
      r.x_left_unc = wide.argmin;
      return r;
    }
    lo -= width;
    hi += width;
    width *= 2.0;
  }
  r.x_left_unc = r.x_left;
  return r;
}

struct GridBest {
  Vector theta;
  double value = std::numeric_limits<double>::infinity();
  double resolution = 0.0;
};

// Dense lexicographic grid scan followed by dyadic refinement rounds around
// the incumbent. Ties keep the lexicographically first grid point.
template <typename Objective>
GridBest grid_minimize(const goal::ParamBox& box, const GridOptions& opt, Objective&& f) {
  const int m = box.dim();
  const int points = opt.resolve_points(m);
  Vector lo = box.lower, hi = box.upper;
  GridBest best;
  best.theta = box.lower;
  bool any = false;
  Vector theta(static_cast<std::size_t>(m));
  std::vector<int> index(static_cast<std::size_t>(m), 0);
  for (int round = 0; round <= opt.refinements; ++round) {
    std::fill(index.begin(), index.end(), 0);
    while (true) {
      for (int i = 0; i < m; ++i) {
        double frac = points == 1 ? 0.0
                                  : static_cast<double>(index[static_cast<std::size_t>(i)]) /
                                        static_cast<double>(points - 1);
        theta[static_cast<std::size_t>(i)] =
            lo[static_cast<std::size_t>(i)] +
            frac * (hi[static_cast<std::size_t>(i)] - lo[static_cast<std::size_t>(i)]);
      }
      double value = f(static_cast<const Vector&>(theta));
      if (!any || value < best.value) {
        best.value = value;
        best.theta = theta;
        any = true;
      }
      int axis = m - 1;
      while (axis >= 0 && ++index[static_cast<std::size_t>(axis)] == points) {
        index[static_cast<std::size_t>(axis)] = 0;
        --axis;
      }
      if (axis < 0) break;
    }
    // Shrink to one grid step around the incumbent, clipped to the box.
    double step = 0.0;
    for (int i = 0; i < m; ++i) {
      auto idx = static_cast<std::size_t>(i);
      double h = points == 1 ? 0.0 : (hi[idx] - lo[idx]) / static_cast<double>(points - 1);
      step = std::max(step, h);
      double center = best.theta[idx];
      lo[idx] = std::max(box.lower[idx], center - h);
      hi[idx] = std::min(box.upper[idx], center + h);
    }
    best.resolution = step;
  }
  return best;
}

// Risk value of the sample values at a fixed theta; fast in-place paths that
// match risk::apply on the empirical distribution.
inline double reduce_risk(const risk::RiskFunctional& risk_fn, const Vector& values,
                          Vector& scratch) {
  const double n = static_cast<double>(values.size());
  switch (risk_fn.kind) {
    case risk::RiskFunctional::Kind::expectation: {
      double acc = 0.0;
      for (double v : values) acc += v;
      return acc / n;
    }
    case risk::RiskFunctional::Kind::semideviation: {
      double acc = 0.0;
      for (double v : values) acc += v;
      double mean = acc / n;
      double dev = 0.0;
      const double p = risk_fn.semidev.p;
      if (p == 1.0) {
        for (double v : values)
          if (v > mean) dev += v - mean;
      } else {
        for (double v : values)
          if (v > mean) dev += std::pow(v - mean, p);
      }
      return mean + risk_fn.semidev.a * std::pow(dev / n, 1.0 / p);
    }
    case risk::RiskFunctional::Kind::divergence: {
      const risk::PhiFamily& phi = *risk_fn.phi;
      if (phi.alpha) {
        scratch = values;
        return avar_stats(scratch, *phi.alpha).avar;
      }
      double mean_abs = 0.0, mean_star = 0.0;
      for (double v : values) {
        mean_abs += std::fabs(v);
        mean_star += phi.phi_star(std::fabs(v));
      }
      risk::OceBracket b =
          risk::oce_minimizer_interval(phi, phi.x0, mean_abs / n, mean_star / n, 1.0);
      dist::EmpiricalDistribution ed{values};
      return risk::oce_value(ed, phi, b.lo, b.hi).value;
    }
  }
  throw config_error("reduce_risk: unknown risk kind");
}

}  // namespace detail

// Empirical SAA solve: minimizes the plug-in risk of {G(theta, Z_j)} over the
// dyadically refined grid on the box. Deterministic given its inputs.
inline SolveResult solve_empirical(const SAAProblem& problem, const dist::Samples& samples,
                                   const GridOptions& grid = {}) {
  if (samples.count() == 0) throw config_error("solve_empirical: samples must be nonempty");
  Evaluator eval(problem.goal);
  Vector values, scratch;
  auto objective = [&](const Vector& theta) {
    eval(Span(theta.data(), theta.size()), samples, values);
    return detail::reduce_risk(problem.risk, values, scratch);
  };
  detail::GridBest best = detail::grid_minimize(problem.box, grid, objective);
  SolveResult result;
  result.theta_star = best.theta;
  result.value = best.value;
  result.grid_resolution = best.resolution;
  result.refinement_depth = grid.refinements;
  return result;
}

// Joint (theta, x) solve of the OCE representation restricted to
// Theta x [x_l, x_u]. Records the leftmost inner minimizer at theta*.
inline SolveResult solve_oce_joint(const SAAProblem& problem, const dist::Samples& samples,
                                   double x_l, double x_u, const GridOptions& grid = {}) {
  if (problem.risk.kind != risk::RiskFunctional::Kind::divergence)
    throw config_error("solve_oce_joint: needs a divergence risk functional");
  if (!(x_l <= x_u)) throw config_error("solve_oce_joint: interval must satisfy x_l <= x_u");
  if (samples.count() == 0) throw config_error("solve_oce_joint: samples must be nonempty");
  const risk::PhiFamily& phi = *problem.risk.phi;
  Evaluator eval(problem.goal);
  Vector values, scratch;
  auto inner = [&](const Vector& theta) {
    eval(Span(theta.data(), theta.size()), samples, values);
    return phi.alpha ? detail::avar_inner_oce(values, scratch, *phi.alpha, x_l, x_u)
                     : detail::smooth_inner_oce(values, phi, x_l, x_u);
  };
  auto objective = [&](const Vector& theta) { return inner(theta).value; };
  detail::GridBest best = detail::grid_minimize(problem.box, grid, objective);
  detail::InnerOce at_best = inner(best.theta);
  SolveResult result;
  result.theta_star = best.theta;
  result.value = best.value;
  result.grid_resolution = best.resolution;
  result.refinement_depth = grid.refinements;
  result.x_star = at_best.x_left;
  result.x_star_unconstrained = at_best.x_left_unc;
  result.x_on_boundary = at_best.boundary;
  return result;
}

struct TrueValue {
  double value = 0.0;
  double tolerance = 0.0;
  std::string method;  // closed-form | quadrature
  std::optional<Vector> theta_star;
};

// Population optimal value: the closed form when the problem carries one,
// otherwise the quantile-grid quadrature oracle (one-dimensional sources).
inline TrueValue solve_true_detailed(const SAAProblem& problem) {
  if (problem.true_value) return {*problem.true_value, 1e-8, "closed-form", problem.true_theta};
  if (!problem.true_value_quadrature)
    throw unsupported_error("solve_true: problem has no true-optimum oracle");
  if (problem.source.dim != 1)
    throw unsupported_error("solve_true: quadrature oracle supports one-dimensional sources");

  const int atoms = problem.true_opts.quad_atoms;
  dist::Samples grid_atoms;
  grid_atoms.dim = 1;
  grid_atoms.data.resize(static_cast<std::size_t>(atoms));
  for (int k = 0; k < atoms; ++k) {
    double u = (static_cast<double>(k) + 0.5) / static_cast<double>(atoms);
    grid_atoms.data[static_cast<std::size_t>(k)] = problem.source.marginal_icdf(u);
  }

  Evaluator eval(problem.goal);
  Vector values, scratch;
  double spread = 0.0;
  auto objective = [&](const Vector& theta) {
    eval(Span(theta.data(), theta.size()), grid_atoms, values);
    auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    spread = std::max(spread, *mx - *mn);
    return detail::reduce_risk(problem.risk, values, scratch);
  };
  GridOptions opt;
  opt.points_per_dim = problem.true_opts.theta_grid;
  opt.refinements = 2;
  detail::GridBest best = detail::grid_minimize(problem.box, opt, objective);

  double tail_factor = 1.0;
  if (problem.risk.kind == risk::RiskFunctional::Kind::divergence && problem.risk.phi->alpha)
    tail_factor = 1.0 / (1.0 - *problem.risk.phi->alpha);
  double tolerance = spread / static_cast<double>(atoms) * tail_factor + tol_opt(best.value);
  return {best.value, tolerance, "quadrature", best.theta};
}

inline double solve_true(const SAAProblem& problem) { return solve_true_detailed(problem).value; }

}  // namespace saarb::saa
