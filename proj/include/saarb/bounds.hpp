#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "saarb/dist.hpp"
#include "saarb/errors.hpp"
#include "saarb/risk.hpp"

namespace saarb::bounds {

enum class Status { applicable, below_threshold, n_too_small };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::applicable: return "applicable";
    case Status::below_threshold: return "below-threshold";
    case Status::n_too_small: return "n-too-small";
  }
  return "?";
}

// One evaluated tail bound: the probability bound itself (clamped to [0,1]),
// the eps threshold above which the bound applies, the minimal usable n, and the
// itemized terms for reporting.
struct TailBoundResult {
  Status status = Status::applicable;
  double bound_value = 1.0;
  double threshold_eps = 0.0;
  double min_n = 0.0;
  double remainder = 0.0;
  std::vector<std::pair<std::string, double>> components;

  double component(const std::string& key) const {
    for (const auto& [k, v] : components)
      if (k == key) return v;
    throw config_error("TailBoundResult: unknown component " + key);
  }
};

enum class RemainderMode { bounded, chebyshev };

// P(complement of B_n^xi): zero for bounded envelopes, otherwise the
// Chebyshev estimate Var[xi^2] / (n E[xi^2]^2) clamped to [0,1].
inline double remainder_prob(const dist::MomentTable& moments, double n, RemainderMode mode) {
  if (mode == RemainderMode::bounded) return 0.0;
  if (!moments.has(4.0))
    throw config_error("remainder_prob: chebyshev mode needs the 4th-order moment");
  double l2 = moments.norm(2.0);
  double mean_sq = l2 * l2;
  double value = moments.var_of_square() / (n * mean_sq * mean_sq);
  return std::clamp(value, 0.0, 1.0);
}

// Expected-error bound 16 sqrt(2) ||xi||_2 J(1/2) / sqrt(n).
inline double expected_error_bound(double n, double norm_xi_2, double j_half) {
  return 16.0 * std::sqrt(2.0) * norm_xi_2 * j_half / std::sqrt(n);
}

// eta_{t,n} = ||xi||/sqrt(n) + 32 sqrt(2) (1+t) ||xi|| J(1/4) / sqrt(n).
inline double eta_threshold(double t, double n, double norm_xi_2, double j_quarter) {
  return norm_xi_2 / std::sqrt(n) +
         32.0 * std::sqrt(2.0) * (1.0 + t) * norm_xi_2 * j_quarter / std::sqrt(n);
}

struct RiskNeutralInputs {
  double n = 0.0;
  double t = 1.0;
  double eps = 0.0;
  double norm_xi_2 = 0.0;
  double j_quarter = 0.0;
  double remainder = 0.0;  // from remainder_prob
};

// Exponential deviation bound for the risk-neutral SAA:
// exp(-t^2 sqrt(n) eps / (8 (t+1)(t+28) ||xi||)) + remainder,
// valid when eps > eta_{t,n} and n >= ||xi||^2 / 2.
inline TailBoundResult risk_neutral_tail_bound(const RiskNeutralInputs& in) {
  TailBoundResult r;
  r.min_n = in.norm_xi_2 * in.norm_xi_2 / 2.0;
  r.threshold_eps = eta_threshold(in.t, in.n, in.norm_xi_2, in.j_quarter);
  double expo = std::exp(-in.t * in.t * std::sqrt(in.n) * in.eps /
                         (8.0 * (in.t + 1.0) * (in.t + 28.0) * in.norm_xi_2));
  r.remainder = in.remainder;
  r.components = {{"exp_term", expo}, {"remainder", in.remainder}, {"eta", r.threshold_eps}};
  r.bound_value = std::min(1.0, expo + in.remainder);
  if (in.n < r.min_n)
    r.status = Status::n_too_small;
  else if (!(in.eps > r.threshold_eps))
    r.status = Status::below_threshold;
  else
    r.status = Status::applicable;
  return r;
}

struct SemideviationInputs {
  double n = 0.0;
  double t = 1.0;
  double eps = 0.0;
  double p = 1.0;
  double a = 1.0;
  double norm_xi_2 = 0.0;    // ||xi||_2
  double norm_xi_p_2 = 0.0;  // ||xi_p||_2 with xi_p = (xi + (E[xi] v 1))^{p+1}
  double j_quarter = 0.0;    // J(F^Theta, xi, 1/4)
  double j_small = 0.0;      // J(F^Theta, xi, 1/2^{p+4})
  double remainder_xi = 0.0;
  double remainder_xi_p = 0.0;
};

// Two-term bound for mean upper semideviations plus the two remainder
// probabilities.
inline TailBoundResult semidev_tail_bound(const SemideviationInputs& in) {
  TailBoundResult r;
  double j_gate = 1.0 + 32.0 * std::sqrt(2.0) * in.j_quarter;
  r.min_n = std::max(in.norm_xi_p_2 * in.norm_xi_p_2 / 2.0, j_gate * j_gate);
  double bracket = 1.0 + std::sqrt(in.p + 6.0) + std::pow(2.0, in.p + 3.0) * in.j_small;
  r.threshold_eps = 2.0 * (1.0 + in.a) * std::pow(32.0, 1.0 / in.p) *
                    std::pow(in.t + 1.0, 1.0 / in.p) * std::pow(in.norm_xi_p_2, 1.0 / in.p) /
                    std::pow(in.n, 1.0 / (2.0 * in.p)) * std::pow(bracket, 1.0 / in.p);
  double exp1 = std::exp(-in.t * in.t * std::sqrt(in.n) * in.eps /
                         (16.0 * (in.t + 1.0) * (in.t + 28.0) * in.norm_xi_2));
  double exp2 = std::exp(-in.t * in.t * std::sqrt(in.n) * std::pow(in.eps, in.p) /
                         (std::pow(2.0, in.p + 3.0) * std::pow(in.a, in.p) * (in.t + 1.0) *
                          (in.t + 28.0) * in.norm_xi_p_2));
  r.remainder = in.remainder_xi + in.remainder_xi_p;
  r.components = {{"exp_term_base", exp1},
                  {"exp_term_aux", exp2},
                  {"remainder_xi", in.remainder_xi},
                  {"remainder_xi_p", in.remainder_xi_p},
                  {"threshold", r.threshold_eps}};
  r.bound_value = std::min(1.0, exp1 + exp2 + r.remainder);
  if (in.n < r.min_n)
    r.status = Status::n_too_small;
  else if (!(in.eps > r.threshold_eps))
    r.status = Status::below_threshold;
  else
    r.status = Status::applicable;
  return r;
}

// [x_l, x_u]: the interval guaranteed to contain the OCE shift minimizer on
// the good sample event.
struct CompactInterval {
  double x_l = 0.0;
  double x_u = 0.0;
  double x0 = 1.5;
  double delta = 1.0;
};

inline CompactInterval compactification_interval(const risk::PhiFamily& phi, double x0,
                                                 double mean_xi, double mean_phi_star_xi,
                                                 double delta) {
  risk::OceBracket b = risk::oce_minimizer_interval(phi, x0, mean_xi, mean_phi_star_xi, delta);
  return {b.lo, b.hi, x0, delta};
}

struct DivergenceInputs {
  double n = 0.0;
  double t = 1.0;
  double eps = 0.0;
  double norm_xi_div_2 = 0.0;  // ||xi_{x0,xi,delta}||_2
  double j_quarter = 0.0;      // J(F^Theta, xi, 1/4)
  double remainder_a = 0.0;    // P(complement of A_{n,delta})
  double remainder_b = 0.0;    // P(complement of B_n^{2 xi_{x0,xi,delta}})
};

// Deviation bound for divergence risk measures:
// exp(-t^2 sqrt(n) eps / (16 (t+1)(t+28) ||xi_div||)) + P(A fails) + P(B fails),
// valid when n >= 2 ||xi_div||^2 and eps exceeds the stated threshold.
inline TailBoundResult divergence_tail_bound(const DivergenceInputs& in) {
  TailBoundResult r;
  r.min_n = 2.0 * in.norm_xi_div_2 * in.norm_xi_div_2;
  r.threshold_eps =
      in.norm_xi_div_2 / std::sqrt(in.n) *
      (2.0 + 32.0 * (in.t + 1.0) *
                 (4.0 * in.j_quarter + 5.0 * std::sqrt(std::numbers::ln2)));
  double expo = std::exp(-in.t * in.t * std::sqrt(in.n) * in.eps /
                         (16.0 * (in.t + 1.0) * (in.t + 28.0) * in.norm_xi_div_2));
  r.remainder = in.remainder_a + in.remainder_b;
  r.components = {{"exp_term", expo},
                  {"remainder_a_event", in.remainder_a},
                  {"remainder_b_event", in.remainder_b},
                  {"threshold", r.threshold_eps}};
  r.bound_value = std::min(1.0, expo + r.remainder);
  if (in.n < r.min_n)
    r.status = Status::n_too_small;
  else if (!(in.eps > r.threshold_eps))
    r.status = Status::below_threshold;
  else
    r.status = Status::applicable;
  return r;
}

// Composite envelope for the divergence chain:
// xi_div = [phi_star_rderiv(xi + x_u) + 1] sqrt(xi^2 + x_u^2).
inline double divergence_envelope_value(const risk::PhiFamily& phi, double xi_value, double x_u) {
  return (phi.phi_star_rderiv(xi_value + x_u) + 1.0) *
         std::sqrt(xi_value * xi_value + x_u * x_u);
}

// Chebyshev estimate for P(complement of A_{n,delta}): a union bound of two
// one-sided terms, Var[xi]/(n delta^2) + Var[phi_star(xi)]/(n delta^2).
inline double a_event_remainder(double var_xi, double var_phi_star_xi, double n, double delta,
                                RemainderMode mode) {
  if (mode == RemainderMode::bounded) return 0.0;
  double value = (var_xi + var_phi_star_xi) / (n * delta * delta);
  return std::clamp(value, 0.0, 1.0);
}

// Picks the grid t with the smallest applicable bound; below-threshold and
// n-too-small entries are skipped. Falls back to the first grid point's
// result when nothing is applicable.
inline std::pair<double, TailBoundResult> optimize_t(
    const std::function<TailBoundResult(double)>& bound_fn, const std::vector<double>& t_grid) {
  if (t_grid.empty()) throw config_error("optimize_t: t grid must be nonempty");
  bool found = false;
  double best_t = t_grid.front();
  TailBoundResult best = bound_fn(t_grid.front());
  if (best.status == Status::applicable) found = true;
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    TailBoundResult r = bound_fn(t_grid[i]);
    if (r.status != Status::applicable) continue;
    if (!found || r.bound_value < best.bound_value) {
      best = r;
      best_t = t_grid[i];
      found = true;
    }
  }
  return {best_t, best};
}

inline std::vector<double> default_t_grid(double t_min = 0.1, double t_max = 100.0,
                                          int points = 20) {
  if (points < 1 || !(t_min > 0.0) || !(t_max >= t_min))
    throw config_error("default_t_grid: invalid grid request");
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(points));
  if (points == 1) return {t_min};
  double ratio = std::log(t_max / t_min);
  for (int i = 0; i < points; ++i)
    grid.push_back(t_min * std::exp(ratio * static_cast<double>(i) / (points - 1)));
  return grid;
}

}  // namespace saarb::bounds
