#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "saarb/bounds.hpp"
#include "saarb/dist.hpp"
#include "saarb/errors.hpp"
#include "saarb/saa.hpp"

namespace saarb::harness {

struct EpsSpec {
  std::vector<double> values;
  bool scale_inv_sqrt_n = false;

  double effective(double c, double n) const { return scale_inv_sqrt_n ? c / std::sqrt(n) : c; }
};

struct ExperimentConfig {
  saa::SAAProblem problem;
  std::vector<std::size_t> n_list;
  int replications = 100;
  EpsSpec eps;
  std::vector<double> t_grid = bounds::default_t_grid();
  double delta = 1.0;  // compactification delta for divergence problems
  bounds::RemainderMode remainder_mode = bounds::RemainderMode::bounded;
  std::uint64_t seed = 1;
  saa::GridOptions grid;
  int threads = 0;          // 0: hardware concurrency; SAARB_THREADS caps it
  double bound_scale = 1.0; // test fixture multiplier on theoretical bounds
  std::function<double(double)> j_base;  // delta -> J(F^Theta, xi, delta) bound

  void validate() const {
    if (replications < 1) throw config_error("mc: replications must be >= 1");
    if (n_list.empty()) throw config_error("mc: n_list must be nonempty");
    for (std::size_t i = 0; i + 1 < n_list.size(); ++i)
      if (n_list[i] >= n_list[i + 1]) throw config_error("mc: n_list must be strictly ascending");
    for (std::size_t n : n_list)
      if (n < 1) throw config_error("mc: sample sizes must be >= 1");
    for (double e : eps.values)
      if (!(e > 0.0)) throw config_error("mc: eps values must be positive");
    if (!j_base) throw config_error("mc: no entropy-bound source configured");
  }
};

// Population-level quantities shared by every replication and by the bound
// table: envelope norms, event thresholds, and the compactification interval.
struct Precomputed {
  double true_value = 0.0;
  double true_tolerance = 0.0;
  std::string true_method;
  std::optional<Vector> true_theta;
  double norm_xi_2 = 0.0;
  double mean_xi = 0.0;
  double mean_xi_sq = 0.0;
  double var_xi = 0.0;
  double var_xi_sq = 0.0;
  double j_quarter = 0.0;
  // semideviation chain
  double norm_xi_p_2 = 0.0;
  double var_xi_p_sq = 0.0;
  double mean_xi_p_sq = 0.0;
  double j_small = 0.0;
  double shift_c = 1.0;  // E[xi] v 1
  // divergence chain
  std::optional<bounds::CompactInterval> interval;
  double mean_phi_star_xi = 0.0;
  double var_phi_star_xi = 0.0;
  double norm_xi_div_2 = 0.0;
  double mean_xi_div_sq = 0.0;
  double var_xi_div_sq = 0.0;
};

namespace detail {

inline dist::MomentTable composite_moments(const saa::SAAProblem& problem,
                                           const std::function<double(double)>& transform,
                                           const std::vector<double>& orders) {
  const goal::EnvelopeSpec& env = problem.goal.envelope;
  std::optional<double> constant;
  if (env.constant) constant = transform(*env.constant);
  dist::EnvelopeFn fn = [&env, &transform](std::span<const double> z) {
    return transform(env.xi(z));
  };
  return dist::envelope_moments(fn, problem.source, orders, constant);
}

inline int resolve_threads(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* cap = std::getenv("SAARB_THREADS")) {
    int c = std::atoi(cap);
    if (c >= 1) n = std::min(n, c);
  }
  return n;
}

}  // namespace detail

inline Precomputed precompute(const ExperimentConfig& cfg) {
  const saa::SAAProblem& problem = cfg.problem;
  Precomputed pre;
  saa::TrueValue tv = saa::solve_true_detailed(problem);
  pre.true_value = tv.value;
  pre.true_tolerance = tv.tolerance;
  pre.true_method = tv.method;
  pre.true_theta = tv.theta_star;

  bool chebyshev = cfg.remainder_mode == bounds::RemainderMode::chebyshev;
  std::vector<double> orders = chebyshev ? std::vector<double>{1.0, 2.0, 4.0}
                                         : std::vector<double>{1.0, 2.0};
  dist::MomentTable base =
      detail::composite_moments(problem, [](double x) { return x; }, orders);
  pre.mean_xi = base.norm(1.0);
  pre.norm_xi_2 = base.norm(2.0);
  pre.mean_xi_sq = pre.norm_xi_2 * pre.norm_xi_2;
  pre.var_xi = std::max(0.0, pre.mean_xi_sq - pre.mean_xi * pre.mean_xi);
  pre.var_xi_sq = chebyshev ? base.var_of_square() : 0.0;
  pre.j_quarter = cfg.j_base(0.25);

  if (problem.risk.kind == risk::RiskFunctional::Kind::semideviation) {
    double p = problem.risk.semidev.p;
    pre.shift_c = std::max(pre.mean_xi, 1.0);
    double c = pre.shift_c;
    dist::MomentTable aux = detail::composite_moments(
        problem, [c, p](double x) { return std::pow(x + c, p + 1.0); },
        chebyshev ? std::vector<double>{2.0, 4.0} : std::vector<double>{2.0});
    pre.norm_xi_p_2 = aux.norm(2.0);
    pre.mean_xi_p_sq = pre.norm_xi_p_2 * pre.norm_xi_p_2;
    pre.var_xi_p_sq = chebyshev ? aux.var_of_square() : 0.0;
    pre.j_small = cfg.j_base(1.0 / std::pow(2.0, p + 4.0));
  }

  if (problem.risk.kind == risk::RiskFunctional::Kind::divergence) {
    const risk::PhiFamily& phi = *problem.risk.phi;
    dist::MomentTable star = detail::composite_moments(
        problem, [&phi](double x) { return phi.phi_star(x); }, {1.0, 2.0});
    pre.mean_phi_star_xi = star.norm(1.0);
    double mean_star_sq = star.norm(2.0) * star.norm(2.0);
    pre.var_phi_star_xi = std::max(0.0, mean_star_sq - pre.mean_phi_star_xi * pre.mean_phi_star_xi);
    pre.interval = bounds::compactification_interval(phi, phi.x0, pre.mean_xi,
                                                     pre.mean_phi_star_xi, cfg.delta);
    double x_u = pre.interval->x_u;
    dist::MomentTable div = detail::composite_moments(
        problem,
        [&phi, x_u](double x) { return bounds::divergence_envelope_value(phi, x, x_u); },
        chebyshev ? std::vector<double>{2.0, 4.0} : std::vector<double>{2.0});
    pre.norm_xi_div_2 = div.norm(2.0);
    pre.mean_xi_div_sq = pre.norm_xi_div_2 * pre.norm_xi_div_2;
    pre.var_xi_div_sq = chebyshev ? div.var_of_square() : 0.0;
  }
  return pre;
}

struct ReplicationRecord {
  std::size_t n = 0;
  int rep = 0;
  double value = 0.0;
  double error = 0.0;
  bool b_event = true;
  bool bp_event = true;
  bool a_event = true;
  double x_star = std::numeric_limits<double>::quiet_NaN();
  bool x_in_interval = true;
  // Distance of the empirical minimizer to the true one, when the latter is
  // known; recorded for diagnostics, never asserted.
  double theta_dist = std::numeric_limits<double>::quiet_NaN();
};

struct ReplicationSet {
  std::vector<ReplicationRecord> records;  // ordered by (n, rep)
  Precomputed pre;
};

// R independent replications per n; a pure function of (config, seed),
// independent of the worker count.
inline ReplicationSet run_replications(const ExperimentConfig& cfg) {
  cfg.validate();
  const saa::SAAProblem& problem = cfg.problem;
  ReplicationSet set;
  set.pre = precompute(cfg);
  const Precomputed& pre = set.pre;
  const auto reps = static_cast<std::size_t>(cfg.replications);
  set.records.resize(cfg.n_list.size() * reps);

  const bool divergence = problem.risk.kind == risk::RiskFunctional::Kind::divergence;
  const bool semidev = problem.risk.kind == risk::RiskFunctional::Kind::semideviation;
  const goal::EnvelopeSpec& env = problem.goal.envelope;
  const double p_order = semidev ? problem.risk.semidev.p : 1.0;
  const double shift_c = pre.shift_c;

  auto worker_task = [&](std::size_t task) {
    std::size_t n_idx = task / reps;
    int rep = static_cast<int>(task % reps);
    std::size_t n = cfg.n_list[n_idx];
    rng::Stream stream = rng::Stream::derive(cfg.seed, {static_cast<std::uint64_t>(n),
                                                        static_cast<std::uint64_t>(rep)});
    dist::Samples samples = dist::sample_with_stream(problem.source, n, stream);

    ReplicationRecord rec;
    rec.n = n;
    rec.rep = rep;
    saa::SolveResult solved;
    if (divergence) {
      solved = saa::solve_oce_joint(problem, samples, pre.interval->x_l, pre.interval->x_u,
                                    cfg.grid);
      rec.x_star = *solved.x_star_unconstrained;
      rec.x_in_interval = rec.x_star >= pre.interval->x_l && rec.x_star <= pre.interval->x_u;
    } else {
      solved = saa::solve_empirical(problem, samples, cfg.grid);
    }
    rec.value = solved.value;
    rec.error = std::fabs(solved.value - pre.true_value);
    if (pre.true_theta && pre.true_theta->size() == solved.theta_star.size()) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < solved.theta_star.size(); ++i) {
        double d = solved.theta_star[i] - (*pre.true_theta)[i];
        d2 += d * d;
      }
      rec.theta_dist = std::sqrt(d2);
    }

    // Sample-mean inequalities defining the good events.
    double sum_xi = 0.0, sum_xi_sq = 0.0, sum_star = 0.0, sum_xi_p_sq = 0.0;
    const double nd = static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) {
      double x = env.xi(samples.row(j));
      sum_xi += x;
      sum_xi_sq += x * x;
      if (divergence) sum_star += problem.risk.phi->phi_star(x);
      if (semidev) {
        double xp = std::pow(x + shift_c, p_order + 1.0);
        sum_xi_p_sq += xp * xp;
      }
    }
    rec.b_event = sum_xi_sq / nd <= 2.0 * pre.mean_xi_sq;
    if (semidev) rec.bp_event = sum_xi_p_sq / nd <= 2.0 * pre.mean_xi_p_sq;
    if (divergence)
      rec.a_event = sum_xi / nd <= pre.mean_xi + cfg.delta &&
                    sum_star / nd <= pre.mean_phi_star_xi + cfg.delta;
    set.records[task] = rec;
  };

  const std::size_t total = set.records.size();
  int workers = detail::resolve_threads(cfg.threads);
  if (workers <= 1 || total <= 1) {
    for (std::size_t t = 0; t < total; ++t) worker_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        try {
          for (std::size_t t = next.fetch_add(1); t < total && !failed.load();
               t = next.fetch_add(1))
            worker_task(t);
        } catch (...) {
          if (!failed.exchange(true)) first_error = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failed.load()) std::rethrow_exception(first_error);
  }
  return set;
}

struct TailEstimate {
  double p_hat = 0.0;
  double se = 0.0;
};

// p_hat = #{error >= eps} / R with the binomial standard error.
inline TailEstimate empirical_tail(const std::vector<double>& errors, double eps) {
  if (errors.empty()) throw config_error("empirical_tail: errors must be nonempty");
  double count = 0.0;
  for (double e : errors)
    if (e >= eps) count += 1.0;
  double r = static_cast<double>(errors.size());
  double p = count / r;
  return {p, std::sqrt(p * (1.0 - p) / r)};
}

// Theoretical bound for one (n, eps) cell at the best grid t.
inline std::pair<double, bounds::TailBoundResult> cell_bound(const ExperimentConfig& cfg,
                                                             const Precomputed& pre, double n,
                                                             double eps) {
  const saa::SAAProblem& problem = cfg.problem;
  auto bound_fn = [&](double t) -> bounds::TailBoundResult {
    switch (problem.risk.kind) {
      case risk::RiskFunctional::Kind::expectation: {
        bounds::RiskNeutralInputs in;
        in.n = n;
        in.t = t;
        in.eps = eps;
        in.norm_xi_2 = pre.norm_xi_2;
        in.j_quarter = pre.j_quarter;
        in.remainder = cfg.remainder_mode == bounds::RemainderMode::bounded
                           ? 0.0
                           : std::clamp(pre.var_xi_sq / (n * pre.mean_xi_sq * pre.mean_xi_sq),
                                        0.0, 1.0);
        return bounds::risk_neutral_tail_bound(in);
      }
      case risk::RiskFunctional::Kind::semideviation: {
        bounds::SemideviationInputs in;
        in.n = n;
        in.t = t;
        in.eps = eps;
        in.p = problem.risk.semidev.p;
        in.a = problem.risk.semidev.a;
        in.norm_xi_2 = pre.norm_xi_2;
        in.norm_xi_p_2 = pre.norm_xi_p_2;
        in.j_quarter = pre.j_quarter;
        in.j_small = pre.j_small;
        if (cfg.remainder_mode == bounds::RemainderMode::chebyshev) {
          in.remainder_xi =
              std::clamp(pre.var_xi_sq / (n * pre.mean_xi_sq * pre.mean_xi_sq), 0.0, 1.0);
          in.remainder_xi_p =
              std::clamp(pre.var_xi_p_sq / (n * pre.mean_xi_p_sq * pre.mean_xi_p_sq), 0.0, 1.0);
        }
        return bounds::semidev_tail_bound(in);
      }
      case risk::RiskFunctional::Kind::divergence: {
        bounds::DivergenceInputs in;
        in.n = n;
        in.t = t;
        in.eps = eps;
        in.norm_xi_div_2 = pre.norm_xi_div_2;
        in.j_quarter = pre.j_quarter;
        in.remainder_a = bounds::a_event_remainder(pre.var_xi, pre.var_phi_star_xi, n, cfg.delta,
                                                   cfg.remainder_mode);
        // B event over 2 xi_div: the scale cancels in the defining inequality,
        // so the Chebyshev estimate uses xi_div's own moments.
        in.remainder_b = cfg.remainder_mode == bounds::RemainderMode::bounded
                             ? 0.0
                             : std::clamp(pre.var_xi_div_sq /
                                              (n * pre.mean_xi_div_sq * pre.mean_xi_div_sq),
                                          0.0, 1.0);
        return bounds::divergence_tail_bound(in);
      }
    }
    throw config_error("cell_bound: unknown risk kind");
  };
  return bounds::optimize_t(bound_fn, cfg.t_grid);
}

struct TailRow {
  std::size_t n = 0;
  double eps = 0.0;
  double p_hat = 0.0;
  double se = 0.0;
  double bound = std::numeric_limits<double>::quiet_NaN();
  double t_star = 0.0;
  bounds::Status status = bounds::Status::applicable;
  std::string verdict;  // dominated | violated | bound-not-applicable
  double threshold_eps = 0.0;
};

// Dominance verdicts per (n, eps): dominated iff p_hat <= bound + 3 SE for
// applicable cells. The true-value tolerance conservatively shifts eps before
// the bound is evaluated.
inline std::vector<TailRow> compare_bounds(const ExperimentConfig& cfg,
                                           const ReplicationSet& set) {
  std::vector<TailRow> rows;
  const Precomputed& pre = set.pre;
  const auto reps = static_cast<std::size_t>(cfg.replications);
  for (std::size_t n_idx = 0; n_idx < cfg.n_list.size(); ++n_idx) {
    std::size_t n = cfg.n_list[n_idx];
    std::vector<double> errors;
    errors.reserve(reps);
    for (std::size_t r = 0; r < reps; ++r) errors.push_back(set.records[n_idx * reps + r].error);
    for (double c : cfg.eps.values) {
      double eps = cfg.eps.effective(c, static_cast<double>(n));
      TailRow row;
      row.n = n;
      row.eps = eps;
      TailEstimate tail = empirical_tail(errors, eps);
      row.p_hat = tail.p_hat;
      row.se = tail.se;
      double eps_for_bound = std::max(eps - pre.true_tolerance, eps * 0.5);
      auto [t_star, result] = cell_bound(cfg, pre, static_cast<double>(n), eps_for_bound);
      row.t_star = t_star;
      row.status = result.status;
      row.threshold_eps = result.threshold_eps;
      if (result.status == bounds::Status::applicable) {
        row.bound = result.bound_value * cfg.bound_scale;
        row.verdict = row.p_hat <= row.bound + 3.0 * row.se ? "dominated" : "violated";
      } else {
        row.verdict = "bound-not-applicable";
      }
      rows.push_back(row);
    }
  }
  return rows;
}

struct TightnessRow {
  std::size_t n = 0;
  double q50 = 0.0, q90 = 0.0, q99 = 0.0;
};

struct TightnessReport {
  std::vector<TightnessRow> rows;
  bool pass = true;
  double worst_ratio = 0.0;
};

// Quantiles of sqrt(n) |error| per n; passes when each quantile level varies
// by less than a factor 3 across the n grid.
inline TightnessReport tightness_diagnostic(const ExperimentConfig& cfg,
                                            const ReplicationSet& set) {
  if (cfg.n_list.size() < 3)
    throw config_error("tightness_diagnostic: need at least 3 sample sizes");
  if (cfg.replications < 500)
    throw config_error("tightness_diagnostic: need at least 500 replications");
  TightnessReport report;
  const auto reps = static_cast<std::size_t>(cfg.replications);
  std::vector<std::vector<double>> scaled(cfg.n_list.size());
  for (std::size_t n_idx = 0; n_idx < cfg.n_list.size(); ++n_idx) {
    std::vector<double>& v = scaled[n_idx];
    v.reserve(reps);
    double root_n = std::sqrt(static_cast<double>(cfg.n_list[n_idx]));
    for (std::size_t r = 0; r < reps; ++r)
      v.push_back(root_n * set.records[n_idx * reps + r].error);
    std::sort(v.begin(), v.end());
    dist::EmpiricalDistribution ed{v};
    report.rows.push_back({cfg.n_list[n_idx], ed.quantile(0.5), ed.quantile(0.9),
                           ed.quantile(0.99)});
  }
  auto level = [&](int which, const TightnessRow& row) {
    return which == 0 ? row.q50 : which == 1 ? row.q90 : row.q99;
  };
  for (int which = 0; which < 3; ++which) {
    double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
    for (const auto& row : report.rows) {
      mn = std::min(mn, level(which, row));
      mx = std::max(mx, level(which, row));
    }
    if (mx <= 1e-12) continue;  // degenerate problems: all quantiles at zero
    double ratio = mn > 0.0 ? mx / mn : std::numeric_limits<double>::infinity();
    report.worst_ratio = std::max(report.worst_ratio, ratio);
    if (!(ratio < 3.0)) report.pass = false;
  }
  return report;
}

}  // namespace saarb::harness
