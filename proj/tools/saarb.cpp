// saarb: risk-averse SAA solves, nonasymptotic deviation bounds, and the
// Monte Carlo validation harness behind one command-line entry point.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "saarb/config.hpp"
#include "saarb/entropy.hpp"
#include "saarb/quadrature.hpp"
#include "saarb/reports.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace saarb;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfigError = 2;

json solve_result_json(const saa::SolveResult& r) {
  json j;
  j["theta_star"] = r.theta_star;
  j["value"] = r.value;
  j["grid_resolution"] = r.grid_resolution;
  j["refinement_depth"] = r.refinement_depth;
  if (r.x_star) j["x_star"] = *r.x_star;
  if (r.x_star_unconstrained) j["x_star_unconstrained"] = *r.x_star_unconstrained;
  return j;
}

int cmd_solve(const config::Experiment& ex) {
  const harness::ExperimentConfig& cfg = ex.mc;
  std::size_t n = cfg.n_list.front();
  dist::Samples samples = dist::sample(cfg.problem.source, n, cfg.seed);
  saa::SolveResult result;
  if (cfg.problem.risk.kind == risk::RiskFunctional::Kind::divergence) {
    harness::Precomputed pre = harness::precompute(cfg);
    result = saa::solve_oce_joint(cfg.problem, samples, pre.interval->x_l, pre.interval->x_u,
                                  cfg.grid);
  } else {
    result = saa::solve_empirical(cfg.problem, samples, cfg.grid);
  }
  json out = solve_result_json(result);
  out["n"] = n;
  out["seed"] = cfg.seed;
  out["problem"] = cfg.problem.goal.name;
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

int cmd_bounds(const config::Experiment& ex, const fs::path& out_dir) {
  const harness::ExperimentConfig& cfg = ex.mc;
  if (cfg.eps.values.empty()) throw config_error("bounds: config has no eps grid");
  harness::Precomputed pre = harness::precompute(cfg);

  const auto kind = cfg.problem.risk.kind;
  std::string header = "n,eps,t,status,bound,threshold_eps,min_n,remainder";
  if (kind == risk::RiskFunctional::Kind::expectation) header += ",eta,exp_term";
  if (kind == risk::RiskFunctional::Kind::semideviation)
    header += ",exp_term_base,exp_term_aux,remainder_xi,remainder_xi_p";
  if (kind == risk::RiskFunctional::Kind::divergence)
    header += ",exp_term,remainder_a_event,remainder_b_event,x_l,x_u";
  header += ",chosen";

  json jrows = json::array();
  std::string csv = header + "\n";
  for (std::size_t n : cfg.n_list) {
    for (double c : cfg.eps.values) {
      double eps = cfg.eps.effective(c, static_cast<double>(n));
      auto [t_star, chosen] = harness::cell_bound(cfg, pre, static_cast<double>(n), eps);
      for (double t : cfg.t_grid) {
        auto single_grid = cfg;
        single_grid.t_grid = {t};
        auto [t_used, r] = harness::cell_bound(single_grid, pre, static_cast<double>(n), eps);
        bool is_chosen = t == t_star && r.status == bounds::Status::applicable &&
                         chosen.status == bounds::Status::applicable;
        std::string row = std::to_string(n) + ',' + reports::fmt(eps) + ',' + reports::fmt(t) +
                          ',' + bounds::to_string(r.status) + ',' +
                          (r.status == bounds::Status::applicable ? reports::fmt(r.bound_value)
                                                                  : std::string()) +
                          ',' + reports::fmt(r.threshold_eps) + ',' + reports::fmt(r.min_n) + ',' +
                          reports::fmt(r.remainder);
        json jr = {{"n", n},         {"eps", eps},
                   {"t", t},         {"status", bounds::to_string(r.status)},
                   {"bound", r.status == bounds::Status::applicable ? json(r.bound_value) : json()},
                   {"threshold_eps", r.threshold_eps},
                   {"min_n", r.min_n}, {"remainder", r.remainder}};
        if (kind == risk::RiskFunctional::Kind::expectation) {
          row += ',' + reports::fmt(r.component("eta")) + ',' + reports::fmt(r.component("exp_term"));
          jr["eta"] = r.component("eta");
          jr["exp_term"] = r.component("exp_term");
        } else if (kind == risk::RiskFunctional::Kind::semideviation) {
          for (const char* key : {"exp_term_base", "exp_term_aux", "remainder_xi", "remainder_xi_p"}) {
            row += ',' + reports::fmt(r.component(key));
            jr[key] = r.component(key);
          }
        } else {
          for (const char* key : {"exp_term", "remainder_a_event", "remainder_b_event"}) {
            row += ',' + reports::fmt(r.component(key));
            jr[key] = r.component(key);
          }
          row += ',' + reports::fmt(pre.interval->x_l) + ',' + reports::fmt(pre.interval->x_u);
          jr["x_l"] = pre.interval->x_l;
          jr["x_u"] = pre.interval->x_u;
        }
        row += std::string(",") + (is_chosen ? "1" : "0");
        jr["chosen"] = is_chosen;
        csv += row + "\n";
        jrows.push_back(jr);
      }
    }
  }

  fs::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "bounds.csv", std::ios::binary);
    out << csv;
  }
  json jdoc;
  jdoc["problem"] = cfg.problem.goal.name;
  jdoc["norm_xi_2"] = pre.norm_xi_2;
  jdoc["j_quarter"] = pre.j_quarter;
  if (pre.interval) jdoc["interval"] = {{"x_l", pre.interval->x_l}, {"x_u", pre.interval->x_u}};
  // The eps-free expected-error bound per sample size.
  json jexp = json::object();
  double j_half = cfg.j_base(0.5);
  for (std::size_t n : cfg.n_list)
    jexp[std::to_string(n)] =
        bounds::expected_error_bound(static_cast<double>(n), pre.norm_xi_2, j_half);
  jdoc["expected_error_bound"] = jexp;
  jdoc["rows"] = jrows;
  {
    std::ofstream out(out_dir / "bounds.json", std::ios::binary);
    out << jdoc.dump(2) << '\n';
  }
  std::cout << csv;
  return kExitOk;
}

int cmd_mc(const config::Experiment& ex, const fs::path& out_dir) {
  const harness::ExperimentConfig& cfg = ex.mc;
  harness::ReplicationSet set = harness::run_replications(cfg);
  std::vector<harness::TailRow> tails = harness::compare_bounds(cfg, set);
  harness::TightnessReport tightness_report;
  bool have_tightness = cfg.n_list.size() >= 3 && cfg.replications >= 500;
  if (have_tightness) tightness_report = harness::tightness_diagnostic(cfg, set);

  bool divergence = cfg.problem.risk.kind == risk::RiskFunctional::Kind::divergence;
  bool semidev = cfg.problem.risk.kind == risk::RiskFunctional::Kind::semideviation;
  fs::create_directories(out_dir);
  reports::write_replications_csv(out_dir / "replications.csv", set, divergence, semidev);
  reports::write_tails_csv(out_dir / "tails.csv", tails);
  reports::write_tightness_csv(out_dir / "tightness.csv",
                               have_tightness ? tightness_report : harness::TightnessReport{});
  reports::write_summary_json(out_dir / "summary.json", cfg, set, tails,
                              have_tightness ? &tightness_report : nullptr);

  int violated = 0;
  for (const auto& row : tails)
    if (row.verdict == "violated") ++violated;
  std::cout << "mc: " << set.records.size() << " replications, " << tails.size()
            << " tail cells, " << violated << " violated; reports in " << out_dir.string()
            << '\n';
  return violated == 0 ? kExitOk : kExitCheckFailed;
}

struct Check {
  std::string name;
  bool pass = true;
  std::string detail;
};

// Built-in numeric self-checks. SAARB_VERIFY_CORRUPT=<name> deliberately
// corrupts one check; the test suite uses it to exercise the failure path.
std::vector<Check> run_verify_checks(const std::string& only) {
  const char* corrupt_env = std::getenv("SAARB_VERIFY_CORRUPT");
  std::string corrupt = corrupt_env ? corrupt_env : "";
  std::vector<Check> checks;
  auto corrupted = [&](const std::string& name, double v) { return corrupt == name ? v + 1.0 : v; };

  auto wants = [&](const std::string& name) { return only.empty() || name == only; };

  if (wants("eq10-integral-dominance")) {
    Check c{"eq10-integral-dominance"};
    for (double v : {1.0, 2.0, 4.0, 8.0}) {
      for (double big_k : {std::exp(1.0), std::exp(2.0), 10.0}) {
        auto integrand = [v, big_k](double u) {
          double eps = u * u;
          if (eps <= 0.0) return 0.0;
          return 2.0 * u * std::sqrt(v * std::log(big_k / eps));
        };
        double left = quad::integrate_or_throw(integrand, 0.0, 1.0, 1e-9);
        double right = entropy::entropy_integral_upper(v, big_k);
        left = corrupted(c.name, left);
        if (!(left <= right + 1e-6)) {
          c.pass = false;
          c.detail = "violation at v=" + std::to_string(v) + " K=" + std::to_string(big_k);
        }
      }
    }
    checks.push_back(c);
  }

  if (wants("oce-avar-equivalence")) {
    Check c{"oce-avar-equivalence"};
    for (double alpha : {0.1, 0.5, 0.9}) {
      rng::Stream stream = rng::Stream::derive(7, {static_cast<std::uint64_t>(alpha * 100)});
      for (int rep = 0; rep < 5 && c.pass; ++rep) {
        Vector values(1000);
        for (double& v : values) v = 4.0 * stream.next_unit() - 2.0;
        dist::EmpiricalDistribution ed{values};
        risk::PhiFamily phi = risk::PhiFamily::avar(alpha);
        double oce = risk::oce_value(ed, phi, -5.0, 5.0).value;
        double closed = risk::avar_closed_form(ed, alpha);
        if (std::fabs(corrupted(c.name, oce) - closed) > 1e-8) {
          c.pass = false;
          c.detail = "oce vs avar mismatch at alpha=" + std::to_string(alpha);
        }
      }
    }
    checks.push_back(c);
  }

  if (wants("entropic-oce-closed-form")) {
    Check c{"entropic-oce-closed-form"};
    rng::Stream stream = rng::Stream::derive(11, {3});
    for (int rep = 0; rep < 5 && c.pass; ++rep) {
      Vector values(500);
      for (double& v : values) v = 2.0 * stream.next_unit() - 1.0;
      dist::EmpiricalDistribution ed{values};
      risk::PhiFamily phi = risk::PhiFamily::entropic();
      double oce = risk::oce_value(ed, phi, -20.0, 20.0).value;
      double acc = 0.0;
      for (double v : values) acc += std::exp(v);
      double closed = std::log(acc / static_cast<double>(values.size()));
      if (std::fabs(corrupted(c.name, oce) - closed) > 1e-9) {
        c.pass = false;
        c.detail = "entropic oce differs from ln-mean-exp";
      }
    }
    checks.push_back(c);
  }

  if (wants("envelope-domination")) {
    Check c{"envelope-domination"};
    goal::ParamBox box({0.0}, {1.0});
    auto source = dist::SourceDistribution::uniform(-1.0, 1.0);
    json jg = {{"family", "linear-product"}};
    auto spec = config::detail::make_linear_product(box, 1.0, std::nullopt);
    auto env = goal::build_envelope_hoelder(std::get<goal::HoelderGoal>(spec.family), box);
    auto probes = goal::make_probes(box, source, 1000, 99);
    for (const auto& p : probes) {
      double g = goal::evaluate(spec, box, goal::Span(p.theta.data(), p.theta.size()),
                                goal::Span(p.z.data(), p.z.size()));
      double xi = env.xi(goal::Span(p.z.data(), p.z.size()));
      if (!(std::fabs(corrupted(c.name, g)) <= xi + 1e-12)) {
        c.pass = false;
        c.detail = "hoelder-built envelope fails to dominate";
        break;
      }
    }
    checks.push_back(c);
  }

  if (wants("quantile-left-continuity")) {
    Check c{"quantile-left-continuity"};
    dist::EmpiricalDistribution ed{{1.0, 2.0, 3.0, 4.0, 5.0}};
    double prev = -1e300;
    for (int k = 1; k < 200 && c.pass; ++k) {
      double u = static_cast<double>(k) / 200.0;
      double q = corrupted(c.name, ed.quantile(u));
      if (q < prev) {
        c.pass = false;
        c.detail = "quantile not monotone";
      }
      prev = q;
    }
    // Left continuity at the jump points u = k/n.
    for (double u : {0.2, 0.4, 0.6, 0.8}) {
      if (ed.quantile(u) != ed.quantile(u - 1e-12)) {
        c.pass = false;
        c.detail = "quantile not left-continuous at u=" + std::to_string(u);
      }
    }
    checks.push_back(c);
  }

  if (wants("j-monotonicity")) {
    Check c{"j-monotonicity"};
    double prev = 0.0;
    for (double delta : {0.01, 0.05, 0.1, 0.25, 0.5}) {
      double j = corrupted(c.name, entropy::j_hoelder(1, 1.0, delta).value);
      if (j < prev - 1e-12) {
        c.pass = false;
        c.detail = "j_hoelder not monotone in delta";
      }
      prev = j;
    }
    prev = 0.0;
    for (double delta : {0.01, 0.05, 0.1, 0.25, 0.5, 1.0}) {
      double j = entropy::j_pl(1, {1}, delta).value;
      if (j < prev - 1e-12) {
        c.pass = false;
        c.detail = "j_pl not monotone in delta";
      }
      prev = j;
    }
    if (entropy::j_hoelder(1, 1.0, 1e-9).value > 1e-3) {
      c.pass = false;
      c.detail = "j_hoelder does not vanish as delta -> 0";
    }
    checks.push_back(c);
  }

  return checks;
}

int cmd_verify(const std::string& only) {
  std::vector<Check> checks = run_verify_checks(only);
  if (checks.empty()) {
    std::cout << "warning: no verify checks matched the filter\n";
    return kExitOk;
  }
  bool all_pass = true;
  for (const auto& c : checks) {
    std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name;
    if (!c.pass && !c.detail.empty()) std::cout << ": " << c.detail;
    std::cout << '\n';
    all_pass = all_pass && c.pass;
  }
  return all_pass ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"risk-averse SAA solver with nonasymptotic deviation bounds"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", verify_only;
  std::vector<std::string> overrides;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config_path, "experiment config (JSON)");
    if (needs_config) opt->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--set", overrides, "override config entries, e.g. mc.replications=50");
  };

  CLI::App* solve = app.add_subcommand("solve", "one SAA solve on a fresh sample");
  add_common(solve, true);
  CLI::App* bounds_cmd = app.add_subcommand("bounds", "deviation-bound table over (n, eps, t)");
  add_common(bounds_cmd, true);
  CLI::App* mc = app.add_subcommand("mc", "replicated Monte Carlo validation");
  add_common(mc, true);
  CLI::App* verify = app.add_subcommand("verify", "built-in numeric self-checks");
  verify->add_option("--only", verify_only, "run a single named check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (verify->parsed()) return cmd_verify(verify_only);
    config::Experiment ex = config::load_file(config_path, overrides);
    if (solve->parsed()) return cmd_solve(ex);
    if (bounds_cmd->parsed()) return cmd_bounds(ex, out_dir);
    if (mc->parsed()) return cmd_mc(ex, out_dir);
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::domain_error& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
  return kExitOk;
}
