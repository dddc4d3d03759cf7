#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "saarb/errors.hpp"
#include "saarb/harness.hpp"

namespace saarb::reports {

// Floats are printed with 12 significant digits throughout the CSV contract.
inline std::string fmt(double v) {
  if (v == 0.0) v = 0.0;  // normalize negative zero
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot open output file " + path.string());
  return out;
}

// replications.csv: n,rep,value,error,b_event,bp_event,a_event,x_star,x_in_interval
inline void write_replications_csv(const std::filesystem::path& path,
                                   const harness::ReplicationSet& set, bool divergence,
                                   bool semidev) {
  std::ofstream out = open_out(path);
  out << "n,rep,value,error,theta_dist,b_event,bp_event,a_event,x_star,x_in_interval\n";
  for (const auto& r : set.records) {
    std::string bp = semidev ? std::string(r.bp_event ? "1" : "0") : std::string();
    std::string a = divergence ? std::string(r.a_event ? "1" : "0") : std::string();
    std::string x = divergence ? fmt(r.x_star) : std::string();
    std::string x_in = divergence ? std::string(r.x_in_interval ? "1" : "0") : std::string();
    std::string dist_col = std::isnan(r.theta_dist) ? std::string() : fmt(r.theta_dist);
    out << r.n << ',' << r.rep << ',' << fmt(r.value) << ',' << fmt(r.error) << ',' << dist_col
        << ',' << (r.b_event ? 1 : 0) << ',' << bp << ',' << a << ',' << x << ',' << x_in
        << '\n';
  }
}

// tails.csv: n,eps,p_hat,se,bound,status,verdict
inline void write_tails_csv(const std::filesystem::path& path,
                            const std::vector<harness::TailRow>& rows) {
  std::ofstream out = open_out(path);
  out << "n,eps,p_hat,se,bound,status,verdict\n";
  for (const auto& r : rows) {
    out << r.n << ',' << fmt(r.eps) << ',' << fmt(r.p_hat) << ',' << fmt(r.se) << ',';
    if (r.status == bounds::Status::applicable) out << fmt(r.bound);
    out << ',' << bounds::to_string(r.status) << ',' << r.verdict << '\n';
  }
}

// tightness.csv: n,q50,q90,q99
inline void write_tightness_csv(const std::filesystem::path& path,
                                const harness::TightnessReport& report) {
  std::ofstream out = open_out(path);
  out << "n,q50,q90,q99\n";
  for (const auto& r : report.rows)
    out << r.n << ',' << fmt(r.q50) << ',' << fmt(r.q90) << ',' << fmt(r.q99) << '\n';
}

inline void write_summary_json(const std::filesystem::path& path,
                               const harness::ExperimentConfig& cfg,
                               const harness::ReplicationSet& set,
                               const std::vector<harness::TailRow>& tails,
                               const harness::TightnessReport* tightness) {
  nlohmann::json j;
  j["problem"] = cfg.problem.goal.name;
  j["seed"] = cfg.seed;
  j["replications"] = cfg.replications;
  j["n_list"] = cfg.n_list;
  j["true_value"] = set.pre.true_value;
  j["true_value_tolerance"] = set.pre.true_tolerance;
  j["true_value_method"] = set.pre.true_method;
  j["norm_xi_2"] = set.pre.norm_xi_2;
  int dominated = 0, violated = 0, not_applicable = 0;
  for (const auto& r : tails) {
    if (r.verdict == "dominated") ++dominated;
    else if (r.verdict == "violated") ++violated;
    else ++not_applicable;
  }
  j["verdicts"] = {{"dominated", dominated},
                   {"violated", violated},
                   {"bound-not-applicable", not_applicable}};
  if (set.pre.interval) {
    j["interval"] = {{"x_l", set.pre.interval->x_l},
                     {"x_u", set.pre.interval->x_u},
                     {"x0", set.pre.interval->x0},
                     {"delta", set.pre.interval->delta}};
  }
  if (tightness) {
    j["tightness"] = {{"pass", tightness->pass}, {"worst_ratio", tightness->worst_ratio}};
  }
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace saarb::reports
