#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "saarb/entropy.hpp"
#include "saarb/errors.hpp"
#include "saarb/harness.hpp"

namespace saarb::config {

using nlohmann::json;

struct Experiment {
  harness::ExperimentConfig mc;
  std::string entropy_kind;  // hoelder | pl
  int hoelder_m = 1;
  double hoelder_beta = 1.0;
  int pl_r = 1;
  std::vector<int> pl_s;
};

namespace detail {

inline double norm2(goal::Span v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline goal::GoalSpec make_linear_product(const goal::ParamBox& box, double beta,
                                          std::optional<Vector> base_point) {
  goal::HoelderGoal h;
  h.beta = beta;
  h.g = [](goal::Span theta, goal::Span z) {
    double s = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) s += theta[i] * z[i];
    return s;
  };
  h.hoelder_coeff = [](goal::Span z) { return std::max(norm2(z), 1e-12); };
  h.base_point = base_point ? *base_point : box.lower;
  goal::GoalSpec spec;
  spec.name = "linear-product";
  spec.family = h;
  spec.batch = [](goal::Span theta, const dist::Samples& samples, Vector& out) {
    if (samples.dim == 1) {
      double t = theta[0];
      const double* z = samples.data.data();
      for (std::size_t j = 0; j < out.size(); ++j) out[j] = t * z[j];
      return;
    }
    for (std::size_t j = 0; j < out.size(); ++j) {
      goal::Span z = samples.row(j);
      double s = 0.0;
      for (std::size_t i = 0; i < theta.size(); ++i) s += theta[i] * z[i];
      out[j] = s;
    }
  };
  return spec;
}

inline goal::GoalSpec make_quadratic(const goal::ParamBox& box) {
  goal::HoelderGoal h;
  h.beta = 1.0;
  h.g = [](goal::Span theta, goal::Span z) {
    double s = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      double d = theta[i] - z[i];
      s += d * d;
    }
    return s;
  };
  double corner_norm = 0.0;
  box.for_each_corner([&](const Vector& c) {
    corner_norm = std::max(corner_norm, norm2(goal::Span(c.data(), c.size())));
  });
  h.hoelder_coeff = [corner_norm](goal::Span z) {
    return 2.0 * norm2(z) + 2.0 * corner_norm + 1e-12;
  };
  h.base_point.resize(box.lower.size());
  for (std::size_t i = 0; i < box.lower.size(); ++i)
    h.base_point[i] = 0.5 * (box.lower[i] + box.upper[i]);
  goal::GoalSpec spec;
  spec.name = "quadratic";
  spec.family = h;
  spec.batch = [](goal::Span theta, const dist::Samples& samples, Vector& out) {
    if (samples.dim == 1) {
      double t = theta[0];
      const double* z = samples.data.data();
      for (std::size_t j = 0; j < out.size(); ++j) {
        double d = t - z[j];
        out[j] = d * d;
      }
      return;
    }
    for (std::size_t j = 0; j < out.size(); ++j) {
      goal::Span z = samples.row(j);
      double s = 0.0;
      for (std::size_t i = 0; i < theta.size(); ++i) {
        double d = theta[i] - z[i];
        s += d * d;
      }
      out[j] = s;
    }
  };
  return spec;
}

inline goal::GoalSpec make_abs(const goal::ParamBox& box) {
  goal::HoelderGoal h;
  h.beta = 1.0;
  h.g = [](goal::Span theta, goal::Span z) {
    double s = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      double d = theta[i] - z[i];
      s += d * d;
    }
    return std::sqrt(s);
  };
  h.hoelder_coeff = [](goal::Span) { return 1.0; };
  h.base_point.resize(box.lower.size());
  for (std::size_t i = 0; i < box.lower.size(); ++i)
    h.base_point[i] = 0.5 * (box.lower[i] + box.upper[i]);
  goal::GoalSpec spec;
  spec.name = "abs";
  spec.family = h;
  spec.batch = [](goal::Span theta, const dist::Samples& samples, Vector& out) {
    if (samples.dim == 1) {
      double t = theta[0];
      const double* z = samples.data.data();
      for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::fabs(t - z[j]);
      return;
    }
    for (std::size_t j = 0; j < out.size(); ++j) {
      goal::Span z = samples.row(j);
      double s = 0.0;
      for (std::size_t i = 0; i < theta.size(); ++i) {
        double d = theta[i] - z[i];
        s += d * d;
      }
      out[j] = std::sqrt(s);
    }
  };
  return spec;
}

inline goal::AffineMap parse_affine(const json& j, const char* weight_key,
                                    const char* offset_key) {
  goal::AffineMap m;
  if (!j.contains(weight_key)) throw config_error(std::string("pl goal: missing ") + weight_key);
  m.w = j.at(weight_key).get<Vector>();
  m.offset = j.value(offset_key, 0.0);
  return m;
}

inline goal::GoalSpec make_pl(const json& jg, const goal::ParamBox& box, int source_dim) {
  goal::PLGoal pl;
  if (!jg.contains("cells") || !jg.at("cells").is_array() || jg.at("cells").empty())
    throw config_error("pl goal: needs a nonempty cells array");
  for (const auto& jc : jg.at("cells")) {
    goal::PLCell cell;
    cell.value = parse_affine(jc.at("lambda"), "w", "b");
    if (!jc.contains("constraints") || jc.at("constraints").empty())
      throw config_error("pl goal: every cell needs constraints");
    for (const auto& jl : jc.at("constraints")) {
      cell.constraints.push_back(parse_affine(jl, "w", "a"));
      std::string interval = jl.value("interval", "closed");
      if (interval != "closed" && interval != "open")
        throw config_error("pl goal: constraint interval must be open or closed");
      cell.open.push_back(interval == "open");
    }
    pl.cells.push_back(std::move(cell));
  }
  if (jg.contains("T") && jg.at("T").is_array()) {
    const auto& rows = jg.at("T");
    pl.T.rows = static_cast<int>(rows.size());
    pl.T.cols = box.dim();
    for (const auto& row : rows) {
      Vector r = row.get<Vector>();
      if (static_cast<int>(r.size()) != box.dim())
        throw config_error("pl goal: T rows must have m columns");
      pl.T.coef.insert(pl.T.coef.end(), r.begin(), r.end());
    }
  } else {
    if (box.dim() != source_dim)
      throw config_error("pl goal: identity T needs m == d; provide T otherwise");
    pl.T = goal::LinearOperator::identity(box.dim());
  }
  if (pl.T.rows != source_dim) throw config_error("pl goal: T must map into R^d");
  goal::GoalSpec spec;
  spec.name = "pl";
  spec.family = std::move(pl);
  return spec;
}

inline dist::SourceDistribution parse_source(const json& js) {
  std::string kind = js.value("kind", "uniform");
  int dim = js.value("dim", 1);
  if (kind == "uniform")
    return dist::SourceDistribution::uniform(js.value("lo", 0.0), js.value("hi", 1.0), dim);
  if (kind == "discrete")
    return dist::SourceDistribution::discrete(js.at("points").get<Vector>(),
                                              js.at("weights").get<Vector>(), dim);
  if (kind == "truncated-normal")
    return dist::SourceDistribution::truncated_normal(js.value("mu", 0.0), js.value("sigma", 1.0),
                                                      js.value("lo", -1.0), js.value("hi", 1.0),
                                                      dim);
  throw config_error("source.kind must be uniform, discrete or truncated-normal");
}

inline risk::RiskFunctional parse_risk(const json& jr) {
  std::string kind = jr.value("kind", "expectation");
  if (kind == "expectation") return risk::RiskFunctional::expectation();
  if (kind == "semideviation") {
    risk::SemideviationParams p;
    p.p = jr.value("p", 1.0);
    p.a = jr.value("a", 1.0);
    return risk::RiskFunctional::semideviation(p);
  }
  auto parse_phi = [&](const std::string& phi_kind) {
    if (phi_kind == "avar") {
      std::optional<double> x0;
      if (jr.contains("x0")) x0 = jr.at("x0").get<double>();
      return risk::PhiFamily::avar(jr.at("alpha").get<double>(), x0);
    }
    if (phi_kind == "entropic") return risk::PhiFamily::entropic(jr.value("x0", 2.0));
    throw config_error("risk.phi must be avar or entropic");
  };
  if (kind == "avar" || kind == "entropic") return risk::RiskFunctional::divergence(parse_phi(kind));
  if (kind == "divergence") return risk::RiskFunctional::divergence(parse_phi(jr.value("phi", "avar")));
  throw config_error("risk.kind must be expectation, semideviation, avar, entropic or divergence");
}

}  // namespace detail

inline void apply_override(json& doc, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw config_error("override must look like section.key=value: " + assignment);
  std::string path = assignment.substr(0, eq);
  std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;  // plain string
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    std::size_t dot = path.find('.', start);
    std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) throw config_error("override has an empty path segment: " + assignment);
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

namespace detail {
Experiment from_json_impl(const json& doc);
}

// Parses a whole experiment document; JSON access errors surface as
// configuration errors.
inline Experiment from_json(const json& doc) {
  try {
    return detail::from_json_impl(doc);
  } catch (const json::exception& e) {
    throw config_error(std::string("config schema error: ") + e.what());
  }
}

inline Experiment detail::from_json_impl(const json& doc) {
  Experiment ex;
  harness::ExperimentConfig& cfg = ex.mc;
  if (!doc.contains("problem")) throw config_error("config: missing problem section");
  const json& jp = doc.at("problem");

  if (!jp.contains("box")) throw config_error("config: missing problem.box");
  goal::ParamBox box(jp.at("box").at("lower").get<Vector>(),
                     jp.at("box").at("upper").get<Vector>());
  if (box.dim() > 3)
    throw config_error("config: m > 3 is not supported by the grid optimizer at desk scale");
  cfg.problem.box = box;
  cfg.problem.source = detail::parse_source(jp.value("source", json{{"kind", "uniform"}}));

  const json& jg = jp.value("goal", json{{"family", "linear-product"}});
  std::string family = jg.value("family", "linear-product");
  double beta = jg.value("beta", 1.0);
  if (family == "linear-product") {
    std::optional<Vector> base;
    if (jg.contains("base_point")) base = jg.at("base_point").get<Vector>();
    if (box.dim() != cfg.problem.source.dim)
      throw config_error("linear-product goal expects m == d");
    cfg.problem.goal = detail::make_linear_product(box, beta, base);
  } else if (family == "quadratic") {
    if (box.dim() != cfg.problem.source.dim) throw config_error("quadratic goal expects m == d");
    cfg.problem.goal = detail::make_quadratic(box);
  } else if (family == "abs") {
    if (box.dim() != cfg.problem.source.dim) throw config_error("abs goal expects m == d");
    cfg.problem.goal = detail::make_abs(box);
  } else if (family == "pl") {
    cfg.problem.goal = detail::make_pl(jg, box, cfg.problem.source.dim);
  } else {
    throw config_error("goal.family must be linear-product, quadratic, abs or pl");
  }

  cfg.problem.risk = detail::parse_risk(doc.value("risk", json{{"kind", "expectation"}}));

  // Envelope: an explicit constant or the family-built construction.
  const json& je = jp.value("envelope", json{{"kind", "built"}});
  std::string env_kind = je.value("kind", "built");
  if (env_kind == "constant") {
    double value = je.at("value").get<double>();
    if (!(value > 0.0)) throw config_error("envelope constant must be positive");
    goal::EnvelopeSpec env;
    env.constant = value;
    env.xi = [value](goal::Span) { return value; };
    env.provenance = goal::EnvelopeProvenance::user;
    cfg.problem.goal.envelope = env;
  } else if (env_kind == "built") {
    if (const auto* h = std::get_if<goal::HoelderGoal>(&cfg.problem.goal.family)) {
      cfg.problem.goal.envelope = goal::build_envelope_hoelder(*h, box);
    } else if (const auto* pl = std::get_if<goal::PLGoal>(&cfg.problem.goal.family)) {
      auto probes = goal::make_probes(box, cfg.problem.source, 10000, 0xb10bULL);
      auto report =
          goal::validate_pl(*pl, probes, cfg.problem.source.kind == dist::Kind::discrete);
      if (!report.pass)
        throw config_error("pl goal failed partition/disjointness validation on probes");
      cfg.problem.goal.envelope = goal::build_envelope_pl(*pl, box);
    } else {
      throw config_error("envelope.kind=built needs a hoelder or pl goal family");
    }
  } else {
    throw config_error("envelope.kind must be constant or built");
  }

  // True-value oracle.
  if (jp.contains("true_value")) {
    const json& jt = jp.at("true_value");
    if (jt.is_number())
      cfg.problem.true_value = jt.get<double>();
    else if (jt.is_string() && jt.get<std::string>() == "quadrature")
      cfg.problem.true_value_quadrature = true;
    else
      throw config_error("problem.true_value must be a number or \"quadrature\"");
  }
  if (jp.contains("true_theta")) {
    Vector tt = jp.at("true_theta").get<Vector>();
    if (static_cast<int>(tt.size()) != box.dim())
      throw config_error("problem.true_theta must have m entries");
    cfg.problem.true_theta = tt;
  }
  if (jp.contains("true")) {
    cfg.problem.true_opts.theta_grid = jp.at("true").value("theta_grid", 100001);
    cfg.problem.true_opts.quad_atoms = jp.at("true").value("quad_atoms", 16384);
    if (cfg.problem.true_opts.theta_grid < 2 || cfg.problem.true_opts.quad_atoms < 2)
      throw config_error("problem.true grids must be >= 2");
  }

  // Entropy-bound source.
  const json& jent = doc.value("entropy", json::object());
  std::string entropy_kind = jent.value("kind", family == "pl" ? "pl" : "hoelder");
  ex.entropy_kind = entropy_kind;
  if (entropy_kind == "hoelder") {
    if (!std::holds_alternative<goal::HoelderGoal>(cfg.problem.goal.family))
      throw config_error("entropy.kind=hoelder needs a hoelder goal family");
    int m = box.dim();
    ex.hoelder_m = m;
    ex.hoelder_beta = beta;
    cfg.j_base = [m, beta](double delta) { return entropy::j_hoelder(m, beta, delta).value; };
  } else if (entropy_kind == "pl") {
    const auto* pl = std::get_if<goal::PLGoal>(&cfg.problem.goal.family);
    if (!pl) throw config_error("entropy.kind=pl needs a pl goal family");
    int r = pl->cell_count();
    std::vector<int> s = pl->constraint_counts();
    ex.pl_r = r;
    ex.pl_s = s;
    cfg.j_base = [r, s](double delta) { return entropy::j_pl(r, s, delta).value; };
  } else {
    throw config_error("entropy.kind must be hoelder or pl");
  }

  // Grids.
  const json& jgr = doc.value("grids", json::object());
  cfg.grid.points_per_dim = jgr.value("points_per_dim", 0);
  cfg.grid.refinements = jgr.value("refinements", 2);
  if (cfg.grid.refinements < 0) throw config_error("grids.refinements must be >= 0");
  if (cfg.grid.points_per_dim < 0 || cfg.grid.points_per_dim == 1)
    throw config_error("grids.points_per_dim must be 0 (auto) or >= 2");

  // Bounds.
  const json& jb = doc.value("bounds", json::object());
  cfg.delta = jb.value("delta", 1.0);
  if (!(cfg.delta > 0.0)) throw config_error("bounds.delta must be positive");
  std::string rem = jb.value("remainder", "auto");
  bool constant_envelope = cfg.problem.goal.envelope.constant.has_value();
  if (rem == "auto") rem = constant_envelope ? "bounded" : "chebyshev";
  if (rem == "bounded") {
    // The zero-remainder simplification is proved for constant envelopes only.
    if (!constant_envelope)
      throw config_error("bounds.remainder=bounded needs a constant envelope; use chebyshev");
    cfg.remainder_mode = bounds::RemainderMode::bounded;
  } else if (rem == "chebyshev") {
    cfg.remainder_mode = bounds::RemainderMode::chebyshev;
  } else {
    throw config_error("bounds.remainder must be auto, bounded or chebyshev");
  }
  if (jb.contains("t_grid")) {
    const json& jt = jb.at("t_grid");
    if (jt.is_array()) {
      cfg.t_grid = jt.get<std::vector<double>>();
      if (cfg.t_grid.empty()) throw config_error("bounds.t_grid must be nonempty");
      for (double t : cfg.t_grid)
        if (!(t > 0.0)) throw config_error("bounds.t_grid entries must be positive");
    } else {
      cfg.t_grid = bounds::default_t_grid(jt.value("min", 0.1), jt.value("max", 100.0),
                                          jt.value("points", 20));
    }
  }

  // Monte Carlo section.
  const json& jm = doc.value("mc", json::object());
  cfg.n_list = jm.value("n_list", std::vector<std::size_t>{100});
  cfg.replications = jm.value("replications", 100);
  cfg.seed = jm.value("seed", std::uint64_t{1});
  cfg.bound_scale = jm.value("bound_scale", 1.0);
  cfg.threads = jm.value("threads", 0);
  if (jm.contains("eps")) {
    const json& jeps = jm.at("eps");
    cfg.eps.values = jeps.value("values", std::vector<double>{});
    std::string scale = jeps.value("scale", "absolute");
    if (scale == "invsqrtn")
      cfg.eps.scale_inv_sqrt_n = true;
    else if (scale != "absolute")
      throw config_error("mc.eps.scale must be absolute or invsqrtn");
  }
  cfg.validate();
  // x0 consistency for divergence risks is enforced by PhiFamily construction.
  return ex;
}

inline Experiment load_file(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw config_error("config parse error in " + path + ": " + e.what());
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return from_json(doc);
}

}  // namespace saarb::config
