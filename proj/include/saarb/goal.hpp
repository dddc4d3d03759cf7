#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "saarb/dist.hpp"
#include "saarb/errors.hpp"
#include "saarb/rng.hpp"

namespace saarb::goal {

using Span = std::span<const double>;

// Compact box Theta in R^m.
struct ParamBox {
  Vector lower, upper;

  ParamBox() = default;
  ParamBox(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size() || lower.empty())
      throw config_error("ParamBox: lower/upper must be nonempty and equally sized");
    for (std::size_t i = 0; i < lower.size(); ++i)
      if (lower[i] > upper[i]) throw config_error("ParamBox: lower must be <= upper");
  }

  int dim() const { return static_cast<int>(lower.size()); }

  // Euclidean distance of opposite corners.
  double diameter() const {
    double s = 0.0;
    for (std::size_t i = 0; i < lower.size(); ++i) {
      double d = upper[i] - lower[i];
      s += d * d;
    }
    return std::sqrt(s);
  }

  bool contains(Span theta, double slack = 1e-12) const {
    if (theta.size() != lower.size()) return false;
    for (std::size_t i = 0; i < lower.size(); ++i)
      if (theta[i] < lower[i] - slack || theta[i] > upper[i] + slack) return false;
    return true;
  }

  // Visits all 2^m corners; m is small by contract.
  template <typename F>
  void for_each_corner(F&& f) const {
    std::size_t m = lower.size();
    Vector corner(m);
    for (std::uint64_t mask = 0; mask < (1ULL << m); ++mask) {
      for (std::size_t i = 0; i < m; ++i)
        corner[i] = (mask >> i) & 1ULL ? upper[i] : lower[i];
      f(static_cast<const Vector&>(corner));
    }
  }
};

using GoalFn = std::function<double(Span theta, Span z)>;
using ScalarFieldFn = std::function<double(Span z)>;

// Batched evaluation hook: fills out[j] = G(theta, z_j) for a whole sample
// block in one call. Optional; the generic path loops over GoalFn.
using BatchGoalFn =
    std::function<void(Span theta, const dist::Samples& samples, Vector& out)>;

// Goal family with Hoelder-continuous paths: |G(t,z) - G(s,z)| <= C(z) d(t,s)^beta.
struct HoelderGoal {
  double beta = 1.0;
  GoalFn g;
  ScalarFieldFn hoelder_coeff;
  Vector base_point;
};

// w . x + offset on R^d.
struct AffineMap {
  Vector w;
  double offset = 0.0;

  double operator()(Span x) const {
    double s = offset;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
    return s;
  }
};

// Linear T : R^m -> R^d, row-major.
struct LinearOperator {
  int rows = 1, cols = 1;
  Vector coef;  // rows x cols

  static LinearOperator identity(int n) {
    LinearOperator t;
    t.rows = t.cols = n;
    t.coef.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) t.coef[static_cast<std::size_t>(i) * n + i] = 1.0;
    return t;
  }

  void apply(Span theta, Vector& out) const {
    out.assign(static_cast<std::size_t>(rows), 0.0);
    for (int r = 0; r < rows; ++r) {
      double s = 0.0;
      for (int c = 0; c < cols; ++c) s += coef[static_cast<std::size_t>(r) * cols + c] * theta[c];
      out[static_cast<std::size_t>(r)] = s;
    }
  }
};

// One cell of the piecewise-linear representation: the value map Lambda_i
// (with offset b_i) gated by the conjunction of s_i half-space indicators.
struct PLCell {
  AffineMap value;                    // Lambda_i(.) + b_i
  std::vector<AffineMap> constraints; // L_il(.) + a_il
  std::vector<bool> open;             // true: (0,inf), false: [0,inf)
};

struct PLGoal {
  std::vector<PLCell> cells;
  LinearOperator T;  // R^m -> R^d

  int cell_count() const { return static_cast<int>(cells.size()); }
  std::vector<int> constraint_counts() const {
    std::vector<int> s;
    s.reserve(cells.size());
    for (const auto& c : cells) s.push_back(static_cast<int>(c.constraints.size()));
    return s;
  }
};

struct CustomGoal {
  GoalFn g;
};

enum class EnvelopeProvenance { hoelder_built, pl_built, user };

// Strictly positive xi with sup_theta |G(theta,.)| <= xi.
struct EnvelopeSpec {
  ScalarFieldFn xi;
  EnvelopeProvenance provenance = EnvelopeProvenance::user;
  std::optional<double> constant;  // set when xi is constant (closed-form moments)

  double operator()(Span z) const { return xi(z); }
};

struct GoalSpec {
  std::string name;
  std::variant<HoelderGoal, PLGoal, CustomGoal> family;
  EnvelopeSpec envelope;
  BatchGoalFn batch;  // optional fast path
};

namespace detail {

// min over l of the cell's indicators; {0,1}-valued.
inline double pl_indicator(const PLCell& cell, Span shifted) {
  for (std::size_t l = 0; l < cell.constraints.size(); ++l) {
    double v = cell.constraints[l](shifted);
    bool in = cell.open[l] ? (v > 0.0) : (v >= 0.0);
    if (!in) return 0.0;
  }
  return 1.0;
}

inline double pl_value(const PLGoal& g, Span theta, Span z, Vector& scratch) {
  g.T.apply(theta, scratch);
  for (std::size_t i = 0; i < scratch.size(); ++i) scratch[i] += z[i];
  Span shifted(scratch.data(), scratch.size());
  double total = 0.0;
  for (const auto& cell : g.cells)
    if (pl_indicator(cell, shifted) != 0.0) total += cell.value(shifted);
  return total;
}

}  // namespace detail

inline double evaluate(const GoalSpec& spec, const ParamBox& box, Span theta, Span z) {
  if (!box.contains(theta)) throw std::domain_error("evaluate: theta outside the parameter box");
  if (const auto* h = std::get_if<HoelderGoal>(&spec.family)) return h->g(theta, z);
  if (const auto* c = std::get_if<CustomGoal>(&spec.family)) return c->g(theta, z);
  const auto& pl = std::get<PLGoal>(spec.family);
  Vector scratch;
  return detail::pl_value(pl, theta, z, scratch);
}

struct Probe {
  Vector theta;
  Vector z;
};

// Deterministic probe set: a Weyl low-discrepancy sequence over the box and
// the source's quantile cube, interleaved with hashed pseudo-random draws.
inline std::vector<Probe> make_probes(const ParamBox& box, const dist::SourceDistribution& source,
                                      std::size_t count, std::uint64_t seed) {
  std::vector<Probe> probes;
  probes.reserve(count);
  const int m = box.dim(), d = source.dim;
  // Irrational strides from square roots of primes.
  static const double primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  rng::Stream stream = rng::Stream::derive(seed, {0x70726f6265ULL});
  for (std::size_t k = 0; k < count; ++k) {
    Probe p;
    p.theta.resize(static_cast<std::size_t>(m));
    p.z.resize(static_cast<std::size_t>(d));
    bool weyl = (k % 2 == 0);
    for (int i = 0; i < m + d; ++i) {
      double u;
      if (weyl) {
        double stride = std::sqrt(primes[i % 12]);
        u = std::fmod(static_cast<double>(k / 2 + 1) * stride, 1.0);
        u = std::min(std::max(u, 1e-9), 1.0 - 1e-9);
      } else {
        u = stream.next_unit_open();
      }
      if (i < m)
        p.theta[static_cast<std::size_t>(i)] =
            box.lower[static_cast<std::size_t>(i)] +
            u * (box.upper[static_cast<std::size_t>(i)] - box.lower[static_cast<std::size_t>(i)]);
      else
        p.z[static_cast<std::size_t>(i - m)] = source.marginal_icdf(u);
    }
    probes.push_back(std::move(p));
  }
  return probes;
}

struct PLViolation {
  std::size_t probe_index;
  std::string kind;  // "disjointness" | "partition"
  int active_cells;
};

struct ValidationReport {
  bool pass = true;
  std::vector<PLViolation> violations;
  std::vector<std::string> warnings;
  std::size_t probes_checked = 0;
};

// Checks the cell indicators for disjointness (at most one active) and
// partition of unity (exactly one active) on every probe.
inline ValidationReport validate_pl(const PLGoal& g, const std::vector<Probe>& probes,
                                    bool source_is_discrete = false) {
  if (probes.empty()) throw config_error("validate_pl: probe set must be nonempty");
  ValidationReport report;
  report.probes_checked = probes.size();
  Vector scratch;
  bool warned_boundary = false;
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const Probe& p = probes[k];
    g.T.apply(Span(p.theta.data(), p.theta.size()), scratch);
    for (std::size_t i = 0; i < scratch.size(); ++i) scratch[i] += p.z[i];
    Span shifted(scratch.data(), scratch.size());
    int active = 0;
    for (const auto& cell : g.cells) {
      if (detail::pl_indicator(cell, shifted) != 0.0) ++active;
      if (source_is_discrete && !warned_boundary) {
        for (std::size_t l = 0; l < cell.constraints.size(); ++l) {
          if (!cell.open[l] && std::fabs(cell.constraints[l](shifted)) < 1e-15) {
            report.warnings.push_back(
                "discrete source atom lands on a closed-cell boundary; the boundary "
                "null-set condition does not hold automatically");
            warned_boundary = true;
          }
        }
      }
    }
    if (active > 1) {
      report.violations.push_back({k, "disjointness", active});
      report.pass = false;
    } else if (active == 0) {
      report.violations.push_back({k, "partition", active});
      report.pass = false;
    }
  }
  return report;
}

// Envelope for Hoelder goals: xi = C(.) Delta(Theta)^beta + |G(base,.)|,
// floored at 1e-12 so the envelope stays strictly positive.
inline EnvelopeSpec build_envelope_hoelder(const HoelderGoal& g, const ParamBox& box) {
  if (!box.contains(Span(g.base_point.data(), g.base_point.size())))
    throw config_error("build_envelope_hoelder: base point must lie in the box");
  double scale = std::pow(box.diameter(), g.beta);
  GoalFn eval = g.g;
  ScalarFieldFn coeff = g.hoelder_coeff;
  Vector base = g.base_point;
  EnvelopeSpec spec;
  spec.provenance = EnvelopeProvenance::hoelder_built;
  spec.xi = [eval, coeff, base, scale](Span z) {
    double raw = coeff(z) * scale + std::fabs(eval(Span(base.data(), base.size()), z));
    return std::max(raw, 1e-12);
  };
  return spec;
}

// sup over the box of |Lambda_i(T(theta)) + b_i|; affine, so attained at a corner.
// A vanishing supremum is bumped to 1 to keep the indicator-class envelope positive.
inline double pl_eta(const PLGoal& g, const PLCell& cell, const ParamBox& box) {
  double sup = 0.0;
  Vector image;
  box.for_each_corner([&](const Vector& corner) {
    g.T.apply(Span(corner.data(), corner.size()), image);
    sup = std::max(sup, std::fabs(cell.value(Span(image.data(), image.size()))));
  });
  return sup == 0.0 ? 1.0 : sup;
}

// xi = sum_i (|Lambda_i(.)| + eta_i), taking the constant 1 as the bounded
// envelope of each indicator class.
inline EnvelopeSpec build_envelope_pl(const PLGoal& g, const ParamBox& box) {
  std::vector<std::pair<AffineMap, double>> parts;
  parts.reserve(g.cells.size());
  for (const auto& cell : g.cells) {
    AffineMap linear_only = cell.value;
    linear_only.offset = 0.0;  // eta already accounts for the offset via b_i
    parts.emplace_back(linear_only, pl_eta(g, cell, box));
  }
  EnvelopeSpec spec;
  spec.provenance = EnvelopeProvenance::pl_built;
  spec.xi = [parts](Span z) {
    double s = 0.0;
    for (const auto& [lin, eta] : parts) s += std::fabs(lin(z)) + eta;
    return std::max(s, 1e-12);
  };
  return spec;
}

}  // namespace saarb::goal
