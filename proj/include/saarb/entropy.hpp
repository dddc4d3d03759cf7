#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "saarb/errors.hpp"
#include "saarb/quadrature.hpp"

namespace saarb::entropy {

// A value of the entropy integral J(F, C_F, delta) with its provenance.
struct EntropyBound {
  double delta = 0.0;
  double value = 0.0;
  std::string provenance;
};

using JFn = std::function<EntropyBound(double delta)>;

// Hoelder-path bound: 2 delta sqrt((3m+1) ln 2 + (m/beta) ln(2/delta)),
// stated for delta in (0, 1/2].
inline EntropyBound j_hoelder(int m, double beta, double delta) {
  if (m < 1) throw std::domain_error("j_hoelder: m must be >= 1");
  if (!(beta > 0.0 && beta <= 1.0)) throw std::domain_error("j_hoelder: beta must lie in (0,1]");
  if (!(delta > 0.0 && delta <= 0.5))
    throw std::domain_error("j_hoelder: delta must lie in (0, 1/2]");
  double md = static_cast<double>(m);
  double inner = (3.0 * md + 1.0) * std::numbers::ln2 + (md / beta) * std::log(2.0 / delta);
  return {delta, 2.0 * delta * std::sqrt(inner),
          "hoelder(m=" + std::to_string(m) + ",beta=" + std::to_string(beta) + ")"};
}

// Piecewise-linear-path bound over r cells with s_i half-space constraints,
// stated for delta in (0, 1].
inline EntropyBound j_pl(int r, const std::vector<int>& s, double delta) {
  if (r < 1 || static_cast<int>(s.size()) != r) throw std::domain_error("j_pl: need r >= 1 cells");
  if (!(delta > 0.0 && delta <= 1.0)) throw std::domain_error("j_pl: delta must lie in (0, 1]");
  double sum_s = 0.0, sum_log = 0.0;
  for (int si : s) {
    if (si < 1) throw std::domain_error("j_pl: every s_i must be >= 1");
    sum_s += si;
    sum_log += std::log(static_cast<double>(si) + 1.0);
  }
  double rd = static_cast<double>(r);
  double inner = sum_log + (8.0 * sum_s + 30.0 * rd + 1.0) * std::numbers::ln2 +
                 2.0 * (sum_s + 3.0 * rd) * (0.5 + std::log(rd / delta));
  return {delta, 2.0 * delta * std::sqrt(inner), "pl(r=" + std::to_string(r) + ")"};
}

// Transforms a J bound for the base class into one for the semideviation
// auxiliary class: sqrt(2) 2^{p+2} J(base, delta/2^{p+2})
//                  + sqrt(2) delta [sqrt(ln 2) + 2 sqrt(ln(2^{p+4}/delta))].
inline EntropyBound j_semidev_transform(const std::function<double(double)>& base_j, double p,
                                        double delta) {
  if (!(p >= 1.0)) throw std::domain_error("j_semidev_transform: p must be >= 1");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::domain_error("j_semidev_transform: delta must lie in (0,1)");
  double scale = std::pow(2.0, p + 2.0);
  double base = base_j(delta / scale);
  double tail = std::sqrt(2.0) * delta *
                (std::sqrt(std::numbers::ln2) +
                 2.0 * std::sqrt(std::log(std::pow(2.0, p + 4.0) / delta)));
  return {delta, std::sqrt(2.0) * scale * base + tail, "semidev-transform(p=" + std::to_string(p) + ")"};
}

// Transforms a J bound for the base class into one for the OCE auxiliary
// class: sqrt(2) J + 4 delta sqrt(ln(1/delta)) + sqrt(2 ln 2) delta,
// stated for delta in (0, e^{-1}].
inline EntropyBound j_divergence_transform(double base_j_at_delta, double delta) {
  if (!(delta > 0.0 && delta <= std::exp(-1.0)))
    throw std::domain_error("j_divergence_transform: delta must lie in (0, 1/e]");
  double value = std::sqrt(2.0) * base_j_at_delta + 4.0 * delta * std::sqrt(std::log(1.0 / delta)) +
                 std::sqrt(2.0 * std::numbers::ln2) * delta;
  return {delta, value, "divergence-transform"};
}

// Explicit VC-subgraph covering bound in L2: e V (4 e^{1/2} / eps)^{2(V-1)}.
inline double vc_covering_bound(int vc_index, double eps) {
  if (vc_index < 2) throw std::domain_error("vc_covering_bound: VC index must be >= 2");
  if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("vc_covering_bound: eps must lie in (0,1)");
  double v = static_cast<double>(vc_index);
  return std::numbers::e * v *
         std::pow(4.0 * std::sqrt(std::numbers::e) / eps, 2.0 * (v - 1.0));
}

// Haussler's L1 bound for indicator classes: e V (2e/eps)^{V-1}. Documented
// helper; the pipelines go through the L2 corollary above.
inline double haussler_l1_covering_bound(int vc_index, double eps) {
  if (vc_index < 1) throw std::domain_error("haussler_l1_covering_bound: VC index must be >= 1");
  if (!(eps > 0.0 && eps < 1.0))
    throw std::domain_error("haussler_l1_covering_bound: eps must lie in (0,1)");
  double v = static_cast<double>(vc_index);
  return std::numbers::e * v * std::pow(2.0 * std::numbers::e / eps, v - 1.0);
}

// VC-index bounds for the piecewise-linear building blocks: a cell gated by
// s_i half-spaces has index at most s_i + 1; an affine value class at most 4.
inline int vc_index_pl_cell(int s_i) {
  if (s_i < 1) throw std::domain_error("vc_index_pl_cell: s_i must be >= 1");
  return s_i + 1;
}
inline constexpr int vc_index_affine() { return 4; }

// Numeric entropy integral int_0^delta sqrt(log_bound(eps)) d eps where
// log_bound(eps) >= ln(2 N(eps)). The substitution eps = delta u^2 tames the
// logarithmic singularity at zero.
inline EntropyBound j_numeric(const std::function<double(double)>& covering_log_bound,
                              double delta, double rel_tol = 1e-8) {
  if (!(delta > 0.0 && delta <= 1.0)) throw std::domain_error("j_numeric: delta must lie in (0,1]");
  auto integrand = [&](double u) {
    if (u <= 0.0) return 0.0;
    double lb = covering_log_bound(delta * u * u);
    if (lb < 0.0) lb = 0.0;
    return 2.0 * delta * u * std::sqrt(lb);
  };
  double value = quad::integrate_or_throw(integrand, 0.0, 1.0, rel_tol, 1e-14);
  return {delta, value, "numeric"};
}

// Closed-form majorant of int_0^1 sqrt(v ln(K/eps)) d eps, valid for
// v >= 1 and K >= e.
inline double entropy_integral_upper(double v, double big_k) {
  if (!(v >= 1.0)) throw std::domain_error("entropy_integral_upper: v must be >= 1");
  if (!(big_k >= std::numbers::e)) throw std::domain_error("entropy_integral_upper: K must be >= e");
  return 2.0 * std::sqrt(v * std::log(big_k));
}

}  // namespace saarb::entropy
