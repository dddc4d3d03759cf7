#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "saarb/errors.hpp"
#include "saarb/quadrature.hpp"
#include "saarb/rng.hpp"

namespace saarb {

using Vector = std::vector<double>;

namespace dist {

// Inverse standard normal CDF: Acklam's rational approximation refined with
// one Halley step against erfc, good to ~1e-15 on (0,1).
inline double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("inverse_normal_cdf: p must lie in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= phigh) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement.
  double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

enum class Kind { uniform, discrete, truncated_normal };

// The law P^Z of the d-dimensional randomness; coordinates are independent
// copies of the one-dimensional marginal.
struct SourceDistribution {
  Kind kind = Kind::uniform;
  int dim = 1;
  double lo = 0.0, hi = 1.0;      // uniform support / truncation window
  double mu = 0.0, sigma = 1.0;   // truncated normal
  Vector points, weights;         // discrete atoms
  Vector cum_weights;             // prefix sums, built by validate()

  static SourceDistribution uniform(double lo, double hi, int dim = 1) {
    SourceDistribution s;
    s.kind = Kind::uniform;
    s.lo = lo;
    s.hi = hi;
    s.dim = dim;
    s.validate();
    return s;
  }

  static SourceDistribution discrete(Vector points, Vector weights, int dim = 1) {
    SourceDistribution s;
    s.kind = Kind::discrete;
    s.points = std::move(points);
    s.weights = std::move(weights);
    s.dim = dim;
    s.validate();
    return s;
  }

  static SourceDistribution truncated_normal(double mu, double sigma, double lo, double hi,
                                             int dim = 1) {
    SourceDistribution s;
    s.kind = Kind::truncated_normal;
    s.mu = mu;
    s.sigma = sigma;
    s.lo = lo;
    s.hi = hi;
    s.dim = dim;
    s.validate();
    return s;
  }

  void validate() {
    if (dim < 1) throw config_error("distribution dimension must be >= 1");
    switch (kind) {
      case Kind::uniform:
        if (!(lo < hi)) throw config_error("uniform distribution requires lo < hi");
        break;
      case Kind::truncated_normal:
        if (!(lo < hi)) throw config_error("truncated normal requires lo < hi");
        if (!(sigma > 0.0)) throw config_error("truncated normal requires sigma > 0");
        break;
      case Kind::discrete: {
        if (points.empty() || points.size() != weights.size())
          throw config_error("discrete distribution needs matching nonempty points/weights");
        double total = 0.0;
        for (double w : weights) {
          if (w < 0.0) throw config_error("discrete weights must be nonnegative");
          total += w;
        }
        if (std::fabs(total - 1.0) > 1e-12)
          throw config_error("discrete weights must sum to 1 within 1e-12");
        cum_weights.resize(weights.size());
        std::partial_sum(weights.begin(), weights.end(), cum_weights.begin());
        cum_weights.back() = 1.0;
        break;
      }
    }
  }

  // Marginal left-continuous quantile transform; u in (0,1).
  double marginal_icdf(double u) const {
    switch (kind) {
      case Kind::uniform:
        return lo + u * (hi - lo);
      case Kind::truncated_normal: {
        double fa = normal_cdf((lo - mu) / sigma), fb = normal_cdf((hi - mu) / sigma);
        double z = inverse_normal_cdf(fa + u * (fb - fa));
        return std::clamp(mu + sigma * z, lo, hi);
      }
      case Kind::discrete: {
        auto it = std::lower_bound(cum_weights.begin(), cum_weights.end(), u);
        if (it == cum_weights.end()) --it;
        return points[static_cast<std::size_t>(it - cum_weights.begin())];
      }
    }
    return 0.0;  // unreachable
  }

  double draw1(rng::Stream& stream) const { return marginal_icdf(stream.next_unit_open()); }
};

// Row-major block of n samples of dimension d.
struct Samples {
  int dim = 1;
  Vector data;

  std::size_t count() const { return dim == 0 ? 0 : data.size() / static_cast<std::size_t>(dim); }
  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
};

inline Samples sample_with_stream(const SourceDistribution& d, std::size_t n,
                                  rng::Stream stream) {
  Samples s;
  s.dim = d.dim;
  s.data.resize(n * static_cast<std::size_t>(d.dim));
  for (double& v : s.data) v = d.draw1(stream);
  return s;
}

// i.i.d. samples of Z; a pure function of (dist, n, seed).
inline Samples sample(const SourceDistribution& d, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw config_error("sample: n must be >= 1");
  return sample_with_stream(d, n, rng::Stream::derive(seed, {0x5a'5aULL}));
}

// Sorted sample of real outcomes with left-continuous quantile access.
class EmpiricalDistribution {
 public:
  explicit EmpiricalDistribution(Vector values) : values_(std::move(values)) {
    if (values_.empty()) throw config_error("EmpiricalDistribution needs n >= 1");
    std::sort(values_.begin(), values_.end());
    mean_ = std::accumulate(values_.begin(), values_.end(), 0.0) /
            static_cast<double>(values_.size());
  }

  std::size_t size() const { return values_.size(); }
  const Vector& values() const { return values_; }
  double mean() const { return mean_; }

  // F^{<-}(u) = inf{t : F(t) >= u}: the value at 0-based index ceil(u*n) - 1.
  double quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw std::domain_error("quantile: u must lie in (0,1)");
    double k = std::ceil(u * static_cast<double>(values_.size())) - 1.0;
    auto idx = static_cast<std::size_t>(std::max(0.0, k));
    if (idx >= values_.size()) idx = values_.size() - 1;
    return values_[idx];
  }

 private:
  Vector values_;
  double mean_ = 0.0;
};

// L^p(P^Z)-norms of an envelope, keyed by order.
struct MomentTable {
  std::map<double, double> norms;  // order -> ||xi||_{P^Z, order}
  std::string method;              // closed-form | quadrature | monte-carlo
  double mc_standard_error = 0.0;
  std::uint64_t mc_samples = 0;
  std::uint64_t mc_seed = 0;

  bool has(double order) const { return norms.count(order) > 0; }

  double norm(double order) const {
    auto it = norms.find(order);
    if (it == norms.end())
      throw config_error("MomentTable: missing moment of order " + std::to_string(order));
    return it->second;
  }

  // Var[xi(Z)^2] = ||xi||_4^4 - ||xi||_2^4; requires orders 2 and 4.
  double var_of_square() const {
    double l2 = norm(2.0), l4 = norm(4.0);
    return std::max(0.0, l4 * l4 * l4 * l4 - l2 * l2 * l2 * l2);
  }
};

using EnvelopeFn = std::function<double(std::span<const double>)>;

struct MomentOptions {
  double quad_rel_tol = 1e-10;
  std::uint64_t mc_samples = 1'000'000;
  std::uint64_t mc_seed = 0x6d6f6d656e74ULL;
  bool force_monte_carlo = false;
};

// ||xi||_{P^Z,p} for each requested order p >= 1. Closed form for constant
// envelopes and discrete sources, adaptive quadrature for bounded
// one-dimensional sources, Monte Carlo (with reported standard error) beyond.
inline MomentTable envelope_moments(const EnvelopeFn& xi, const SourceDistribution& d,
                                    const std::vector<double>& orders,
                                    std::optional<double> constant_value = std::nullopt,
                                    const MomentOptions& opts = {}) {
  MomentTable table;
  for (double p : orders)
    if (p < 1.0) throw std::domain_error("envelope_moments: orders must be >= 1");

  if (constant_value) {
    table.method = "closed-form";
    for (double p : orders) table.norms[p] = std::fabs(*constant_value);
    return table;
  }

  if (d.kind == Kind::discrete && d.dim == 1) {
    table.method = "closed-form";
    for (double p : orders) {
      double acc = 0.0;
      for (std::size_t i = 0; i < d.points.size(); ++i) {
        double v = xi(std::span<const double>(&d.points[i], 1));
        acc += d.weights[i] * std::pow(std::fabs(v), p);
      }
      table.norms[p] = std::pow(acc, 1.0 / p);
    }
    return table;
  }

  if (d.dim == 1 && !opts.force_monte_carlo &&
      (d.kind == Kind::uniform || d.kind == Kind::truncated_normal)) {
    table.method = "quadrature";
    for (double p : orders) {
      auto integrand = [&](double z) {
        double v = xi(std::span<const double>(&z, 1));
        double density;
        if (d.kind == Kind::uniform) {
          density = 1.0 / (d.hi - d.lo);
        } else {
          double fa = normal_cdf((d.lo - d.mu) / d.sigma), fb = normal_cdf((d.hi - d.mu) / d.sigma);
          double t = (z - d.mu) / d.sigma;
          density = std::exp(-0.5 * t * t) / (d.sigma * std::sqrt(2.0 * std::numbers::pi) * (fb - fa));
        }
        return std::pow(std::fabs(v), p) * density;
      };
      double m = quad::integrate_or_throw(integrand, d.lo, d.hi, opts.quad_rel_tol);
      if (!std::isfinite(m)) throw divergence_error("envelope moment diverged");
      table.norms[p] = std::pow(m, 1.0 / p);
    }
    return table;
  }

  // Monte Carlo fallback (multi-dimensional sources).
  table.method = "monte-carlo";
  table.mc_samples = opts.mc_samples;
  table.mc_seed = opts.mc_seed;
  rng::Stream stream = rng::Stream::derive(opts.mc_seed, {0x6d63ULL});
  Vector z(static_cast<std::size_t>(d.dim));
  std::map<double, double> sum, sumsq;
  for (double p : orders) sum[p] = sumsq[p] = 0.0;
  for (std::uint64_t i = 0; i < opts.mc_samples; ++i) {
    for (double& c : z) c = d.draw1(stream);
    double v = std::fabs(xi(std::span<const double>(z.data(), z.size())));
    for (double p : orders) {
      double t = std::pow(v, p);
      sum[p] += t;
      sumsq[p] += t * t;
    }
  }
  double n = static_cast<double>(opts.mc_samples);
  double worst_se = 0.0;
  for (double p : orders) {
    double m = sum[p] / n;
    double var = std::max(0.0, sumsq[p] / n - m * m);
    worst_se = std::max(worst_se, std::sqrt(var / n));
    if (!std::isfinite(m)) throw divergence_error("envelope moment diverged");
    table.norms[p] = std::pow(m, 1.0 / p);
  }
  table.mc_standard_error = worst_se;
  return table;
}

}  // namespace dist
}  // namespace saarb
