#include <doctest.h>

#include <cmath>

#include "saarb/entropy.hpp"
#include "test_util.hpp"

using namespace saarb;

TEST_SUITE("entropy") {

TEST_CASE("hoelder entropy bound closed form") {
  // Frozen against long-double arithmetic of 2 delta sqrt((3m+1)ln2 + (m/b)ln(2/delta)).
  CHECK(entropy::j_hoelder(1, 1.0, 0.5).value ==
        doctest::Approx(2.0393339803376179).epsilon(1e-12));
  CHECK(entropy::j_hoelder(1, 1.0, 0.25).value ==
        doctest::Approx(1.1013662270016746).epsilon(1e-12));
  CHECK(entropy::j_hoelder(1, 1.0, 1e-9).value < 1e-7);  // vanishes with delta
  CHECK_THROWS_AS(entropy::j_hoelder(1, 1.0, 0.6), std::domain_error);
  CHECK_THROWS_AS(entropy::j_hoelder(1, 1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(entropy::j_hoelder(1, 1.5, 0.25), std::domain_error);
  CHECK_THROWS_AS(entropy::j_hoelder(0, 1.0, 0.25), std::domain_error);
}

TEST_CASE("piecewise-linear entropy bound closed form") {
  CHECK(entropy::j_pl(1, {1}, 1.0).value == doctest::Approx(11.265147530751262).epsilon(1e-12));
  CHECK(entropy::j_pl(1, {1}, 0.5).value == doctest::Approx(6.1050032487196413).epsilon(1e-12));
  CHECK(entropy::j_pl(1, {1}, 1e-9).value < 1e-6);
  CHECK_THROWS_AS(entropy::j_pl(1, {1}, 1.5), std::domain_error);
  CHECK_THROWS_AS(entropy::j_pl(0, {}, 0.5), std::domain_error);
  CHECK_THROWS_AS(entropy::j_pl(2, {1}, 0.5), std::domain_error);
  CHECK_THROWS_AS(entropy::j_pl(1, {0}, 0.5), std::domain_error);
}

TEST_CASE("semideviation transform") {
  auto zero = [](double) { return 0.0; };
  CHECK(entropy::j_semidev_transform(zero, 1.0, 0.5).value ==
        doctest::Approx(3.4727587844595034).epsilon(1e-12));
  auto base = [](double d) { return entropy::j_hoelder(1, 1.0, d).value; };
  CHECK(entropy::j_semidev_transform(base, 1.0, 0.5).value ==
        doctest::Approx(7.0049888520059275).epsilon(1e-12));
  CHECK_THROWS_AS(entropy::j_semidev_transform(zero, 1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(entropy::j_semidev_transform(zero, 1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(entropy::j_semidev_transform(zero, 0.5, 0.5), std::domain_error);
  // Monotone in the base-J argument.
  auto one = [](double) { return 1.0; };
  CHECK(entropy::j_semidev_transform(one, 1.0, 0.5).value >
        entropy::j_semidev_transform(zero, 1.0, 0.5).value);
}

TEST_CASE("divergence transform") {
  CHECK(entropy::j_divergence_transform(0.0, std::exp(-1.0)).value ==
        doctest::Approx(1.9046627057984174).epsilon(1e-12));
  CHECK(entropy::j_divergence_transform(1.0, 0.25).value ==
        doctest::Approx(2.8859760905174384).epsilon(1e-12));
  CHECK(entropy::j_divergence_transform(0.0, 1e-12).value < 1e-5);
  CHECK_THROWS_AS(entropy::j_divergence_transform(0.0, 0.4), std::domain_error);
  CHECK(entropy::j_divergence_transform(2.0, 0.25).value >
        entropy::j_divergence_transform(1.0, 0.25).value);
}

TEST_CASE("explicit VC-subgraph covering bound") {
  CHECK(entropy::vc_covering_bound(2, 0.5) ==
        doctest::Approx(128.0 * std::exp(2.0)).epsilon(1e-12));
  CHECK(entropy::vc_covering_bound(2, 1.0 - 1e-12) ==
        doctest::Approx(32.0 * std::exp(2.0)).epsilon(1e-9));
  CHECK_THROWS_AS(entropy::vc_covering_bound(1, 0.5), std::domain_error);
  CHECK_THROWS_AS(entropy::vc_covering_bound(2, 1.0), std::domain_error);
  // Haussler's L1 companion and the VC-index helpers.
  CHECK(entropy::haussler_l1_covering_bound(2, 0.5) ==
        doctest::Approx(2.0 * std::exp(1.0) * 4.0 * std::exp(1.0)).epsilon(1e-12));
  CHECK(entropy::vc_index_pl_cell(3) == 4);
  CHECK(entropy::vc_index_affine() == 4);
}

TEST_CASE("numeric entropy integral") {
  // Constant integrand: J = delta * sqrt(ln 2).
  auto flat = [](double) { return std::numbers::ln2; };
  CHECK(entropy::j_numeric(flat, 1.0).value ==
        doctest::Approx(0.8325546111576978).epsilon(1e-8));
  // Polynomial covering bound (K/eps)^v: compare against an independent
  // Simpson quadrature of the tamed integrand.
  double v = 1.0, big_k = std::exp(1.0);
  auto log_bound = [v, big_k](double eps) {
    return std::numbers::ln2 + v * std::log(big_k / eps);
  };
  double numeric = entropy::j_numeric(log_bound, 1.0).value;
  double oracle = testutil::simpson(
      [&](double u) { return u <= 0.0 ? 0.0 : 2.0 * u * std::sqrt(log_bound(u * u)); }, 0.0, 1.0,
      20000);
  CHECK(numeric == doctest::Approx(oracle).epsilon(1e-6));
  CHECK_THROWS_AS(entropy::j_numeric(flat, 0.0), std::domain_error);
  // A log bound that is not integrable near zero fails the quadrature.
  auto bad = [](double eps) { return 1.0 / (eps * eps); };
  CHECK_THROWS_AS(entropy::j_numeric(bad, 1.0), divergence_error);
}

TEST_CASE("numeric integral of the VC bound sits under the closed-form majorant") {
  for (int vc : {2, 3, 4}) {
    for (double delta : {0.25, 0.5}) {
      auto log_bound = [vc](double eps) {
        return std::log(2.0 * entropy::vc_covering_bound(vc, eps));
      };
      double numeric = entropy::j_numeric(log_bound, delta).value;
      // 2 N(eps) <= (K/eps)^v with v = 2(V-1), K = 4 sqrt(e) (2 e V)^{1/v}.
      double v = 2.0 * (vc - 1);
      double big_k = 4.0 * std::sqrt(std::numbers::e) *
                     std::pow(2.0 * std::numbers::e * vc, 1.0 / v);
      double majorant = delta * entropy::entropy_integral_upper(v, big_k / delta);
      CHECK(numeric <= majorant + 1e-9);
    }
  }
}

TEST_CASE("entropy integral inequality holds on the (v, K) grid") {
  for (double v : {1.0, 2.0, 4.0, 8.0}) {
    for (double big_k : {std::exp(1.0), std::exp(2.0), 10.0}) {
      double left = testutil::simpson(
          [&](double u) {
            return u <= 0.0 ? 0.0 : 2.0 * u * std::sqrt(v * std::log(big_k / (u * u)));
          },
          0.0, 1.0, 20000);
      CHECK(left <= entropy::entropy_integral_upper(v, big_k) + 1e-6);
    }
  }
  // The specific v=1, K=e case; frozen against e * Gamma(3/2, 1).
  double left = testutil::simpson(
      [&](double u) { return u <= 0.0 ? 0.0 : 2.0 * u * std::sqrt(1.0 - 2.0 * std::log(u)); },
      0.0, 1.0, 50000);
  CHECK(left == doctest::Approx(1.3789360780706561).epsilon(1e-5));
  CHECK(left <= 2.0);
  CHECK(entropy::entropy_integral_upper(1.0, std::exp(1.0)) == doctest::Approx(2.0));
  CHECK(entropy::entropy_integral_upper(1.0, std::exp(2.0)) ==
        doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(entropy::entropy_integral_upper(4.0, std::exp(1.0)) == doctest::Approx(4.0));
  CHECK_THROWS_AS(entropy::entropy_integral_upper(0.5, 3.0), std::domain_error);
  CHECK_THROWS_AS(entropy::entropy_integral_upper(1.0, 2.0), std::domain_error);
}

TEST_CASE("all J values are nonnegative, monotone in delta, and vanish at zero") {
  double prev_h = 0.0, prev_p = 0.0;
  for (double delta : {1e-6, 1e-3, 0.01, 0.1, 0.25, 0.5}) {
    double jh = entropy::j_hoelder(2, 0.7, delta).value;
    double jp = entropy::j_pl(2, {1, 3}, delta).value;
    CHECK(jh >= 0.0);
    CHECK(jp >= 0.0);
    CHECK(jh >= prev_h);
    CHECK(jp >= prev_p);
    prev_h = jh;
    prev_p = jp;
  }
}

}  // TEST_SUITE
