#include <doctest.h>

#include <cmath>

#include "saarb/goal.hpp"

using namespace saarb;
using goal::ParamBox;
using goal::Span;

namespace {

goal::PLGoal single_cell_pl() {
  // One cell on R: indicator [0,inf) of L(x)=x, value Lambda(x)=x, T = id.
  goal::PLGoal pl;
  goal::PLCell cell;
  cell.value = {{1.0}, 0.0};
  cell.constraints.push_back({{1.0}, 0.0});
  cell.open.push_back(false);
  pl.cells.push_back(cell);
  pl.T = goal::LinearOperator::identity(1);
  return pl;
}

goal::PLGoal two_cell_partition() {
  goal::PLGoal pl = single_cell_pl();
  goal::PLCell other;
  other.value = {{0.0}, 0.0};
  other.constraints.push_back({{-1.0}, 0.0});
  other.open.push_back(true);  // (0,inf) on -L complements [0,inf) on L
  pl.cells.push_back(other);
  return pl;
}

goal::GoalSpec wrap(goal::PLGoal pl) {
  goal::GoalSpec spec;
  spec.name = "pl-test";
  spec.family = std::move(pl);
  return spec;
}

}  // namespace

TEST_SUITE("goal") {

TEST_CASE("param box geometry") {
  ParamBox box({0.0, -1.0}, {3.0, 3.0});
  CHECK(box.dim() == 2);
  CHECK(box.diameter() == doctest::Approx(5.0));
  CHECK(box.contains(std::vector<double>{1.0, 0.0}));
  CHECK_FALSE(box.contains(std::vector<double>{4.0, 0.0}));
  CHECK_THROWS_AS(ParamBox({1.0}, {0.0}), config_error);
}

TEST_CASE("hoelder goal evaluation") {
  goal::HoelderGoal h;
  h.beta = 1.0;
  h.g = [](Span theta, Span z) { return std::fabs(theta[0] - z[0]); };
  h.hoelder_coeff = [](Span) { return 1.0; };
  h.base_point = {0.0};
  goal::GoalSpec spec;
  spec.family = h;
  ParamBox box({0.0}, {2.0});
  double one = 1.0;
  CHECK(goal::evaluate(spec, box, Span(&one, 1), Span(&one, 1)) == 0.0);
  double outside = 5.0;
  CHECK_THROWS_AS(goal::evaluate(spec, box, Span(&outside, 1), Span(&one, 1)),
                  std::domain_error);
}

TEST_CASE("pl evaluation follows the indicator formula") {
  auto spec = wrap(single_cell_pl());
  ParamBox box({0.0}, {1.0});
  double theta = 1.0, z_on = 2.0, z_off = -2.0;
  // L(T(theta)+z) = 3 >= 0, so the value map fires: 3.
  CHECK(goal::evaluate(spec, box, Span(&theta, 1), Span(&z_on, 1)) == 3.0);
  // L(T(theta)+z) = -1 < 0: indicator off.
  CHECK(goal::evaluate(spec, box, Span(&theta, 1), Span(&z_off, 1)) == 0.0);
}

TEST_CASE("validate_pl passes a genuine partition") {
  auto pl = two_cell_partition();
  ParamBox box({0.0}, {1.0});
  auto source = dist::SourceDistribution::uniform(-2.0, 2.0);
  auto probes = goal::make_probes(box, source, 2000, 42);
  auto report = goal::validate_pl(pl, probes);
  CHECK(report.pass);
  CHECK(report.violations.empty());
  CHECK(report.probes_checked == 2000);
}

TEST_CASE("validate_pl flags double-counted boundaries") {
  // Both cells closed on L and -L: they overlap exactly at L = 0.
  goal::PLGoal pl = single_cell_pl();
  goal::PLCell mirrored;
  mirrored.value = {{0.0}, 1.0};
  mirrored.constraints.push_back({{-1.0}, 0.0});
  mirrored.open.push_back(false);
  pl.cells.push_back(mirrored);
  std::vector<goal::Probe> probes;
  probes.push_back({{0.5}, {-0.5}});  // T(theta)+z = 0: both indicators fire
  probes.push_back({{0.5}, {1.0}});
  auto report = goal::validate_pl(pl, probes);
  CHECK_FALSE(report.pass);
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations[0].kind == "disjointness");
  CHECK(report.violations[0].probe_index == 0);
}

TEST_CASE("validate_pl flags uncovered probes") {
  auto pl = single_cell_pl();
  std::vector<goal::Probe> probes;
  probes.push_back({{0.0}, {-1.0}});  // indicator off, no cell covers
  auto report = goal::validate_pl(pl, probes);
  CHECK_FALSE(report.pass);
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations[0].kind == "partition");
  CHECK_THROWS_AS(goal::validate_pl(pl, {}), config_error);
}

TEST_CASE("validate_pl warns when a discrete atom hits a closed boundary") {
  auto pl = single_cell_pl();
  std::vector<goal::Probe> probes;
  probes.push_back({{0.5}, {-0.5}});  // lands exactly on the closed boundary
  auto report = goal::validate_pl(pl, probes, /*source_is_discrete=*/true);
  CHECK_FALSE(report.warnings.empty());
}

TEST_CASE("hoelder envelope construction") {
  goal::HoelderGoal h;
  h.beta = 1.0;
  h.g = [](Span theta, Span z) { return theta[0] * z[0]; };
  h.hoelder_coeff = [](Span z) { return std::fabs(z[0]); };
  h.base_point = {0.0};
  ParamBox box({0.0}, {1.0});
  auto env = goal::build_envelope_hoelder(h, box);
  for (double z : {-1.5, -0.3, 0.2, 0.9}) {
    CHECK(env.xi(Span(&z, 1)) == doctest::Approx(std::fabs(z)).epsilon(1e-9));
  }
  double zero = 0.0;
  CHECK(env.xi(Span(&zero, 1)) >= 1e-12);  // strictly positive floor

  SUBCASE("degenerate box keeps only the base term") {
    ParamBox point({0.25}, {0.25});
    h.base_point = {0.25};
    auto env0 = goal::build_envelope_hoelder(h, point);
    double z = 2.0;
    CHECK(env0.xi(Span(&z, 1)) == doctest::Approx(0.25 * 2.0).epsilon(1e-12));
  }
  SUBCASE("constant goal with a floored coefficient") {
    goal::HoelderGoal c;
    c.beta = 1.0;
    c.g = [](Span, Span) { return 4.0; };
    c.hoelder_coeff = [](Span) { return 1e-6; };
    c.base_point = {0.5};
    auto envc = goal::build_envelope_hoelder(c, box);
    double z = 0.7;
    CHECK(envc.xi(Span(&z, 1)) == doctest::Approx(1e-6 * 1.0 + 4.0).epsilon(1e-12));
  }
  SUBCASE("base point outside the box is rejected") {
    h.base_point = {9.0};
    CHECK_THROWS_AS(goal::build_envelope_hoelder(h, box), config_error);
  }
}

TEST_CASE("pl envelope construction") {
  ParamBox box({0.0}, {1.0});
  auto pl = single_cell_pl();
  auto env = goal::build_envelope_pl(pl, box);
  // eta = sup over [0,1] of |theta| = 1, so xi(z) = |z| + 1.
  for (double z : {-2.0, 0.0, 0.5, 3.0}) {
    CHECK(env.xi(Span(&z, 1)) == doctest::Approx(std::fabs(z) + 1.0).epsilon(1e-12));
  }

  SUBCASE("vanishing value map gets the indicator correction") {
    goal::PLGoal zero = single_cell_pl();
    zero.cells[0].value = {{0.0}, 0.0};
    auto envz = goal::build_envelope_pl(zero, box);
    double z = 5.0;
    CHECK(envz.xi(Span(&z, 1)) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("duplicated cells double the envelope") {
    goal::PLGoal twice = single_cell_pl();
    twice.cells.push_back(twice.cells[0]);
    auto env2 = goal::build_envelope_pl(twice, box);
    double z = 0.5;
    CHECK(env2.xi(Span(&z, 1)) ==
          doctest::Approx(2.0 * env.xi(Span(&z, 1))).epsilon(1e-12));
  }
}

TEST_CASE("envelope domination on random probes") {
  ParamBox box({0.0}, {1.0});
  auto source = dist::SourceDistribution::uniform(-2.0, 2.0);

  goal::HoelderGoal h;
  h.beta = 1.0;
  h.g = [](Span theta, Span z) { return theta[0] * z[0]; };
  h.hoelder_coeff = [](Span z) { return std::max(std::fabs(z[0]), 1e-12); };
  h.base_point = {0.0};
  goal::GoalSpec hs;
  hs.family = h;
  auto henv = goal::build_envelope_hoelder(h, box);

  auto pls = wrap(two_cell_partition());
  auto penv = goal::build_envelope_pl(std::get<goal::PLGoal>(pls.family), box);

  auto probes = goal::make_probes(box, source, 1000, 7);
  for (const auto& p : probes) {
    Span theta(p.theta.data(), p.theta.size());
    Span z(p.z.data(), p.z.size());
    CHECK(std::fabs(goal::evaluate(hs, box, theta, z)) <= henv.xi(z) + 1e-12);
    CHECK(std::fabs(goal::evaluate(pls, box, theta, z)) <= penv.xi(z) + 1e-12);
  }
}

TEST_CASE("hoelder certificate holds on random probe triples") {
  ParamBox box({0.0}, {1.0});
  goal::HoelderGoal h;
  h.beta = 1.0;
  h.g = [](Span theta, Span z) { return theta[0] * z[0]; };
  h.hoelder_coeff = [](Span z) { return std::max(std::fabs(z[0]), 1e-12); };
  h.base_point = {0.0};
  rng::Stream stream = rng::Stream::derive(3, {9});
  for (int k = 0; k < 1000; ++k) {
    double t1 = stream.next_unit(), t2 = stream.next_unit();
    double z = 4.0 * stream.next_unit() - 2.0;
    double lhs = std::fabs(h.g(Span(&t1, 1), Span(&z, 1)) - h.g(Span(&t2, 1), Span(&z, 1)));
    double rhs = h.hoelder_coeff(Span(&z, 1)) * std::pow(std::fabs(t1 - t2), h.beta);
    CHECK(lhs <= rhs + 1e-9);
  }
}

}  // TEST_SUITE
