#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lastiter/engine.hpp"
#include "lastiter/envelope.hpp"
#include "lastiter/error.hpp"
#include "lastiter/instances.hpp"

using namespace lastiter;

TEST_CASE("vshape construction values") {
  const VShapeInstance v = build_vshape(constant(0.5), 2, 1e-6);
  CHECK(v.epsilon() == doctest::Approx(5e-7).epsilon(1e-9));
  CHECK(v.c_eps() == doctest::Approx(1e-6).epsilon(1e-12));
  CHECK(v.slope_at(-0.1) == -1.0);
  CHECK(v.slope_at(0.0) == -1.0);
  CHECK(v.slope_at(v.epsilon() / 2) == v.c_eps());
  CHECK(v.slope_at(0.5) == 1.0);
}

TEST_CASE("vshape trajectory lands on the kink and jumps out") {
  const StepSchedule s = constant(0.5);
  const VShapeInstance v = build_vshape(s, 2, 1e-6);
  const RunRecord rec = run(v, s, 2, SnapshotPolicy::all());
  CHECK(std::abs(rec.snapshots.at(1)[0]) <= 1e-12 * v.epsilon());
  CHECK(rec.snapshots.at(2)[0] == doctest::Approx(0.5).epsilon(1e-12));
  const double expected = 0.5 - v.epsilon() + v.c_eps() * v.epsilon();
  CHECK(std::abs(rec.err(2) - expected) <= 1e-6 * 0.5);
  CHECK(closed_form_iterate(v, 1)[0] == doctest::Approx(0.0));
}

TEST_CASE("vshape error approaches the last step as the shrink vanishes") {
  const StepSchedule s = sqrt_decay(2.0, 1.0);
  double prev_gap = 1.0;
  for (double shrink : {1e-2, 1e-4, 1e-8}) {
    const VShapeInstance v = build_vshape(s, 9, shrink);
    const RunRecord rec = run(v, s, 9);
    const double gap = std::abs(rec.err(9) - s(8));
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-7);
}

TEST_CASE("vshape construction errors") {
  CHECK_THROWS_AS(build_vshape(constant(0.5), 1), ConstructionError);
  CHECK_THROWS_AS(build_vshape(from_table({1.0, 0.0}), 2), ConstructionError);
  CHECK_THROWS_AS(build_vshape(from_table({0.0, 1.0}), 2), ConstructionError);
}

TEST_CASE("quadratic closed forms") {
  const QuadraticInstance q2 = build_quadratic(constant(1.0), 2);
  CHECK(q2.S() == 2.0);
  CHECK(closed_form_iterate(q2, 2)[0] == doctest::Approx(0.5625).epsilon(1e-15));
  const RunRecord r2 = run(q2, constant(1.0), 2);
  CHECK(r2.err(2) == doctest::Approx(81.0 / 2048.0).epsilon(1e-12));

  const QuadraticInstance q1 = build_quadratic(constant(1.0), 1);
  const RunRecord r1 = run(q1, constant(1.0), 1);
  CHECK(r1.err(1) == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(r1.err(1) >= 0.033833820809153176);
}

TEST_CASE("quadratic requires S >= 1/2") {
  CHECK_THROWS_AS(build_quadratic(constant(0.2), 2), ConstructionError);
  CHECK_NOTHROW(build_quadratic(constant(0.25), 2));
}

TEST_CASE("build_ab example") {
  const AbSequences ab = build_ab(constant(1.0), 1, example31_envelope());
  REQUIRE(ab.a.size() == 2);
  CHECK(ab.a[0] == doctest::Approx(0.002900881190747126).epsilon(1e-14));
  CHECK(ab.b[0] == doctest::Approx(0.35355339059327373).epsilon(1e-14));
}

TEST_CASE("build_ab with zero steps") {
  const AbSequences ab = build_ab(constant(0.0), 10, example31_envelope());
  for (std::size_t j = 0; j <= 10; ++j) {
    CHECK(ab.a[j] == 0.0);
    CHECK(ab.b[j] == 0.5);
  }
}

TEST_CASE("build_ab rejects phi below one") {
  CHECK_THROWS_AS(build_ab(constant(1.0), 3, constant_envelope(0.5)), InvalidParameter);
}

TEST_CASE("condition checker") {
  SUBCASE("all zero passes") {
    const std::vector<double> z(3, 0.0);
    CHECK(check_ab_conditions(z, z, constant(1.0), 2).all_pass());
  }
  SUBCASE("build_ab output passes") {
    const AbSequences ab = build_ab(sqrt_decay(2.0, 1.0), 64, example31_envelope());
    const ConditionReport r = check_ab_conditions(ab.a, ab.b, sqrt_decay(2.0, 1.0), 64);
    CHECK(r.all_pass());
    CHECK(r.sum_squares_slack >= 0.5 - std::numbers::pi * std::numbers::pi / 1536.0);
  }
  SUBCASE("tail condition fails at j = 0") {
    const std::vector<double> a{1.0, 0.0, 0.0};
    const std::vector<double> b{0.5, 0.5, 0.5};
    const ConditionReport r = check_ab_conditions(a, b, constant(1.0), 2);
    CHECK_FALSE(r.tail_ok);
    CHECK(r.tail_worst_index == 0);
    CHECK(r.tail_slack == doctest::Approx(0.25 - 2.0));
    CHECK_FALSE(r.all_pass());
  }
  SUBCASE("length mismatch") {
    const std::vector<double> z(2, 0.0);
    CHECK_THROWS_AS(check_ab_conditions(z, z, constant(1.0), 2), InvalidParameter);
  }
}

TEST_CASE("maxlinear refuses an invalid envelope") {
  CHECK_THROWS_AS(build_maxlinear(constant(1.0), 8, constant_envelope(1.0 / 64.0)), InvalidParameter);
}

TEST_CASE("maxlinear refuses sequences that break the tail condition") {
  CHECK_THROWS_AS(build_maxlinear(constant(10.0), 8, constant_envelope(1.0)), ConstructionError);
}

TEST_CASE("maxlinear oracle at the origin picks index zero") {
  const MaxLinearInstance m = build_maxlinear(sqrt_decay(2.0, 1.0), 5, example31_envelope());
  const std::vector<double> x(6, 0.0);
  CHECK(m.active_index(x) == 0);
  std::vector<double> g(6);
  m.subgradient(x, g);
  CHECK(g[0] == -m.b()[0]);
  for (std::size_t c = 1; c < 6; ++c) CHECK(g[c] == 0.0);
}

TEST_CASE("maxlinear oracle returns valid subgradients on random pairs") {
  const MaxLinearInstance m = build_maxlinear(sqrt_decay(2.0, 1.0), 20, example31_envelope());
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  auto draw = [&] {
    std::vector<double> x(21);
    for (double& v : x) v = nd(rng);
    project_ball_inplace(x, 1.0);
    return x;
  };
  std::vector<double> g(21);
  for (int rep = 0; rep < 200; ++rep) {
    const auto x = draw();
    const auto y = draw();
    m.subgradient(x, g);
    double lin = m.value(x);
    for (std::size_t c = 0; c < 21; ++c) lin += g[c] * (y[c] - x[c]);
    CHECK(m.value(y) >= lin - 1e-15);
    CHECK(euclidean_norm(g) <= 1.0);
  }
}

TEST_CASE("maxlinear closed form and argmax along the run") {
  const StepSchedule s = sqrt_decay(2.0, 1.0);
  const std::size_t T = 40;
  const MaxLinearInstance m = build_maxlinear(s, T, example31_envelope());
  double dev = 0.0;
  std::size_t mismatches = 0;
  (void)run(m, s, T, SnapshotPolicy::none(), [&](std::size_t t, std::span<const double> x) {
    if (m.active_index(x) != t) ++mismatches;
    if (t == 0) return;
    const auto cf = closed_form_iterate(m, t);
    for (std::size_t c = 0; c <= T; ++c) dev = std::max(dev, std::abs(cf[c] - x[c]));
  });
  CHECK(dev <= 1e-12);
  CHECK(mismatches == 0);
}

TEST_CASE("maxlinear certified bound is dominated by the run") {
  const StepSchedule s = sqrt_decay(2.0, 1.0);
  const MaxLinearInstance m = build_maxlinear(s, 3, example31_envelope());
  CHECK(m.certified_bound() == doctest::Approx(0.0006248380060990671).epsilon(1e-13));
  const RunRecord rec = run(m, s, 3);
  CHECK(rec.err(3) == doctest::Approx(0.0012435260305334525).epsilon(1e-13));
  CHECK(rec.err(3) >= m.certified_bound());
}

TEST_CASE("dump_instance fields") {
  const auto q = dump_instance(build_quadratic(constant(1.0), 2));
  CHECK(q["family"] == "quadratic");
  CHECK(q["S"] == 2.0);
  const auto m = dump_instance(build_maxlinear(constant(0.5), 4, example31_envelope()));
  CHECK(m["family"] == "maxlinear");
  CHECK(m["a"].size() == 5);
}
