#include <doctest.h>

#include <cmath>
#include <limits>

#include "lastiter/error.hpp"
#include "lastiter/harness.hpp"

using namespace lastiter;

TEST_CASE("family names round-trip") {
  for (Family f : {Family::VShape, Family::Quadratic, Family::MaxLinear}) {
    CHECK(parse_family(to_string(f)) == f);
  }
  CHECK_THROWS_AS(parse_family("cubic"), InvalidParameter);
}

TEST_CASE("spec validation") {
  ExperimentSpec spec(constant(1.0));
  CHECK_THROWS_AS(spec.validate(), InvalidParameter);
  spec.horizons = {8, 4};
  CHECK_THROWS_AS(spec.validate(), InvalidParameter);
  spec.horizons = {0, 4};
  CHECK_THROWS_AS(spec.validate(), InvalidParameter);
  spec.horizons = {4, 8};
  CHECK_NOTHROW(spec.validate());
}

TEST_CASE("verification on sqrt decay") {
  ExperimentSpec spec(sqrt_decay(2.0, 1.0));
  spec.horizons = {8, 64};
  spec.families = {Family::VShape, Family::Quadratic, Family::MaxLinear};
  const VerificationReport rep = verify_trajectories(spec);
  CHECK(rep.pass());
  REQUIRE(rep.checks.size() == 6);
  for (const TrajectoryCheck& c : rep.checks) {
    CHECK(c.max_coord_dev <= 1e-9);
    CHECK(c.bound_ok);
    if (c.family == Family::MaxLinear) {
      CHECK(c.projection_activations == 0);
      CHECK(c.argmax_mismatches == 0);
      CHECK(c.positivity_violations == 0);
      CHECK(c.max_norm_seen <= 1.0);
    }
  }
  CHECK(rep.to_json().is_object());
}

TEST_CASE("verification with zero steps") {
  ExperimentSpec spec(constant(0.0));
  spec.horizons = {5};
  spec.families = {Family::MaxLinear};
  const VerificationReport rep = verify_trajectories(spec);
  CHECK(rep.pass());
  CHECK(rep.checks.front().measured_final == 0.0);
}

TEST_CASE("quadratic verification at t = 2") {
  ExperimentSpec spec(constant(1.0));
  spec.horizons = {2};
  spec.families = {Family::Quadratic};
  const VerificationReport rep = verify_trajectories(spec);
  REQUIRE(rep.checks.size() == 1);
  CHECK(rep.checks[0].measured_final == doctest::Approx(81.0 / 2048.0).epsilon(1e-12));
}

TEST_CASE("audit of sqrt decay") {
  ExperimentSpec spec(sqrt_decay(2.0, 1.0));
  spec.horizons = {8, 64, 512};
  spec.families = {Family::VShape, Family::MaxLinear};
  const BoundReport rep = audit_schedule(spec);
  CHECK(rep.pass());
  REQUIRE(rep.rows.size() == 3);
  for (const FamilyMeasurement& m : rep.measurements) {
    CHECK(m.constructed);
    CHECK(m.dominance_ok);
  }
  for (const BoundRow& r : rep.rows) {
    REQUIRE(r.measured_err.has_value());
    CHECK(*r.measured_err >= r.eq3 - 1e-12);
  }
  const std::string csv = rep.to_csv("# c", true);
  CHECK(csv.rfind("# c\nt,lemma41_step,lemma41_sum,eq3,phi4_rhs,final_harmonic,final_log,measured_err\n", 0) == 0);
}

TEST_CASE("audit skips quadratic where S < 1/2") {
  ExperimentSpec spec(constant(0.1));
  spec.horizons = {2, 8};
  spec.families = {Family::Quadratic};
  const BoundReport rep = audit_schedule(spec);
  REQUIRE(rep.measurements.size() == 2);
  CHECK_FALSE(rep.measurements[0].constructed);
  CHECK_FALSE(rep.measurements[0].skip_reason.empty());
  CHECK(rep.measurements[1].constructed);
  CHECK(rep.certified_ok());
}

TEST_CASE("audit with zero steps degrades gracefully") {
  ExperimentSpec spec(constant(0.0));
  spec.horizons = {4, 16};
  spec.families = {Family::MaxLinear};
  spec.envelope = constant_envelope(1.0);
  const BoundReport rep = audit_schedule(spec);
  CHECK(rep.pass());
  for (const BoundRow& r : rep.rows) CHECK(r.lemma41_step == 0.0);
}

TEST_CASE("audit with an invalid envelope fails") {
  ExperimentSpec spec(constant(2.0));
  spec.horizons = {4};
  spec.families = {Family::VShape};
  spec.envelope = constant_envelope(1.0);
  const BoundReport rep = audit_schedule(spec);
  CHECK_FALSE(rep.envelope_ok());
  CHECK_FALSE(rep.pass());
}

TEST_CASE("empirical envelope audit is non-decisive on the envelope") {
  ExperimentSpec spec(sqrt_decay(2.0, 1.0));
  spec.horizons = {8, 32};
  spec.families = {Family::MaxLinear};
  spec.empirical_envelope = true;
  const BoundReport rep = audit_schedule(spec);
  CHECK_FALSE(rep.envelope_decisive);
  CHECK(rep.pass());
}

TEST_CASE("density contract") {
  ExperimentSpec spec(sqrt_decay(2.0, 1.0));
  spec.horizons = {64};
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> cs{0.0, 0.01, 0.05, 0.1, inf};
  const DensityTable a = density_experiment(spec, cs);
  REQUIRE(a.rows.size() == cs.size());
  CHECK(a.rows.front().density == 1.0);
  CHECK(a.rows.back().density == 0.0);
  for (std::size_t i = 1; i < a.rows.size(); ++i) CHECK(a.rows[i].density <= a.rows[i - 1].density);
  const DensityTable b = density_experiment(spec, cs);
  CHECK(a.to_csv("#") == b.to_csv("#"));

  spec.per_t = true;
  spec.jobs = 4;
  const DensityTable p = density_experiment(spec, cs);
  CHECK(p.mode == "per-t");
  CHECK(p.profiles.at(64).back().err == a.profiles.at(64).back().err);
}

TEST_CASE("chain check") {
  CHECK_THROWS_AS(chain_check(sqrt_decay(2.0, 1.0), example31_envelope(), 3), InvalidParameter);
  CHECK_THROWS_AS(chain_check(sqrt_decay(2.0, 1.0), example31_envelope(), 2), InvalidParameter);
  const ChainReport rep = chain_check(sqrt_decay(2.0, 1.0), example31_envelope(), 256);
  CHECK(rep.pass());
  CHECK_FALSE(rep.t1.has_value());
  REQUIRE(rep.find("eq5_identity") != nullptr);
  CHECK(rep.find("eq5_identity")->status == StepStatus::Pass);
  CHECK(rep.find("eq6_l1_l2")->status == StepStatus::Inconclusive);
  CHECK(rep.find("final_harmonic")->status == StepStatus::Inconclusive);
  CHECK(rep.find("nonexistent") == nullptr);
}
