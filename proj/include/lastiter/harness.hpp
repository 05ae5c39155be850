#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lastiter/bounds.hpp"
#include "lastiter/engine.hpp"
#include "lastiter/envelope.hpp"
#include "lastiter/instances.hpp"
#include "lastiter/schedule.hpp"

namespace lastiter {

enum class Family { VShape, Quadratic, MaxLinear };

std::string to_string(Family f);
/// "vshape" | "quadratic" | "maxlinear"; throws InvalidParameter otherwise.
Family parse_family(const std::string& name);

struct Tolerances {
  double coord_abs = 1e-9;    // trajectory coordinates
  double scalar_rel = 1e-12;  // scalar identities
  double vshape = 1e-6;       // VShape cancellation checks
  double bound_abs = 1e-12;   // measured error vs certified bound
};

struct ExperimentSpec {
  explicit ExperimentSpec(StepSchedule s) : schedule(std::move(s)) {}

  StepSchedule schedule;
  std::vector<std::size_t> horizons;
  std::vector<Family> families{Family::MaxLinear};
  GuaranteeEnvelope envelope = example31_envelope();
  /// Audit: derive phi from a first pass instead of using `envelope`.
  bool empirical_envelope = false;
  Tolerances tol;
  std::size_t jobs = 1;
  /// Density: fresh instance per t instead of one run at T.
  bool per_t = false;
  double vshape_shrink = kDefaultVShapeShrink;

  /// Throws InvalidParameter: horizons must be nonempty, ascending, >= 1.
  void validate() const;
};

// ------------------------------------------------------------ verification

struct TrajectoryCheck {
  Family family = Family::MaxLinear;
  std::size_t horizon = 0;
  double tolerance = 0.0;
  double max_coord_dev = 0.0;
  double max_err_dev = 0.0;
  double max_norm_seen = 0.0;
  std::size_t projection_activations = 0;
  // MaxLinear: steps where the oracle's active index differs from t, and
  // coordinates outside [b_c eta_c / 2, b_c eta_c].
  std::size_t argmax_mismatches = 0;
  std::size_t positivity_violations = 0;
  // VShape: |x_{t-1}| / eps after the cancellation.
  double kink_residual_ratio = 0.0;
  double measured_final = 0.0;
  double certified_bound = 0.0;
  bool bound_ok = false;
  bool pass = false;
};

struct VerificationReport {
  std::vector<TrajectoryCheck> checks;
  bool pass() const;
  nlohmann::json to_json() const;
};

/// Runs every (family, horizon) and compares each simulated x_t, t = 1..T,
/// against the closed form. Construction errors propagate.
VerificationReport verify_trajectories(const ExperimentSpec& spec);

// ------------------------------------------------------------------- audit

struct FamilyMeasurement {
  Family family = Family::MaxLinear;
  std::size_t t = 0;
  bool constructed = false;
  std::string skip_reason;
  double measured_err = 0.0;
  double certified = 0.0;
  bool dominance_ok = false;
};

struct BoundRow {
  std::size_t t = 0;
  double lemma41_step = 0.0;
  std::optional<double> lemma41_sum;
  double eq3 = 0.0;
  double phi4_rhs = 0.0;
  std::optional<FinalBound> final;
  std::optional<double> measured_err;
};

struct BoundReport {
  std::string schedule_label;
  std::string envelope_label;
  std::vector<BoundRow> rows;
  std::vector<FamilyMeasurement> measurements;
  std::optional<EnvelopeReport> envelope;
  /// False for empirical envelopes: phi_hat is a lower estimate of any true
  /// envelope, so its validation is reported but does not decide pass().
  bool envelope_decisive = true;

  bool certified_ok() const;
  bool envelope_ok() const;
  bool pass() const { return certified_ok() && envelope_ok(); }

  /// `t,lemma41_step,lemma41_sum,eq3,phi4_rhs,final_harmonic,final_log[,measured_err]`
  std::string to_csv(const std::string& comment, bool with_measured) const;
  nlohmann::json summary_json() const;
};

/// Analytic rows only (no simulation).
BoundReport analytic_bounds(const StepSchedule& s, const GuaranteeEnvelope& phi,
                            const std::vector<std::size_t>& ts);

/// Builds each family at each horizon, runs it, and checks the measured
/// err(t) against that instance's certified bound.
BoundReport audit_schedule(const ExperimentSpec& spec);

// ----------------------------------------------------------------- density

struct DensityRow {
  double c = 0.0;
  std::size_t T = 0;
  std::size_t count = 0;
  double density = 0.0;
};

struct ProfileRow {
  std::size_t t = 0;
  double err = 0.0;
  bool constructed = true;
};

struct DensityTable {
  std::string mode;  // "single-run" | "per-t"
  Family family = Family::MaxLinear;
  std::vector<DensityRow> rows;
  std::map<std::size_t, std::vector<ProfileRow>> profiles;

  /// `c,T,count,density`
  std::string to_csv(const std::string& comment) const;
  /// `t,err,scaled_err,constructed`
  std::string profile_csv(std::size_t T, const std::string& comment) const;
};

/// Density of {t <= T : sqrt(t) err(t) >= c} for the first family in spec.
DensityTable density_experiment(const ExperimentSpec& spec, const std::vector<double>& thresholds);

// ------------------------------------------------------------------- chain

enum class StepStatus { Pass, Fail, Inconclusive, Inapplicable, Info };
std::string to_string(StepStatus s);

struct ChainStep {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  StepStatus status = StepStatus::Pass;
  std::string note;
  std::optional<std::size_t> at_t;
};

struct ChainReport {
  std::size_t T = 0;
  std::optional<std::size_t> t1;
  std::vector<ChainStep> steps;

  bool pass() const;
  const ChainStep* find(const std::string& name) const;
  nlohmann::json to_json() const;
};

/// Replays the lower-bound proof chain numerically at horizon T (even, >= 4).
ChainReport chain_check(const StepSchedule& s, const GuaranteeEnvelope& phi, std::size_t T);

}  // namespace lastiter
