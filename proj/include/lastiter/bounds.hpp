#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lastiter/engine.hpp"
#include "lastiter/envelope.hpp"
#include "lastiter/schedule.hpp"

namespace lastiter {

/// H_n = sum_{i=1}^n 1/i, summed from the small terms up.
double harmonic(std::size_t n);

/// One-dimensional bound E(t) >= eta_{t-1}.
double lemma41_last_step(const StepSchedule& s, std::size_t t);

/// E(t) >= 1 / (4 e^2 sum_{j<t} eta_j), available when that sum is >= 1/2.
std::optional<double> lemma41_sum_bound(const StepSchedule& s, std::size_t t);

/// High-dimensional bound
///   1/(64 phi(t+1) sqrt(t+1)) * sum_{j<t} min{1, eta_j sqrt(t+1)}^2 / (t+1-j).
double eq3_bound(const StepSchedule& s, std::size_t t, const GuaranteeEnvelope& phi);

/// (1/128) sum_{j<t} eta_j^2 j / (t+1-j): the quantity phi(t+1)^4 must dominate.
double phi4_rhs(const StepSchedule& s, std::size_t t);
/// Same with numerator (j+1), before the relaxation to j.
double phi4_rhs_jplus1(const StepSchedule& s, std::size_t t);

/// Average over t = 1..T of the phi4_rhs sums (without the 1/128), in
/// exchanged-order closed form (1/T) sum_{k=1}^{T-1} k eta_k^2 (H_{T+1-k} - 1).
/// For fixed k the inner sum runs over t = k+1..T, i.e. 1/2 + ... + 1/(T+1-k).
double averaged_phi4(const StepSchedule& s, std::size_t T);
/// (1/T) sum_{k=1}^{T-1} k eta_k^2 H_{T+1-k}: the same average with the inner
/// sum started at t = k. Exceeds averaged_phi4 by (1/T) sum k eta_k^2.
double averaged_phi4_from_k(const StepSchedule& s, std::size_t T);
/// (1/T) sum_{t=1}^{T} sum_{j<t} j eta_j^2 / (t+1-j), evaluated directly. O(T^2).
double averaged_phi4_double_sum(const StepSchedule& s, std::size_t T);

/// t1 = floor((T/2+1) / (2^8 e^4 phi(T/2+1)^2)) - 1, or nullopt when t1 < 1.
/// T/2 means floor(T/2).
std::optional<std::size_t> t1_select(std::size_t T, const GuaranteeEnvelope& phi);

struct FinalBound {
  double harmonic_form = 0.0;  // H_{T/2}^{1/8} / (2^{5/2} e^2)
  double log_form = 0.0;       // ln(T/2)^{1/8} / (2^{5/2} e)
};
FinalBound final_bound(std::size_t T);

/// Smallest T in [4, T_max] with harmonic_form >= log_form, if any.
std::optional<std::size_t> final_bound_crossover(std::size_t T_max);

struct SideBySide {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

/// sum_{j=t1}^{t2} eta_j <= 2 phi(t2+1) (sqrt(t2) - sqrt(t1)); pass allows 1e-12.
SideBySide eta_sum_upper(const StepSchedule& s, std::size_t t1, std::size_t t2, const GuaranteeEnvelope& phi);

/// l1/l2 step over eta_first..eta_last: sum eta_k^2 >= (sum eta_k)^2 / n with
/// n = last - first + 1 terms. Passes within 1e-12 relative (equal entries are
/// the equality case).
SideBySide l1_l2_step(const StepSchedule& s, std::size_t first, std::size_t last);

/// phi_hat(t) = max{1, max over records and s <= t of sqrt(s) err(s)}.
/// Records must share one schedule label.
GuaranteeEnvelope empirical_envelope(const std::vector<RunRecord>& records);

struct EnvelopeFailure {
  std::string check;  // "phi>=1", "monotone", "dominates_error", "last_step"
  std::size_t t = 0;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct EnvelopeReport {
  std::size_t checked_up_to = 0;
  std::vector<EnvelopeFailure> failures;
  std::size_t error_checks = 0;

  bool pass() const { return failures.empty(); }
  bool has_failure(const std::string& check) const;
};

/// Necessary conditions for phi to be an envelope of s on t = 1..t_max:
/// phi >= 1, non-decreasing, phi(t+1) >= eta_t sqrt(t+1), and
/// phi(t) >= sqrt(t) err(t) for every recorded error. t_max defaults to the
/// longest record (at least 1).
EnvelopeReport validate_envelope(const StepSchedule& s, const GuaranteeEnvelope& phi,
                                 const std::vector<RunRecord>& records, std::size_t t_max = 0);

}  // namespace lastiter
