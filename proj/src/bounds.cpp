#include "lastiter/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "lastiter/error.hpp"
#include "lastiter/numeric.hpp"

namespace lastiter {

namespace {

double as_real(std::size_t n) { return static_cast<double>(n); }

void require_t(std::size_t t, std::size_t min, const char* what) {
  if (t < min) {
    throw InvalidParameter(std::string(what) + ": requires t >= " + std::to_string(min));
  }
}

// H[0..n], H[0] = 0.
std::vector<double> harmonic_table(std::size_t n) {
  std::vector<double> h(n + 1, 0.0);
  CompensatedSum s;
  for (std::size_t i = 1; i <= n; ++i) {
    s += 1.0 / as_real(i);
    h[i] = s.value();
  }
  return h;
}

double scale_25_e2() { return std::pow(2.0, 2.5) * std::exp(2.0); }

}  // namespace

double harmonic(std::size_t n) {
  if (n < 1) {
    throw InvalidParameter("harmonic: n must be >= 1");
  }
  double s = 0.0;
  for (std::size_t i = n; i >= 1; --i) {
    s += 1.0 / as_real(i);
  }
  return s;
}

double lemma41_last_step(const StepSchedule& s, std::size_t t) {
  require_t(t, 1, "lemma41_last_step");
  return s(t - 1);
}

std::optional<double> lemma41_sum_bound(const StepSchedule& s, std::size_t t) {
  require_t(t, 1, "lemma41_sum_bound");
  const double sum = s.prefix_sum(t);
  if (!(sum >= 0.5)) {
    return std::nullopt;
  }
  return 1.0 / (4.0 * std::exp(2.0) * sum);
}

double eq3_bound(const StepSchedule& s, std::size_t t, const GuaranteeEnvelope& phi) {
  require_t(t, 1, "eq3_bound");
  const double root = std::sqrt(as_real(t) + 1.0);
  CompensatedSum acc;
  for (std::size_t j = 0; j < t; ++j) {
    const double m = std::min(1.0, s(j) * root);
    acc += m * m / as_real(t + 1 - j);
  }
  return acc.value() / (64.0 * phi(t + 1) * root);
}

double phi4_rhs(const StepSchedule& s, std::size_t t) {
  require_t(t, 1, "phi4_rhs");
  CompensatedSum acc;
  for (std::size_t j = 0; j < t; ++j) {
    const double eta = s(j);
    acc += eta * eta * as_real(j) / as_real(t + 1 - j);
  }
  return acc.value() / 128.0;
}

double phi4_rhs_jplus1(const StepSchedule& s, std::size_t t) {
  require_t(t, 1, "phi4_rhs_jplus1");
  CompensatedSum acc;
  for (std::size_t j = 0; j < t; ++j) {
    const double eta = s(j);
    acc += eta * eta * as_real(j + 1) / as_real(t + 1 - j);
  }
  return acc.value() / 128.0;
}

namespace {

// (1/T) sum_{k=1}^{T-1} k eta_k^2 (H_{T+1-k} - offset)
double exchanged_average(const StepSchedule& s, std::size_t T, bool drop_first_term) {
  // H_n - 1 = sum_{i=2}^n 1/i, summed directly rather than by cancellation.
  std::vector<double> h(T + 1, 0.0);
  CompensatedSum run;
  for (std::size_t i = drop_first_term ? 2 : 1; i <= T; ++i) {
    run += 1.0 / as_real(i);
    h[i] = run.value();
  }
  CompensatedSum acc;
  for (std::size_t k = 1; k < T; ++k) {
    const double eta = s(k);
    acc += as_real(k) * eta * eta * h[T + 1 - k];
  }
  return acc.value() / as_real(T);
}

}  // namespace

double averaged_phi4(const StepSchedule& s, std::size_t T) {
  require_t(T, 2, "averaged_phi4");
  return exchanged_average(s, T, true);
}

double averaged_phi4_from_k(const StepSchedule& s, std::size_t T) {
  require_t(T, 2, "averaged_phi4_from_k");
  return exchanged_average(s, T, false);
}

double averaged_phi4_double_sum(const StepSchedule& s, std::size_t T) {
  require_t(T, 2, "averaged_phi4_double_sum");
  const std::vector<double> eta = s.values(T);
  CompensatedSum acc;
  for (std::size_t t = 1; t <= T; ++t) {
    for (std::size_t j = 0; j < t; ++j) {
      acc += as_real(j) * eta[j] * eta[j] / as_real(t + 1 - j);
    }
  }
  return acc.value() / as_real(T);
}

std::optional<std::size_t> t1_select(std::size_t T, const GuaranteeEnvelope& phi) {
  require_t(T, 2, "t1_select");
  const std::size_t m = T / 2 + 1;
  const double p = phi(m);
  const double ratio = as_real(m) / (256.0 * std::exp(4.0) * p * p);
  const double fl = std::floor(ratio);
  if (!(fl >= 2.0)) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(fl) - 1;
}

FinalBound final_bound(std::size_t T) {
  require_t(T, 2, "final_bound");
  const std::size_t half = T / 2;
  FinalBound fb;
  fb.harmonic_form = std::pow(harmonic(half), 0.125) / scale_25_e2();
  fb.log_form = std::pow(std::log(as_real(half)), 0.125) / (std::pow(2.0, 2.5) * std::exp(1.0));
  return fb;
}

std::optional<std::size_t> final_bound_crossover(std::size_t T_max) {
  if (T_max < 4) {
    return std::nullopt;
  }
  const std::vector<double> h = harmonic_table(T_max / 2);
  const double hs = scale_25_e2();
  const double ls = std::pow(2.0, 2.5) * std::exp(1.0);
  for (std::size_t T = 4; T <= T_max; ++T) {
    const std::size_t half = T / 2;
    if (std::pow(h[half], 0.125) / hs >= std::pow(std::log(as_real(half)), 0.125) / ls) {
      return T;
    }
  }
  return std::nullopt;
}

SideBySide eta_sum_upper(const StepSchedule& s, std::size_t t1, std::size_t t2, const GuaranteeEnvelope& phi) {
  if (t1 < 1 || t1 >= t2) {
    throw InvalidParameter("eta_sum_upper: requires 1 <= t1 < t2");
  }
  SideBySide r;
  r.lhs = s.range_sum(t1, t2);
  r.rhs = 2.0 * phi(t2 + 1) * (std::sqrt(as_real(t2)) - std::sqrt(as_real(t1)));
  r.pass = r.lhs <= r.rhs + 1e-12;
  return r;
}

SideBySide l1_l2_step(const StepSchedule& s, std::size_t first, std::size_t last) {
  if (first > last) {
    throw InvalidParameter("l1_l2_step: empty range");
  }
  CompensatedSum sq;
  CompensatedSum lin;
  for (std::size_t k = first; k <= last; ++k) {
    const double eta = s(k);
    sq += eta * eta;
    lin += eta;
  }
  SideBySide r;
  r.lhs = sq.value();
  r.rhs = lin.value() * lin.value() / as_real(last - first + 1);
  r.pass = r.lhs >= r.rhs * (1.0 - 1e-12);
  return r;
}

GuaranteeEnvelope empirical_envelope(const std::vector<RunRecord>& records) {
  if (records.empty()) {
    throw InvalidParameter("empirical_envelope: no records");
  }
  std::size_t n = 0;
  for (const RunRecord& r : records) {
    if (r.schedule_label != records.front().schedule_label) {
      throw InvalidParameter("empirical_envelope: records mix schedules '" + records.front().schedule_label +
                             "' and '" + r.schedule_label + "'");
    }
    n = std::max(n, r.errors.size());
  }
  std::vector<double> peak(std::max<std::size_t>(n, 1), 1.0);
  for (const RunRecord& r : records) {
    for (std::size_t t = 1; t <= r.errors.size(); ++t) {
      peak[t - 1] = std::max(peak[t - 1], std::sqrt(as_real(t)) * r.errors[t - 1]);
    }
  }
  for (std::size_t i = 1; i < peak.size(); ++i) {
    peak[i] = std::max(peak[i], peak[i - 1]);
  }
  return tabulated_envelope(std::move(peak), "empirical");
}

bool EnvelopeReport::has_failure(const std::string& check) const {
  return std::any_of(failures.begin(), failures.end(), [&](const EnvelopeFailure& f) { return f.check == check; });
}

EnvelopeReport validate_envelope(const StepSchedule& s, const GuaranteeEnvelope& phi,
                                 const std::vector<RunRecord>& records, std::size_t t_max) {
  if (t_max == 0) {
    t_max = 1;
    for (const RunRecord& r : records) {
      t_max = std::max(t_max, r.errors.size());
    }
  }
  EnvelopeReport rep;
  rep.checked_up_to = t_max;
  double prev = 0.0;
  for (std::size_t t = 1; t <= t_max; ++t) {
    const double p = phi(t);
    if (!(p >= 1.0)) {
      rep.failures.push_back({"phi>=1", t, p, 1.0});
    }
    if (t >= 2 && !(p >= prev)) {
      rep.failures.push_back({"monotone", t, p, prev});
    }
    prev = p;
    // phi(t) >= eta_{t-1} sqrt(t)
    const double need = s(t - 1) * std::sqrt(as_real(t));
    if (!(p >= need)) {
      rep.failures.push_back({"last_step", t - 1, p, need});
    }
  }
  for (const RunRecord& r : records) {
    for (std::size_t t = 1; t <= r.errors.size(); ++t) {
      const double scaled = std::sqrt(as_real(t)) * r.errors[t - 1];
      ++rep.error_checks;
      if (!(phi(t) >= scaled)) {
        rep.failures.push_back({"dominates_error", t, phi(t), scaled});
      }
    }
  }
  return rep;
}

}  // namespace lastiter
