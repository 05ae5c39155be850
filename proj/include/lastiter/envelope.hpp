#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace lastiter {

/// A non-decreasing phi: N -> [1, inf) such that the anytime last-iterate
/// error of a schedule is at most phi(t) / sqrt(t).
///
/// Nothing here enforces the invariants; use validate_envelope() in bounds.hpp
/// to check them on a range.
class GuaranteeEnvelope {
 public:
  using Evaluator = std::function<double(std::size_t)>;

  GuaranteeEnvelope(Evaluator evaluator, std::string label)
      : evaluator_(std::move(evaluator)), label_(std::move(label)) {}

  double operator()(std::size_t t) const { return evaluator_(t); }
  const std::string& label() const { return label_; }

 private:
  Evaluator evaluator_;
  std::string label_;
};

/// phi(t) = D * G * (4 + 2 ln t); with D = 2, G = 1 this is 8 + 4 ln t, the
/// known guarantee of sqrt_decay(D, G).
GuaranteeEnvelope example31_envelope(double D = 2.0, double G = 1.0);

/// phi(t) = c.
GuaranteeEnvelope constant_envelope(double c);

/// phi(t) = c1 * ln(t)^c2 + c3.
GuaranteeEnvelope log_power_envelope(double c1, double c2, double c3);

/// Tabulated phi(1..n); values[0] is phi(1). Held constant past the end.
GuaranteeEnvelope tabulated_envelope(std::vector<double> values, std::string label);

}  // namespace lastiter
