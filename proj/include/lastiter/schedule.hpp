#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace lastiter {

/// A nonnegative stepsize sequence eta_0, eta_1, ...
///
/// Values come from a generator; an optional finite table shadows the
/// generator on indices [0, table size). A table-only schedule is zero past
/// its last entry. Copies share the underlying storage and the object is
/// immutable after construction.
class StepSchedule {
 public:
  using Generator = std::function<double(std::size_t)>;

  StepSchedule(Generator generator, std::string label);
  StepSchedule(std::vector<double> table, std::string label, Generator fallback = {});

  /// eta_t.
  double operator()(std::size_t t) const;
  double at(std::size_t t) const { return (*this)(t); }

  /// sum_{j=0}^{t-1} eta_j, compensated summation; prefix_sum(0) == 0.
  double prefix_sum(std::size_t t) const;

  /// sum_{j=first}^{last} eta_j (inclusive); zero when first > last.
  double range_sum(std::size_t first, std::size_t last) const;

  /// Cumulative sums P[0..n] with P[t] = prefix_sum(t).
  std::vector<double> prefix_sums(std::size_t n) const;

  /// eta_0..eta_{n-1}.
  std::vector<double> values(std::size_t n) const;

  const std::string& label() const { return label_; }
  std::size_t table_size() const { return table_ ? table_->size() : 0; }

 private:
  Generator generator_;
  std::shared_ptr<const std::vector<double>> table_;
  std::string label_;
};

/// eta_t = D / (G * sqrt(t + 1)).
StepSchedule sqrt_decay(double D, double G);

/// eta_t = c.
StepSchedule constant(double c);

/// Explicit finite schedule; zero past the end.
StepSchedule from_table(std::vector<double> table, std::string label = "table");

/// Maps a horizon n to a schedule of exactly n values.
using BlockBuilder = std::function<std::vector<double>(std::size_t)>;

/// Doubling-trick concatenation. Block k has length 2^k and covers global
/// indices [2^k - 1, 2^{k+1} - 2]; eta_t = builder(2^k)[t - (2^k - 1)].
/// Blocks 0..num_blocks-1 are materialized at construction, so the schedule
/// is defined for t < 2^num_blocks - 1.
StepSchedule doubling_concat(const BlockBuilder& builder, std::size_t num_blocks = 20,
                             std::string label = "doubling");

/// Block index k containing global index t.
std::size_t doubling_block(std::size_t t);

}  // namespace lastiter
