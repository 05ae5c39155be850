#include "lastiter/schedule.hpp"

#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lastiter/error.hpp"
#include "lastiter/numeric.hpp"

namespace lastiter {

namespace {

std::string format_param(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void check_nonnegative(const std::vector<double>& values, const std::string& what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0) || !std::isfinite(values[i])) {
      throw InvalidParameter(what + ": eta[" + std::to_string(i) + "] = " + format_param(values[i]) +
                             " is not a finite nonnegative stepsize");
    }
  }
}

}  // namespace

StepSchedule::StepSchedule(Generator generator, std::string label)
    : generator_(std::move(generator)), label_(std::move(label)) {}

StepSchedule::StepSchedule(std::vector<double> table, std::string label, Generator fallback)
    : generator_(std::move(fallback)), label_(std::move(label)) {
  check_nonnegative(table, label_);
  table_ = std::make_shared<const std::vector<double>>(std::move(table));
}

double StepSchedule::operator()(std::size_t t) const {
  if (table_ && t < table_->size()) {
    return (*table_)[t];
  }
  if (generator_) {
    return generator_(t);
  }
  return 0.0;
}

double StepSchedule::prefix_sum(std::size_t t) const {
  CompensatedSum s;
  for (std::size_t j = 0; j < t; ++j) {
    s += (*this)(j);
  }
  return s.value();
}

double StepSchedule::range_sum(std::size_t first, std::size_t last) const {
  CompensatedSum s;
  for (std::size_t j = first; j <= last && first <= last; ++j) {
    s += (*this)(j);
  }
  return s.value();
}

std::vector<double> StepSchedule::prefix_sums(std::size_t n) const {
  std::vector<double> out(n + 1, 0.0);
  CompensatedSum s;
  for (std::size_t j = 0; j < n; ++j) {
    s += (*this)(j);
    out[j + 1] = s.value();
  }
  return out;
}

std::vector<double> StepSchedule::values(std::size_t n) const {
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = (*this)(j);
  }
  return out;
}

StepSchedule sqrt_decay(double D, double G) {
  if (!(D > 0.0) || !(G > 0.0) || !std::isfinite(D) || !std::isfinite(G)) {
    throw InvalidParameter("sqrt_decay requires D > 0 and G > 0");
  }
  return StepSchedule(
      [D, G](std::size_t t) { return D / (G * std::sqrt(static_cast<double>(t) + 1.0)); },
      "sqrt_decay:D=" + format_param(D) + ",G=" + format_param(G));
}

StepSchedule constant(double c) {
  if (!(c >= 0.0) || !std::isfinite(c)) {
    throw InvalidParameter("constant stepsize must be finite and >= 0");
  }
  return StepSchedule([c](std::size_t) { return c; }, "constant:c=" + format_param(c));
}

StepSchedule from_table(std::vector<double> table, std::string label) {
  return StepSchedule(std::move(table), std::move(label));
}

std::size_t doubling_block(std::size_t t) {
  // t + 1 in [2^k, 2^{k+1})
  return static_cast<std::size_t>(std::bit_width(t + 1) - 1);
}

StepSchedule doubling_concat(const BlockBuilder& builder, std::size_t num_blocks, std::string label) {
  if (num_blocks == 0 || num_blocks > 40) {
    throw InvalidParameter("doubling_concat: num_blocks must be in [1, 40]");
  }
  std::vector<double> table;
  table.reserve((std::size_t{1} << num_blocks) - 1);
  for (std::size_t k = 0; k < num_blocks; ++k) {
    const std::size_t n = std::size_t{1} << k;
    std::vector<double> block = builder(n);
    if (block.size() != n) {
      throw ConstructionError("doubling_concat: block builder returned " + std::to_string(block.size()) +
                              " values for horizon " + std::to_string(n));
    }
    table.insert(table.end(), block.begin(), block.end());
  }
  const std::size_t limit = table.size();
  return StepSchedule(std::move(table), std::move(label), [limit](std::size_t t) -> double {
    throw std::out_of_range("doubling schedule materialized only for t < " + std::to_string(limit) +
                            ", queried t = " + std::to_string(t));
  });
}

}  // namespace lastiter
