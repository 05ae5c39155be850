#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lastiter/engine.hpp"
#include "lastiter/envelope.hpp"
#include "lastiter/schedule.hpp"

namespace lastiter {

/// Piecewise-linear "v" on [-1, 1] with a shallow segment of slope c_eps on
/// [0, eps]. Started at eps, descent walks down the shallow segment and
/// reaches 0 exactly at step target_t - 1, then jumps out by eta_{target_t-1}.
class VShapeInstance final : public ConvexInstance {
 public:
  std::size_t dim() const override { return 1; }
  std::vector<double> initial_point() const override { return {epsilon_}; }
  double value(std::span<const double> x) const override { return value_at(x[0]); }
  void subgradient(std::span<const double> x, std::span<double> g) const override { g[0] = slope_at(x[0]); }
  void project(std::span<double> x) const override;
  double reference_level() const override { return 0.0; }
  double lipschitz() const override { return 1.0; }
  double diameter() const override { return 2.0; }

  double value_at(double x) const;
  double slope_at(double x) const;

  std::size_t target_t() const { return target_t_; }
  double epsilon() const { return epsilon_; }
  double c_eps() const { return c_eps_; }
  const StepSchedule& schedule() const { return schedule_; }

  /// Exact value at the jump: f(min(eta_{t-1}, 1)).
  double certified_bound() const;

 private:
  friend VShapeInstance build_vshape(const StepSchedule&, std::size_t, double);
  VShapeInstance(StepSchedule schedule, std::size_t target_t, double epsilon, double c_eps)
      : schedule_(std::move(schedule)), target_t_(target_t), epsilon_(epsilon), c_eps_(c_eps) {}

  StepSchedule schedule_;
  std::size_t target_t_;
  double epsilon_;
  double c_eps_;
};

/// f(x) = x^2 / (4 S) on [-1, 1], S = sum_{j<target_t} eta_j, started at 1.
class QuadraticInstance final : public ConvexInstance {
 public:
  std::size_t dim() const override { return 1; }
  std::vector<double> initial_point() const override { return {1.0}; }
  double value(std::span<const double> x) const override { return x[0] * x[0] / (4.0 * S_); }
  void subgradient(std::span<const double> x, std::span<double> g) const override { g[0] = x[0] / (2.0 * S_); }
  void project(std::span<double> x) const override;
  double reference_level() const override { return 0.0; }
  double lipschitz() const override { return 1.0; }
  double diameter() const override { return 2.0; }

  std::size_t target_t() const { return target_t_; }
  double S() const { return S_; }
  const StepSchedule& schedule() const { return schedule_; }

 private:
  friend QuadraticInstance build_quadratic(const StepSchedule&, std::size_t);
  QuadraticInstance(StepSchedule schedule, std::size_t target_t, double S)
      : schedule_(std::move(schedule)), target_t_(target_t), S_(S) {}

  StepSchedule schedule_;
  std::size_t target_t_;
  double S_;
};

struct AbSequences {
  std::vector<double> a;
  std::vector<double> b;
};

/// a_j = min{1, eta_j sqrt(t+1)} / (16 phi(t+1) (t+1-j)),
/// b_j = min{1/2, 1/(2 eta_j sqrt(t+1))}, for j = 0..t.
AbSequences build_ab(const StepSchedule& schedule, std::size_t t, const GuaranteeEnvelope& phi);

struct ConditionReport {
  bool sum_squares_ok = false;  // (i)
  double sum_squares_slack = 0.0;
  bool b_cap_ok = false;  // (ii)
  double b_cap_slack = 0.0;
  std::size_t b_cap_worst_index = 0;
  bool tail_ok = false;  // (iii)
  double tail_slack = 0.0;
  std::size_t tail_worst_index = 0;
  bool nonnegative_ok = false;

  bool all_pass() const { return sum_squares_ok && b_cap_ok && tail_ok && nonnegative_ok; }
  std::string summary() const;
};

/// Checks (i) sum a_j^2 <= 1/2, (ii) b_j <= min{1/2, 1/(2 eta_j sqrt(T+1))},
/// (iii) a_j sum_{k=j+1}^T eta_k <= eta_j b_j / 2, plus a, b >= 0.
/// Slacks are rhs - lhs (the minimum over j for (ii) and (iii)).
ConditionReport check_ab_conditions(std::span<const double> a, std::span<const double> b,
                                    const StepSchedule& schedule, std::size_t T);

/// f(x) = max_i v_i . x over the unit ball of R^{T+1}, with
/// v_i = sum_{c<i} a_c e_c - b_i e_i (0-based coordinates). The oracle
/// returns v_i for the minimal maximizing index.
class MaxLinearInstance final : public ConvexInstance {
 public:
  std::size_t dim() const override { return T_ + 1; }
  std::vector<double> initial_point() const override { return std::vector<double>(T_ + 1, 0.0); }
  double value(std::span<const double> x) const override;
  void subgradient(std::span<const double> x, std::span<double> g) const override;
  void project(std::span<double> x) const override { project_ball_inplace(x, 1.0); }
  double reference_level() const override { return 0.0; }
  double lipschitz() const override { return 1.0; }
  double diameter() const override { return 2.0; }

  /// Minimal index attaining max_i v_i . x. One O(T) pass.
  std::size_t active_index(std::span<const double> x) const;

  /// (1/2) sum_{j<T} a_j b_j eta_j.
  double certified_bound() const;

  std::size_t horizon() const { return T_; }
  const std::vector<double>& a() const { return a_; }
  const std::vector<double>& b() const { return b_; }
  const StepSchedule& schedule() const { return schedule_; }
  const std::string& envelope_label() const { return envelope_label_; }
  const ConditionReport& conditions() const { return conditions_; }

 private:
  friend MaxLinearInstance build_maxlinear(const StepSchedule&, std::size_t, const GuaranteeEnvelope&);
  MaxLinearInstance(StepSchedule schedule, std::size_t T, AbSequences ab, std::string envelope_label,
                    ConditionReport conditions)
      : schedule_(std::move(schedule)),
        T_(T),
        a_(std::move(ab.a)),
        b_(std::move(ab.b)),
        envelope_label_(std::move(envelope_label)),
        conditions_(conditions) {}

  std::pair<std::size_t, double> argmax(std::span<const double> x) const;

  StepSchedule schedule_;
  std::size_t T_;
  std::vector<double> a_;
  std::vector<double> b_;
  std::string envelope_label_;
  ConditionReport conditions_;
};

/// Default eps shrink factor relative to min{1, eta_{t-1}, sum_{j<t-1} eta_j}.
inline constexpr double kDefaultVShapeShrink = 1e-6;

VShapeInstance build_vshape(const StepSchedule& schedule, std::size_t target_t,
                            double shrink = kDefaultVShapeShrink);
QuadraticInstance build_quadratic(const StepSchedule& schedule, std::size_t target_t);
/// Throws ConstructionError (message carries the condition summary) when
/// conditions (i)-(iii) fail.
MaxLinearInstance build_maxlinear(const StepSchedule& schedule, std::size_t T, const GuaranteeEnvelope& phi);

/// Real-arithmetic trajectories, 1 <= t <= horizon.
std::vector<double> closed_form_iterate(const VShapeInstance& inst, std::size_t t);
std::vector<double> closed_form_iterate(const QuadraticInstance& inst, std::size_t t);
std::vector<double> closed_form_iterate(const MaxLinearInstance& inst, std::size_t t);

nlohmann::json dump_instance(const VShapeInstance& inst);
nlohmann::json dump_instance(const QuadraticInstance& inst);
nlohmann::json dump_instance(const MaxLinearInstance& inst);

}  // namespace lastiter
