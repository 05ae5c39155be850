#include "lastiter/instances.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lastiter/error.hpp"
#include "lastiter/numeric.hpp"

namespace lastiter {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// min{1/2, 1/(2 eta sqrt(T+1))}; eta = 0 selects the first branch.
double b_cap(double eta, double root) {
  const double denom = 2.0 * eta * root;
  return denom > 0.0 ? std::min(0.5, 1.0 / denom) : 0.5;
}

void require_horizon(std::size_t t, std::size_t horizon, const char* family) {
  if (t < 1 || t > horizon) {
    throw InvalidParameter(std::string(family) + " closed form: t = " + std::to_string(t) +
                           " outside [1, " + std::to_string(horizon) + "]");
  }
}

}  // namespace

// ---------------------------------------------------------------- VShape

double VShapeInstance::value_at(double x) const {
  if (x < 0.0) {
    return -x;
  }
  if (x <= epsilon_) {
    return c_eps_ * x;
  }
  return x - epsilon_ + c_eps_ * epsilon_;
}

double VShapeInstance::slope_at(double x) const {
  if (x <= 0.0) {
    return -1.0;
  }
  if (x <= epsilon_) {
    return c_eps_;
  }
  return 1.0;
}

void VShapeInstance::project(std::span<double> x) const { x[0] = project_interval(x[0], -1.0, 1.0); }

double VShapeInstance::certified_bound() const {
  return value_at(std::min(schedule_(target_t_ - 1), 1.0));
}

VShapeInstance build_vshape(const StepSchedule& schedule, std::size_t target_t, double shrink) {
  if (target_t < 2) {
    throw ConstructionError("vshape: target_t must be >= 2");
  }
  if (!(shrink > 0.0) || !(shrink < 1.0)) {
    throw InvalidParameter("vshape: shrink factor must lie in (0, 1)");
  }
  const double eta_last = schedule(target_t - 1);
  const double sum = schedule.prefix_sum(target_t - 1);
  if (!(eta_last > 0.0)) {
    throw ConstructionError("vshape: eta_{t-1} = 0 at t = " + std::to_string(target_t) + ", instance undefined");
  }
  if (!(sum > 0.0)) {
    throw ConstructionError("vshape: sum_{j<t-1} eta_j = 0 at t = " + std::to_string(target_t) +
                            ", instance undefined");
  }
  double eps = shrink * std::min({1.0, eta_last, sum});
  const double c_eps = eps / sum;

  // Replays the engine's arithmetic on the shallow segment. The telescoped
  // iterate x_{t-1} is 0 in exact arithmetic; in floating point it must land
  // on the non-positive side so the oracle takes the -1 branch.
  auto residual = [&](double e) {
    const VShapeInstance probe(schedule, target_t, e, c_eps);
    double x = e;
    for (std::size_t i = 0; i + 1 < target_t; ++i) {
      const double stepped = x - schedule(i) * probe.slope_at(x);
      x = project_interval(stepped, -1.0, 1.0);
    }
    return x;
  };

  double r = residual(eps);
  if (r > 0.0) {
    eps -= r;
    r = residual(eps);
    for (int guard = 0; r > 0.0; ++guard) {
      if (guard > 1'000'000) {
        throw ConstructionError("vshape: could not place x_{t-1} on the kink");
      }
      eps = std::nextafter(eps, 0.0);
      r = residual(eps);
    }
  }
  return VShapeInstance(schedule, target_t, eps, c_eps);
}

std::vector<double> closed_form_iterate(const VShapeInstance& inst, std::size_t t) {
  require_horizon(t, inst.target_t(), "vshape");
  const StepSchedule& s = inst.schedule();
  if (t == inst.target_t()) {
    return {std::min(s(t - 1), 1.0)};
  }
  return {inst.epsilon() - inst.c_eps() * s.prefix_sum(t)};
}

// ------------------------------------------------------------- Quadratic

void QuadraticInstance::project(std::span<double> x) const { x[0] = project_interval(x[0], -1.0, 1.0); }

QuadraticInstance build_quadratic(const StepSchedule& schedule, std::size_t target_t) {
  if (target_t < 1) {
    throw ConstructionError("quadratic: target_t must be >= 1");
  }
  const double S = schedule.prefix_sum(target_t);
  if (!(S >= 0.5)) {
    throw ConstructionError("quadratic: S < 1/2 at t = " + std::to_string(target_t) + " (S = " + num(S) +
                            "), f would not be 1-Lipschitz on [-1, 1]");
  }
  return QuadraticInstance(schedule, target_t, S);
}

std::vector<double> closed_form_iterate(const QuadraticInstance& inst, std::size_t t) {
  require_horizon(t, inst.target_t(), "quadratic");
  double x = 1.0;
  for (std::size_t j = 0; j < t; ++j) {
    x *= 1.0 - inst.schedule()(j) / (2.0 * inst.S());
  }
  return {x};
}

// ------------------------------------------------------------- MaxLinear

AbSequences build_ab(const StepSchedule& schedule, std::size_t t, const GuaranteeEnvelope& phi) {
  if (t < 1) {
    throw InvalidParameter("build_ab: t must be >= 1");
  }
  const double phi_v = phi(t + 1);
  if (!(phi_v >= 1.0)) {
    throw InvalidParameter("build_ab: phi(t+1) = " + num(phi_v) + " < 1");
  }
  const double root = std::sqrt(static_cast<double>(t) + 1.0);
  AbSequences ab;
  ab.a.resize(t + 1);
  ab.b.resize(t + 1);
  for (std::size_t j = 0; j <= t; ++j) {
    const double eta = schedule(j);
    ab.a[j] = std::min(1.0, eta * root) / (16.0 * phi_v * static_cast<double>(t + 1 - j));
    ab.b[j] = b_cap(eta, root);
  }
  return ab;
}

std::string ConditionReport::summary() const {
  std::ostringstream os;
  os << "(i) " << (sum_squares_ok ? "pass" : "FAIL") << " slack " << sum_squares_slack << "; (ii) "
     << (b_cap_ok ? "pass" : "FAIL") << " slack " << b_cap_slack << " at j=" << b_cap_worst_index << "; (iii) "
     << (tail_ok ? "pass" : "FAIL") << " slack " << tail_slack << " at j=" << tail_worst_index
     << "; nonnegativity " << (nonnegative_ok ? "pass" : "FAIL");
  return os.str();
}

ConditionReport check_ab_conditions(std::span<const double> a, std::span<const double> b,
                                    const StepSchedule& schedule, std::size_t T) {
  if (a.size() != T + 1 || b.size() != T + 1) {
    throw InvalidParameter("check_ab_conditions: a and b must have length T+1 = " + std::to_string(T + 1));
  }
  ConditionReport rep;
  const double root = std::sqrt(static_cast<double>(T) + 1.0);

  rep.nonnegative_ok = std::all_of(a.begin(), a.end(), [](double v) { return v >= 0.0; }) &&
                       std::all_of(b.begin(), b.end(), [](double v) { return v >= 0.0; });

  CompensatedSum sq;
  for (double v : a) {
    sq += v * v;
  }
  rep.sum_squares_slack = 0.5 - sq.value();
  rep.sum_squares_ok = sq.value() <= 0.5;

  rep.b_cap_slack = std::numeric_limits<double>::infinity();
  rep.tail_slack = std::numeric_limits<double>::infinity();
  rep.b_cap_ok = true;
  rep.tail_ok = true;

  CompensatedSum tail;  // sum_{k=j+1}^{T} eta_k
  for (std::size_t jj = T + 1; jj-- > 0;) {
    const double eta = schedule(jj);
    const double cap_slack = b_cap(eta, root) - b[jj];
    if (cap_slack < rep.b_cap_slack) {
      rep.b_cap_slack = cap_slack;
      rep.b_cap_worst_index = jj;
    }
    rep.b_cap_ok = rep.b_cap_ok && b[jj] <= b_cap(eta, root);

    const double lhs = a[jj] * tail.value();
    const double rhs = 0.5 * eta * b[jj];
    if (rhs - lhs <= rep.tail_slack) {
      rep.tail_slack = rhs - lhs;
      rep.tail_worst_index = jj;
    }
    rep.tail_ok = rep.tail_ok && lhs <= rhs;
    tail += eta;
  }
  return rep;
}

std::pair<std::size_t, double> MaxLinearInstance::argmax(std::span<const double> x) const {
  // v_i . x = P_i - b_i x_i with P_i = sum_{c<i} a_c x_c. Strict comparison
  // keeps the first maximizer.
  double prefix = 0.0;
  std::size_t best = 0;
  double best_v = prefix - b_[0] * x[0];
  for (std::size_t i = 1; i <= T_; ++i) {
    prefix += a_[i - 1] * x[i - 1];
    const double v = prefix - b_[i] * x[i];
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  return {best, best_v};
}

double MaxLinearInstance::value(std::span<const double> x) const { return argmax(x).second; }

std::size_t MaxLinearInstance::active_index(std::span<const double> x) const { return argmax(x).first; }

void MaxLinearInstance::subgradient(std::span<const double> x, std::span<double> g) const {
  const std::size_t i = argmax(x).first;
  for (std::size_t c = 0; c < i; ++c) {
    g[c] = a_[c];
  }
  g[i] = -b_[i];
  std::fill(g.begin() + static_cast<std::ptrdiff_t>(i) + 1, g.end(), 0.0);
}

double MaxLinearInstance::certified_bound() const {
  CompensatedSum s;
  for (std::size_t j = 0; j < T_; ++j) {
    s += a_[j] * b_[j] * schedule_(j);
  }
  return 0.5 * s.value();
}

MaxLinearInstance build_maxlinear(const StepSchedule& schedule, std::size_t T, const GuaranteeEnvelope& phi) {
  AbSequences ab = build_ab(schedule, T, phi);
  const ConditionReport rep = check_ab_conditions(ab.a, ab.b, schedule, T);
  if (!rep.all_pass()) {
    throw ConstructionError("maxlinear: conditions failed at T = " + std::to_string(T) + ": " + rep.summary());
  }
  return MaxLinearInstance(schedule, T, std::move(ab), phi.label(), rep);
}

std::vector<double> closed_form_iterate(const MaxLinearInstance& inst, std::size_t t) {
  require_horizon(t, inst.horizon(), "maxlinear");
  const StepSchedule& s = inst.schedule();
  std::vector<double> x(inst.dim(), 0.0);
  CompensatedSum tail;  // sum_{k=c+1}^{t-1} eta_k
  for (std::size_t c = t; c-- > 0;) {
    const double eta = s(c);
    x[c] = inst.b()[c] * eta - inst.a()[c] * tail.value();
    tail += eta;
  }
  return x;
}

// ------------------------------------------------------------------ dumps

nlohmann::json dump_instance(const VShapeInstance& inst) {
  return {{"family", "vshape"},        {"T", inst.target_t()}, {"schedule_label", inst.schedule().label()},
          {"a", nullptr},              {"b", nullptr},         {"epsilon", inst.epsilon()},
          {"c_eps", inst.c_eps()},     {"S", nullptr}};
}

nlohmann::json dump_instance(const QuadraticInstance& inst) {
  return {{"family", "quadratic"}, {"T", inst.target_t()}, {"schedule_label", inst.schedule().label()},
          {"a", nullptr},          {"b", nullptr},         {"epsilon", nullptr},
          {"c_eps", nullptr},      {"S", inst.S()}};
}

nlohmann::json dump_instance(const MaxLinearInstance& inst) {
  return {{"family", "maxlinear"}, {"T", inst.horizon()}, {"schedule_label", inst.schedule().label()},
          {"a", inst.a()},         {"b", inst.b()},       {"epsilon", nullptr},
          {"c_eps", nullptr},      {"S", nullptr},        {"envelope", inst.envelope_label()}};
}

}  // namespace lastiter
