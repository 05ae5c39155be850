#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "lastiter/schedule.hpp"

namespace lastiter {

/// Objective, deterministic subgradient oracle and domain projection for
/// one convex Lipschitz problem. Implementations are immutable; every
/// method must be safe to call concurrently.
class ConvexInstance {
 public:
  virtual ~ConvexInstance() = default;

  virtual std::size_t dim() const = 0;
  virtual std::vector<double> initial_point() const = 0;
  virtual double value(std::span<const double> x) const = 0;
  /// Writes one element of the subdifferential at x into g (size dim()).
  virtual void subgradient(std::span<const double> x, std::span<double> g) const = 0;
  /// Projects x onto the domain in place.
  virtual void project(std::span<double> x) const = 0;
  /// A value v with min f <= v over the domain; errors are f(x_t) - v.
  virtual double reference_level() const = 0;
  virtual double lipschitz() const = 0;
  virtual double diameter() const = 0;
};

/// Which iterates a run keeps.
class SnapshotPolicy {
 public:
  static SnapshotPolicy none() { return SnapshotPolicy(Kind::None, {}); }
  static SnapshotPolicy all() { return SnapshotPolicy(Kind::All, {}); }
  static SnapshotPolicy times(std::set<std::size_t> ts) { return SnapshotPolicy(Kind::Times, std::move(ts)); }

  bool wants(std::size_t t) const {
    switch (kind_) {
      case Kind::None: return false;
      case Kind::All: return true;
      case Kind::Times: return times_.count(t) > 0;
    }
    return false;
  }

 private:
  enum class Kind { None, All, Times };
  SnapshotPolicy(Kind kind, std::set<std::size_t> ts) : kind_(kind), times_(std::move(ts)) {}

  Kind kind_;
  std::set<std::size_t> times_;
};

struct RunRecord {
  std::string schedule_label;
  std::size_t horizon = 0;
  /// errors[t - 1] = f(x_t) - reference_level, t = 1..horizon.
  std::vector<double> errors;
  std::map<std::size_t, std::vector<double>> snapshots;
  /// Largest Euclidean norm over x_0..x_T.
  double max_norm_seen = 0.0;
  /// Steps at which project() changed its input.
  std::size_t projection_activations = 0;

  double err(std::size_t t) const { return errors.at(t - 1); }
};

/// Called with (t, x_t) for t = 0..T after each iterate is formed.
using IterateObserver = std::function<void(std::size_t, std::span<const double>)>;

/// Projected subgradient descent x_{t+1} = project(x_t - eta_t g_t) for T steps.
/// Deterministic. Memory is O(dim) unless snapshots are requested.
RunRecord run(const ConvexInstance& instance, const StepSchedule& schedule, std::size_t T,
              const SnapshotPolicy& policy = SnapshotPolicy::none(), const IterateObserver& observer = {});

std::vector<double> project_ball(std::span<const double> x, double radius);
void project_ball_inplace(std::span<double> x, double radius);

double project_interval(double x, double lo, double hi);

double euclidean_norm(std::span<const double> x);

}  // namespace lastiter
