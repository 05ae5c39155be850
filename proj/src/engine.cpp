#include "lastiter/engine.hpp"

#include <algorithm>
#include <cmath>

#include "lastiter/error.hpp"

namespace lastiter {

double euclidean_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) {
    s += v * v;
  }
  return std::sqrt(s);
}

std::vector<double> project_ball(std::span<const double> x, double radius) {
  std::vector<double> out(x.begin(), x.end());
  project_ball_inplace(out, radius);
  return out;
}

void project_ball_inplace(std::span<double> x, double radius) {
  if (!(radius > 0.0)) {
    throw InvalidParameter("project_ball: radius must be positive");
  }
  const double n = euclidean_norm(x);
  if (n <= radius) {
    return;
  }
  const double scale = radius / n;
  for (double& v : x) {
    v *= scale;
  }
}

double project_interval(double x, double lo, double hi) {
  if (lo > hi) {
    throw InvalidParameter("project_interval: lo > hi");
  }
  return std::clamp(x, lo, hi);
}

RunRecord run(const ConvexInstance& instance, const StepSchedule& schedule, std::size_t T,
              const SnapshotPolicy& policy, const IterateObserver& observer) {
  if (T < 1) {
    throw InvalidParameter("run: horizon T must be >= 1");
  }
  const std::size_t d = instance.dim();
  if (d < 1) {
    throw InvalidParameter("run: instance dimension must be >= 1");
  }

  RunRecord rec;
  rec.schedule_label = schedule.label();
  rec.horizon = T;
  rec.errors.reserve(T);

  std::vector<double> x = instance.initial_point();
  if (x.size() != d) {
    throw InvalidParameter("run: initial point has wrong dimension");
  }
  std::vector<double> g(d, 0.0);
  std::vector<double> stepped(d, 0.0);
  const double ref = instance.reference_level();

  rec.max_norm_seen = euclidean_norm(x);
  if (policy.wants(0)) {
    rec.snapshots.emplace(0, x);
  }
  if (observer) {
    observer(0, x);
  }

  for (std::size_t t = 0; t < T; ++t) {
    instance.subgradient(x, g);
    for (std::size_t i = 0; i < d; ++i) {
      if (!std::isfinite(g[i])) {
        throw NumericFault(t, "non-finite subgradient component " + std::to_string(i));
      }
    }
    const double eta = schedule(t);
    for (std::size_t i = 0; i < d; ++i) {
      stepped[i] = x[i] - eta * g[i];
    }
    x = stepped;
    instance.project(x);
    if (x != stepped) {
      ++rec.projection_activations;
    }

    const std::size_t next = t + 1;
    const double f = instance.value(x);
    if (!std::isfinite(f)) {
      throw NumericFault(next, "non-finite objective value");
    }
    rec.errors.push_back(f - ref);
    rec.max_norm_seen = std::max(rec.max_norm_seen, euclidean_norm(x));
    if (policy.wants(next)) {
      rec.snapshots.emplace(next, x);
    }
    if (observer) {
      observer(next, x);
    }
  }
  return rec;
}

}  // namespace lastiter
