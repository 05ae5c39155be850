#include "lastiter/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

#include "lastiter/error.hpp"
#include "lastiter/io.hpp"
#include "lastiter/numeric.hpp"

namespace lastiter {

namespace {

double as_real(std::size_t n) { return static_cast<double>(n); }

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results are written by
// index, so output order never depends on scheduling. The lowest-index
// exception is rethrown.
template <class Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  const std::size_t width = std::max<std::size_t>(1, std::min(jobs, n));
  if (width == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(width);
    for (std::size_t w = 0; w < width; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) {
      th.join();
    }
  }
  for (auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
}

nlohmann::json real_json(double v) {
  if (!std::isfinite(v)) {
    return format_real(v);
  }
  return v;
}

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::VShape: return "vshape";
    case Family::Quadratic: return "quadratic";
    case Family::MaxLinear: return "maxlinear";
  }
  return "?";
}

Family parse_family(const std::string& name) {
  if (name == "vshape") return Family::VShape;
  if (name == "quadratic") return Family::Quadratic;
  if (name == "maxlinear") return Family::MaxLinear;
  throw InvalidParameter("unknown family '" + name + "' (expected vshape, quadratic or maxlinear)");
}

void ExperimentSpec::validate() const {
  if (horizons.empty()) {
    throw InvalidParameter("horizons: at least one horizon is required");
  }
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (horizons[i] < 1) {
      throw InvalidParameter("horizons: every horizon must be >= 1");
    }
    if (i > 0 && horizons[i] <= horizons[i - 1]) {
      throw InvalidParameter("horizons: must be strictly ascending");
    }
  }
  if (families.empty()) {
    throw InvalidParameter("families: at least one family is required");
  }
}

// ------------------------------------------------------------ verification

namespace {

TrajectoryCheck verify_vshape(const ExperimentSpec& spec, std::size_t T) {
  const VShapeInstance inst = build_vshape(spec.schedule, T, spec.vshape_shrink);
  TrajectoryCheck c;
  c.family = Family::VShape;
  c.horizon = T;
  c.tolerance = spec.tol.vshape;
  const RunRecord rec = run(inst, spec.schedule, T, SnapshotPolicy::none(),
                            [&](std::size_t t, std::span<const double> x) {
                              if (t == 0) return;
                              const double cf = closed_form_iterate(inst, t)[0];
                              c.max_coord_dev = std::max(c.max_coord_dev, std::abs(x[0] - cf));
                              c.max_err_dev = std::max(c.max_err_dev, std::abs(inst.value_at(x[0]) - inst.value_at(cf)));
                              if (t + 1 == T) {
                                c.kink_residual_ratio = std::abs(x[0]) / inst.epsilon();
                              }
                            });
  c.max_norm_seen = rec.max_norm_seen;
  c.projection_activations = rec.projection_activations;
  c.measured_final = rec.err(T);
  c.certified_bound = inst.certified_bound();
  const double scale = std::min(spec.schedule(T - 1), 1.0);
  c.bound_ok = std::abs(c.measured_final - c.certified_bound) <= spec.tol.vshape * scale;
  c.pass = c.max_coord_dev <= c.tolerance && c.max_err_dev <= c.tolerance && c.kink_residual_ratio <= 1e-12 &&
           c.bound_ok;
  return c;
}

TrajectoryCheck verify_quadratic(const ExperimentSpec& spec, std::size_t T) {
  const QuadraticInstance inst = build_quadratic(spec.schedule, T);
  TrajectoryCheck c;
  c.family = Family::Quadratic;
  c.horizon = T;
  c.tolerance = spec.tol.coord_abs;
  const RunRecord rec = run(inst, spec.schedule, T, SnapshotPolicy::none(),
                            [&](std::size_t t, std::span<const double> x) {
                              if (t == 0) return;
                              const std::vector<double> cf = closed_form_iterate(inst, t);
                              c.max_coord_dev = std::max(c.max_coord_dev, std::abs(x[0] - cf[0]));
                              c.max_err_dev = std::max(c.max_err_dev, std::abs(inst.value(x) - inst.value(cf)));
                            });
  c.max_norm_seen = rec.max_norm_seen;
  c.projection_activations = rec.projection_activations;
  c.measured_final = rec.err(T);
  c.certified_bound = std::exp(-2.0) / (4.0 * inst.S());
  c.bound_ok = c.measured_final >= c.certified_bound - spec.tol.bound_abs;
  c.pass = c.max_coord_dev <= c.tolerance && c.max_err_dev <= c.tolerance && c.bound_ok;
  return c;
}

TrajectoryCheck verify_maxlinear(const ExperimentSpec& spec, std::size_t T) {
  const MaxLinearInstance inst = build_maxlinear(spec.schedule, T, spec.envelope);
  TrajectoryCheck c;
  c.family = Family::MaxLinear;
  c.horizon = T;
  c.tolerance = spec.tol.coord_abs;
  const std::vector<double> eta = spec.schedule.values(T + 1);
  const RunRecord rec = run(
      inst, spec.schedule, T, SnapshotPolicy::none(), [&](std::size_t t, std::span<const double> x) {
        // A zero step makes the oracle choice irrelevant (and ties it).
        if (inst.active_index(x) != t && eta[t] > 0.0) {
          ++c.argmax_mismatches;
        }
        if (t == 0) return;
        const std::vector<double> cf = closed_form_iterate(inst, t);
        for (std::size_t k = 0; k < cf.size(); ++k) {
          c.max_coord_dev = std::max(c.max_coord_dev, std::abs(x[k] - cf[k]));
        }
        for (std::size_t k = 0; k < t; ++k) {
          const double hi = inst.b()[k] * eta[k];
          if (x[k] < 0.5 * hi - 1e-12 || x[k] > hi + 1e-12) {
            ++c.positivity_violations;
          }
        }
        c.max_err_dev = std::max(c.max_err_dev, std::abs(inst.value(x) - inst.value(cf)));
      });
  c.max_norm_seen = rec.max_norm_seen;
  c.projection_activations = rec.projection_activations;
  c.measured_final = rec.err(T);
  c.certified_bound = inst.certified_bound();
  c.bound_ok = c.measured_final >= c.certified_bound - spec.tol.bound_abs;
  c.pass = c.max_coord_dev <= c.tolerance && c.max_err_dev <= c.tolerance && c.argmax_mismatches == 0 &&
           c.positivity_violations == 0 && c.projection_activations == 0 && c.max_norm_seen <= 1.0 && c.bound_ok;
  return c;
}

}  // namespace

bool VerificationReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const TrajectoryCheck& c) { return c.pass; });
}

nlohmann::json VerificationReport::to_json() const {
  nlohmann::json items = nlohmann::json::array();
  std::map<std::string, double> worst;
  for (const TrajectoryCheck& c : checks) {
    items.push_back({{"family", to_string(c.family)},
                     {"T", c.horizon},
                     {"pass", c.pass},
                     {"tolerance", c.tolerance},
                     {"max_coord_dev", c.max_coord_dev},
                     {"max_err_dev", c.max_err_dev},
                     {"max_norm_seen", c.max_norm_seen},
                     {"projection_activations", c.projection_activations},
                     {"argmax_mismatches", c.argmax_mismatches},
                     {"positivity_violations", c.positivity_violations},
                     {"kink_residual_ratio", c.kink_residual_ratio},
                     {"measured_final", c.measured_final},
                     {"certified_bound", c.certified_bound},
                     {"bound_ok", c.bound_ok}});
    double& w = worst[to_string(c.family)];
    w = std::max(w, c.max_coord_dev);
  }
  std::size_t passed = 0;
  for (const auto& c : checks) passed += c.pass ? 1 : 0;
  return {{"pass", pass()},
          {"passed", passed},
          {"failed", checks.size() - passed},
          {"max_deviation_by_family", worst},
          {"checks", items}};
}

VerificationReport verify_trajectories(const ExperimentSpec& spec) {
  spec.validate();
  struct Item {
    Family family;
    std::size_t T;
  };
  std::vector<Item> items;
  for (Family f : spec.families) {
    for (std::size_t T : spec.horizons) {
      items.push_back({f, T});
    }
  }
  VerificationReport rep;
  rep.checks.resize(items.size());
  parallel_for(items.size(), spec.jobs, [&](std::size_t i) {
    switch (items[i].family) {
      case Family::VShape: rep.checks[i] = verify_vshape(spec, items[i].T); break;
      case Family::Quadratic: rep.checks[i] = verify_quadratic(spec, items[i].T); break;
      case Family::MaxLinear: rep.checks[i] = verify_maxlinear(spec, items[i].T); break;
    }
  });
  return rep;
}

// ------------------------------------------------------------------- audit

namespace {

struct AuditItem {
  FamilyMeasurement m;
  std::optional<RunRecord> record;
};

AuditItem audit_one(const StepSchedule& s, Family family, std::size_t t, const GuaranteeEnvelope& phi,
                    const ExperimentSpec& spec) {
  AuditItem item;
  item.m.family = family;
  item.m.t = t;
  try {
    switch (family) {
      case Family::VShape: {
        const VShapeInstance inst = build_vshape(s, t, spec.vshape_shrink);
        item.record = run(inst, s, t);
        item.m.certified = inst.certified_bound();
        item.m.measured_err = item.record->err(t);
        item.m.dominance_ok =
            item.m.measured_err >= item.m.certified - spec.tol.vshape * std::min(s(t - 1), 1.0);
        break;
      }
      case Family::Quadratic: {
        const QuadraticInstance inst = build_quadratic(s, t);
        item.record = run(inst, s, t);
        item.m.certified = std::exp(-2.0) / (4.0 * inst.S());
        item.m.measured_err = item.record->err(t);
        item.m.dominance_ok = item.m.measured_err >= item.m.certified - spec.tol.bound_abs;
        break;
      }
      case Family::MaxLinear: {
        const MaxLinearInstance inst = build_maxlinear(s, t, phi);
        item.record = run(inst, s, t);
        item.m.certified = inst.certified_bound();
        item.m.measured_err = item.record->err(t);
        item.m.dominance_ok = item.m.measured_err >= item.m.certified - spec.tol.bound_abs;
        break;
      }
    }
    item.m.constructed = true;
  } catch (const ConstructionError& e) {
    item.m.constructed = false;
    item.m.skip_reason = e.what();
    item.record.reset();
  } catch (const InvalidParameter& e) {
    item.m.constructed = false;
    item.m.skip_reason = e.what();
    item.record.reset();
  }
  return item;
}

std::vector<AuditItem> audit_pass(const ExperimentSpec& spec, const GuaranteeEnvelope& phi,
                                  const std::vector<Family>& families) {
  std::vector<std::pair<std::size_t, Family>> work;
  for (std::size_t t : spec.horizons) {
    for (Family f : families) {
      work.emplace_back(t, f);
    }
  }
  std::vector<AuditItem> out(work.size());
  parallel_for(work.size(), spec.jobs, [&](std::size_t i) {
    out[i] = audit_one(spec.schedule, work[i].second, work[i].first, phi, spec);
  });
  return out;
}

BoundRow analytic_row(const StepSchedule& s, const GuaranteeEnvelope& phi, std::size_t t) {
  BoundRow r;
  r.t = t;
  r.lemma41_step = lemma41_last_step(s, t);
  r.lemma41_sum = lemma41_sum_bound(s, t);
  r.eq3 = eq3_bound(s, t, phi);
  r.phi4_rhs = phi4_rhs(s, t);
  if (t >= 2) {
    r.final = final_bound(t);
  }
  return r;
}

}  // namespace

BoundReport analytic_bounds(const StepSchedule& s, const GuaranteeEnvelope& phi,
                            const std::vector<std::size_t>& ts) {
  BoundReport rep;
  rep.schedule_label = s.label();
  rep.envelope_label = phi.label();
  for (std::size_t t : ts) {
    rep.rows.push_back(analytic_row(s, phi, t));
  }
  return rep;
}

BoundReport audit_schedule(const ExperimentSpec& spec) {
  spec.validate();
  GuaranteeEnvelope phi = spec.envelope;
  if (spec.empirical_envelope) {
    // Pass 1: phi-free families, plus MaxLinear built with phi = 1 wherever
    // its conditions still hold. Every recorded error lower-bounds E(t).
    const std::vector<AuditItem> first = audit_pass(spec, constant_envelope(1.0),
                                                    {Family::VShape, Family::Quadratic, Family::MaxLinear});
    std::vector<RunRecord> records;
    for (const AuditItem& it : first) {
      if (it.record) records.push_back(*it.record);
    }
    phi = records.empty() ? constant_envelope(1.0) : empirical_envelope(records);
  }

  const std::vector<AuditItem> items = audit_pass(spec, phi, spec.families);

  BoundReport rep = analytic_bounds(spec.schedule, phi, spec.horizons);
  rep.envelope_decisive = !spec.empirical_envelope;
  std::vector<RunRecord> records;
  for (const AuditItem& it : items) {
    rep.measurements.push_back(it.m);
    if (it.record) records.push_back(*it.record);
  }
  for (BoundRow& row : rep.rows) {
    for (const FamilyMeasurement& m : rep.measurements) {
      if (m.t == row.t && m.constructed) {
        row.measured_err = row.measured_err ? std::max(*row.measured_err, m.measured_err) : m.measured_err;
      }
    }
  }
  rep.envelope = validate_envelope(spec.schedule, phi, records, spec.horizons.back());
  return rep;
}

bool BoundReport::certified_ok() const {
  return std::all_of(measurements.begin(), measurements.end(),
                     [](const FamilyMeasurement& m) { return !m.constructed || m.dominance_ok; });
}

bool BoundReport::envelope_ok() const { return !envelope || !envelope_decisive || envelope->pass(); }

std::string BoundReport::to_csv(const std::string& comment, bool with_measured) const {
  std::ostringstream os;
  if (!comment.empty()) {
    os << comment << '\n';
  }
  os << "t,lemma41_step,lemma41_sum,eq3,phi4_rhs,final_harmonic,final_log";
  if (with_measured) os << ",measured_err";
  os << '\n';
  for (const BoundRow& r : rows) {
    os << r.t << ',' << format_real(r.lemma41_step) << ',' << (r.lemma41_sum ? format_real(*r.lemma41_sum) : "")
       << ',' << format_real(r.eq3) << ',' << format_real(r.phi4_rhs) << ','
       << (r.final ? format_real(r.final->harmonic_form) : "") << ','
       << (r.final ? format_real(r.final->log_form) : "");
    if (with_measured) {
      os << ',' << (r.measured_err ? format_real(*r.measured_err) : "");
    }
    os << '\n';
  }
  return os.str();
}

nlohmann::json BoundReport::summary_json() const {
  nlohmann::json ms = nlohmann::json::array();
  std::size_t constructed = 0;
  std::size_t failed = 0;
  for (const FamilyMeasurement& m : measurements) {
    nlohmann::json j = {{"family", to_string(m.family)}, {"t", m.t}, {"constructed", m.constructed}};
    if (m.constructed) {
      ++constructed;
      j["measured_err"] = real_json(m.measured_err);
      j["certified"] = real_json(m.certified);
      j["dominance_ok"] = m.dominance_ok;
      if (!m.dominance_ok) ++failed;
    } else {
      j["skip_reason"] = m.skip_reason;
    }
    ms.push_back(std::move(j));
  }
  nlohmann::json env = nullptr;
  if (envelope) {
    std::map<std::string, std::size_t> counts;
    nlohmann::json first = nlohmann::json::array();
    for (const EnvelopeFailure& f : envelope->failures) {
      ++counts[f.check];
      if (first.size() < 50) {
        first.push_back({{"check", f.check}, {"t", f.t}, {"lhs", real_json(f.lhs)}, {"rhs", real_json(f.rhs)}});
      }
    }
    env = {{"pass", envelope->pass()},
           {"checked_up_to", envelope->checked_up_to},
           {"error_checks", envelope->error_checks},
           {"failure_counts", counts},
           {"failures", first},
           {"decisive", envelope_decisive}};
  }
  return {{"schedule", schedule_label},
          {"envelope", envelope_label},
          {"pass", pass()},
          {"certified_ok", certified_ok()},
          {"envelope_ok", envelope_ok()},
          {"measurements_total", measurements.size()},
          {"measurements_constructed", constructed},
          {"measurements_skipped", measurements.size() - constructed},
          {"certified_failures", failed},
          {"rows", rows.size()},
          {"measurements", ms},
          {"envelope_validation", env}};
}

// ----------------------------------------------------------------- density

namespace {

// err(t) of a fresh instance of `family` targeted at t; nullopt if the
// instance cannot be built at t.
std::optional<double> targeted_error(const ExperimentSpec& spec, Family family, std::size_t t) {
  try {
    switch (family) {
      case Family::VShape: return run(build_vshape(spec.schedule, t, spec.vshape_shrink), spec.schedule, t).err(t);
      case Family::Quadratic: return run(build_quadratic(spec.schedule, t), spec.schedule, t).err(t);
      case Family::MaxLinear: return run(build_maxlinear(spec.schedule, t, spec.envelope), spec.schedule, t).err(t);
    }
  } catch (const ConstructionError&) {
  }
  return std::nullopt;
}

std::optional<RunRecord> single_run(const ExperimentSpec& spec, Family family, std::size_t T) {
  try {
    switch (family) {
      case Family::VShape: return run(build_vshape(spec.schedule, T, spec.vshape_shrink), spec.schedule, T);
      case Family::Quadratic: return run(build_quadratic(spec.schedule, T), spec.schedule, T);
      case Family::MaxLinear: return run(build_maxlinear(spec.schedule, T, spec.envelope), spec.schedule, T);
    }
  } catch (const ConstructionError&) {
  }
  return std::nullopt;
}

}  // namespace

DensityTable density_experiment(const ExperimentSpec& spec, const std::vector<double>& thresholds) {
  spec.validate();
  DensityTable table;
  table.family = spec.families.front();
  table.mode = spec.per_t ? "per-t" : "single-run";

  for (std::size_t T : spec.horizons) {
    std::vector<ProfileRow> profile(T);
    if (spec.per_t) {
      parallel_for(T, spec.jobs, [&](std::size_t i) {
        const std::size_t t = i + 1;
        const std::optional<double> e = targeted_error(spec, table.family, t);
        profile[i] = {t, e.value_or(0.0), e.has_value()};
      });
    } else {
      const std::optional<RunRecord> rec = single_run(spec, table.family, T);
      for (std::size_t t = 1; t <= T; ++t) {
        profile[t - 1] = {t, rec ? rec->err(t) : 0.0, rec.has_value()};
      }
    }
    for (double c : thresholds) {
      std::size_t count = 0;
      for (const ProfileRow& p : profile) {
        if (std::sqrt(as_real(p.t)) * p.err >= c) ++count;
      }
      table.rows.push_back({c, T, count, as_real(count) / as_real(T)});
    }
    table.profiles.emplace(T, std::move(profile));
  }
  return table;
}

std::string DensityTable::to_csv(const std::string& comment) const {
  std::ostringstream os;
  if (!comment.empty()) os << comment << '\n';
  os << "c,T,count,density\n";
  for (const DensityRow& r : rows) {
    os << format_real(r.c) << ',' << r.T << ',' << r.count << ',' << format_real(r.density) << '\n';
  }
  return os.str();
}

std::string DensityTable::profile_csv(std::size_t T, const std::string& comment) const {
  std::ostringstream os;
  if (!comment.empty()) os << comment << '\n';
  os << "t,err,scaled_err,constructed\n";
  for (const ProfileRow& p : profiles.at(T)) {
    os << p.t << ',' << format_real(p.err) << ',' << format_real(std::sqrt(as_real(p.t)) * p.err) << ','
       << (p.constructed ? 1 : 0) << '\n';
  }
  return os.str();
}

// ------------------------------------------------------------------- chain

std::string to_string(StepStatus s) {
  switch (s) {
    case StepStatus::Pass: return "pass";
    case StepStatus::Fail: return "fail";
    case StepStatus::Inconclusive: return "inconclusive";
    case StepStatus::Inapplicable: return "inapplicable";
    case StepStatus::Info: return "info";
  }
  return "?";
}

bool ChainReport::pass() const {
  return std::none_of(steps.begin(), steps.end(), [](const ChainStep& s) { return s.status == StepStatus::Fail; });
}

const ChainStep* ChainReport::find(const std::string& name) const {
  for (const ChainStep& s : steps) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

nlohmann::json ChainReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  std::map<std::string, std::size_t> counts;
  for (const ChainStep& s : steps) {
    nlohmann::json j = {{"name", s.name},
                        {"lhs", real_json(s.lhs)},
                        {"rhs", real_json(s.rhs)},
                        {"status", to_string(s.status)},
                        {"note", s.note}};
    if (s.at_t) j["t"] = *s.at_t;
    arr.push_back(std::move(j));
    ++counts[to_string(s.status)];
  }
  return {{"T", T},
          {"t1", t1 ? nlohmann::json(*t1) : nlohmann::json(nullptr)},
          {"pass", pass()},
          {"status_counts", counts},
          {"steps", arr}};
}

ChainReport chain_check(const StepSchedule& s, const GuaranteeEnvelope& phi, std::size_t T) {
  if (T < 4 || T % 2 != 0) {
    throw InvalidParameter("chain check requires even T >= 4 (got T = " + std::to_string(T) + ")");
  }
  ChainReport rep;
  rep.T = T;
  const std::size_t half = T / 2;
  const double e2 = std::exp(2.0);
  auto holds = [](double lhs, double rhs) { return lhs >= rhs * (1.0 - 1e-12) || lhs >= rhs; };
  auto status_of = [](bool ok) { return ok ? StepStatus::Pass : StepStatus::Fail; };

  {
    const EnvelopeReport env = validate_envelope(s, phi, {}, T + 1);
    ChainStep st{"envelope_necessary", static_cast<double>(env.failures.size()), 0.0, status_of(env.pass()),
                 "phi >= 1, non-decreasing, phi(t+1) >= eta_t sqrt(t+1) on t <= T+1; lhs = failure count", {}};
    if (!env.pass()) {
      st.at_t = env.failures.front().t;
      st.note += "; first failure: " + env.failures.front().check;
    }
    rep.steps.push_back(st);
  }

  // phi(t+1)^4 lower bound at every t <= T; report the tightest t.
  for (const bool jplus1 : {false, true}) {
    bool all = true;
    double worst_ratio = std::numeric_limits<double>::infinity();
    ChainStep st{jplus1 ? "eq4_jplus1_each_t" : "eq4_each_t", 0.0, 0.0, StepStatus::Pass, "", std::nullopt};
    for (std::size_t t = 1; t <= T; ++t) {
      const double p = phi(t + 1);
      const double lhs = 128.0 * p * p * p * p;
      const double rhs = jplus1 ? phi4_rhs_jplus1(s, t) : phi4_rhs(s, t);
      const bool ok = lhs >= rhs;
      all = all && ok;
      const double ratio = rhs > 0.0 ? lhs / rhs : std::numeric_limits<double>::infinity();
      if (!st.at_t || ratio < worst_ratio) {
        worst_ratio = ratio;
        st.lhs = lhs;
        st.rhs = rhs;
        st.at_t = t;
      }
    }
    if (jplus1) {
      st.status = StepStatus::Info;
      st.note = std::string("128 phi(t+1)^4 >= (1/128)-sum with (j+1) numerator, before relaxing to j: ") +
                (all ? "holds" : "violated") + " for all t <= T; tightest t reported";
    } else {
      st.status = status_of(all);
      st.note = "128 phi(t+1)^4 >= phi4_rhs(t) for all t <= T; tightest t reported";
    }
    rep.steps.push_back(st);
  }

  const double avg_closed = averaged_phi4(s, T);
  {
    const double brute = averaged_phi4_double_sum(s, T);
    const double diff = std::abs(avg_closed - brute);
    const bool ok = diff <= 1e-12 * std::max(std::abs(brute), std::numeric_limits<double>::min());
    rep.steps.push_back({"eq5_identity", avg_closed, brute, status_of(ok || diff == 0.0),
                         "closed form (1/T) sum k eta_k^2 (H_{T+1-k} - 1) vs direct double sum", T});
    const double from_k = averaged_phi4_from_k(s, T);
    rep.steps.push_back({"eq5_from_k_form", from_k, brute, StepStatus::Info,
                         "(1/T) sum k eta_k^2 H_{T+1-k} (inner sum started at t = k) upper-bounds the double sum",
                         T});
  }

  CompensatedSum mean_acc;
  for (std::size_t t = 1; t <= T; ++t) {
    const double p = phi(t + 1);
    mean_acc += 128.0 * p * p * p * p;
  }
  const double mean_phi4 = mean_acc.value() / as_real(T);
  {
    const double p = phi(T + 1);
    const double lhs = 128.0 * p * p * p * p;
    rep.steps.push_back({"eq5_average_of_phi4", lhs, mean_phi4, status_of(holds(lhs, mean_phi4)),
                         "128 phi(T+1)^4 >= (1/T) sum_t 128 phi(t+1)^4 (monotone phi)", T});
  }
  rep.steps.push_back({"eq5_average_dominates", mean_phi4, avg_closed, status_of(holds(mean_phi4, avg_closed)),
                       "(1/T) sum_t 128 phi(t+1)^4 >= averaged phi4 bound", T});

  CompensatedSum weighted;  // sum_{k=1}^{T/2} k eta_k^2
  for (std::size_t k = 1; k <= half; ++k) {
    const double eta = s(k);
    weighted += as_real(k) * eta * eta;
  }
  {
    const double rhs = harmonic(half) / as_real(T) * weighted.value();
    rep.steps.push_back({"eq5_harmonic_tail", avg_closed, rhs, status_of(holds(avg_closed, rhs)),
                         "averaged bound >= H_{T/2}/T sum_{k<=T/2} k eta_k^2", T});
  }

  rep.t1 = t1_select(T, phi);
  const double phi_mid = phi(half + 1);
  const double mid_root = std::sqrt(as_real(half) + 1.0);
  rep.steps.push_back({"t1_select", rep.t1 ? as_real(*rep.t1) : -1.0, 1.0,
                       rep.t1 ? StepStatus::Pass : StepStatus::Inconclusive,
                       rep.t1 ? "t1 = floor((T/2+1)/(2^8 e^4 phi(T/2+1)^2)) - 1"
                              : "inconclusive at this T: t1 < 1 (horizon too small for the envelope)",
                       rep.t1});

  {
    const double prefix = s.prefix_sum(half + 1);
    const double rhs = mid_root / (4.0 * e2 * phi_mid);
    if (prefix >= 0.5) {
      rep.steps.push_back({"eq6_prefix_lower", prefix, rhs, status_of(holds(prefix, rhs)),
                           "sum_{k<=T/2} eta_k >= sqrt(T/2+1)/(4 e^2 phi(T/2+1))", half});
    } else {
      rep.steps.push_back({"eq6_prefix_lower", prefix, rhs, StepStatus::Inapplicable,
                           "sum_{k<=T/2} eta_k < 1/2: quadratic lower bound does not apply", half});
    }
  }

  {
    const std::size_t lo = std::max<std::size_t>(1, T / 4);
    const SideBySide r = eta_sum_upper(s, lo, half, phi);
    rep.steps.push_back({"step_sum_upper", r.lhs, r.rhs, status_of(r.pass),
                         "sum_{j=T/4}^{T/2} eta_j <= 2 phi(T/2+1)(sqrt(T/2) - sqrt(T/4))", half});
  }

  const char* inconclusive = "inconclusive at this T: depends on t1 >= 1";
  if (rep.t1) {
    const std::size_t t1 = *rep.t1;
    {
      const double head = s.prefix_sum(t1);
      const double rhs = 2.0 * phi(t1) * std::sqrt(as_real(t1) + 1.0);
      rep.steps.push_back({"eq6_head_sum", head, rhs, status_of(head <= rhs),
                           "sum_{k<t1} eta_k <= 2 phi(t1) sqrt(t1+1)", t1});
    }
    {
      const double lhs = mid_root / (4.0 * e2 * phi_mid) - 2.0 * phi(t1) * std::sqrt(as_real(t1) + 1.0);
      const double rhs = mid_root / (8.0 * e2 * phi_mid);
      rep.steps.push_back({"eq6_t1_choice", lhs, rhs, status_of(holds(lhs, rhs)),
                           "sqrt(T/2+1)/(4e^2 phi) - 2 phi(t1) sqrt(t1+1) >= sqrt(T/2+1)/(8e^2 phi)", t1});
    }
    if (t1 <= half) {
      const SideBySide r = l1_l2_step(s, t1, half);
      rep.steps.push_back({"eq6_l1_l2", r.lhs, r.rhs, status_of(r.pass),
                           "sum_{k=t1}^{T/2} eta_k^2 >= (sum eta_k)^2 / (T/2 - t1 + 1)", t1});
    } else {
      rep.steps.push_back({"eq6_l1_l2", 0.0, 0.0, StepStatus::Inconclusive, "t1 > T/2: empty range", t1});
    }
    {
      const double p = phi(T + 1);
      const double rhs = as_real(T) / (std::pow(2.0, 13) * std::exp(8.0) * p * p * p * p);
      rep.steps.push_back({"eq6_combined", weighted.value(), rhs, status_of(holds(weighted.value(), rhs)),
                           "sum_{k<=T/2} k eta_k^2 >= T/(2^13 e^8 phi(T+1)^4)", T});
    }
  } else {
    for (const char* name : {"eq6_head_sum", "eq6_t1_choice", "eq6_l1_l2", "eq6_combined"}) {
      rep.steps.push_back({name, 0.0, 0.0, StepStatus::Inconclusive, inconclusive, std::nullopt});
    }
  }

  const FinalBound fb = final_bound(T);
  const double phi_end = phi(T + 1);
  rep.steps.push_back({"final_harmonic", phi_end, fb.harmonic_form,
                       rep.t1 ? status_of(phi_end >= fb.harmonic_form) : StepStatus::Inconclusive,
                       rep.t1 ? "phi(T+1) >= H_{T/2}^{1/8}/(2^{5/2} e^2)"
                              : std::string("phi(T+1) >= H_{T/2}^{1/8}/(2^{5/2} e^2); ") + inconclusive,
                       T});
  rep.steps.push_back({"final_log", phi_end, fb.log_form, StepStatus::Info,
                       std::string("log form ln(T/2)^{1/8}/(2^{5/2} e), reported only; harmonic form is ") +
                           (fb.harmonic_form >= fb.log_form ? ">=" : "<") + " log form at this T",
                       T});
  return rep;
}

}  // namespace lastiter
