#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lastiter/error.hpp"
#include "lastiter/harness.hpp"
#include "lastiter/io.hpp"

namespace lastiter::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

double to_real(const std::string& field, const std::string& text) {
  if (text == "inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(field, "expected a number, got '" + text + "'");
}

std::size_t to_count(const std::string& field, const std::string& text) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(text, &used);
    if (used == text.size() && text.find('-') == std::string::npos) return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
  }
  throw ConfigError(field, "expected a nonnegative integer, got '" + text + "'");
}

// "name:k=v,k=v" -> (name, {k: v}); "table:path" keeps the path verbatim.
std::pair<std::string, std::map<std::string, std::string>> split_named(const std::string& field,
                                                                       const std::string& text) {
  const auto colon = text.find(':');
  std::pair<std::string, std::map<std::string, std::string>> out;
  out.first = text.substr(0, colon);
  if (colon == std::string::npos) return out;
  for (const std::string& kv : split(text.substr(colon + 1), ',')) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(field, "expected key=value, got '" + kv + "'");
    }
    out.second[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return out;
}

double param(const std::string& field, const std::map<std::string, std::string>& kv, const std::string& key,
             std::optional<double> fallback = std::nullopt) {
  const auto it = kv.find(key);
  if (it == kv.end()) {
    if (fallback) return *fallback;
    throw ConfigError(field, "missing parameter '" + key + "'");
  }
  return to_real(field, it->second);
}

}  // namespace

StepSchedule parse_schedule(const std::string& text) {
  const std::string field = "schedule";
  if (text.rfind("table:", 0) == 0) {
    return load_schedule_csv(text.substr(6));
  }
  const auto [name, kv] = split_named(field, text);
  if (name == "sqrt_decay") {
    return sqrt_decay(param(field, kv, "D"), param(field, kv, "G"));
  }
  if (name == "constant") {
    return constant(param(field, kv, "c"));
  }
  if (name == "doubling") {
    const auto bit = kv.find("block");
    const std::string block = bit == kv.end() ? "inv_sqrt" : bit->second;
    const auto blocks = static_cast<std::size_t>(param(field, kv, "blocks", 20.0));
    if (block == "inv_sqrt") {
      return doubling_concat(
          [](std::size_t n) { return std::vector<double>(n, 1.0 / std::sqrt(static_cast<double>(n))); }, blocks,
          "doubling:block=inv_sqrt,blocks=" + std::to_string(blocks));
    }
    if (block == "sqrt_decay") {
      const double D = param(field, kv, "D", 2.0);
      const double G = param(field, kv, "G", 1.0);
      const StepSchedule inner = sqrt_decay(D, G);
      return doubling_concat([inner](std::size_t n) { return inner.values(n); }, blocks,
                             "doubling:block=" + inner.label() + ",blocks=" + std::to_string(blocks));
    }
    throw ConfigError(field, "unknown doubling block '" + block + "' (inv_sqrt, sqrt_decay)");
  }
  throw ConfigError(field, "unknown schedule '" + name + "' (sqrt_decay, constant, table, doubling)");
}

GuaranteeEnvelope parse_envelope(const std::string& text) {
  const std::string field = "phi";
  const auto [name, kv] = split_named(field, text);
  if (name == "example31") {
    return example31_envelope(param(field, kv, "D", 2.0), param(field, kv, "G", 1.0));
  }
  if (name == "one") {
    return constant_envelope(1.0);
  }
  if (name == "constant") {
    return constant_envelope(param(field, kv, "c"));
  }
  if (name == "log_power") {
    return log_power_envelope(param(field, kv, "c1"), param(field, kv, "c2"), param(field, kv, "c3"));
  }
  throw ConfigError(field, "unknown envelope '" + name + "' (example31, one, constant, log_power, empirical)");
}

std::vector<std::size_t> parse_horizons(const std::string& text) {
  const std::string field = "horizons";
  std::vector<std::size_t> out;
  const bool pow2 = text.rfind("pow2:", 0) == 0;
  const std::string body = pow2 ? text.substr(5) : text;
  const auto dots = body.find("..");
  if (dots != std::string::npos) {
    const std::size_t lo = to_count(field, body.substr(0, dots));
    const std::size_t hi = to_count(field, body.substr(dots + 2));
    if (lo < 1 || lo > hi) throw ConfigError(field, "range must satisfy 1 <= lo <= hi");
    if (pow2) {
      for (std::size_t t = 1; t <= hi; t *= 2) {
        if (t >= lo) out.push_back(t);
      }
      if (out.empty()) throw ConfigError(field, "no power of two in range");
    } else {
      for (std::size_t t = lo; t <= hi; ++t) out.push_back(t);
    }
    return out;
  }
  if (pow2) throw ConfigError(field, "pow2 needs a lo..hi range");
  for (const std::string& part : split(text, ',')) {
    out.push_back(to_count(field, part));
  }
  if (out.empty()) throw ConfigError(field, "empty horizon list");
  return out;
}

namespace {

struct Flags {
  std::string config;
  std::string schedule;
  std::string horizons;
  std::string families;
  std::string phi;
  std::string thresholds;
  std::string out;
  std::string snapshot_times;
  std::size_t T = 0;
  std::size_t jobs = 1;
  long long seed = 0;
  double shrink = kDefaultVShapeShrink;
  bool per_t = false;
  bool write_runs = false;
};

struct Registered {
  CLI::App* app = nullptr;
  Flags flags;
  std::map<std::string, CLI::Option*> opts;
};

void add_common(Registered& r) {
  Flags& f = r.flags;
  CLI::App* a = r.app;
  r.opts["config"] = a->add_option("--config", f.config, "JSON config file; flags override its values");
  r.opts["schedule"] = a->add_option("--schedule", f.schedule, "schedule, e.g. sqrt_decay:D=2,G=1 or table:eta.csv");
  r.opts["T"] = a->add_option("--T", f.T, "horizon");
  r.opts["horizons"] = a->add_option("--horizons", f.horizons, "8,64,512 | pow2:8..1024 | 1..100");
  r.opts["families"] = a->add_option("--family,--families", f.families, "vshape,quadratic,maxlinear");
  r.opts["phi"] = a->add_option("--phi", f.phi, "envelope: example31 | one | constant:c=.. | log_power:.. | empirical");
  r.opts["out"] = a->add_option("--out", f.out, std::string("output directory (default $") + kOutDirEnv + " or .)");
  r.opts["seed"] = a->add_option("--seed", f.seed, "accepted for config compatibility; the pipeline is deterministic");
  r.opts["jobs"] = a->add_option("--jobs", f.jobs, "parallel work items");
  r.opts["shrink"] = a->add_option("--shrink", f.shrink, "VShape eps shrink factor");
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw ConfigError("config", "top level must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
}

// File values first, then every flag the user actually passed.
json resolve_config(const Registered& r) {
  json cfg = json::object();
  if (!r.flags.config.empty()) {
    cfg = load_config_file(r.flags.config);
  }
  const Flags& f = r.flags;
  auto given = [&](const char* key) {
    const auto it = r.opts.find(key);
    return it != r.opts.end() && it->second->count() > 0;
  };
  if (given("schedule")) cfg["schedule"] = f.schedule;
  if (given("T")) cfg["T"] = f.T;
  if (given("horizons")) cfg["horizons"] = f.horizons;
  if (given("families")) cfg["families"] = f.families;
  if (given("phi")) cfg["phi"] = f.phi;
  if (given("out")) cfg["out"] = f.out;
  if (given("seed")) cfg["seed"] = f.seed;
  if (given("jobs")) cfg["jobs"] = f.jobs;
  if (given("shrink")) cfg["shrink"] = f.shrink;
  if (given("thresholds")) cfg["thresholds"] = f.thresholds;
  if (given("per_t")) cfg["per_t"] = f.per_t;
  if (given("write_runs")) cfg["write_runs"] = f.write_runs;
  if (given("snapshot_times")) cfg["snapshot_times"] = f.snapshot_times;
  return cfg;
}

std::string get_string(const json& cfg, const char* key) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) return {};
  if (!it->is_string()) throw ConfigError(key, "expected a string");
  return it->get<std::string>();
}

std::optional<std::size_t> get_count(const json& cfg, const char* key) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) return std::nullopt;
  if (!it->is_number_integer() || it->get<long long>() < 0) throw ConfigError(key, "expected a nonnegative integer");
  return it->get<std::size_t>();
}

bool get_bool(const json& cfg, const char* key) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) return false;
  if (!it->is_boolean()) throw ConfigError(key, "expected true or false");
  return it->get<bool>();
}

std::vector<std::size_t> horizons_of(const json& cfg) {
  const auto it = cfg.find("horizons");
  if (it != cfg.end()) {
    if (it->is_string()) return parse_horizons(it->get<std::string>());
    if (it->is_array()) {
      std::vector<std::size_t> out;
      for (const json& v : *it) {
        if (!v.is_number_integer() || v.get<long long>() < 1) throw ConfigError("horizons", "entries must be integers >= 1");
        out.push_back(v.get<std::size_t>());
      }
      return out;
    }
    throw ConfigError("horizons", "expected a string or an array");
  }
  if (auto T = get_count(cfg, "T")) {
    return {*T};
  }
  throw ConfigError("horizons", "give --T or --horizons");
}

std::vector<Family> families_of(const json& cfg) {
  const auto it = cfg.find("families");
  if (it == cfg.end()) return {Family::MaxLinear};
  std::vector<std::string> names;
  if (it->is_string()) {
    names = split(it->get<std::string>(), ',');
  } else if (it->is_array()) {
    for (const json& v : *it) {
      if (!v.is_string()) throw ConfigError("families", "entries must be strings");
      names.push_back(v.get<std::string>());
    }
  } else {
    throw ConfigError("families", "expected a string or an array");
  }
  std::vector<Family> out;
  for (const std::string& n : names) {
    try {
      out.push_back(parse_family(n));
    } catch (const InvalidParameter& e) {
      throw ConfigError("families", e.what());
    }
  }
  if (out.empty()) throw ConfigError("families", "empty family list");
  return out;
}

std::vector<double> thresholds_of(const json& cfg) {
  const auto it = cfg.find("thresholds");
  if (it == cfg.end()) throw ConfigError("thresholds", "density needs at least one threshold");
  std::vector<double> out;
  if (it->is_string()) {
    for (const std::string& p : split(it->get<std::string>(), ',')) out.push_back(to_real("thresholds", p));
  } else if (it->is_array()) {
    for (const json& v : *it) {
      if (v.is_number()) {
        out.push_back(v.get<double>());
      } else if (v.is_string()) {
        out.push_back(to_real("thresholds", v.get<std::string>()));
      } else {
        throw ConfigError("thresholds", "entries must be numbers or \"inf\"");
      }
    }
  } else {
    throw ConfigError("thresholds", "expected a string or an array");
  }
  if (out.empty()) throw ConfigError("thresholds", "density needs at least one threshold");
  return out;
}

fs::path out_dir_of(const json& cfg) {
  std::string dir = get_string(cfg, "out");
  if (dir.empty()) {
    if (const char* env = std::getenv(kOutDirEnv)) dir = env;
  }
  if (dir.empty()) dir = ".";
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("out", "cannot create output directory '" + dir + "'");
  return dir;
}

ExperimentSpec spec_of(const json& cfg) {
  const std::string sched = get_string(cfg, "schedule");
  if (sched.empty()) throw ConfigError("schedule", "a schedule is required");
  StepSchedule schedule = [&] {
    try {
      return parse_schedule(sched);
    } catch (const InvalidParameter& e) {
      throw ConfigError("schedule", e.what());
    } catch (const ConstructionError& e) {
      throw ConfigError("schedule", e.what());
    }
  }();
  ExperimentSpec spec(std::move(schedule));
  spec.horizons = horizons_of(cfg);
  spec.families = families_of(cfg);
  const std::string phi = get_string(cfg, "phi");
  if (phi == "empirical") {
    spec.empirical_envelope = true;
  } else if (!phi.empty()) {
    try {
      spec.envelope = parse_envelope(phi);
    } catch (const InvalidParameter& e) {
      throw ConfigError("phi", e.what());
    }
  }
  if (auto j = get_count(cfg, "jobs")) spec.jobs = std::max<std::size_t>(1, *j);
  if (auto it = cfg.find("shrink"); it != cfg.end()) {
    if (!it->is_number()) throw ConfigError("shrink", "expected a number");
    spec.vshape_shrink = it->get<double>();
  }
  if (auto it = cfg.find("tolerances"); it != cfg.end()) {
    if (!it->is_object()) throw ConfigError("tolerances", "expected an object");
    auto take = [&](const char* k, double& dst) {
      if (auto v = it->find(k); v != it->end()) {
        if (!v->is_number()) throw ConfigError(std::string("tolerances.") + k, "expected a number");
        dst = v->get<double>();
      }
    };
    take("coord_abs", spec.tol.coord_abs);
    take("scalar_rel", spec.tol.scalar_rel);
    take("vshape", spec.tol.vshape);
    take("bound_abs", spec.tol.bound_abs);
  }
  spec.per_t = get_bool(cfg, "per_t");
  try {
    spec.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError("horizons", e.what());
  }
  return spec;
}

// Config as recorded in outputs: the output directory does not affect results
// and is left out so reruns elsewhere stay byte-identical.
json provenance(const json& cfg) {
  json p = cfg;
  p.erase("out");
  return p;
}

json json_header(const json& cfg) {
  return {{"tool", std::string("lastiter ") + LASTITER_VERSION}, {"config", provenance(cfg)}};
}

int cmd_verify(const json& cfg, std::ostream& out) {
  const ExperimentSpec spec = spec_of(cfg);
  if (spec.empirical_envelope) throw ConfigError("phi", "verify needs a closed-form envelope");
  const fs::path dir = out_dir_of(cfg);
  const VerificationReport rep = verify_trajectories(spec);
  json j = json_header(cfg);
  j["report"] = rep.to_json();
  write_text(dir / "verify_report.json", j.dump(2) + "\n");
  for (const TrajectoryCheck& c : rep.checks) {
    out << to_string(c.family) << " T=" << c.horizon << " max_dev=" << format_real(c.max_coord_dev)
        << (c.pass ? " ok" : " FAIL") << '\n';
  }
  out << "verify: " << (rep.pass() ? "pass" : "FAIL") << " -> " << (dir / "verify_report.json").string() << '\n';
  return rep.pass() ? kExitOk : kExitFailure;
}

void write_runs(const ExperimentSpec& spec, const BoundReport& rep, const json& cfg, const fs::path& dir) {
  std::set<std::size_t> times;
  const std::string st = get_string(cfg, "snapshot_times");
  for (const std::string& p : split(st, ',')) times.insert(to_count("snapshot_times", p));
  const SnapshotPolicy policy = times.empty() ? SnapshotPolicy::none() : SnapshotPolicy::times(times);
  const std::string comment = header_comment(provenance(cfg));
  for (const FamilyMeasurement& m : rep.measurements) {
    if (!m.constructed) continue;
    RunRecord rec;
    json dump;
    switch (m.family) {
      case Family::VShape: {
        const auto inst = build_vshape(spec.schedule, m.t, spec.vshape_shrink);
        rec = run(inst, spec.schedule, m.t, policy);
        dump = dump_instance(inst);
        break;
      }
      case Family::Quadratic: {
        const auto inst = build_quadratic(spec.schedule, m.t);
        rec = run(inst, spec.schedule, m.t, policy);
        dump = dump_instance(inst);
        break;
      }
      case Family::MaxLinear: {
        const auto inst = build_maxlinear(spec.schedule, m.t, spec.envelope);
        rec = run(inst, spec.schedule, m.t, policy);
        dump = dump_instance(inst);
        break;
      }
    }
    const std::string stem = to_string(m.family) + "_T" + std::to_string(m.t);
    write_text(dir / "runs" / (stem + ".csv"), run_csv(rec, comment));
    write_text(dir / "runs" / (stem + "_instance.json"), dump.dump() + "\n");
    if (!times.empty()) {
      write_text(dir / "runs" / (stem + "_snapshots.json"), snapshots_json(rec).dump() + "\n");
    }
  }
}

int cmd_audit(const json& cfg, std::ostream& out) {
  const ExperimentSpec spec = spec_of(cfg);
  const fs::path dir = out_dir_of(cfg);
  const BoundReport rep = audit_schedule(spec);
  write_text(dir / "bounds.csv", rep.to_csv(header_comment(provenance(cfg)), true));
  json j = json_header(cfg);
  j["summary"] = rep.summary_json();
  write_text(dir / "audit_summary.json", j.dump(2) + "\n");
  if (get_bool(cfg, "write_runs") && !spec.empirical_envelope) {
    write_runs(spec, rep, cfg, dir);
  }
  if (rep.envelope && !rep.envelope_ok()) {
    for (const EnvelopeFailure& f : rep.envelope->failures) {
      out << "envelope validation failure: " << f.check << " at t=" << f.t << " (" << format_real(f.lhs) << " vs "
          << format_real(f.rhs) << ")\n";
      break;
    }
  }
  out << "audit: " << (rep.pass() ? "pass" : "FAIL") << " (certified " << (rep.certified_ok() ? "ok" : "FAIL")
      << ", envelope " << (rep.envelope_ok() ? "ok" : "FAIL") << ") -> " << (dir / "bounds.csv").string() << '\n';
  return rep.pass() ? kExitOk : kExitFailure;
}

int cmd_density(const json& cfg, std::ostream& out) {
  const ExperimentSpec spec = spec_of(cfg);
  if (spec.empirical_envelope) throw ConfigError("phi", "density needs a closed-form envelope");
  const std::vector<double> thresholds = thresholds_of(cfg);
  const fs::path dir = out_dir_of(cfg);
  const DensityTable table = density_experiment(spec, thresholds);
  std::string comment = header_comment(provenance(cfg)) + "\n# mode=" + table.mode + " family=" + to_string(table.family);
  write_text(dir / "density.csv", table.to_csv(comment));
  for (const auto& [T, rows] : table.profiles) {
    write_text(dir / ("profile_T" + std::to_string(T) + ".csv"), table.profile_csv(T, comment));
  }
  out << "density: " << table.rows.size() << " rows (" << table.mode << ") -> " << (dir / "density.csv").string()
      << '\n';
  return kExitOk;
}

int cmd_bounds(const json& cfg, std::ostream& out) {
  const std::optional<std::size_t> T = get_count(cfg, "T");
  if (!T) throw ConfigError("T", "bounds needs --T for the chain check");
  if (*T % 2 != 0 || *T < 4) throw ConfigError("T", "chain check requires even T >= 4");
  const std::string sched = get_string(cfg, "schedule");
  if (sched.empty()) throw ConfigError("schedule", "a schedule is required");
  StepSchedule schedule = [&] {
    try {
      return parse_schedule(sched);
    } catch (const InvalidParameter& e) {
      throw ConfigError("schedule", e.what());
    }
  }();
  const std::string phi_text = get_string(cfg, "phi");
  if (phi_text == "empirical") throw ConfigError("phi", "bounds needs a closed-form envelope");
  GuaranteeEnvelope phi = example31_envelope();
  if (!phi_text.empty()) {
    try {
      phi = parse_envelope(phi_text);
    } catch (const InvalidParameter& e) {
      throw ConfigError("phi", e.what());
    }
  }
  std::vector<std::size_t> rows;
  if (cfg.contains("horizons")) {
    rows = horizons_of(cfg);
  } else {
    for (std::size_t t = 1; t <= *T; ++t) rows.push_back(t);
  }
  const fs::path dir = out_dir_of(cfg);
  const BoundReport rep = analytic_bounds(schedule, phi, rows);
  write_text(dir / "bounds.csv", rep.to_csv(header_comment(provenance(cfg)), false));
  const ChainReport chain = chain_check(schedule, phi, *T);
  json j = json_header(cfg);
  j["schedule"] = schedule.label();
  j["envelope"] = phi.label();
  j["chain"] = chain.to_json();
  write_text(dir / "chain.json", j.dump(2) + "\n");
  for (const ChainStep& s : chain.steps) {
    out << s.name << ": " << to_string(s.status) << '\n';
  }
  out << "bounds: chain " << (chain.pass() ? "pass" : "FAIL") << " -> " << (dir / "chain.json").string() << '\n';
  return chain.pass() ? kExitOk : kExitFailure;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"lastiter: lower-bound certificates for the last iterate of subgradient descent"};
  app.set_version_flag("--version", std::string("lastiter ") + LASTITER_VERSION);
  app.require_subcommand(1);

  std::map<std::string, Registered> subs;
  const std::vector<std::pair<std::string, std::string>> names = {
      {"verify", "compare simulated trajectories with their closed forms"},
      {"audit", "run the witness instances at each horizon and check certified bounds"},
      {"density", "fraction of t <= T with sqrt(t) err(t) >= c"},
      {"bounds", "analytic bound table and proof-chain check, no simulation"}};
  for (const auto& [name, help] : names) {
    Registered& r = subs[name];
    r.app = app.add_subcommand(name, help);
    add_common(r);
  }
  {
    Registered& d = subs["density"];
    d.opts["thresholds"] = d.app->add_option("--thresholds", d.flags.thresholds, "comma list of c, 'inf' allowed");
    d.opts["per_t"] = d.app->add_flag("--per-t", d.flags.per_t, "fresh instance per t (O(T^3))");
  }
  {
    Registered& a = subs["audit"];
    a.opts["write_runs"] = a.app->add_flag("--write-runs", a.flags.write_runs, "write t,err CSV per run");
    a.opts["snapshot_times"] =
        a.app->add_option("--snapshot-times", a.flags.snapshot_times, "comma list of t to snapshot with --write-runs");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  for (auto& [name, r] : subs) {
    if (!r.app->parsed()) continue;
    try {
      const json cfg = resolve_config(r);
      if (name == "verify") return cmd_verify(cfg, out);
      if (name == "audit") return cmd_audit(cfg, out);
      if (name == "density") return cmd_density(cfg, out);
      if (name == "bounds") return cmd_bounds(cfg, out);
    } catch (const ConfigError& e) {
      err << "config error: " << e.what() << '\n';
      return kExitUsage;
    } catch (const ConstructionError& e) {
      err << "construction error: " << e.what() << '\n';
      return kExitUsage;
    } catch (const InvalidParameter& e) {
      err << "invalid parameter: " << e.what() << '\n';
      return kExitUsage;
    } catch (const NumericFault& e) {
      err << "numeric fault: " << e.what() << '\n';
      return kExitFailure;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kExitUsage;
    }
  }
  return kExitUsage;
}

}  // namespace lastiter::cli
