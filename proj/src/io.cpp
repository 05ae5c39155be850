#include "lastiter/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lastiter/error.hpp"

namespace lastiter {

std::string format_real(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string header_comment(const nlohmann::json& config) {
  return std::string("# lastiter ") + LASTITER_VERSION + " config=" + config.dump();
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

StepSchedule load_schedule_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw InvalidParameter("schedule table: cannot open '" + path.string() + "'");
  }
  std::string line;
  bool header_seen = false;
  std::vector<double> eta;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') {
      continue;
    }
    if (!header_seen) {
      if (line != "t,eta") {
        throw InvalidParameter("schedule table: expected header 't,eta', got '" + line + "'");
      }
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw InvalidParameter("schedule table line " + std::to_string(lineno) + ": expected 't,eta'");
    }
    const std::string ts = trim(line.substr(0, comma));
    const std::string es = trim(line.substr(comma + 1));
    std::size_t t = 0;
    auto [p, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), t);
    if (ec != std::errc() || p != ts.data() + ts.size()) {
      throw InvalidParameter("schedule table line " + std::to_string(lineno) + ": bad index '" + ts + "'");
    }
    if (t != eta.size()) {
      throw InvalidParameter("schedule table line " + std::to_string(lineno) + ": expected t = " +
                             std::to_string(eta.size()) + ", got " + ts);
    }
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(es, &used);
      if (used != es.size()) {
        throw std::invalid_argument(es);
      }
    } catch (const std::exception&) {
      throw InvalidParameter("schedule table line " + std::to_string(lineno) + ": bad stepsize '" + es + "'");
    }
    eta.push_back(v);
  }
  if (!header_seen || eta.empty()) {
    throw InvalidParameter("schedule table '" + path.string() + "' has no rows");
  }
  return from_table(std::move(eta), "table:" + path.filename().string());
}

void write_schedule_csv(const std::filesystem::path& path, const StepSchedule& s, std::size_t n,
                        const std::string& comment) {
  std::ostringstream os;
  if (!comment.empty()) {
    os << comment << '\n';
  }
  os << "t,eta\n";
  for (std::size_t t = 0; t < n; ++t) {
    os << t << ',' << format_real(s(t)) << '\n';
  }
  write_text(path, os.str());
}

std::string run_csv(const RunRecord& rec, const std::string& comment) {
  std::ostringstream os;
  if (!comment.empty()) {
    os << comment << '\n';
  }
  os << "t,err\n";
  for (std::size_t t = 1; t <= rec.errors.size(); ++t) {
    os << t << ',' << format_real(rec.errors[t - 1]) << '\n';
  }
  return os.str();
}

nlohmann::json snapshots_json(const RunRecord& rec) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [t, x] : rec.snapshots) {
    j[std::to_string(t)] = x;
  }
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  out << content;
  if (!out) {
    throw std::runtime_error("write failed for '" + path.string() + "'");
  }
}

}  // namespace lastiter
