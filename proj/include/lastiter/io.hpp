#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "lastiter/engine.hpp"
#include "lastiter/schedule.hpp"

namespace lastiter {

/// Shortest round-trip decimal ("%.17g"); "inf", "-inf", "nan" for non-finite.
std::string format_real(double v);

/// "# lastiter <version> config=<compact json>"
std::string header_comment(const nlohmann::json& config);

/// Reads a `t,eta` CSV (0-based contiguous t). Lines starting with '#' are
/// skipped. Throws InvalidParameter on a missing file or malformed content.
StepSchedule load_schedule_csv(const std::filesystem::path& path);

void write_schedule_csv(const std::filesystem::path& path, const StepSchedule& s, std::size_t n,
                        const std::string& comment = {});

/// `t,err` rows for t = 1..T.
std::string run_csv(const RunRecord& rec, const std::string& comment = {});
/// {"<t>": [x...], ...}
nlohmann::json snapshots_json(const RunRecord& rec);

void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace lastiter
