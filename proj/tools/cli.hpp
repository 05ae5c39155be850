#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lastiter/envelope.hpp"
#include "lastiter/schedule.hpp"

namespace lastiter::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "LASTITER_OUT_DIR";

/// Malformed configuration; `field` names the offending key or flag.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& msg)
      : std::runtime_error(field + ": " + msg), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// `sqrt_decay:D=2,G=1`, `constant:c=0.5`, `table:path.csv`,
/// `doubling:block=inv_sqrt|sqrt_decay[,D=..,G=..][,blocks=N]`.
StepSchedule parse_schedule(const std::string& text);

/// `example31[:D=..,G=..]`, `one`, `constant:c=..`, `log_power:c1=..,c2=..,c3=..`.
/// "empirical" is handled by the caller.
GuaranteeEnvelope parse_envelope(const std::string& text);

/// `8,64,512`, `pow2:8..1024` or `1..100`.
std::vector<std::size_t> parse_horizons(const std::string& text);

/// Entry point shared by the executable and the tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lastiter::cli
