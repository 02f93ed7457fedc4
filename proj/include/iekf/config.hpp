#pragma once

#include <string>
#include <vector>

#include "iekf/filter_bank.hpp"
#include "iekf/sim.hpp"

namespace iekf {

/// Everything a simulate/montecarlo invocation needs. Parsed from JSON with
/// three sections, `scenario`, `filters` and `execution`; every key is
/// optional and defaults to the values below, unknown keys are errors.
struct RunConfig {
  Scenario scenario;
  std::vector<FilterVariant> variants = {{FilterKind::EKF, 0.0}, {FilterKind::IEKF, 0.0}};
  int runs = 50;
  std::string output_dir = "out";
  int threads = 0;  // 0: available cores, capped by runs
  bool visual_updates = true;
  bool exact_init = false;

  /// Throws ConfigError on any out-of-range value.
  void validate() const;
};

/// Throws ConfigError with the offending key path.
RunConfig parse_config(const std::string& json_text);
/// Throws ConfigError naming `path` when it cannot be read.
RunConfig load_config(const std::string& path);

/// Canonical echo, accepted back by parse_config with identical results.
std::string config_to_json(const RunConfig& c);

/// meta.json body: config echo, version stamp, command, attitude policy.
std::string meta_json(const RunConfig& c, const std::string& command);

const char* attitude_policy_name(AttitudePolicy p);
const char* trajectory_kind_name(TrajectoryKind k);

/// Source version baked in at configure time ("unknown" outside a git tree).
const char* version_stamp();

}  // namespace iekf
