#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecop/envs.hpp"
#include "ecop/train.hpp"

namespace ecop {

// Raised on any config problem; message carries the source name and, where
// recoverable, the line number.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Experiment description parsed from a JSON file (comments allowed). Every
// field has a default; unknown keys are rejected.
struct RunConfig {
  std::string name;  // defaults to "<env>_<algorithm>"
  std::string env_name = "hazard_gridworld";
  std::optional<int> horizon;
  std::optional<Eigen::VectorXd> thresholds;  // "inf" entries allowed
  std::optional<std::string> start;           // hazard_gridworld only
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::string out_dir;  // empty: resolved by the runner (flag, env var, "runs")
  TrainConfig train;
};

RunConfig parse_run_config(const std::string& text, const std::string& source_name);
RunConfig load_run_config(const std::string& path);

// FNV-1a over the raw config bytes, for the run manifest
std::string config_hash(const std::string& text);

// Applies the env overrides from the config
Environment make_environment(const RunConfig& config);

}  // namespace ecop
