#pragma once

#include <cstdint>
#include <string>

#include "ecop/config.hpp"

namespace ecop {

struct RunOptions {
  std::string out_dir;  // --out-dir; empty defers to config / env var / "runs"
  std::uint64_t seed_offset = 0;
  int jobs = 1;
};

// $ECOP_OUT_DIR if set, else "runs"
std::string default_output_root();

// Trains every seed, writes one CSV per seed plus aggregate.csv, checkpoints
// and manifest.json under <out root>/<config name>/. Returns 0, or 1 if any
// seed aborted on a non-finite loss.
int run_experiment(const RunConfig& config, const std::string& raw_config,
                   const RunOptions& opts);

// Runs a named oracle suite (lemma1 | theorem1 | gradients | occupancy | all)
// on built-in randomized instances with a fixed master seed. Writes
// verify_<suite>.csv (instance, check, value, pass) under the output root and
// returns the number of failed checks.
int run_verify(const std::string& suite, const RunOptions& opts);

// Writes the env's exact model as JSON; tabular envs only.
int export_cmdp(const std::string& env_name, const std::string& file);

// Rolls out a checkpointed policy and prints mean return and costs.
int eval_checkpoint(const std::string& checkpoint_path, const std::string& env_name,
                    int episodes, std::uint64_t seed);

}  // namespace ecop
