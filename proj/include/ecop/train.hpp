#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "ecop/approx.hpp"
#include "ecop/envs.hpp"
#include "ecop/loss.hpp"

namespace ecop {

enum class Algorithm { kEcop, kPpoLagrangian, kP3oPenalty, kIpoceExact };

Algorithm algorithm_from_name(const std::string& name);
std::string algorithm_name(Algorithm a);

enum class ApproximatorChoice { kTabular, kNet };

struct TrainConfig {
  Algorithm algorithm = Algorithm::kEcop;
  int episodes = 500;       // outer iterations K
  int batch_episodes = 10;  // trajectories collected per iteration
  int n_inner = 1;          // gradient steps per t
  double policy_lr = 3e-4;
  double critic_lr = 1e-3;
  int critic_epochs = 40;  // net critics only; tabular critics fit in closed form
  double epsilon_clip = 0.2;
  double lambda0 = 0.0;
  double beta = 5.0;
  double beta_max = 20.0;
  double update_factor = 1.5;
  bool adaptive = true;  // apply the beta growth trigger
  CostClipForm cost_clip = CostClipForm::kPessimistic;
  double lagrange_lr = 0.05;  // ppo_lagrangian dual step size
  double kappa = 1.0;         // p3o_penalty fixed penalty weight
  // active constraint channel indices; empty = all env channels. Inactive
  // channels are still rolled out and logged, just not penalized.
  std::vector<int> constrain;
  bool constrain_all = true;  // set false to honor `constrain` (even if empty)
  ApproximatorChoice approximator = ApproximatorChoice::kTabular;
  std::vector<int> hidden = {32, 32};
  double init_log_std = 0.5;
  int ipoce_grid = 4;  // per-state simplex resolution for the exact algorithm

  std::vector<int> active_channels(int env_channels) const;
};

// One row per outer iteration. j_costs / lambda_max cover every env channel;
// inactive channels log a zero multiplier. `loss` is the mean training loss
// over the iteration's inner sweep. `feasible` checks active channels only.
struct TrainingRecord {
  int episode = 0;
  double j_reward = 0.0;
  Eigen::VectorXd j_costs;
  Eigen::VectorXd lambda_max;
  double beta = 0.0;
  double loss = 0.0;
  bool feasible = true;
  double seconds = 0.0;  // wall clock, excluded from determinism comparisons
};

struct TrainResult {
  std::vector<TrainingRecord> records;
  PolicyApproximator policy;
  PenaltyState penalty;
  bool aborted = false;
  std::string abort_message;
};

// Runs the configured algorithm. All algorithms share collection, critic
// fitting and advantage estimation; they differ only in the loss assembled
// per inner step and the multiplier update. Deterministic given (env, cfg,
// seed). Non-finite loss or gradient aborts with a diagnostic final record.
TrainResult train_run(const Environment& env, const TrainConfig& cfg,
                      std::uint64_t seed);

// Collection helper shared with tests: batch_episodes rollouts under the
// policy, per-episode RNG streams derived from (seed, iteration, index).
EpisodeBatch collect_batch(const Environment& env, const PolicyApproximator& policy,
                           int batch_episodes, std::uint64_t seed, int iteration);

}  // namespace ecop
