#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>

#include "ecop/cmdp.hpp"
#include "ecop/rng.hpp"

namespace ecop {

struct EnvSpec {
  std::string name;
  int horizon = 0;
  int num_constraints = 0;
  Eigen::VectorXd thresholds;
  bool discrete = true;
  int num_states = 0;   // discrete envs
  int num_actions = 0;
  int obs_dim = 0;      // continuous envs
  int action_dim = 0;
  Eigen::VectorXd action_low, action_high;
};

// Episodic environments. Tabular envs are built directly from an exact
// EpisodicCmdp, so exported models and rollouts agree by construction; the
// continuous task integrates simple point dynamics. Episodes always run the
// full horizon.
class Environment {
 public:
  // 6x6 grid, H = 30, one cost channel. Reward 1 per step spent on the goal
  // cell; cost 1 per step spent on a hazard cell. The goal sits in a corner
  // behind a hazard pocket, moves slip with probability 0.1, so both reaching
  // the goal and parking there leak cost. start: "fixed" or "uniform_corners".
  static Environment hazard_gridworld(int horizon = 30, double threshold = 2.0,
                                      const std::string& start = "fixed");

  // 8x8 grid, H = 40, two cost channels, slip 0.05; pillar cells block
  // movement. Reward is the decrease in Euclidean distance to the target.
  // Channel 1: 1 per step on a hazard cell (a block the direct route
  // crosses). Channel 2: 1 per step on a pillar-adjacent cell; the target
  // itself is pillar-adjacent, so parking there spends channel-2 budget.
  static Environment navigation_gridworld(int horizon = 40, double threshold1 = 3.0,
                                          double threshold2 = 5.0);

  // Point mass with velocity control limits, dt = 0.1, H = 40. Reward for
  // circling the origin at the given radius: v . [-y, x] / (1 + | |p| - r |),
  // cost 1 while x > 0.5 r. Actions (accelerations) are clamped to the box
  // here, after any sampling, so policy densities stay exact.
  static Environment point_circle(int horizon = 40, double threshold = 5.0,
                                  double radius = 1.0);

  // name: hazard_gridworld | navigation_gridworld | point_circle
  static Environment by_name(const std::string& name);

  const EnvSpec& spec() const { return spec_; }
  bool tabular() const { return spec_.discrete; }

  // exact model backing a tabular env; throws for continuous envs
  const EpisodicCmdp& cmdp() const;

  int sample_initial_state(Rng& rng) const;
  int step_tabular(int state, int action, Rng& rng, double& reward,
                   Eigen::VectorXd& costs) const;
  // grid coordinates scaled to [0, 1]^2, for net policies on tabular envs
  Eigen::VectorXd observe(int state) const;

  Eigen::VectorXd initial_obs(Rng& rng) const;
  // state is (x, y, vx, vy); the raw action is clamped internally
  Eigen::VectorXd step_continuous(const Eigen::VectorXd& state,
                                  const Eigen::VectorXd& action, double& reward,
                                  Eigen::VectorXd& costs) const;

  void set_horizon(int horizon);
  void set_thresholds(const Eigen::VectorXd& thresholds);

 private:
  EnvSpec spec_;
  std::optional<EpisodicCmdp> model_;
  int grid_cols_ = 0;
  double radius_ = 0.0, x_lim_ = 0.0, dt_ = 0.1;
};

}  // namespace ecop
