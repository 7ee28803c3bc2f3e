#include "ecop/envs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ecop {

namespace {

// Character grids: '.' free, 'H' hazard, 'P' pillar (impassable), 'G'/'T'
// goal/target, 'S' start. Actions 0..3 = up, down, left, right; moving into a
// border or a pillar keeps the agent in place.
struct Grid {
  std::vector<std::string> rows;
  int n_rows = 0, n_cols = 0;

  explicit Grid(std::vector<std::string> r) : rows(std::move(r)) {
    n_rows = static_cast<int>(rows.size());
    n_cols = static_cast<int>(rows[0].size());
    for (const auto& row : rows)
      if (static_cast<int>(row.size()) != n_cols)
        throw std::logic_error("grid rows must have equal length");
  }

  char at(int s) const { return rows[s / n_cols][s % n_cols]; }
  int states() const { return n_rows * n_cols; }

  int find(char c) const {
    for (int s = 0; s < states(); ++s)
      if (at(s) == c) return s;
    throw std::logic_error(std::string("grid has no cell '") + c + "'");
  }

  bool pillar_adjacent(int s) const {
    int r = s / n_cols, c = s % n_cols;
    const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
    for (int k = 0; k < 4; ++k) {
      int r2 = r + dr[k], c2 = c + dc[k];
      if (r2 < 0 || r2 >= n_rows || c2 < 0 || c2 >= n_cols) continue;
      if (rows[r2][c2] == 'P') return true;
    }
    return false;
  }

  int move(int s, int a) const {
    int r = s / n_cols, c = s % n_cols;
    const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
    int r2 = r + dr[a], c2 = c + dc[a];
    if (r2 < 0 || r2 >= n_rows || c2 < 0 || c2 >= n_cols) return s;
    if (rows[r2][c2] == 'P') return s;
    return r2 * n_cols + c2;
  }
};

// slip: intended action executes with probability 1 - slip, each other
// action with slip/3
void fill_transitions(const Grid& g, double slip, EpisodicCmdp& m) {
  const int S = g.states(), A = 4;
  m.transition.assign(static_cast<std::size_t>(S) * A * S, 0.0);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a)
      for (int exec = 0; exec < A; ++exec) {
        double p = exec == a ? 1.0 - slip : slip / 3.0;
        m.transition[m.sas(s, a, g.move(s, exec))] += p;
      }
}

}  // namespace

Environment Environment::hazard_gridworld(int horizon, double threshold,
                                          const std::string& start) {
  Grid g({
      "GH....",
      "HH....",
      "......",
      "......",
      "......",
      ".....S",
  });
  const int S = g.states();
  EpisodicCmdp m;
  m.name = "hazard_gridworld";
  m.num_states = S;
  m.num_actions = 4;
  m.horizon = horizon;
  m.thresholds = {threshold};
  fill_transitions(g, 0.1, m);
  const int goal = g.find('G');
  m.reward.assign(static_cast<std::size_t>(S) * 4 * S, 0.0);
  m.costs.assign(1, std::vector<double>(static_cast<std::size_t>(S) * 4 * S, 0.0));
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < 4; ++a)
      for (int s2 = 0; s2 < S; ++s2) {
        if (s2 == goal) m.reward[m.sas(s, a, s2)] = 1.0;
        if (g.at(s2) == 'H') m.costs[0][m.sas(s, a, s2)] = 1.0;
      }
  m.mu.assign(S, 0.0);
  if (start == "fixed") {
    m.mu[g.find('S')] = 1.0;
  } else if (start == "uniform_corners") {
    const int corners[4] = {0, g.n_cols - 1, (g.n_rows - 1) * g.n_cols,
                            g.n_rows * g.n_cols - 1};
    for (int c : corners) m.mu[c] = 0.25;
  } else {
    throw std::invalid_argument("hazard_gridworld: unknown start mode " + start);
  }
  m.validate();

  Environment env;
  env.model_ = std::move(m);
  env.grid_cols_ = g.n_cols;
  env.spec_.name = "hazard_gridworld";
  env.spec_.horizon = horizon;
  env.spec_.num_constraints = 1;
  env.spec_.thresholds = Eigen::VectorXd::Constant(1, threshold);
  env.spec_.discrete = true;
  env.spec_.num_states = S;
  env.spec_.num_actions = 4;
  return env;
}

Environment Environment::navigation_gridworld(int horizon, double threshold1,
                                              double threshold2) {
  Grid g({
      ".......T",
      ".......P",
      "..HHHH..",
      "..HHHH..",
      "..HHHH..",
      "..HHHH..",
      "........",
      "S.......",
  });
  const int S = g.states();
  EpisodicCmdp m;
  m.name = "navigation_gridworld";
  m.num_states = S;
  m.num_actions = 4;
  m.horizon = horizon;
  m.thresholds = {threshold1, threshold2};
  // small slip keeps parking on the target strictly preferable to hovering
  // one cell away, which is what couples channel 2 to the reward optimum
  fill_transitions(g, 0.05, m);
  const int target = g.find('T');
  const int tr = target / g.n_cols, tc = target % g.n_cols;
  auto dist = [&](int s) {
    double dr = s / g.n_cols - tr, dc = s % g.n_cols - tc;
    return std::sqrt(dr * dr + dc * dc);
  };
  m.reward.assign(static_cast<std::size_t>(S) * 4 * S, 0.0);
  m.costs.assign(2, std::vector<double>(static_cast<std::size_t>(S) * 4 * S, 0.0));
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < 4; ++a)
      for (int s2 = 0; s2 < S; ++s2) {
        m.reward[m.sas(s, a, s2)] = dist(s) - dist(s2);
        if (g.at(s2) == 'H') m.costs[0][m.sas(s, a, s2)] = 1.0;
        if (g.pillar_adjacent(s2)) m.costs[1][m.sas(s, a, s2)] = 1.0;
      }
  m.mu.assign(S, 0.0);
  m.mu[g.find('S')] = 1.0;
  m.validate();

  Environment env;
  env.model_ = std::move(m);
  env.grid_cols_ = g.n_cols;
  env.spec_.name = "navigation_gridworld";
  env.spec_.horizon = horizon;
  env.spec_.num_constraints = 2;
  env.spec_.thresholds = Eigen::VectorXd(2);
  env.spec_.thresholds << threshold1, threshold2;
  env.spec_.discrete = true;
  env.spec_.num_states = S;
  env.spec_.num_actions = 4;
  return env;
}

Environment Environment::point_circle(int horizon, double threshold, double radius) {
  Environment env;
  env.spec_.name = "point_circle";
  env.spec_.horizon = horizon;
  env.spec_.num_constraints = 1;
  env.spec_.thresholds = Eigen::VectorXd::Constant(1, threshold);
  env.spec_.discrete = false;
  env.spec_.obs_dim = 4;
  env.spec_.action_dim = 2;
  env.spec_.action_low = Eigen::VectorXd::Constant(2, -1.0);
  env.spec_.action_high = Eigen::VectorXd::Constant(2, 1.0);
  env.radius_ = radius;
  env.x_lim_ = 0.5 * radius;
  env.dt_ = 0.1;
  return env;
}

Environment Environment::by_name(const std::string& name) {
  if (name == "hazard_gridworld") return hazard_gridworld();
  if (name == "navigation_gridworld") return navigation_gridworld();
  if (name == "point_circle") return point_circle();
  throw std::invalid_argument("unknown environment: " + name);
}

const EpisodicCmdp& Environment::cmdp() const {
  if (!model_) throw std::logic_error(spec_.name + " has no tabular model");
  return *model_;
}

int Environment::sample_initial_state(Rng& rng) const {
  return rng.categorical(cmdp().mu);
}

int Environment::step_tabular(int state, int action, Rng& rng, double& reward,
                              Eigen::VectorXd& costs) const {
  const EpisodicCmdp& m = cmdp();
  int next = rng.categorical(m.next_dist(state, action));
  reward = m.reward[m.sas(state, action, next)];
  costs.resize(m.num_costs());
  for (int i = 0; i < m.num_costs(); ++i)
    costs[i] = m.costs[i][m.sas(state, action, next)];
  return next;
}

Eigen::VectorXd Environment::observe(int state) const {
  const EpisodicCmdp& m = cmdp();
  Eigen::VectorXd obs(2);
  int n_rows = m.num_states / grid_cols_;
  obs << static_cast<double>(state / grid_cols_) / (n_rows - 1),
      static_cast<double>(state % grid_cols_) / (grid_cols_ - 1);
  return obs;
}

Eigen::VectorXd Environment::initial_obs(Rng& rng) const {
  if (spec_.discrete) throw std::logic_error(spec_.name + " is not continuous");
  Eigen::VectorXd s(4);
  s << 0.2 * rng.uniform() - 0.1, 0.2 * rng.uniform() - 0.1, 0.0, 0.0;
  return s;
}

Eigen::VectorXd Environment::step_continuous(const Eigen::VectorXd& state,
                                             const Eigen::VectorXd& action,
                                             double& reward,
                                             Eigen::VectorXd& costs) const {
  if (spec_.discrete) throw std::logic_error(spec_.name + " is not continuous");
  Eigen::VectorXd a = action.cwiseMax(spec_.action_low).cwiseMin(spec_.action_high);
  Eigen::VectorXd next(4);
  next[2] = std::clamp(state[2] + a[0] * dt_, -2.0, 2.0);
  next[3] = std::clamp(state[3] + a[1] * dt_, -2.0, 2.0);
  next[0] = state[0] + next[2] * dt_;
  next[1] = state[1] + next[3] * dt_;
  double x = next[0], y = next[1];
  double speed_around = next[2] * (-y) + next[3] * x;
  reward = speed_around / (1.0 + std::abs(std::sqrt(x * x + y * y) - radius_));
  costs = Eigen::VectorXd::Constant(1, x > x_lim_ ? 1.0 : 0.0);
  return next;
}

void Environment::set_horizon(int horizon) {
  if (horizon <= 0) throw std::invalid_argument("horizon must be positive");
  spec_.horizon = horizon;
  if (model_) model_->horizon = horizon;
}

void Environment::set_thresholds(const Eigen::VectorXd& thresholds) {
  if (thresholds.size() != spec_.num_constraints)
    throw std::invalid_argument("threshold count mismatch");
  spec_.thresholds = thresholds;
  if (model_) {
    model_->thresholds.assign(thresholds.data(), thresholds.data() + thresholds.size());
  }
}

}  // namespace ecop
