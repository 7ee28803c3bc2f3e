#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ecop {

// Signal selector: kReward or a cost channel index in [0, num_costs).
inline constexpr int kReward = -1;

// Finite episodic CMDP with dense tensors. Steps are 0-based internally,
// h in [0, horizon). Transition/reward/cost are indexed [s][a][s'].
struct EpisodicCmdp {
  std::string name;
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  std::vector<double> mu;          // [s], initial distribution
  std::vector<double> transition;  // [s*A*S + a*S + s']
  std::vector<double> reward;      // [s*A*S + a*S + s']
  std::vector<std::vector<double>> costs;  // per channel, same layout as reward
  std::vector<double> thresholds;          // per channel, may be +inf

  int num_costs() const { return static_cast<int>(costs.size()); }

  std::size_t sas(int s, int a, int s2) const {
    return (static_cast<std::size_t>(s) * num_actions + a) * num_states + s2;
  }

  std::span<const double> next_dist(int s, int a) const {
    return {transition.data() + sas(s, a, 0), static_cast<std::size_t>(num_states)};
  }

  // Signal value g(s,a,s') for the reward or a cost channel.
  double signal(int sig, int s, int a, int s2) const {
    return sig == kReward ? reward[sas(s, a, s2)] : costs[sig][sas(s, a, s2)];
  }

  // Throws std::invalid_argument on dimension or stochasticity violations.
  void validate(double tol = 1e-12) const;
};

// Non-stationary policy: per-(h,s) action distributions, stored densely.
// Can be built from explicit tables or by materializing any (h,s)->dist query
// (e.g. a parameterized approximator snapshot).
class PolicySequence {
 public:
  PolicySequence() = default;
  PolicySequence(int horizon, int num_states, int num_actions);  // uniform

  static PolicySequence from_table(int horizon, int num_states, int num_actions,
                                   std::vector<double> probs);
  static PolicySequence from_query(
      int horizon, int num_states, int num_actions,
      const std::function<void(int h, int s, std::span<double> out)>& query);

  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }

  double prob(int h, int s, int a) const { return probs_[idx(h, s, a)]; }
  std::span<const double> row(int h, int s) const {
    return {probs_.data() + idx(h, s, 0), static_cast<std::size_t>(num_actions_)};
  }
  void set_row(int h, int s, std::span<const double> p);

  void validate(double tol = 1e-10) const;

 private:
  std::size_t idx(int h, int s, int a) const {
    return (static_cast<std::size_t>(h) * num_states_ + s) * num_actions_ + a;
  }
  int horizon_ = 0, num_states_ = 0, num_actions_ = 0;
  std::vector<double> probs_;
};

// Backward-induction value functions for one signal.
// v is (horizon+1) x S with v[horizon] == 0; q is horizon x S x A.
struct ValueTables {
  int horizon = 0, num_states = 0, num_actions = 0;
  std::vector<double> v;  // [(h)*S + s], h in [0, horizon]
  std::vector<double> q;  // [(h*S + s)*A + a]

  double value(int h, int s) const { return v[static_cast<std::size_t>(h) * num_states + s]; }
  double qvalue(int h, int s, int a) const {
    return q[(static_cast<std::size_t>(h) * num_states + s) * num_actions + a];
  }
};

// Forward state-action reach probabilities: probs[h][s][a], each level sums to 1.
struct OccupancyTable {
  int horizon = 0, num_states = 0, num_actions = 0;
  std::vector<double> probs;  // [(h*S + s)*A + a]

  double at(int h, int s, int a) const {
    return probs[(static_cast<std::size_t>(h) * num_states + s) * num_actions + a];
  }
  double state_marginal(int h, int s) const;
};

struct TrajectoryStep {
  int s = 0, a = 0, s_next = 0;
  double reward = 0.0;
  std::vector<double> costs;
};

struct Trajectory {
  std::uint64_t seed = 0;
  std::vector<TrajectoryStep> steps;

  double total_reward() const;
  double total_cost(int channel) const;
};

ValueTables exact_value_functions(const EpisodicCmdp& m, const PolicySequence& pi, int signal);

// Expected episode total of the signal from the start distribution.
double exact_objective(const EpisodicCmdp& m, const PolicySequence& pi, int signal);

OccupancyTable reach_probabilities(const EpisodicCmdp& m, const PolicySequence& pi);

// Same objective computed from occupancies; equal to exact_objective up to
// accumulation order.
double objective_from_occupancy(const EpisodicCmdp& m, const OccupancyTable& occ, int signal);

// A_h(s,a) = Q_h(s,a) - V_h(s) for the signal the tables were built from.
std::vector<double> advantage_tables(const ValueTables& vt);

Trajectory sample_trajectory(const EpisodicCmdp& m, const PolicySequence& pi,
                             std::uint64_t seed);

}  // namespace ecop
