#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace ecop {

struct BlockSpec {
  std::string name;
  int offset = 0;
  int rows = 0;
  int cols = 1;
  int size() const { return rows * cols; }
};

// Named, contiguous, non-overlapping partition of a flat parameter vector.
struct ParamLayout {
  std::vector<BlockSpec> blocks;
  int total = 0;

  const BlockSpec& block(const std::string& name) const;
  int add(const std::string& name, int rows, int cols = 1);
  void validate() const;  // throws if blocks do not exactly partition [0, total)
};

struct ParamVector {
  std::shared_ptr<const ParamLayout> layout;
  Eigen::VectorXd values;
};

enum class PolicyKind { kTabularSoftmax, kTimeConditionedNet };

// Policy over a finite horizon: either per-(h,s) softmax logits, or an MLP on
// (observation, h/H) emitting action logits (discrete) or a diagonal gaussian
// (continuous, std via exponentiated per-dimension log-std parameters).
class PolicyApproximator {
 public:
  static PolicyApproximator tabular_softmax(int horizon, int num_states, int num_actions);
  static PolicyApproximator discrete_net(int horizon, int obs_dim,
                                         const std::vector<int>& hidden, int num_actions,
                                         std::uint64_t seed);
  static PolicyApproximator gaussian_net(int horizon, int obs_dim,
                                         const std::vector<int>& hidden, int action_dim,
                                         std::uint64_t seed, double init_log_std = 0.5);

  PolicyKind kind() const { return kind_; }
  bool gaussian() const { return gaussian_; }
  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int obs_dim() const { return obs_dim_; }
  int action_dim() const { return action_dim_; }
  const std::vector<int>& hidden() const { return hidden_; }

  ParamVector& params() { return params_; }
  const ParamVector& params() const { return params_; }

  // discrete interfaces; tabular policies address states by index, net
  // policies by observation vector (time feature appended internally)
  Eigen::VectorXd action_probabilities(int h, int state) const;
  Eigen::VectorXd action_probabilities(int h, const Eigen::VectorXd& obs) const;
  double log_prob(int h, int state, const Eigen::VectorXd& obs, int action) const;
  // grad += coeff * d log pi(action | h, state/obs) / d params
  void add_log_prob_grad(int h, int state, const Eigen::VectorXd& obs, int action,
                         double coeff, Eigen::VectorXd& grad) const;

  // gaussian interfaces
  void gaussian_params(int h, const Eigen::VectorXd& obs, Eigen::VectorXd& mean,
                       Eigen::VectorXd& log_std) const;
  double log_prob(int h, const Eigen::VectorXd& obs, const Eigen::VectorXd& action) const;
  void add_log_prob_grad(int h, const Eigen::VectorXd& obs, const Eigen::VectorXd& action,
                         double coeff, Eigen::VectorXd& grad) const;

 private:
  PolicyKind kind_ = PolicyKind::kTabularSoftmax;
  bool gaussian_ = false;
  int horizon_ = 0, num_states_ = 0, num_actions_ = 0, obs_dim_ = 0, action_dim_ = 0;
  std::vector<int> hidden_;
  ParamVector params_;
};

// State-value estimator for one signal: per-(h,s) table with closed-form mean
// fitting, or an MLP on (observation, h/H) trained by full-batch descent.
class Critic {
 public:
  static Critic tabular(int horizon, int num_states);
  static Critic net(int horizon, int obs_dim, const std::vector<int>& hidden,
                    std::uint64_t seed);

  bool is_tabular() const { return tabular_; }
  double value(int h, int state, const Eigen::VectorXd& obs) const;

  struct Sample {
    int h = 0;
    int state = 0;
    const Eigen::VectorXd* obs = nullptr;
    double target = 0.0;
  };
  // Tabular: overwrite seen (h,s) cells with the sample mean, keep the rest.
  // Net: `epochs` full-batch gradient steps on the squared error at rate lr.
  void fit(const std::vector<Sample>& samples, double lr, int epochs);

  double mse(const std::vector<Sample>& samples) const;

 private:
  bool tabular_ = true;
  int horizon_ = 0, num_states_ = 0, obs_dim_ = 0;
  std::vector<int> hidden_;
  std::vector<double> table_;
  ParamVector params_;
};

struct CriticSet {
  Critic reward;
  std::vector<Critic> costs;
};

// One policy-interaction step in approximator-facing form.
struct EpisodeStep {
  int h = 0;
  int state = -1;             // tabular envs
  Eigen::VectorXd obs;        // net policies (empty otherwise)
  int action = -1;            // discrete
  Eigen::VectorXd action_vec; // continuous
  double log_prob = 0.0;      // under the collecting policy
  double reward = 0.0;
  std::vector<double> costs;
};

struct EpisodeBatch {
  int horizon = 0;
  int num_costs = 0;
  std::vector<std::vector<EpisodeStep>> episodes;

  double mean_total_reward() const;
  double mean_total_cost(int channel) const;
};

// Per-record advantage estimates, index-parallel to batch.episodes flattened
// episode-major. Reward advantages are batch-normalized; cost advantages raw.
struct AdvantageEstimates {
  std::vector<double> reward;               // normalized
  std::vector<std::vector<double>> costs;   // [channel][record]
  double reward_raw_mean = 0.0;             // normalization metadata
  double reward_raw_std = 1.0;
};

// Monte-Carlo return-to-go minus fitted value, per signal.
AdvantageEstimates monte_carlo_advantages(const EpisodeBatch& batch, const CriticSet& critics);

// Central finite differences, the oracle side of every gradient check.
Eigen::VectorXd finite_diff_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                     const Eigen::VectorXd& x, double eps = 1e-5);

void save_checkpoint(const PolicyApproximator& approx, const std::string& path);
PolicyApproximator load_checkpoint(const std::string& path);

}  // namespace ecop
