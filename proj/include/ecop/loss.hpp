#pragma once

#include <Eigen/Core>
#include <vector>

#include "ecop/cmdp.hpp"

namespace ecop {

// How the per-record clip is applied to cost-advantage surrogates.
// kPessimistic uses max{rho*A, clip(rho)*A}, an upper estimate of the cost
// change, so penalizing it pushes cost down. kLiteralMin reuses the reward
// form -min{rho*A, clip(rho)*A}; when the penalty is active its gradient
// points toward higher cost, kept selectable for comparison runs.
enum class CostClipForm { kPessimistic, kLiteralMin };

// Multiplier table and damping schedule. lambdas is indexed [t * num_costs + i].
// beta == 0 is accepted by final_loss only and means "no damping" (the
// quadratic terms vanish); the training loop requires beta > 0.
struct PenaltyState {
  int horizon = 0;
  int num_costs = 0;
  Eigen::VectorXd lambdas;
  double beta = 5.0;
  double beta_max = 20.0;
  double update_factor = 1.5;
  double epsilon_clip = 0.2;
  CostClipForm cost_clip = CostClipForm::kPessimistic;

  static PenaltyState make(int horizon, int num_costs, double lambda0, double beta,
                           double beta_max, double update_factor, double epsilon_clip);

  double lambda(int t, int i) const { return lambdas[t * num_costs + i]; }
  double& lambda(int t, int i) { return lambdas[t * num_costs + i]; }
  double max_lambda(int i) const;  // max over t, the per-channel summary logged

  void validate() const;  // throws unless lambdas >= 0, 0 < beta <= beta_max, p > 1
};

// One collected step. adv_costs are raw-scale; adv_reward is the normalized
// estimate. log_prob_old is the collecting policy's log probability.
struct SurrogateRecord {
  int h = 0;
  double log_prob_old = 0.0;
  double adv_reward = 0.0;
  std::vector<double> adv_costs;
};

struct SurrogateBatch {
  int horizon = 0;
  int num_costs = 0;
  int num_episodes = 0;
  std::vector<SurrogateRecord> records;
  Eigen::VectorXd j_costs_prev;  // mean episode cost under the collecting policy
  Eigen::VectorXd thresholds;

  void validate() const;  // finite log_prob_old and advantages, aligned sizes
};

// x* = max(0, -psi - lambda/beta), the closed-form optimum of the slack
// variable in the damped Lagrangian. beta > 0.
double slack_optimum(double psi, double lambda, double beta);

// Single-constraint damped penalty after eliminating the slack variable:
// (beta/2) * (max{0, psi + lambda/beta}^2 - lambda^2/beta^2). beta > 0.
double damped_penalty(double psi, double lambda, double beta);

// Explicit slack form: base + sum_i lambda_i (psi_i + x_i)
//                           + (beta/2) sum_i (psi_i + x_i)^2.
// Evaluating at x_i = slack_optimum(...) reproduces damped_lagrangian exactly.
double slack_lagrangian(double base, const Eigen::VectorXd& psis,
                        const Eigen::VectorXd& lambdas, const Eigen::VectorXd& xs,
                        double beta);

// base + sum_i damped_penalty(psi_i, lambda_i, beta).
double damped_lagrangian(double base, const Eigen::VectorXd& psis,
                         const Eigen::VectorXd& lambdas, double beta);

// Unclipped constraint term from step t on:
//   sum_{h>=t} mean[rho * adv_cost_i at h] + (j_costs_prev[i] - thresholds[i]).
// logp_new is the evaluated policy's log probability per record. Throws if
// some step h >= t has no records.
double psi_term(const SurrogateBatch& batch, const std::vector<double>& logp_new, int t,
                int i);

// psi_term for every (t, i) at the collecting policy itself (rho == 1).
Eigen::MatrixXd psi_at_old(const SurrogateBatch& batch);

// Batch surrogate mean of the clipped estimator from step t on, reward form:
//   sum_{h>=t} mean[-min{rho*A, clip(rho, 1-eps, 1+eps)*A}]
// signal: kReward for reward advantages, otherwise a cost channel index.
double clipped_surrogate(const SurrogateBatch& batch, const std::vector<double>& logp_new,
                         double epsilon_clip, int signal, int t);

// Clipped cost surrogate in the configured form (see CostClipForm).
double cost_clipped_surrogate(const SurrogateBatch& batch,
                              const std::vector<double>& logp_new, double epsilon_clip,
                              int channel, int t, CostClipForm form);

struct FinalLossParts {
  double total = 0.0;
  double reward_surrogate = 0.0;
  Eigen::VectorXd cost_surrogates;  // clipped cost part per channel
  Eigen::VectorXd x;                // cost_surrogates + (j_costs_prev - thresholds)
  // d(total)/d(logp_new[r]); empty unless requested. Subgradient conventions:
  // min/max ties resolve to the unclipped branch, clip' is 0 outside and at
  // the boundary, max{0, z}' is 0 at z = 0.
  std::vector<double> dloss_dlogp;
};

// Training loss at step t:
//   reward surrogate
//   + sum_i lambda_{t,i} * max{0, X_i}
//   + (beta/2) * sum_i (max{0, X_i + lambda_{t,i}/beta}^2 - lambda_{t,i}^2/beta^2)
// with X_i = cost surrogate_i + (j_costs_prev_i - d_i). beta == 0 drops the
// quadratic line entirely.
FinalLossParts final_loss(const SurrogateBatch& batch, const std::vector<double>& logp_new,
                          const PenaltyState& penalty, int t, bool want_grad = false);

// lambda_{t,i} <- max(0, lambda_{t,i} + beta * psi_prev(t, i)), psi_prev from
// psi_at_old of the collecting batch.
void lambda_update(PenaltyState& penalty, const Eigen::MatrixXd& psi_prev);

struct SecondaryCost {
  double value = 0.0;      // sum_t sum_i max{J_Ci - d_i, -lambda_{t,i}/beta}
  double threshold = 0.0;  // (sqrt(m)/beta) * max_t ||lambda_t||_inf
};

SecondaryCost secondary_cost_and_threshold(const Eigen::VectorXd& j_costs,
                                           const Eigen::VectorXd& thresholds,
                                           const PenaltyState& penalty);

// If value >= threshold: beta <- min(beta_max, update_factor * beta).
// Returns whether the increase fired. beta never decreases.
bool adaptive_beta(PenaltyState& penalty, const SecondaryCost& secondary);

// Distance from the evaluation point to the nearest non-differentiable
// surface of final_loss (clip boundaries in rho, X_i = 0, X_i + lambda/beta
// = 0). Finite-difference probes closer than the step size are unreliable.
double kink_distance(const SurrogateBatch& batch, const std::vector<double>& logp_new,
                     const PenaltyState& penalty, int t);

}  // namespace ecop
