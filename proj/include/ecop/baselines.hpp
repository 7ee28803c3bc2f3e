#pragma once

#include <Eigen/Core>
#include <vector>

#include "ecop/loss.hpp"

namespace ecop {

// P3O-style objective, written out directly rather than through final_loss:
//   reward surrogate + kappa * sum_i max{0, cost surrogate_i + (J_Ci - d_i)}.
// Must agree with final_loss at lambda == kappa, beta == 0; tests compare the
// two routes.
FinalLossParts p3o_loss(const SurrogateBatch& batch, const std::vector<double>& logp_new,
                        double kappa, double epsilon_clip, CostClipForm form, int t,
                        bool want_grad = false);

// PPO with a Lagrangian relaxation sharing the clipped machinery:
//   reward surrogate + sum_i nu_i * (cost surrogate_i + (J_Ci - d_i)).
// Channels with nu_i == 0 or an infinite threshold are skipped, which keeps
// unconstrained configurations free of 0 * inf.
FinalLossParts ppo_lagrangian_loss(const SurrogateBatch& batch,
                                   const std::vector<double>& logp_new,
                                   const Eigen::VectorXd& nu, double epsilon_clip,
                                   CostClipForm form, int t, bool want_grad = false);

// nu_i <- max(0, nu_i + lr * (J_Ci - d_i)); infinite thresholds pin nu_i at 0.
void dual_ascent(Eigen::VectorXd& nu, const Eigen::VectorXd& j_costs,
                 const Eigen::VectorXd& thresholds, double lr);

}  // namespace ecop
