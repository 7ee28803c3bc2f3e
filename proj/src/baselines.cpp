#include "ecop/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ecop {

namespace {

// local copies of the clip primitives so this route stays independent of the
// final-loss implementation it is compared against
double clip_ratio(double rho, double eps) {
  return std::clamp(rho, 1.0 - eps, 1.0 + eps);
}
double clip_deriv(double rho, double eps) {
  return (rho > 1.0 - eps && rho < 1.0 + eps) ? 1.0 : 0.0;
}
double lower_term(double rho, double a, double eps) {
  return -std::min(rho * a, clip_ratio(rho, eps) * a);
}
double lower_term_drho(double rho, double a, double eps) {
  if (rho * a <= clip_ratio(rho, eps) * a) return -a;
  return -a * clip_deriv(rho, eps);
}
double upper_term(double rho, double a, double eps) {
  return std::max(rho * a, clip_ratio(rho, eps) * a);
}
double upper_term_drho(double rho, double a, double eps) {
  if (rho * a >= clip_ratio(rho, eps) * a) return a;
  return a * clip_deriv(rho, eps);
}
double cost_term(double rho, double a, double eps, CostClipForm form) {
  return form == CostClipForm::kPessimistic ? upper_term(rho, a, eps)
                                            : lower_term(rho, a, eps);
}
double cost_term_drho(double rho, double a, double eps, CostClipForm form) {
  return form == CostClipForm::kPessimistic ? upper_term_drho(rho, a, eps)
                                            : lower_term_drho(rho, a, eps);
}

std::vector<int> step_counts(const SurrogateBatch& batch) {
  std::vector<int> counts(batch.horizon, 0);
  for (const auto& r : batch.records) ++counts[r.h];
  for (int h = 0; h < batch.horizon; ++h)
    if (counts[h] == 0) throw std::invalid_argument("baseline loss: empty step " +
                                                    std::to_string(h));
  return counts;
}

// shared accumulation of surrogates over records with h >= t
FinalLossParts surrogate_parts(const SurrogateBatch& batch,
                               const std::vector<double>& logp_new, double eps,
                               CostClipForm form, int t, std::vector<double>& rho) {
  if (logp_new.size() != batch.records.size())
    throw std::invalid_argument("logp_new must align with batch records");
  auto counts = step_counts(batch);
  FinalLossParts out;
  out.cost_surrogates = Eigen::VectorXd::Zero(batch.num_costs);
  rho.assign(batch.records.size(), 0.0);
  for (std::size_t r = 0; r < batch.records.size(); ++r) {
    const auto& rec = batch.records[r];
    if (rec.h < t) continue;
    rho[r] = std::exp(logp_new[r] - rec.log_prob_old);
    out.reward_surrogate += lower_term(rho[r], rec.adv_reward, eps) / counts[rec.h];
    for (int i = 0; i < batch.num_costs; ++i)
      out.cost_surrogates[i] +=
          cost_term(rho[r], rec.adv_costs[i], eps, form) / counts[rec.h];
  }
  out.x = out.cost_surrogates + (batch.j_costs_prev - batch.thresholds);
  return out;
}

void chain_gradient(const SurrogateBatch& batch, const std::vector<double>& rho,
                    double eps, CostClipForm form, int t,
                    const Eigen::VectorXd& dtotal_dx, FinalLossParts& out) {
  auto counts = step_counts(batch);
  out.dloss_dlogp.assign(batch.records.size(), 0.0);
  for (std::size_t r = 0; r < batch.records.size(); ++r) {
    const auto& rec = batch.records[r];
    if (rec.h < t) continue;
    double d = lower_term_drho(rho[r], rec.adv_reward, eps);
    for (int i = 0; i < batch.num_costs; ++i)
      d += dtotal_dx[i] * cost_term_drho(rho[r], rec.adv_costs[i], eps, form);
    out.dloss_dlogp[r] = d * rho[r] / counts[rec.h];
  }
}

}  // namespace

FinalLossParts p3o_loss(const SurrogateBatch& batch, const std::vector<double>& logp_new,
                        double kappa, double epsilon_clip, CostClipForm form, int t,
                        bool want_grad) {
  std::vector<double> rho;
  FinalLossParts out = surrogate_parts(batch, logp_new, epsilon_clip, form, t, rho);
  out.total = out.reward_surrogate;
  Eigen::VectorXd dtotal_dx = Eigen::VectorXd::Zero(batch.num_costs);
  for (int i = 0; i < batch.num_costs; ++i) {
    out.total += kappa * std::max(0.0, out.x[i]);
    if (out.x[i] > 0.0) dtotal_dx[i] = kappa;
  }
  if (want_grad) chain_gradient(batch, rho, epsilon_clip, form, t, dtotal_dx, out);
  return out;
}

FinalLossParts ppo_lagrangian_loss(const SurrogateBatch& batch,
                                   const std::vector<double>& logp_new,
                                   const Eigen::VectorXd& nu, double epsilon_clip,
                                   CostClipForm form, int t, bool want_grad) {
  if (nu.size() != batch.num_costs)
    throw std::invalid_argument("ppo_lagrangian_loss: multiplier count mismatch");
  std::vector<double> rho;
  FinalLossParts out = surrogate_parts(batch, logp_new, epsilon_clip, form, t, rho);
  out.total = out.reward_surrogate;
  Eigen::VectorXd dtotal_dx = Eigen::VectorXd::Zero(batch.num_costs);
  for (int i = 0; i < batch.num_costs; ++i) {
    if (nu[i] == 0.0 || std::isinf(batch.thresholds[i])) continue;
    out.total += nu[i] * out.x[i];
    dtotal_dx[i] = nu[i];
  }
  if (want_grad) chain_gradient(batch, rho, epsilon_clip, form, t, dtotal_dx, out);
  return out;
}

void dual_ascent(Eigen::VectorXd& nu, const Eigen::VectorXd& j_costs,
                 const Eigen::VectorXd& thresholds, double lr) {
  for (Eigen::Index i = 0; i < nu.size(); ++i) {
    if (std::isinf(thresholds[i])) {
      nu[i] = 0.0;
      continue;
    }
    nu[i] = std::max(0.0, nu[i] + lr * (j_costs[i] - thresholds[i]));
  }
}

}  // namespace ecop
