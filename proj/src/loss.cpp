#include "ecop/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ecop {

namespace {

// records per step; used both for the insufficient-data check and the
// per-step empirical means
std::vector<int> step_counts(const SurrogateBatch& batch) {
  std::vector<int> counts(batch.horizon, 0);
  for (const auto& r : batch.records) {
    if (r.h < 0 || r.h >= batch.horizon)
      throw std::invalid_argument("surrogate batch: record step out of range");
    ++counts[r.h];
  }
  return counts;
}

void require_tail_coverage(const std::vector<int>& counts, int t) {
  for (int h = t; h < static_cast<int>(counts.size()); ++h)
    if (counts[h] == 0)
      throw std::invalid_argument("surrogate batch: no records at step " +
                                  std::to_string(h) + ", cannot evaluate tail sums");
}

double clip_ratio(double rho, double eps) {
  return std::clamp(rho, 1.0 - eps, 1.0 + eps);
}

// derivative of clip(rho) wrt rho; 0 at and beyond the boundary
double clip_deriv(double rho, double eps) {
  return (rho > 1.0 - eps && rho < 1.0 + eps) ? 1.0 : 0.0;
}

// reward-form term -min{rho a, clip(rho) a} and its rho-derivative;
// ties take the unclipped branch
double lower_term(double rho, double a, double eps) {
  return -std::min(rho * a, clip_ratio(rho, eps) * a);
}
double lower_term_drho(double rho, double a, double eps) {
  if (rho * a <= clip_ratio(rho, eps) * a) return -a;
  return -a * clip_deriv(rho, eps);
}

// pessimistic cost term max{rho a, clip(rho) a} and its rho-derivative
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

void check_alignment(const SurrogateBatch& batch, const std::vector<double>& logp_new) {
  if (logp_new.size() != batch.records.size())
    throw std::invalid_argument("logp_new must align with batch records");
}

}  // namespace

PenaltyState PenaltyState::make(int horizon, int num_costs, double lambda0, double beta,
                                double beta_max, double update_factor,
                                double epsilon_clip) {
  PenaltyState p;
  p.horizon = horizon;
  p.num_costs = num_costs;
  p.lambdas = Eigen::VectorXd::Constant(horizon * num_costs, lambda0);
  p.beta = beta;
  p.beta_max = beta_max;
  p.update_factor = update_factor;
  p.epsilon_clip = epsilon_clip;
  return p;
}

double PenaltyState::max_lambda(int i) const {
  double m = 0.0;
  for (int t = 0; t < horizon; ++t) m = std::max(m, lambda(t, i));
  return m;
}

void PenaltyState::validate() const {
  if (lambdas.size() != static_cast<Eigen::Index>(horizon) * num_costs)
    throw std::invalid_argument("penalty state: lambda table size mismatch");
  if ((lambdas.array() < 0.0).any())
    throw std::invalid_argument("penalty state: negative multiplier");
  if (!(beta > 0.0) || !(beta <= beta_max))
    throw std::invalid_argument("penalty state: need 0 < beta <= beta_max");
  if (!(update_factor > 1.0))
    throw std::invalid_argument("penalty state: update factor must exceed 1");
  if (!(epsilon_clip > 0.0) || !(epsilon_clip < 1.0))
    throw std::invalid_argument("penalty state: clip width must lie in (0,1)");
}

void SurrogateBatch::validate() const {
  if (j_costs_prev.size() != num_costs || thresholds.size() != num_costs)
    throw std::invalid_argument("surrogate batch: cost vector size mismatch");
  for (const auto& r : records) {
    if (!std::isfinite(r.log_prob_old))
      throw std::invalid_argument("surrogate batch: non-finite old log probability");
    if (!std::isfinite(r.adv_reward))
      throw std::invalid_argument("surrogate batch: non-finite reward advantage");
    if (static_cast<int>(r.adv_costs.size()) != num_costs)
      throw std::invalid_argument("surrogate batch: cost advantage count mismatch");
    for (double a : r.adv_costs)
      if (!std::isfinite(a))
        throw std::invalid_argument("surrogate batch: non-finite cost advantage");
  }
}

double slack_optimum(double psi, double lambda, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("slack_optimum: beta must be positive");
  return std::max(0.0, -psi - lambda / beta);
}

double damped_penalty(double psi, double lambda, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("damped_penalty: beta must be positive");
  double s = std::max(0.0, psi + lambda / beta);
  return 0.5 * beta * (s * s - (lambda * lambda) / (beta * beta));
}

double slack_lagrangian(double base, const Eigen::VectorXd& psis,
                        const Eigen::VectorXd& lambdas, const Eigen::VectorXd& xs,
                        double beta) {
  double acc = base;
  for (Eigen::Index i = 0; i < psis.size(); ++i) {
    double w = psis[i] + xs[i];
    acc += lambdas[i] * w + 0.5 * beta * w * w;
  }
  return acc;
}

double damped_lagrangian(double base, const Eigen::VectorXd& psis,
                         const Eigen::VectorXd& lambdas, double beta) {
  double acc = base;
  for (Eigen::Index i = 0; i < psis.size(); ++i)
    acc += damped_penalty(psis[i], lambdas[i], beta);
  return acc;
}

double psi_term(const SurrogateBatch& batch, const std::vector<double>& logp_new, int t,
                int i) {
  check_alignment(batch, logp_new);
  auto counts = step_counts(batch);
  require_tail_coverage(counts, t);
  double acc = 0.0;
  for (std::size_t r = 0; r < batch.records.size(); ++r) {
    const auto& rec = batch.records[r];
    if (rec.h < t) continue;
    double rho = std::exp(logp_new[r] - rec.log_prob_old);
    acc += rho * rec.adv_costs[i] / counts[rec.h];
  }
  return acc + (batch.j_costs_prev[i] - batch.thresholds[i]);
}

Eigen::MatrixXd psi_at_old(const SurrogateBatch& batch) {
  auto counts = step_counts(batch);
  require_tail_coverage(counts, 0);
  // per-step advantage means, then suffix sums
  Eigen::MatrixXd step_means = Eigen::MatrixXd::Zero(batch.horizon, batch.num_costs);
  for (const auto& rec : batch.records)
    for (int i = 0; i < batch.num_costs; ++i)
      step_means(rec.h, i) += rec.adv_costs[i] / counts[rec.h];
  Eigen::MatrixXd psi(batch.horizon, batch.num_costs);
  Eigen::VectorXd tail = Eigen::VectorXd::Zero(batch.num_costs);
  for (int t = batch.horizon - 1; t >= 0; --t) {
    tail += step_means.row(t).transpose();
    psi.row(t) =
        (tail + (batch.j_costs_prev - batch.thresholds)).transpose();
  }
  return psi;
}

double clipped_surrogate(const SurrogateBatch& batch, const std::vector<double>& logp_new,
                         double epsilon_clip, int signal, int t) {
  check_alignment(batch, logp_new);
  auto counts = step_counts(batch);
  require_tail_coverage(counts, t);
  double acc = 0.0;
  for (std::size_t r = 0; r < batch.records.size(); ++r) {
    const auto& rec = batch.records[r];
    if (rec.h < t) continue;
    double rho = std::exp(logp_new[r] - rec.log_prob_old);
    double a = signal == kReward ? rec.adv_reward : rec.adv_costs[signal];
    acc += lower_term(rho, a, epsilon_clip) / counts[rec.h];
  }
  return acc;
}

double cost_clipped_surrogate(const SurrogateBatch& batch,
                              const std::vector<double>& logp_new, double epsilon_clip,
                              int channel, int t, CostClipForm form) {
  check_alignment(batch, logp_new);
  auto counts = step_counts(batch);
  require_tail_coverage(counts, t);
  double acc = 0.0;
  for (std::size_t r = 0; r < batch.records.size(); ++r) {
    const auto& rec = batch.records[r];
    if (rec.h < t) continue;
    double rho = std::exp(logp_new[r] - rec.log_prob_old);
    acc += cost_term(rho, rec.adv_costs[channel], epsilon_clip, form) / counts[rec.h];
  }
  return acc;
}

FinalLossParts final_loss(const SurrogateBatch& batch, const std::vector<double>& logp_new,
                          const PenaltyState& penalty, int t, bool want_grad) {
  check_alignment(batch, logp_new);
  if (batch.num_costs != penalty.num_costs || batch.horizon != penalty.horizon)
    throw std::invalid_argument("final_loss: penalty and batch shapes disagree");
  auto counts = step_counts(batch);
  require_tail_coverage(counts, t);
  const int m = batch.num_costs;
  const double eps = penalty.epsilon_clip;
  const double beta = penalty.beta;

  FinalLossParts out;
  out.cost_surrogates = Eigen::VectorXd::Zero(m);
  std::vector<double> rho(batch.records.size(), 0.0);
  for (std::size_t r = 0; r < batch.records.size(); ++r) {
    const auto& rec = batch.records[r];
    if (rec.h < t) continue;
    rho[r] = std::exp(logp_new[r] - rec.log_prob_old);
    out.reward_surrogate += lower_term(rho[r], rec.adv_reward, eps) / counts[rec.h];
    for (int i = 0; i < m; ++i)
      out.cost_surrogates[i] +=
          cost_term(rho[r], rec.adv_costs[i], eps, penalty.cost_clip) / counts[rec.h];
  }
  out.x = out.cost_surrogates + (batch.j_costs_prev - batch.thresholds);

  out.total = out.reward_surrogate;
  Eigen::VectorXd dtotal_dx = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < m; ++i) {
    const double lam = penalty.lambda(t, i);
    const double xi = out.x[i];
    out.total += lam * std::max(0.0, xi);
    if (xi > 0.0) dtotal_dx[i] += lam;
    if (beta > 0.0) {
      double s = std::max(0.0, xi + lam / beta);
      out.total += 0.5 * beta * (s * s - (lam * lam) / (beta * beta));
      dtotal_dx[i] += beta * s;
    }
  }

  if (want_grad) {
    out.dloss_dlogp.assign(batch.records.size(), 0.0);
    for (std::size_t r = 0; r < batch.records.size(); ++r) {
      const auto& rec = batch.records[r];
      if (rec.h < t) continue;
      double d = lower_term_drho(rho[r], rec.adv_reward, eps);
      for (int i = 0; i < m; ++i)
        d += dtotal_dx[i] *
             cost_term_drho(rho[r], rec.adv_costs[i], eps, penalty.cost_clip);
      out.dloss_dlogp[r] = d * rho[r] / counts[rec.h];
    }
  }
  return out;
}

void lambda_update(PenaltyState& penalty, const Eigen::MatrixXd& psi_prev) {
  if (psi_prev.rows() != penalty.horizon || psi_prev.cols() != penalty.num_costs)
    throw std::invalid_argument("lambda_update: psi table shape mismatch");
  for (int t = 0; t < penalty.horizon; ++t)
    for (int i = 0; i < penalty.num_costs; ++i)
      penalty.lambda(t, i) =
          std::max(0.0, penalty.lambda(t, i) + penalty.beta * psi_prev(t, i));
}

SecondaryCost secondary_cost_and_threshold(const Eigen::VectorXd& j_costs,
                                           const Eigen::VectorXd& thresholds,
                                           const PenaltyState& penalty) {
  SecondaryCost out;
  double max_norm = 0.0;
  for (int t = 0; t < penalty.horizon; ++t) {
    double row_norm = 0.0;
    for (int i = 0; i < penalty.num_costs; ++i) {
      out.value += std::max(j_costs[i] - thresholds[i],
                            -penalty.lambda(t, i) / penalty.beta);
      row_norm = std::max(row_norm, std::abs(penalty.lambda(t, i)));
    }
    max_norm = std::max(max_norm, row_norm);
  }
  out.threshold = std::sqrt(static_cast<double>(penalty.num_costs)) / penalty.beta *
                  max_norm;
  return out;
}

bool adaptive_beta(PenaltyState& penalty, const SecondaryCost& secondary) {
  if (secondary.value < secondary.threshold) return false;
  penalty.beta = std::min(penalty.beta_max, penalty.update_factor * penalty.beta);
  return true;
}

double kink_distance(const SurrogateBatch& batch, const std::vector<double>& logp_new,
                     const PenaltyState& penalty, int t) {
  check_alignment(batch, logp_new);
  auto counts = step_counts(batch);
  require_tail_coverage(counts, t);
  const double eps = penalty.epsilon_clip;
  double dist = std::numeric_limits<double>::infinity();

  Eigen::VectorXd x = batch.j_costs_prev - batch.thresholds;
  for (std::size_t r = 0; r < batch.records.size(); ++r) {
    const auto& rec = batch.records[r];
    if (rec.h < t) continue;
    double rho = std::exp(logp_new[r] - rec.log_prob_old);
    dist = std::min(dist, std::abs(rho - (1.0 - eps)));
    dist = std::min(dist, std::abs(rho - (1.0 + eps)));
    for (int i = 0; i < batch.num_costs; ++i)
      x[i] += cost_term(rho, rec.adv_costs[i], eps, penalty.cost_clip) / counts[rec.h];
  }
  for (int i = 0; i < batch.num_costs; ++i) {
    dist = std::min(dist, std::abs(x[i]));
    if (penalty.beta > 0.0)
      dist = std::min(dist, std::abs(x[i] + penalty.lambda(t, i) / penalty.beta));
  }
  return dist;
}

}  // namespace ecop
