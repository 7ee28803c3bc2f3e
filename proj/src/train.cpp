#include "ecop/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ecop/baselines.hpp"
#include "ecop/oracle.hpp"
#include "ecop/rng.hpp"

namespace ecop {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_seconds(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

PolicyApproximator make_policy(const Environment& env, const TrainConfig& cfg,
                               std::uint64_t seed) {
  const EnvSpec& spec = env.spec();
  if (!env.tabular()) {
    return PolicyApproximator::gaussian_net(spec.horizon, spec.obs_dim, cfg.hidden,
                                            spec.action_dim, seed, cfg.init_log_std);
  }
  if (cfg.approximator == ApproximatorChoice::kTabular)
    return PolicyApproximator::tabular_softmax(spec.horizon, spec.num_states,
                                               spec.num_actions);
  return PolicyApproximator::discrete_net(spec.horizon, 2, cfg.hidden,
                                          spec.num_actions, seed);
}

Critic make_critic(const Environment& env, const TrainConfig& cfg, std::uint64_t seed) {
  const EnvSpec& spec = env.spec();
  if (env.tabular() && cfg.approximator == ApproximatorChoice::kTabular)
    return Critic::tabular(spec.horizon, spec.num_states);
  return Critic::net(spec.horizon, env.tabular() ? 2 : spec.obs_dim, cfg.hidden, seed);
}

void fit_critics(CriticSet& critics, const EpisodeBatch& batch, const TrainConfig& cfg) {
  std::vector<Critic::Sample> samples;
  samples.reserve(batch.episodes.size() * batch.horizon);
  auto fill = [&](int signal) {
    samples.clear();
    for (const auto& ep : batch.episodes) {
      double rtg = 0.0;
      std::vector<double> tail(ep.size());
      for (int i = static_cast<int>(ep.size()) - 1; i >= 0; --i) {
        rtg += signal == kReward ? ep[i].reward : ep[i].costs[signal];
        tail[i] = rtg;
      }
      for (std::size_t i = 0; i < ep.size(); ++i)
        samples.push_back({ep[i].h, ep[i].state, &ep[i].obs, tail[i]});
    }
  };
  fill(kReward);
  critics.reward.fit(samples, cfg.critic_lr, cfg.critic_epochs);
  for (int c = 0; c < batch.num_costs; ++c) {
    fill(c);
    critics.costs[c].fit(samples, cfg.critic_lr, cfg.critic_epochs);
  }
}

double eval_logp(const PolicyApproximator& policy, const EpisodeStep& st) {
  if (policy.gaussian()) return policy.log_prob(st.h, st.obs, st.action_vec);
  return policy.log_prob(st.h, st.state, st.obs, st.action);
}

void add_logp_grad(const PolicyApproximator& policy, const EpisodeStep& st, double coeff,
                   Eigen::VectorXd& grad) {
  if (policy.gaussian())
    policy.add_log_prob_grad(st.h, st.obs, st.action_vec, coeff, grad);
  else
    policy.add_log_prob_grad(st.h, st.state, st.obs, st.action, coeff, grad);
}

TrainResult run_ipoce(const Environment& env, const TrainConfig& cfg) {
  if (!env.tabular())
    throw std::invalid_argument("exact iteration needs a tabular environment");
  if (!cfg.constrain_all)
    throw std::invalid_argument("constraint subsetting is not supported for ipoce_exact");
  auto t0 = Clock::now();
  const EpisodicCmdp& m = env.cmdp();
  PolicyGrid grid = PolicyGrid::make(m.num_actions, cfg.ipoce_grid);
  PolicySequence final_policy;
  auto iterates = ipoce_run(m, cfg.episodes, grid, kDefaultEnumerationBudget,
                            &final_policy);

  TrainResult result;
  result.policy = PolicyApproximator::tabular_softmax(m.horizon, m.num_states,
                                                      m.num_actions);
  auto& logits = result.policy.params().values;
  for (int h = 0; h < m.horizon; ++h)
    for (int s = 0; s < m.num_states; ++s)
      for (int a = 0; a < m.num_actions; ++a)
        logits[(h * m.num_states + s) * m.num_actions + a] =
            std::log(std::max(final_policy.prob(h, s, a), 1e-12));
  result.penalty = PenaltyState::make(m.horizon, m.num_costs(), 0.0, cfg.beta,
                                      cfg.beta_max, cfg.update_factor,
                                      cfg.epsilon_clip);

  for (const auto& it : iterates) {
    TrainingRecord rec;
    rec.episode = it.k;
    rec.j_reward = it.j;
    rec.j_costs = Eigen::Map<const Eigen::VectorXd>(it.j_costs.data(),
                                                    it.j_costs.size());
    rec.lambda_max = Eigen::VectorXd::Zero(m.num_costs());
    rec.beta = 0.0;
    rec.loss = 0.0;
    rec.feasible = true;
    for (int i = 0; i < m.num_costs(); ++i)
      rec.feasible = rec.feasible && it.j_costs[i] <= m.thresholds[i];
    rec.seconds = elapsed_seconds(t0);
    result.records.push_back(std::move(rec));
  }
  return result;
}

}  // namespace

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "ecop") return Algorithm::kEcop;
  if (name == "ppo_lagrangian") return Algorithm::kPpoLagrangian;
  if (name == "p3o_penalty") return Algorithm::kP3oPenalty;
  if (name == "ipoce_exact") return Algorithm::kIpoceExact;
  throw std::invalid_argument("unknown algorithm: " + name);
}

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kEcop: return "ecop";
    case Algorithm::kPpoLagrangian: return "ppo_lagrangian";
    case Algorithm::kP3oPenalty: return "p3o_penalty";
    case Algorithm::kIpoceExact: return "ipoce_exact";
  }
  throw std::logic_error("unreachable");
}

std::vector<int> TrainConfig::active_channels(int env_channels) const {
  if (constrain_all) {
    std::vector<int> all(env_channels);
    for (int i = 0; i < env_channels; ++i) all[i] = i;
    return all;
  }
  std::vector<int> chosen = constrain;
  std::sort(chosen.begin(), chosen.end());
  if (std::adjacent_find(chosen.begin(), chosen.end()) != chosen.end())
    throw std::invalid_argument("constrain: duplicate channel index");
  for (int c : chosen)
    if (c < 0 || c >= env_channels)
      throw std::invalid_argument("constrain: channel index out of range");
  return chosen;
}

EpisodeBatch collect_batch(const Environment& env, const PolicyApproximator& policy,
                           int batch_episodes, std::uint64_t seed, int iteration) {
  const EnvSpec& spec = env.spec();
  EpisodeBatch batch;
  batch.horizon = spec.horizon;
  batch.num_costs = spec.num_constraints;
  batch.episodes.resize(batch_episodes);
  const bool net_obs = env.tabular() && policy.kind() == PolicyKind::kTimeConditionedNet;

  for (int b = 0; b < batch_episodes; ++b) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(iteration), b));
    auto& ep = batch.episodes[b];
    ep.reserve(spec.horizon);
    if (env.tabular()) {
      int s = env.sample_initial_state(rng);
      for (int h = 0; h < spec.horizon; ++h) {
        EpisodeStep st;
        st.h = h;
        st.state = s;
        Eigen::VectorXd probs;
        if (net_obs) {
          st.obs = env.observe(s);
          probs = policy.action_probabilities(h, st.obs);
        } else {
          probs = policy.action_probabilities(h, s);
        }
        st.action = rng.categorical({probs.data(), static_cast<std::size_t>(probs.size())});
        st.log_prob = policy.log_prob(h, s, st.obs, st.action);
        double r = 0.0;
        Eigen::VectorXd costs;
        s = env.step_tabular(s, st.action, rng, r, costs);
        st.reward = r;
        st.costs.assign(costs.data(), costs.data() + costs.size());
        ep.push_back(std::move(st));
      }
    } else {
      Eigen::VectorXd state = env.initial_obs(rng);
      for (int h = 0; h < spec.horizon; ++h) {
        EpisodeStep st;
        st.h = h;
        st.obs = state;
        Eigen::VectorXd mean, log_std;
        policy.gaussian_params(h, state, mean, log_std);
        st.action_vec.resize(mean.size());
        for (Eigen::Index d = 0; d < mean.size(); ++d)
          st.action_vec[d] = mean[d] + std::exp(log_std[d]) * rng.normal();
        st.log_prob = policy.log_prob(h, state, st.action_vec);
        double r = 0.0;
        Eigen::VectorXd costs;
        state = env.step_continuous(state, st.action_vec, r, costs);
        st.reward = r;
        st.costs.assign(costs.data(), costs.data() + costs.size());
        ep.push_back(std::move(st));
      }
    }
  }
  return batch;
}

TrainResult train_run(const Environment& env, const TrainConfig& cfg,
                      std::uint64_t seed) {
  if (cfg.algorithm == Algorithm::kIpoceExact) return run_ipoce(env, cfg);

  const EnvSpec& spec = env.spec();
  const int H = spec.horizon;
  const int m_env = spec.num_constraints;
  const std::vector<int> active = cfg.active_channels(m_env);
  const int m_act = static_cast<int>(active.size());

  Eigen::VectorXd thr_act(m_act);
  for (int i = 0; i < m_act; ++i) thr_act[i] = spec.thresholds[active[i]];

  TrainResult result;
  result.policy = make_policy(env, cfg, derive_seed(seed, 0, 0));
  CriticSet critics{make_critic(env, cfg, derive_seed(seed, 0, 1)), {}};
  for (int c = 0; c < m_env; ++c)
    critics.costs.push_back(make_critic(env, cfg, derive_seed(seed, 0, 2 + c)));

  result.penalty = PenaltyState::make(H, m_act, cfg.lambda0, cfg.beta, cfg.beta_max,
                                      cfg.update_factor, cfg.epsilon_clip);
  result.penalty.cost_clip = cfg.cost_clip;
  if (cfg.algorithm == Algorithm::kEcop) {
    result.penalty.validate();
  } else if (cfg.algorithm == Algorithm::kP3oPenalty) {
    result.penalty.beta = 0.0;
    result.penalty.lambdas.setConstant(cfg.kappa);
  }
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(m_act);

  Eigen::VectorXd grad(result.policy.params().values.size());
  const auto t0 = Clock::now();

  for (int k = 1; k <= cfg.episodes; ++k) {
    EpisodeBatch batch = collect_batch(env, result.policy, cfg.batch_episodes, seed, k);
    fit_critics(critics, batch, cfg);
    AdvantageEstimates est = monte_carlo_advantages(batch, critics);

    SurrogateBatch sb;
    sb.horizon = H;
    sb.num_costs = m_act;
    sb.num_episodes = static_cast<int>(batch.episodes.size());
    sb.j_costs_prev.resize(m_act);
    for (int i = 0; i < m_act; ++i)
      sb.j_costs_prev[i] = batch.mean_total_cost(active[i]);
    sb.thresholds = thr_act;
    std::vector<const EpisodeStep*> steps;
    std::size_t r = 0;
    for (const auto& ep : batch.episodes)
      for (const auto& st : ep) {
        SurrogateRecord rec;
        rec.h = st.h;
        rec.log_prob_old = st.log_prob;
        rec.adv_reward = est.reward[r];
        rec.adv_costs.resize(m_act);
        for (int i = 0; i < m_act; ++i) rec.adv_costs[i] = est.costs[active[i]][r];
        sb.records.push_back(std::move(rec));
        steps.push_back(&st);
        ++r;
      }
    sb.validate();

    if (cfg.algorithm == Algorithm::kEcop && m_act > 0)
      lambda_update(result.penalty, psi_at_old(sb));
    else if (cfg.algorithm == Algorithm::kPpoLagrangian)
      dual_ascent(nu, sb.j_costs_prev, thr_act, cfg.lagrange_lr);

    double loss_sum = 0.0;
    int loss_count = 0;
    std::vector<double> logp(sb.records.size());
    bool aborted = false;
    for (int t = H - 1; t >= 0 && !aborted; --t) {
      for (int it = 0; it < cfg.n_inner && !aborted; ++it) {
        for (std::size_t i = 0; i < steps.size(); ++i)
          logp[i] = eval_logp(result.policy, *steps[i]);
        FinalLossParts parts;
        switch (cfg.algorithm) {
          case Algorithm::kEcop:
            parts = final_loss(sb, logp, result.penalty, t, true);
            break;
          case Algorithm::kP3oPenalty:
            parts = p3o_loss(sb, logp, cfg.kappa, cfg.epsilon_clip, cfg.cost_clip, t,
                             true);
            break;
          case Algorithm::kPpoLagrangian:
            parts = ppo_lagrangian_loss(sb, logp, nu, cfg.epsilon_clip, cfg.cost_clip,
                                        t, true);
            break;
          default:
            throw std::logic_error("unreachable");
        }
        grad.setZero();
        for (std::size_t i = 0; i < steps.size(); ++i)
          if (parts.dloss_dlogp[i] != 0.0)
            add_logp_grad(result.policy, *steps[i], parts.dloss_dlogp[i], grad);
        if (!std::isfinite(parts.total) || !grad.allFinite()) {
          result.aborted = true;
          result.abort_message = "non-finite loss or gradient at iteration " +
                                 std::to_string(k) + ", step " + std::to_string(t);
          aborted = true;
          break;
        }
        result.policy.params().values -= cfg.policy_lr * grad;
        loss_sum += parts.total;
        ++loss_count;
      }
    }

    if (!aborted && cfg.algorithm == Algorithm::kEcop && cfg.adaptive && m_act > 0) {
      adaptive_beta(result.penalty,
                    secondary_cost_and_threshold(sb.j_costs_prev, thr_act,
                                                 result.penalty));
    }

    TrainingRecord rec;
    rec.episode = k;
    rec.j_reward = batch.mean_total_reward();
    rec.j_costs.resize(m_env);
    for (int c = 0; c < m_env; ++c) rec.j_costs[c] = batch.mean_total_cost(c);
    rec.lambda_max = Eigen::VectorXd::Zero(m_env);
    for (int i = 0; i < m_act; ++i) {
      double v = 0.0;
      switch (cfg.algorithm) {
        case Algorithm::kEcop: v = result.penalty.max_lambda(i); break;
        case Algorithm::kPpoLagrangian: v = nu[i]; break;
        case Algorithm::kP3oPenalty: v = cfg.kappa; break;
        default: break;
      }
      rec.lambda_max[active[i]] = v;
    }
    rec.beta = cfg.algorithm == Algorithm::kEcop ? result.penalty.beta : 0.0;
    rec.loss = aborted ? std::numeric_limits<double>::quiet_NaN()
                       : (loss_count > 0 ? loss_sum / loss_count : 0.0);
    rec.feasible = true;
    for (int i = 0; i < m_act; ++i)
      rec.feasible = rec.feasible && sb.j_costs_prev[i] <= thr_act[i];
    if (aborted) rec.feasible = false;
    rec.seconds = elapsed_seconds(t0);
    result.records.push_back(std::move(rec));
    if (aborted) break;
  }
  return result;
}

}  // namespace ecop
