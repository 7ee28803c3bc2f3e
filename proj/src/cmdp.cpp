#include "ecop/cmdp.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ecop/rng.hpp"

namespace ecop {

namespace {

void check(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

void EpisodicCmdp::validate(double tol) const {
  check(num_states > 0 && num_actions > 0 && horizon > 0,
        "cmdp: dimensions must be positive");
  const auto n = static_cast<std::size_t>(num_states) * num_actions * num_states;
  check(transition.size() == n, "cmdp: transition tensor size mismatch");
  check(reward.size() == n, "cmdp: reward tensor size mismatch");
  check(mu.size() == static_cast<std::size_t>(num_states), "cmdp: mu size mismatch");
  check(thresholds.size() == costs.size(), "cmdp: thresholds/costs count mismatch");
  for (const auto& c : costs) check(c.size() == n, "cmdp: cost tensor size mismatch");

  double mu_sum = std::accumulate(mu.begin(), mu.end(), 0.0);
  check(std::abs(mu_sum - 1.0) <= tol, "cmdp: mu does not sum to 1");
  for (double p : mu) check(p >= -tol, "cmdp: negative entry in mu");

  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) {
      double row = 0.0;
      for (int s2 = 0; s2 < num_states; ++s2) {
        double p = transition[sas(s, a, s2)];
        check(p >= -tol, "cmdp: negative transition probability");
        row += p;
      }
      check(std::abs(row - 1.0) <= tol, "cmdp: transition row at (s=" + std::to_string(s) +
                                            ",a=" + std::to_string(a) + ") does not sum to 1");
    }
  }
}

PolicySequence::PolicySequence(int horizon, int num_states, int num_actions)
    : horizon_(horizon), num_states_(num_states), num_actions_(num_actions),
      probs_(static_cast<std::size_t>(horizon) * num_states * num_actions,
             1.0 / num_actions) {
  check(horizon > 0 && num_states > 0 && num_actions > 0,
        "policy: dimensions must be positive");
}

PolicySequence PolicySequence::from_table(int horizon, int num_states, int num_actions,
                                          std::vector<double> probs) {
  PolicySequence pi(horizon, num_states, num_actions);
  check(probs.size() == pi.probs_.size(), "policy: table size mismatch");
  pi.probs_ = std::move(probs);
  return pi;
}

PolicySequence PolicySequence::from_query(
    int horizon, int num_states, int num_actions,
    const std::function<void(int h, int s, std::span<double> out)>& query) {
  PolicySequence pi(horizon, num_states, num_actions);
  std::vector<double> row(num_actions);
  for (int h = 0; h < horizon; ++h)
    for (int s = 0; s < num_states; ++s) {
      query(h, s, row);
      pi.set_row(h, s, row);
    }
  return pi;
}

void PolicySequence::set_row(int h, int s, std::span<const double> p) {
  check(p.size() == static_cast<std::size_t>(num_actions_), "policy: row size mismatch");
  std::copy(p.begin(), p.end(), probs_.begin() + idx(h, s, 0));
}

void PolicySequence::validate(double tol) const {
  for (int h = 0; h < horizon_; ++h)
    for (int s = 0; s < num_states_; ++s) {
      double sum = 0.0;
      for (int a = 0; a < num_actions_; ++a) {
        double p = prob(h, s, a);
        check(p >= -tol, "policy: negative probability");
        sum += p;
      }
      check(std::abs(sum - 1.0) <= tol, "policy: row does not sum to 1 at (h=" +
                                            std::to_string(h) + ",s=" + std::to_string(s) + ")");
    }
}

double OccupancyTable::state_marginal(int h, int s) const {
  double sum = 0.0;
  for (int a = 0; a < num_actions; ++a) sum += at(h, s, a);
  return sum;
}

double Trajectory::total_reward() const {
  double t = 0.0;
  for (const auto& st : steps) t += st.reward;
  return t;
}

double Trajectory::total_cost(int channel) const {
  double t = 0.0;
  for (const auto& st : steps) t += st.costs.at(channel);
  return t;
}

ValueTables exact_value_functions(const EpisodicCmdp& m, const PolicySequence& pi,
                                  int signal) {
  check(signal >= kReward && signal < m.num_costs(), "signal index out of range");
  check(pi.horizon() == m.horizon && pi.num_states() == m.num_states &&
            pi.num_actions() == m.num_actions,
        "policy/cmdp shape mismatch");
  const int S = m.num_states, A = m.num_actions, H = m.horizon;
  ValueTables vt{H, S, A,
                 std::vector<double>(static_cast<std::size_t>(H + 1) * S, 0.0),
                 std::vector<double>(static_cast<std::size_t>(H) * S * A, 0.0)};
  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      double v = 0.0;
      for (int a = 0; a < A; ++a) {
        double q = 0.0;
        for (int s2 = 0; s2 < S; ++s2) {
          double p = m.transition[m.sas(s, a, s2)];
          if (p != 0.0)
            q += p * (m.signal(signal, s, a, s2) + vt.value(h + 1, s2));
        }
        vt.q[(static_cast<std::size_t>(h) * S + s) * A + a] = q;
        v += pi.prob(h, s, a) * q;
      }
      vt.v[static_cast<std::size_t>(h) * S + s] = v;
    }
  }
  return vt;
}

double exact_objective(const EpisodicCmdp& m, const PolicySequence& pi, int signal) {
  ValueTables vt = exact_value_functions(m, pi, signal);
  double j = 0.0;
  for (int s = 0; s < m.num_states; ++s) j += m.mu[s] * vt.value(0, s);
  return j;
}

OccupancyTable reach_probabilities(const EpisodicCmdp& m, const PolicySequence& pi) {
  check(pi.horizon() == m.horizon && pi.num_states() == m.num_states &&
            pi.num_actions() == m.num_actions,
        "policy/cmdp shape mismatch");
  const int S = m.num_states, A = m.num_actions, H = m.horizon;
  OccupancyTable occ{H, S, A,
                     std::vector<double>(static_cast<std::size_t>(H) * S * A, 0.0)};
  std::vector<double> state_p(m.mu.begin(), m.mu.end());
  std::vector<double> next_p(S);
  for (int h = 0; h < H; ++h) {
    std::fill(next_p.begin(), next_p.end(), 0.0);
    for (int s = 0; s < S; ++s) {
      if (state_p[s] == 0.0) continue;
      for (int a = 0; a < A; ++a) {
        double pa = state_p[s] * pi.prob(h, s, a);
        occ.probs[(static_cast<std::size_t>(h) * S + s) * A + a] = pa;
        if (pa == 0.0) continue;
        for (int s2 = 0; s2 < S; ++s2)
          next_p[s2] += pa * m.transition[m.sas(s, a, s2)];
      }
    }
    state_p.swap(next_p);
  }
  return occ;
}

double objective_from_occupancy(const EpisodicCmdp& m, const OccupancyTable& occ,
                                int signal) {
  check(signal >= kReward && signal < m.num_costs(), "signal index out of range");
  double j = 0.0;
  for (int h = 0; h < occ.horizon; ++h)
    for (int s = 0; s < m.num_states; ++s)
      for (int a = 0; a < m.num_actions; ++a) {
        double pa = occ.at(h, s, a);
        if (pa == 0.0) continue;
        double g = 0.0;
        for (int s2 = 0; s2 < m.num_states; ++s2) {
          double p = m.transition[m.sas(s, a, s2)];
          if (p != 0.0) g += p * m.signal(signal, s, a, s2);
        }
        j += pa * g;
      }
  return j;
}

std::vector<double> advantage_tables(const ValueTables& vt) {
  std::vector<double> adv(vt.q.size());
  for (int h = 0; h < vt.horizon; ++h)
    for (int s = 0; s < vt.num_states; ++s)
      for (int a = 0; a < vt.num_actions; ++a)
        adv[(static_cast<std::size_t>(h) * vt.num_states + s) * vt.num_actions + a] =
            vt.qvalue(h, s, a) - vt.value(h, s);
  return adv;
}

Trajectory sample_trajectory(const EpisodicCmdp& m, const PolicySequence& pi,
                             std::uint64_t seed) {
  Rng rng(seed);
  Trajectory traj;
  traj.seed = seed;
  traj.steps.reserve(m.horizon);
  int s = rng.categorical(m.mu);
  for (int h = 0; h < m.horizon; ++h) {
    int a = rng.categorical(pi.row(h, s));
    int s2 = rng.categorical(m.next_dist(s, a));
    TrajectoryStep step;
    step.s = s;
    step.a = a;
    step.s_next = s2;
    step.reward = m.reward[m.sas(s, a, s2)];
    step.costs.resize(m.num_costs());
    for (int i = 0; i < m.num_costs(); ++i) step.costs[i] = m.costs[i][m.sas(s, a, s2)];
    traj.steps.push_back(std::move(step));
    s = s2;
  }
  return traj;
}

}  // namespace ecop
