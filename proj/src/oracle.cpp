#include "ecop/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace ecop {

namespace {

constexpr double kFeasEps = 1e-9;  // slack for threshold comparisons on exact values

void append_compositions(int remaining, int parts, std::vector<int>& prefix,
                         std::vector<std::vector<int>>& out) {
  if (parts == 1) {
    prefix.push_back(remaining);
    out.push_back(prefix);
    prefix.pop_back();
    return;
  }
  for (int k = remaining; k >= 0; --k) {
    prefix.push_back(k);
    append_compositions(remaining - k, parts - 1, prefix, out);
    prefix.pop_back();
  }
}

// Episode totals for reward and every cost channel in one backward pass.
struct PolicyValue {
  double j = 0.0;
  std::vector<double> j_costs;
};

PolicyValue evaluate_policy(const EpisodicCmdp& m, const PolicySequence& pi) {
  const int S = m.num_states, A = m.num_actions, H = m.horizon, M = m.num_costs();
  const int n_sig = M + 1;
  std::vector<double> v(static_cast<std::size_t>(n_sig) * S, 0.0);
  std::vector<double> v_next(static_cast<std::size_t>(n_sig) * S, 0.0);
  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      for (int g = 0; g < n_sig; ++g) v[static_cast<std::size_t>(g) * S + s] = 0.0;
      for (int a = 0; a < A; ++a) {
        double pa = pi.prob(h, s, a);
        if (pa == 0.0) continue;
        for (int s2 = 0; s2 < S; ++s2) {
          double p = m.transition[m.sas(s, a, s2)];
          if (p == 0.0) continue;
          double w = pa * p;
          v[s] += w * (m.reward[m.sas(s, a, s2)] + v_next[s2]);
          for (int c = 0; c < M; ++c) {
            std::size_t off = static_cast<std::size_t>(c + 1) * S;
            v[off + s] += w * (m.costs[c][m.sas(s, a, s2)] + v_next[off + s2]);
          }
        }
      }
    }
    v.swap(v_next);
  }
  PolicyValue out;
  out.j_costs.assign(M, 0.0);
  for (int s = 0; s < S; ++s) {
    out.j += m.mu[s] * v_next[s];
    for (int c = 0; c < M; ++c)
      out.j_costs[c] += m.mu[s] * v_next[static_cast<std::size_t>(c + 1) * S + s];
  }
  return out;
}

bool within_thresholds(const EpisodicCmdp& m, const std::vector<double>& j_costs) {
  for (int c = 0; c < m.num_costs(); ++c)
    if (j_costs[c] > m.thresholds[c] + kFeasEps) return false;
  return true;
}

// Walks grid policy ids in ascending order, mutating the digit odometer and
// the policy rows in place.
class GridEnumerator {
 public:
  GridEnumerator(const EpisodicCmdp& m, const PolicyGrid& grid, std::uint64_t start_id)
      : m_(m), grid_(grid), slots_(static_cast<std::size_t>(m.horizon) * m.num_states),
        digits_(slots_, 0), pi_(m.horizon, m.num_states, m.num_actions) {
    std::uint64_t id = start_id;
    for (std::size_t i = 0; i < slots_; ++i) {
      digits_[i] = static_cast<int>(id % grid.size());
      id /= grid.size();
    }
    for (std::size_t i = 0; i < slots_; ++i) apply(i);
  }

  const PolicySequence& policy() const { return pi_; }

  void advance() {
    for (std::size_t i = 0; i < slots_; ++i) {
      if (++digits_[i] < static_cast<int>(grid_.size())) {
        apply(i);
        return;
      }
      digits_[i] = 0;
      apply(i);
    }
  }

 private:
  void apply(std::size_t slot) {
    int h = static_cast<int>(slot) / m_.num_states;
    int s = static_cast<int>(slot) % m_.num_states;
    pi_.set_row(h, s, grid_.points[digits_[slot]]);
  }

  const EpisodicCmdp& m_;
  const PolicyGrid& grid_;
  std::size_t slots_;
  std::vector<int> digits_;
  PolicySequence pi_;
};

}  // namespace

PolicyGrid PolicyGrid::make(int num_actions, int resolution) {
  if (num_actions <= 0 || resolution <= 0)
    throw std::invalid_argument("policy grid: num_actions and resolution must be positive");
  PolicyGrid g;
  g.num_actions = num_actions;
  g.resolution = resolution;
  std::vector<std::vector<int>> comps;
  std::vector<int> prefix;
  append_compositions(resolution, num_actions, prefix, comps);
  g.points.reserve(comps.size());
  for (const auto& c : comps) {
    std::vector<double> p(num_actions);
    for (int a = 0; a < num_actions; ++a) p[a] = static_cast<double>(c[a]) / resolution;
    g.points.push_back(std::move(p));
  }
  return g;
}

std::uint64_t grid_policy_count(const EpisodicCmdp& m, const PolicyGrid& grid,
                                std::uint64_t budget) {
  const std::size_t slots = static_cast<std::size_t>(m.horizon) * m.num_states;
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < slots; ++i) {
    if (count > budget / grid.size() + 1) count = budget + 1;  // saturate, avoid overflow
    else count *= grid.size();
    if (count > budget)
      throw std::invalid_argument(
          "enumeration refused: grid policy count exceeds budget of " + std::to_string(budget));
  }
  return count;
}

PolicySequence policy_from_grid_id(const EpisodicCmdp& m, const PolicyGrid& grid,
                                   std::uint64_t id) {
  PolicySequence pi(m.horizon, m.num_states, m.num_actions);
  for (int h = 0; h < m.horizon; ++h)
    for (int s = 0; s < m.num_states; ++s) {
      pi.set_row(h, s, grid.points[id % grid.size()]);
      id /= grid.size();
    }
  return pi;
}

BruteForceResult brute_force_constrained_optimum(const EpisodicCmdp& m,
                                                 const PolicyGrid& grid,
                                                 std::uint64_t budget, int jobs) {
  m.validate();
  const std::uint64_t count = grid_policy_count(m, grid, budget);
  const double tie_rel = 1e-9;

  struct Candidate {
    std::uint64_t id;
    double j;
    std::vector<double> j_costs;
  };
  struct WorkerResult {
    std::vector<Candidate> near_best;  // feasible candidates near the local best
    bool any_feasible = false;
    double local_best = -std::numeric_limits<double>::infinity();
  };

  jobs = std::max(1, jobs);
  std::uint64_t n_jobs = std::min<std::uint64_t>(jobs, count);
  std::vector<WorkerResult> results(n_jobs);

  auto work = [&](std::uint64_t w) {
    std::uint64_t lo = count * w / n_jobs;
    std::uint64_t hi = count * (w + 1) / n_jobs;
    WorkerResult& r = results[w];
    GridEnumerator it(m, grid, lo);
    for (std::uint64_t id = lo; id < hi; ++id, it.advance()) {
      PolicyValue pv = evaluate_policy(m, it.policy());
      if (within_thresholds(m, pv.j_costs)) {
        r.any_feasible = true;
        double tol = tie_rel * std::max(1.0, std::abs(std::max(r.local_best, pv.j)));
        if (pv.j > r.local_best) {
          r.local_best = pv.j;
          std::erase_if(r.near_best,
                        [&](const Candidate& c) { return c.j < r.local_best - tol; });
        }
        if (pv.j >= r.local_best - tol)
          r.near_best.push_back({id, pv.j, pv.j_costs});
      }
    }
  };

  if (n_jobs == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (std::uint64_t w = 0; w < n_jobs; ++w) threads.emplace_back(work, w);
    for (auto& t : threads) t.join();
  }

  BruteForceResult out;
  out.policy_count = count;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& r : results) {
    if (!r.any_feasible) continue;
    out.feasible_exists = true;
    best = std::max(best, r.local_best);
  }
  if (!out.feasible_exists) return out;

  double tol = tie_rel * std::max(1.0, std::abs(best));
  std::vector<const Candidate*> ties;
  for (const auto& r : results)
    for (const auto& c : r.near_best)
      if (c.j >= best - tol) ties.push_back(&c);
  std::sort(ties.begin(), ties.end(),
            [](const Candidate* a, const Candidate* b) { return a->id < b->id; });

  out.best_j = best;
  out.best_id = ties.front()->id;
  for (const auto* c : ties) {
    out.optimal_ids.push_back(c->id);
    if (c->id == out.best_id) out.best_j_costs = c->j_costs;
  }
  out.best_policy = policy_from_grid_id(m, grid, out.best_id);
  return out;
}

Lemma1Result lemma1_check(const EpisodicCmdp& m, const PolicySequence& pi,
                          const PolicySequence& pi_prime) {
  Lemma1Result r;
  r.lhs = exact_objective(m, pi, kReward) - exact_objective(m, pi_prime, kReward);
  OccupancyTable occ = reach_probabilities(m, pi);
  std::vector<double> adv = advantage_tables(exact_value_functions(m, pi_prime, kReward));
  r.rhs = 0.0;
  for (std::size_t i = 0; i < adv.size(); ++i) r.rhs += occ.probs[i] * adv[i];
  r.abs_err = std::abs(r.lhs - r.rhs);
  return r;
}

namespace {

// Shared scaffolding for the step subproblem and the equivalence check:
// surrogate objective/constraint values of a candidate policy against the
// advantages of a fixed reference policy, summed over h >= t.
struct SurrogateEval {
  double objective;                 // sum_h>=t <occ, -A_reward>
  std::vector<double> cost_shift;   // per channel: sum_h>=t <occ, A_cost>
};

SurrogateEval surrogate_eval(const EpisodicCmdp& m, const PolicySequence& cand,
                             const std::vector<double>& adv_reward,
                             const std::vector<std::vector<double>>& adv_costs, int t) {
  const int S = m.num_states, A = m.num_actions, H = m.horizon, M = m.num_costs();
  OccupancyTable occ = reach_probabilities(m, cand);
  SurrogateEval ev{0.0, std::vector<double>(M, 0.0)};
  for (int h = t; h < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        std::size_t i = (static_cast<std::size_t>(h) * S + s) * A + a;
        double p = occ.probs[i];
        if (p == 0.0) continue;
        ev.objective -= p * adv_reward[i];
        for (int c = 0; c < M; ++c) ev.cost_shift[c] += p * adv_costs[c][i];
      }
  return ev;
}

}  // namespace

ExactStepResult ipoce_exact_step(const EpisodicCmdp& m, const PolicySequence& pi_prev,
                                 const PolicySequence& pi_star, int t,
                                 const PolicyGrid& grid, std::uint64_t budget) {
  const int S = m.num_states, M = m.num_costs();
  if (t < 0 || t >= m.horizon) throw std::invalid_argument("step index out of range");

  std::uint64_t combos = 1;
  for (int s = 0; s < S; ++s) {
    combos *= grid.size();
    if (combos > budget)
      throw std::invalid_argument("enumeration refused: step candidates exceed budget");
  }

  std::vector<double> adv_reward =
      advantage_tables(exact_value_functions(m, pi_prev, kReward));
  std::vector<std::vector<double>> adv_costs(M);
  std::vector<double> j_costs_prev(M);
  for (int c = 0; c < M; ++c) {
    ValueTables vt = exact_value_functions(m, pi_prev, c);
    adv_costs[c] = advantage_tables(vt);
    j_costs_prev[c] = 0.0;
    for (int s = 0; s < S; ++s) j_costs_prev[c] += m.mu[s] * vt.value(0, s);
  }

  // candidate = pi_prev rows before t, grid rows at t, pi_star rows after t
  PolicySequence cand = pi_prev;
  for (int h = t + 1; h < m.horizon; ++h)
    for (int s = 0; s < S; ++s) cand.set_row(h, s, pi_star.row(h, s));

  ExactStepResult best;
  double best_obj = std::numeric_limits<double>::infinity();
  double best_violation = std::numeric_limits<double>::infinity();
  std::vector<int> digits(S, 0);

  for (std::uint64_t id = 0; id < combos; ++id) {
    std::uint64_t rest = id;
    for (int s = 0; s < S; ++s) {
      digits[s] = static_cast<int>(rest % grid.size());
      rest /= grid.size();
    }
    for (int s = 0; s < S; ++s) cand.set_row(t, s, grid.points[digits[s]]);

    SurrogateEval ev = surrogate_eval(m, cand, adv_reward, adv_costs, t);
    bool feasible = true;
    double violation = 0.0;
    std::vector<double> cvals(M);
    for (int c = 0; c < M; ++c) {
      cvals[c] = j_costs_prev[c] + ev.cost_shift[c];
      if (cvals[c] > m.thresholds[c] + kFeasEps) feasible = false;
      violation = std::max(violation, cvals[c] - m.thresholds[c]);
    }

    bool take = false;
    if (feasible && !best.feasible) {
      take = true;
    } else if (feasible == best.feasible) {
      take = best.feasible ? ev.objective < best_obj : violation < best_violation;
    }
    if (id == 0) take = true;
    if (take) {
      best.feasible = feasible;
      best_obj = ev.objective;
      best_violation = violation;
      best.objective = ev.objective;
      best.constraint_values = cvals;
      best.rows.assign(S, {});
      for (int s = 0; s < S; ++s) best.rows[s] = grid.points[digits[s]];
    }
  }
  return best;
}

std::vector<ExactIterate> ipoce_run(const EpisodicCmdp& m, int iterations,
                                    const PolicyGrid& grid, std::uint64_t budget,
                                    PolicySequence* final_policy) {
  PolicySequence current(m.horizon, m.num_states, m.num_actions);
  std::vector<ExactIterate> out;
  out.reserve(iterations);
  for (int k = 0; k < iterations; ++k) {
    PolicySequence updated = current;
    bool all_feasible = true;
    for (int t = m.horizon - 1; t >= 0; --t) {
      ExactStepResult step = ipoce_exact_step(m, current, updated, t, grid, budget);
      all_feasible = all_feasible && step.feasible;
      for (int s = 0; s < m.num_states; ++s) updated.set_row(t, s, step.rows[s]);
    }
    current = std::move(updated);
    PolicyValue pv = evaluate_policy(m, current);
    out.push_back({k + 1, pv.j, pv.j_costs, all_feasible});
  }
  if (final_policy) *final_policy = std::move(current);
  return out;
}

Theorem1Report theorem1_equivalence_check(const EpisodicCmdp& m,
                                          const PolicySequence& pi_ref,
                                          const std::vector<double>& beta_list,
                                          const PolicyGrid& grid, std::uint64_t budget) {
  m.validate();
  for (std::size_t i = 1; i < beta_list.size(); ++i)
    if (beta_list[i] <= beta_list[i - 1])
      throw std::invalid_argument("beta_list must be strictly increasing");

  const int M = m.num_costs();
  const std::uint64_t count = grid_policy_count(m, grid, budget);

  std::vector<double> adv_reward =
      advantage_tables(exact_value_functions(m, pi_ref, kReward));
  std::vector<std::vector<double>> adv_costs(M);
  std::vector<double> j_costs_ref(M);
  for (int c = 0; c < M; ++c) {
    ValueTables vt = exact_value_functions(m, pi_ref, c);
    adv_costs[c] = advantage_tables(vt);
    for (int s = 0; s < m.num_states; ++s) j_costs_ref[c] += m.mu[s] * vt.value(0, s);
  }

  // Per-candidate cache: surrogate objective, psi per channel, and the exact
  // episode costs used by the multiplier update (independent DP route).
  std::vector<double> base(count);
  std::vector<std::vector<double>> psi(count, std::vector<double>(M));
  std::vector<std::vector<double>> j_costs_exact(count, std::vector<double>(M));
  {
    GridEnumerator it(m, grid, 0);
    for (std::uint64_t id = 0; id < count; ++id, it.advance()) {
      SurrogateEval ev = surrogate_eval(m, it.policy(), adv_reward, adv_costs, 0);
      base[id] = ev.objective;
      for (int c = 0; c < M; ++c)
        psi[id][c] = ev.cost_shift[c] + (j_costs_ref[c] - m.thresholds[c]);
      j_costs_exact[id] = evaluate_policy(m, it.policy()).j_costs;
    }
  }

  auto argmin_set = [&](auto&& value_of) {
    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t id = 0; id < count; ++id) best = std::min(best, value_of(id));
    double tol = 1e-9 * std::max(1.0, std::abs(best));
    std::vector<std::uint64_t> ids;
    for (std::uint64_t id = 0; id < count; ++id)
      if (value_of(id) <= best + tol) ids.push_back(id);
    return ids;
  };

  Theorem1Report report;

  // constrained side of the comparison: Eq-(2)-style surrogate problem
  std::vector<char> feasible(count, 1);
  for (std::uint64_t id = 0; id < count; ++id)
    for (int c = 0; c < M; ++c)
      if (psi[id][c] > kFeasEps) feasible[id] = 0;
  double inf = std::numeric_limits<double>::infinity();
  std::vector<std::uint64_t> constrained_ids = argmin_set(
      [&](std::uint64_t id) { return feasible[id] ? base[id] : inf; });
  report.constrained_feasible =
      std::any_of(feasible.begin(), feasible.end(), [](char f) { return f != 0; });
  if (!report.constrained_feasible) constrained_ids.clear();

  bool coincident_seen = false;
  for (double beta : beta_list) {
    Theorem1BetaReport br;
    br.beta = beta;
    br.lambda.assign(M, 0.0);

    auto damped_value = [&](std::uint64_t id) {
      double pen = 0.0;
      for (int c = 0; c < M; ++c) {
        double lam_over_beta = br.lambda[c] / beta;
        double active = std::max(0.0, psi[id][c] + lam_over_beta);
        pen += 0.5 * beta * (active * active - lam_over_beta * lam_over_beta);
      }
      return base[id] + pen;
    };

    {
      const std::uint64_t head = argmin_set(damped_value).front();
      br.damped_min_feasible_at_init = true;
      for (int c = 0; c < M; ++c)
        if (j_costs_exact[head][c] > m.thresholds[c] + kFeasEps)
          br.damped_min_feasible_at_init = false;
    }

    for (br.lambda_iterations = 0; br.lambda_iterations < 1000; ) {
      ++br.lambda_iterations;
      std::uint64_t head = argmin_set(damped_value).front();
      double delta = 0.0;
      for (int c = 0; c < M; ++c) {
        double next =
            std::max(0.0, br.lambda[c] + beta * (j_costs_exact[head][c] - m.thresholds[c]));
        delta = std::max(delta, std::abs(next - br.lambda[c]));
        br.lambda[c] = next;
      }
      if (delta <= 1e-8) {
        br.lambda_converged = true;
        break;
      }
    }

    br.damped_argmin_ids = argmin_set(damped_value);
    br.constrained_argmin_ids = constrained_ids;
    br.coincide = br.damped_argmin_ids == constrained_ids;
    std::uint64_t head = br.damped_argmin_ids.front();
    br.damped_min_feasible = true;
    for (int c = 0; c < M; ++c)
      if (j_costs_exact[head][c] > m.thresholds[c] + kFeasEps) br.damped_min_feasible = false;

    if (br.coincide && !coincident_seen) {
      coincident_seen = true;
      report.smallest_coincident_beta = beta;
    }
    if (coincident_seen && !br.coincide) report.monotone_coincidence = false;
    report.per_beta.push_back(std::move(br));
  }
  return report;
}

DualOptimumResult constrained_optimum_via_dual(const EpisodicCmdp& m, int channel,
                                               double tol) {
  m.validate();
  if (channel < 0 || channel >= m.num_costs())
    throw std::invalid_argument("dual oracle: channel out of range");
  const int S = m.num_states, A = m.num_actions, H = m.horizon;
  const double d = m.thresholds[channel];

  // Greedy backward induction on reward - lambda*cost; returns exact episode
  // reward and cost of the maximizing deterministic policy.
  auto solve = [&](double lambda) {
    std::vector<double> v(S, 0.0), v_next(S, 0.0);
    PolicySequence pi(H, S, A);
    std::vector<double> row(A, 0.0);
    for (int h = H - 1; h >= 0; --h) {
      for (int s = 0; s < S; ++s) {
        int best_a = 0;
        double best_q = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < A; ++a) {
          double q = 0.0;
          for (int s2 = 0; s2 < S; ++s2) {
            double p = m.transition[m.sas(s, a, s2)];
            if (p == 0.0) continue;
            q += p * (m.reward[m.sas(s, a, s2)] - lambda * m.costs[channel][m.sas(s, a, s2)] +
                      v_next[s2]);
          }
          if (q > best_q) {
            best_q = q;
            best_a = a;
          }
        }
        v[s] = best_q;
        std::fill(row.begin(), row.end(), 0.0);
        row[best_a] = 1.0;
        pi.set_row(h, s, row);
      }
      v.swap(v_next);
    }
    PolicyValue pv = evaluate_policy(m, pi);
    return std::pair<double, double>(pv.j, pv.j_costs[channel]);
  };

  DualOptimumResult out;
  auto [j0, c0] = solve(0.0);
  if (c0 <= d + kFeasEps) {
    out.feasible = true;
    out.j_star = j0;
    out.lambda_star = 0.0;
    out.j_cost_at_star = c0;
    return out;
  }

  double lo = 0.0, hi = 1.0;
  double j_lo = j0, c_lo = c0;
  double j_hi, c_hi;
  for (;;) {
    std::tie(j_hi, c_hi) = solve(hi);
    if (c_hi <= d + kFeasEps) break;
    lo = hi;
    j_lo = j_hi;
    c_lo = c_hi;
    hi *= 2.0;
    if (hi > 1e12) return out;  // even extreme penalties cannot reach the threshold
  }
  out.feasible = true;

  for (int it = 0; it < 200 && hi - lo > tol * std::max(1.0, hi); ++it) {
    double mid = 0.5 * (lo + hi);
    auto [jm, cm] = solve(mid);
    if (cm <= d + kFeasEps) {
      hi = mid;
      j_hi = jm;
      c_hi = cm;
    } else {
      lo = mid;
      j_lo = jm;
      c_lo = cm;
    }
  }

  out.lambda_star = hi;
  if (c_lo <= c_hi + 1e-15) {  // no crossing gap: the feasible endpoint is optimal
    out.j_star = j_hi;
    out.j_cost_at_star = c_hi;
    return out;
  }
  double alpha = (d - c_hi) / (c_lo - c_hi);
  alpha = std::clamp(alpha, 0.0, 1.0);
  out.j_star = alpha * j_lo + (1.0 - alpha) * j_hi;
  out.j_cost_at_star = alpha * c_lo + (1.0 - alpha) * c_hi;
  return out;
}

double unconstrained_optimum(const EpisodicCmdp& m, int signal) {
  const int S = m.num_states, A = m.num_actions, H = m.horizon;
  std::vector<double> v(S, 0.0), v_next(S, 0.0);
  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      double best_q = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < A; ++a) {
        double q = 0.0;
        for (int s2 = 0; s2 < S; ++s2) {
          double p = m.transition[m.sas(s, a, s2)];
          if (p != 0.0) q += p * (m.signal(signal, s, a, s2) + v_next[s2]);
        }
        best_q = std::max(best_q, q);
      }
      v[s] = best_q;
    }
    v.swap(v_next);
  }
  double j = 0.0;
  for (int s = 0; s < S; ++s) j += m.mu[s] * v_next[s];
  return j;
}

namespace {

std::vector<double> dirichlet_row(Rng& rng, int n) {
  std::vector<double> row(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    row[i] = -std::log(1.0 - rng.uniform());
    total += row[i];
  }
  for (int i = 0; i < n; ++i) row[i] /= total;
  return row;
}

}  // namespace

EpisodicCmdp random_cmdp(Rng& rng, int max_states, int max_actions, int max_horizon,
                         int num_costs) {
  EpisodicCmdp m;
  m.name = "random";
  m.num_states = 2 + static_cast<int>(rng.uniform() * (max_states - 1));
  m.num_actions = 2 + static_cast<int>(rng.uniform() * (max_actions - 1));
  m.horizon = 1 + static_cast<int>(rng.uniform() * max_horizon);
  m.num_states = std::min(m.num_states, max_states);
  m.num_actions = std::min(m.num_actions, max_actions);
  m.horizon = std::min(m.horizon, max_horizon);

  m.mu = dirichlet_row(rng, m.num_states);

  const int n = m.num_states * m.num_actions * m.num_states;
  m.transition.resize(n);
  m.reward.resize(n);
  m.costs.assign(num_costs, std::vector<double>(n));
  for (int s = 0; s < m.num_states; ++s)
    for (int a = 0; a < m.num_actions; ++a) {
      auto row = dirichlet_row(rng, m.num_states);
      for (int s2 = 0; s2 < m.num_states; ++s2) {
        const int idx = m.sas(s, a, s2);
        m.transition[idx] = row[s2];
        m.reward[idx] = rng.uniform(-1.0, 1.0);
        for (int i = 0; i < num_costs; ++i) m.costs[i][idx] = rng.uniform();
      }
    }

  m.thresholds.resize(num_costs);
  if (num_costs > 0) {
    PolicySequence uniform(m.horizon, m.num_states, m.num_actions);
    for (int i = 0; i < num_costs; ++i) {
      double level = exact_objective(m, uniform, i);
      m.thresholds[i] = level * rng.uniform(0.8, 1.2);
    }
  }
  m.validate();
  return m;
}

PolicySequence random_policy(Rng& rng, const EpisodicCmdp& m) {
  PolicySequence pi(m.horizon, m.num_states, m.num_actions);
  for (int h = 0; h < m.horizon; ++h)
    for (int s = 0; s < m.num_states; ++s) {
      auto row = dirichlet_row(rng, m.num_actions);
      pi.set_row(h, s, row);
    }
  return pi;
}

}  // namespace ecop
