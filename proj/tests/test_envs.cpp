#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <vector>

#include "doctest.h"
#include "ecop/cmdp.hpp"
#include "ecop/envs.hpp"
#include "ecop/rng.hpp"
#include "ecop/serialize.hpp"

using namespace ecop;

TEST_CASE("env specs carry the documented shapes") {
  Environment hz = Environment::hazard_gridworld();
  CHECK(hz.spec().horizon == 30);
  CHECK(hz.spec().num_states == 36);
  CHECK(hz.spec().num_actions == 4);
  CHECK(hz.spec().thresholds[0] == 2.0);
  CHECK(hz.tabular());
  hz.cmdp().validate();

  Environment nav = Environment::navigation_gridworld();
  CHECK(nav.spec().horizon == 40);
  CHECK(nav.spec().num_states == 64);
  CHECK(nav.spec().num_constraints == 2);
  CHECK(nav.spec().thresholds[0] == 3.0);
  CHECK(nav.spec().thresholds[1] == 5.0);
  nav.cmdp().validate();

  Environment pc = Environment::point_circle();
  CHECK_FALSE(pc.tabular());
  CHECK(pc.spec().obs_dim == 4);
  CHECK(pc.spec().action_dim == 2);
  CHECK_THROWS(pc.cmdp());
}

TEST_CASE("fixed start is deterministic, uniform corners spread evenly") {
  Environment fixed = Environment::hazard_gridworld();
  Rng rng(3);
  int s0 = fixed.sample_initial_state(rng);
  for (int i = 0; i < 50; ++i) CHECK(fixed.sample_initial_state(rng) == s0);

  // same seed, same draw
  Rng a(42), b(42);
  CHECK(fixed.sample_initial_state(a) == fixed.sample_initial_state(b));

  Environment corners = Environment::hazard_gridworld(30, 2.0, "uniform_corners");
  std::map<int, int> hits;
  Rng rc(7);
  const int n = 10000;
  for (int i = 0; i < n; ++i) hits[corners.sample_initial_state(rc)]++;
  REQUIRE(hits.size() == 4);
  // binomial SE around p = 1/4
  double se = std::sqrt(0.25 * 0.75 / n);
  for (const auto& [state, count] : hits)
    CHECK(std::abs(static_cast<double>(count) / n - 0.25) <= 3.0 * se);

  CHECK_THROWS(Environment::hazard_gridworld(30, 2.0, "bogus"));
}

TEST_CASE("hazard cost accrues exactly on hazard arrivals") {
  Environment env = Environment::hazard_gridworld();
  const EpisodicCmdp& m = env.cmdp();
  // hazard cells are the ones whose arrival carries cost; collect them
  std::set<int> hazard;
  for (int s2 = 0; s2 < m.num_states; ++s2)
    if (m.costs[0][m.sas(0, 0, s2)] == 1.0) hazard.insert(s2);
  CHECK(hazard.size() == 3);

  Rng rng(11);
  int clean_episodes = 0;
  for (int e = 0; e < 40; ++e) {
    int s = env.sample_initial_state(rng);
    double total = 0.0;
    bool touched = false;
    for (int h = 0; h < m.horizon; ++h) {
      double r = 0.0;
      Eigen::VectorXd c;
      // steer away from the pocket: move down (1) or right (3)
      s = env.step_tabular(s, h % 2 == 0 ? 1 : 3, rng, r, c);
      total += c[0];
      if (hazard.count(s)) touched = true;
    }
    if (!touched) {
      clean_episodes++;
      CHECK(total == 0.0);
    }
  }
  // the corner-hugging walk should stay clean essentially always
  CHECK(clean_episodes >= 35);
}

TEST_CASE("goal arrivals pay reward one") {
  Environment env = Environment::hazard_gridworld();
  const EpisodicCmdp& m = env.cmdp();
  int goal = -1;
  for (int s2 = 0; s2 < m.num_states; ++s2)
    if (m.reward[m.sas(0, 0, s2)] == 1.0) goal = s2;
  REQUIRE(goal >= 0);
  for (int s = 0; s < m.num_states; ++s)
    for (int a = 0; a < 4; ++a)
      for (int s2 = 0; s2 < m.num_states; ++s2)
        CHECK(m.reward[m.sas(s, a, s2)] == (s2 == goal ? 1.0 : 0.0));
}

TEST_CASE("rollout visit frequencies match the exact occupancies") {
  Environment env = Environment::hazard_gridworld();
  const EpisodicCmdp& m = env.cmdp();
  PolicySequence pi(m.horizon, m.num_states, m.num_actions);  // uniform
  OccupancyTable occ = reach_probabilities(m, pi);

  const int n = 100000;
  // spot-check a handful of (h, s) marginals instead of all 36*30
  struct Probe {
    int h, s;
    int count = 0;
  };
  std::vector<Probe> probes = {{1, 34, 0}, {3, 28, 0}, {7, 22, 0}, {15, 0, 0}, {29, 35, 0}};
  Rng rng(123);
  for (int e = 0; e < n; ++e) {
    int s = env.sample_initial_state(rng);
    for (int h = 0; h < m.horizon; ++h) {
      for (auto& p : probes)
        if (p.h == h && p.s == s) p.count++;
      double r;
      Eigen::VectorXd c;
      s = env.step_tabular(s, static_cast<int>(rng.raw() % 4), rng, r, c);
    }
  }
  for (const auto& p : probes) {
    double exact = occ.state_marginal(p.h, p.s);
    double phat = static_cast<double>(p.count) / n;
    double se = std::sqrt(std::max(exact * (1.0 - exact), 1e-12) / n);
    CHECK(std::abs(phat - exact) <= 3.0 * se + 1e-9);
  }
}

TEST_CASE("navigation channels fire on hazards and pillar-adjacent cells") {
  Environment env = Environment::navigation_gridworld();
  const EpisodicCmdp& m = env.cmdp();
  REQUIRE(m.num_costs() == 2);
  // channel tensors are indicator functions of the arrival cell
  int hazard_cells = 0, adjacent_cells = 0;
  for (int s2 = 0; s2 < m.num_states; ++s2) {
    double c1 = m.costs[0][m.sas(0, 0, s2)];
    double c2 = m.costs[1][m.sas(0, 0, s2)];
    CHECK((c1 == 0.0 || c1 == 1.0));
    CHECK((c2 == 0.0 || c2 == 1.0));
    hazard_cells += c1 == 1.0;
    adjacent_cells += c2 == 1.0;
  }
  CHECK(hazard_cells == 16);  // 4x4 block
  CHECK(adjacent_cells > 0);

  // reward telescopes: total reward of a trajectory = dist(start) - dist(end)
  PolicySequence pi(m.horizon, m.num_states, m.num_actions);
  Trajectory tr = sample_trajectory(m, pi, 5);
  double total = tr.total_reward();
  // reconstruct distances from the reward tensor: r(s,a,s') depends only on
  // (s, s'), so telescoping must hold along any path
  double recon = 0.0;
  for (const auto& st : tr.steps) recon += m.reward[m.sas(st.s, st.a, st.s_next)];
  CHECK(total == doctest::Approx(recon).epsilon(1e-12));
}

TEST_CASE("pillars are impassable") {
  Environment env = Environment::navigation_gridworld();
  const EpisodicCmdp& m = env.cmdp();
  // no policy puts mass on a pillar: the uniform policy reaches a state iff
  // any policy does, and exactly one cell stays at zero occupancy throughout
  PolicySequence pi(m.horizon, m.num_states, m.num_actions);
  OccupancyTable occ = reach_probabilities(m, pi);
  int never_visited = 0;
  for (int s = 0; s < m.num_states; ++s) {
    double mass = 0.0;
    for (int h = 0; h < m.horizon; ++h) mass += occ.state_marginal(h, s);
    if (mass == 0.0) never_visited++;
  }
  CHECK(never_visited == 1);
}

TEST_CASE("tangential motion on the circle pays the speed as reward") {
  Environment env = Environment::point_circle();
  const double speed = 0.8;
  // choose the pre-step state so the post-step point lands at (1, 0) with
  // velocity (0, speed): reward = v . [-y, x] / (1 + 0) = speed
  Eigen::VectorXd state(4);
  state << 1.0, -speed * 0.1, 0.0, speed;
  Eigen::VectorXd action = Eigen::VectorXd::Zero(2);
  double reward = 0.0;
  Eigen::VectorXd costs;
  Eigen::VectorXd next = env.step_continuous(state, action, reward, costs);
  CHECK(next[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(next[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(reward == doctest::Approx(speed).epsilon(1e-10));
  // x = 1 > x_lim = 0.5 so the step also costs
  CHECK(costs[0] == 1.0);

  // mirrored point keeps the same tangential reward but is cost-free
  Eigen::VectorXd mirrored(4);
  mirrored << -1.0, speed * 0.1, 0.0, -speed;
  next = env.step_continuous(mirrored, action, reward, costs);
  CHECK(reward == doctest::Approx(speed).epsilon(1e-10));
  CHECK(costs[0] == 0.0);
}

TEST_CASE("actions are clamped to the box inside the env") {
  Environment env = Environment::point_circle();
  Eigen::VectorXd state = Eigen::VectorXd::Zero(4);
  Eigen::VectorXd wild(2);
  wild << 50.0, -50.0;
  double reward = 0.0;
  Eigen::VectorXd costs;
  Eigen::VectorXd next = env.step_continuous(state, wild, reward, costs);
  // velocity moved by at most |a_max| * dt
  CHECK(next[2] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(next[3] == doctest::Approx(-0.1).epsilon(1e-12));
}

TEST_CASE("episodes never terminate early") {
  Environment env = Environment::hazard_gridworld();
  const EpisodicCmdp& m = env.cmdp();
  PolicySequence pi(m.horizon, m.num_states, m.num_actions);
  Trajectory tr = sample_trajectory(m, pi, 9);
  CHECK(static_cast<int>(tr.steps.size()) == 30);
}

TEST_CASE("horizon and threshold overrides propagate into the model") {
  Environment env = Environment::hazard_gridworld();
  env.set_horizon(12);
  CHECK(env.spec().horizon == 12);
  CHECK(env.cmdp().horizon == 12);
  Eigen::VectorXd d(1);
  d << 3.5;
  env.set_thresholds(d);
  CHECK(env.spec().thresholds[0] == 3.5);
  CHECK(env.cmdp().thresholds[0] == 3.5);
  CHECK_THROWS(env.set_horizon(0));
  Eigen::VectorXd wrong(2);
  wrong << 1.0, 2.0;
  CHECK_THROWS(env.set_thresholds(wrong));
}

TEST_CASE("exported models round-trip bit-exactly") {
  namespace fs = std::filesystem;
  for (const char* name : {"hazard_gridworld", "navigation_gridworld"}) {
    Environment env = Environment::by_name(name);
    const EpisodicCmdp& m = env.cmdp();
    std::string text = cmdp_to_text(m);
    EpisodicCmdp back = cmdp_from_text(text);
    back.validate();
    CHECK(back.num_states == m.num_states);
    CHECK(back.horizon == m.horizon);
    CHECK(back.mu == m.mu);
    CHECK(back.transition == m.transition);
    CHECK(back.reward == m.reward);
    CHECK(back.costs == m.costs);
    CHECK(back.thresholds == m.thresholds);
    // write -> read -> write is byte-identical
    CHECK(cmdp_to_text(back) == text);
  }

  fs::path p = fs::temp_directory_path() / "ecop_env_roundtrip.json";
  Environment env = Environment::hazard_gridworld();
  save_cmdp(env.cmdp(), p.string());
  EpisodicCmdp loaded = load_cmdp(p.string());
  CHECK(loaded.transition == env.cmdp().transition);
  fs::remove(p);
}

TEST_CASE("observations scale grid coordinates into the unit square") {
  Environment env = Environment::hazard_gridworld();
  Eigen::VectorXd top_left = env.observe(0);
  CHECK(top_left[0] == 0.0);
  CHECK(top_left[1] == 0.0);
  Eigen::VectorXd bottom_right = env.observe(35);
  CHECK(bottom_right[0] == 1.0);
  CHECK(bottom_right[1] == 1.0);
}
