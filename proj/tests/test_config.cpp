#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>

#include "doctest.h"
#include "ecop/config.hpp"

using namespace ecop;

namespace {

RunConfig parse(const std::string& text) {
  return parse_run_config(text, "test.json");
}

bool mentions(const std::exception& e, const std::string& needle) {
  return std::string(e.what()).find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("empty config yields the documented defaults") {
  RunConfig cfg = parse("{}");
  CHECK(cfg.env_name == "hazard_gridworld");
  CHECK(cfg.name == "hazard_gridworld_ecop");
  CHECK_FALSE(cfg.horizon.has_value());
  CHECK_FALSE(cfg.thresholds.has_value());
  CHECK_FALSE(cfg.start.has_value());
  REQUIRE(cfg.seeds.size() == 5);
  CHECK(cfg.seeds[0] == 0);
  CHECK(cfg.seeds[4] == 4);
  CHECK(cfg.out_dir.empty());
  CHECK(cfg.train.algorithm == Algorithm::kEcop);
  CHECK(cfg.train.episodes == 500);
  CHECK(cfg.train.constrain_all);
  CHECK(cfg.train.approximator == ApproximatorChoice::kTabular);
}

TEST_CASE("comments are tolerated and fields land where expected") {
  RunConfig cfg = parse(R"({
    // experiment header comment
    "name": "probe",
    "env": {"name": "navigation_gridworld", "horizon": 12},
    "algorithm": "p3o_penalty",
    "seeds": [7, 3],
    "out_dir": "/tmp/x",
    "train": {"episodes": 9, "kappa": 2.5, "cost_clip": "literal_min",
              "approximator": "net", "hidden": [8, 4], "constrain": [1]}
  })");
  CHECK(cfg.name == "probe");
  CHECK(cfg.env_name == "navigation_gridworld");
  REQUIRE(cfg.horizon.has_value());
  CHECK(*cfg.horizon == 12);
  REQUIRE(cfg.seeds.size() == 2);
  CHECK(cfg.seeds[0] == 7);  // order preserved
  CHECK(cfg.seeds[1] == 3);
  CHECK(cfg.out_dir == "/tmp/x");
  CHECK(cfg.train.algorithm == Algorithm::kP3oPenalty);
  CHECK(cfg.train.episodes == 9);
  CHECK(cfg.train.kappa == 2.5);
  CHECK(cfg.train.cost_clip == CostClipForm::kLiteralMin);
  CHECK(cfg.train.approximator == ApproximatorChoice::kNet);
  REQUIRE(cfg.train.hidden.size() == 2);
  CHECK(cfg.train.hidden[1] == 4);
  CHECK_FALSE(cfg.train.constrain_all);
  REQUIRE(cfg.train.constrain.size() == 1);
  CHECK(cfg.train.constrain[0] == 1);
}

TEST_CASE("unknown keys are rejected with source and line") {
  const std::string text = R"({
  "train": {
    "episodez": 3
  }
})";
  try {
    parse(text);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(mentions(e, "test.json:3"));
    CHECK(mentions(e, "episodez"));
  }
  try {
    parse(R"({"bogus_top": 1})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(mentions(e, "bogus_top"));
  }
}

TEST_CASE("syntax errors carry the parser's line info") {
  try {
    parse("{\n  \"name\": }");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(mentions(e, "test.json"));
    CHECK(mentions(e, "line 2"));
  }
}

TEST_CASE("type errors name the offending field") {
  CHECK_THROWS_AS(parse(R"({"train": {"episodes": "lots"}})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"train": {"policy_lr": true}})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"train": {"adaptive": 1}})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"train": {"episodes": 2.5}})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"train": 4})"), ConfigError);
  CHECK_THROWS_AS(parse(R"([1, 2])"), ConfigError);
  try {
    parse(R"({"train": {"episodes": "lots"}})");
  } catch (const ConfigError& e) {
    CHECK(mentions(e, "episodes"));
  }
}

TEST_CASE("threshold entries accept numbers and the string inf") {
  RunConfig cfg = parse(R"({"env": {"thresholds": [2.0, "inf"]}})");
  REQUIRE(cfg.thresholds.has_value());
  REQUIRE(cfg.thresholds->size() == 2);
  CHECK((*cfg.thresholds)[0] == 2.0);
  CHECK(std::isinf((*cfg.thresholds)[1]));
  CHECK_THROWS_AS(parse(R"({"env": {"thresholds": ["none"]}})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"env": {"thresholds": 2.0}})"), ConfigError);
}

TEST_CASE("algorithm names are validated at parse time") {
  CHECK(parse(R"({"algorithm": "ppo_lagrangian"})").train.algorithm ==
        Algorithm::kPpoLagrangian);
  CHECK(parse(R"({"algorithm": "ipoce_exact"})").train.algorithm ==
        Algorithm::kIpoceExact);
  try {
    parse(R"({"algorithm": "sac"})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(mentions(e, "unknown algorithm"));
  }
}

TEST_CASE("seed lists must be non-empty non-negative integers") {
  CHECK_THROWS_AS(parse(R"({"seeds": []})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"seeds": [-1]})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"seeds": [0.5]})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"seeds": 3})"), ConfigError);
}

TEST_CASE("enum fields reject unknown spellings") {
  CHECK_THROWS_AS(parse(R"({"train": {"cost_clip": "optimistic"}})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"train": {"approximator": "mlp"}})"), ConfigError);
  CHECK(parse(R"({"train": {"cost_clip": "pessimistic"}})").train.cost_clip ==
        CostClipForm::kPessimistic);
}

TEST_CASE("default name composes env and algorithm") {
  RunConfig cfg = parse(R"({"env": "point_circle", "algorithm": "ppo_lagrangian"})");
  CHECK(cfg.name == "point_circle_ppo_lagrangian");
}

TEST_CASE("config hash is a stable fnv fingerprint") {
  CHECK(config_hash("") == "cbf29ce484222325");
  CHECK(config_hash("{}") == config_hash("{}"));
  CHECK(config_hash("{}") != config_hash("{ }"));
  CHECK(config_hash("abc").size() == 16);
}

TEST_CASE("load_run_config reads files and reports the path on errors") {
  const std::string path = "cfg_roundtrip_probe.json";
  {
    std::ofstream out(path);
    out << R"({"env": "navigation_gridworld", "train": {"episodes": 3}})";
  }
  RunConfig cfg = load_run_config(path);
  CHECK(cfg.env_name == "navigation_gridworld");
  CHECK(cfg.train.episodes == 3);
  std::remove(path.c_str());
  CHECK_THROWS(load_run_config("does_not_exist_0x7.json"));
}

TEST_CASE("make_environment applies overrides in config order") {
  RunConfig cfg = parse(R"({
    "env": {"name": "hazard_gridworld", "horizon": 12,
            "thresholds": [3.5], "start": "uniform_corners"}
  })");
  Environment env = make_environment(cfg);
  CHECK(env.spec().horizon == 12);
  CHECK(env.cmdp().horizon == 12);
  CHECK(env.cmdp().thresholds[0] == 3.5);
  // uniform_corners puts mass 1/4 on each corner cell
  int support = 0;
  for (int s = 0; s < env.cmdp().num_states; ++s)
    if (env.cmdp().mu[s] > 0) {
      CHECK(env.cmdp().mu[s] == doctest::Approx(0.25).epsilon(1e-12));
      ++support;
    }
  CHECK(support == 4);
}

TEST_CASE("start overrides are refused outside the hazard grid") {
  RunConfig cfg = parse(R"({"env": {"name": "navigation_gridworld", "start": "fixed"}})");
  CHECK_THROWS_AS(make_environment(cfg), ConfigError);
  RunConfig bogus = parse(R"({"env": {"name": "hazard_gridworld", "start": "middle"}})");
  CHECK_THROWS(make_environment(bogus));
}

TEST_CASE("threshold overrides must match the env channel count") {
  RunConfig cfg = parse(R"({"env": {"name": "navigation_gridworld", "thresholds": [1.0]}})");
  CHECK_THROWS(make_environment(cfg));
}
