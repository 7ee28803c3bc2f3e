#include "ecop/config.hpp"

#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include "ecop/serialize.hpp"

namespace ecop {

namespace {

using nlohmann::json;

// best-effort line lookup for semantic errors (nlohmann only carries
// positions for syntax errors)
int find_key_line(const std::string& text, const std::string& key) {
  const std::string needle = "\"" + key + "\"";
  auto pos = text.find(needle);
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + pos, '\n'));
}

struct Ctx {
  const std::string& text;
  const std::string& source;

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    std::ostringstream os;
    os << source;
    if (int line = find_key_line(text, key)) os << ":" << line;
    os << ": " << what;
    throw ConfigError(os.str());
  }
};

void reject_unknown(const Ctx& ctx, const json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) ctx.fail(key, "unknown key \"" + key + "\" in " + where);
  }
}

double number_field(const Ctx& ctx, const json& v, const std::string& key) {
  if (!v.is_number()) ctx.fail(key, key + ": expected a number");
  return v.get<double>();
}

int int_field(const Ctx& ctx, const json& v, const std::string& key) {
  if (!v.is_number_integer()) ctx.fail(key, key + ": expected an integer");
  return v.get<int>();
}

bool bool_field(const Ctx& ctx, const json& v, const std::string& key) {
  if (!v.is_boolean()) ctx.fail(key, key + ": expected true or false");
  return v.get<bool>();
}

std::string string_field(const Ctx& ctx, const json& v, const std::string& key) {
  if (!v.is_string()) ctx.fail(key, key + ": expected a string");
  return v.get<std::string>();
}

double threshold_entry(const Ctx& ctx, const json& v) {
  if (v.is_string()) {
    if (v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    ctx.fail("thresholds", "thresholds: only the string \"inf\" is accepted");
  }
  return number_field(ctx, v, "thresholds");
}

void parse_env(const Ctx& ctx, const json& v, RunConfig& out) {
  if (v.is_string()) {
    out.env_name = v.get<std::string>();
    return;
  }
  if (!v.is_object()) ctx.fail("env", "env: expected a name or an object");
  reject_unknown(ctx, v, "env", {"name", "horizon", "thresholds", "start"});
  if (v.contains("name")) out.env_name = string_field(ctx, v["name"], "env.name");
  if (v.contains("horizon")) out.horizon = int_field(ctx, v["horizon"], "env.horizon");
  if (v.contains("thresholds")) {
    const json& arr = v["thresholds"];
    if (!arr.is_array()) ctx.fail("thresholds", "env.thresholds: expected an array");
    Eigen::VectorXd t(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) t[i] = threshold_entry(ctx, arr[i]);
    out.thresholds = t;
  }
  if (v.contains("start")) out.start = string_field(ctx, v["start"], "env.start");
}

void parse_train(const Ctx& ctx, const json& v, TrainConfig& t) {
  if (!v.is_object()) ctx.fail("train", "train: expected an object");
  reject_unknown(ctx, v, "train",
                 {"episodes", "batch_episodes", "n_inner", "policy_lr", "critic_lr",
                  "critic_epochs", "epsilon_clip", "lambda0", "beta", "beta_max",
                  "update_factor", "adaptive", "cost_clip", "lagrange_lr", "kappa",
                  "constrain", "approximator", "hidden", "init_log_std",
                  "ipoce_grid"});
  if (v.contains("episodes")) t.episodes = int_field(ctx, v["episodes"], "episodes");
  if (v.contains("batch_episodes"))
    t.batch_episodes = int_field(ctx, v["batch_episodes"], "batch_episodes");
  if (v.contains("n_inner")) t.n_inner = int_field(ctx, v["n_inner"], "n_inner");
  if (v.contains("policy_lr"))
    t.policy_lr = number_field(ctx, v["policy_lr"], "policy_lr");
  if (v.contains("critic_lr"))
    t.critic_lr = number_field(ctx, v["critic_lr"], "critic_lr");
  if (v.contains("critic_epochs"))
    t.critic_epochs = int_field(ctx, v["critic_epochs"], "critic_epochs");
  if (v.contains("epsilon_clip"))
    t.epsilon_clip = number_field(ctx, v["epsilon_clip"], "epsilon_clip");
  if (v.contains("lambda0")) t.lambda0 = number_field(ctx, v["lambda0"], "lambda0");
  if (v.contains("beta")) t.beta = number_field(ctx, v["beta"], "beta");
  if (v.contains("beta_max")) t.beta_max = number_field(ctx, v["beta_max"], "beta_max");
  if (v.contains("update_factor"))
    t.update_factor = number_field(ctx, v["update_factor"], "update_factor");
  if (v.contains("adaptive")) t.adaptive = bool_field(ctx, v["adaptive"], "adaptive");
  if (v.contains("cost_clip")) {
    std::string s = string_field(ctx, v["cost_clip"], "cost_clip");
    if (s == "pessimistic") t.cost_clip = CostClipForm::kPessimistic;
    else if (s == "literal_min") t.cost_clip = CostClipForm::kLiteralMin;
    else ctx.fail("cost_clip", "cost_clip: expected \"pessimistic\" or \"literal_min\"");
  }
  if (v.contains("lagrange_lr"))
    t.lagrange_lr = number_field(ctx, v["lagrange_lr"], "lagrange_lr");
  if (v.contains("kappa")) t.kappa = number_field(ctx, v["kappa"], "kappa");
  if (v.contains("constrain")) {
    const json& arr = v["constrain"];
    if (!arr.is_array()) ctx.fail("constrain", "constrain: expected an array");
    t.constrain.clear();
    for (const auto& e : arr) t.constrain.push_back(int_field(ctx, e, "constrain"));
    t.constrain_all = false;
  }
  if (v.contains("approximator")) {
    std::string s = string_field(ctx, v["approximator"], "approximator");
    if (s == "tabular") t.approximator = ApproximatorChoice::kTabular;
    else if (s == "net") t.approximator = ApproximatorChoice::kNet;
    else ctx.fail("approximator", "approximator: expected \"tabular\" or \"net\"");
  }
  if (v.contains("hidden")) {
    const json& arr = v["hidden"];
    if (!arr.is_array()) ctx.fail("hidden", "hidden: expected an array");
    t.hidden.clear();
    for (const auto& e : arr) t.hidden.push_back(int_field(ctx, e, "hidden"));
  }
  if (v.contains("init_log_std"))
    t.init_log_std = number_field(ctx, v["init_log_std"], "init_log_std");
  if (v.contains("ipoce_grid"))
    t.ipoce_grid = int_field(ctx, v["ipoce_grid"], "ipoce_grid");
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& source_name) {
  json root;
  try {
    root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    // nlohmann messages already carry "at line L, column C"
    throw ConfigError(source_name + ": " + e.what());
  }
  Ctx ctx{text, source_name};
  if (!root.is_object()) ctx.fail("", "top level: expected an object");
  reject_unknown(ctx, root, "the top level",
                 {"name", "env", "algorithm", "seeds", "out_dir", "train"});

  RunConfig cfg;
  if (root.contains("env")) parse_env(ctx, root["env"], cfg);
  if (root.contains("algorithm")) {
    std::string s = string_field(ctx, root["algorithm"], "algorithm");
    try {
      cfg.train.algorithm = algorithm_from_name(s);
    } catch (const std::invalid_argument& e) {
      ctx.fail("algorithm", e.what());
    }
  }
  if (root.contains("seeds")) {
    const json& arr = root["seeds"];
    if (!arr.is_array() || arr.empty())
      ctx.fail("seeds", "seeds: expected a non-empty array");
    cfg.seeds.clear();
    for (const auto& e : arr) {
      if (!e.is_number_integer() || e.get<std::int64_t>() < 0)
        ctx.fail("seeds", "seeds: expected non-negative integers");
      cfg.seeds.push_back(e.get<std::uint64_t>());
    }
  }
  if (root.contains("out_dir"))
    cfg.out_dir = string_field(ctx, root["out_dir"], "out_dir");
  if (root.contains("train")) parse_train(ctx, root["train"], cfg.train);
  if (root.contains("name")) cfg.name = string_field(ctx, root["name"], "name");
  if (cfg.name.empty())
    cfg.name = cfg.env_name + "_" + algorithm_name(cfg.train.algorithm);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_file(path), path);
}

std::string config_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

Environment make_environment(const RunConfig& config) {
  Environment env = config.start.has_value() && config.env_name == "hazard_gridworld"
                        ? Environment::hazard_gridworld(30, 2.0, *config.start)
                        : Environment::by_name(config.env_name);
  if (config.start.has_value() && config.env_name != "hazard_gridworld")
    throw ConfigError("env.start is only supported by hazard_gridworld");
  if (config.horizon) env.set_horizon(*config.horizon);
  if (config.thresholds) env.set_thresholds(*config.thresholds);
  return env;
}

}  // namespace ecop
