// ecop: experiment runner and verification driver.
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ecop/runner.hpp"
#include "ecop/serialize.hpp"

int main(int argc, char** argv) {
  CLI::App app{"episodic constrained policy optimization toolkit"};
  app.require_subcommand(1);

  ecop::RunOptions opts;
  app.add_option("--out-dir", opts.out_dir,
                 "output root (default: $ECOP_OUT_DIR or ./runs)");
  app.add_option("--seed-offset", opts.seed_offset, "added to every config seed");
  app.add_option("--jobs", opts.jobs, "parallel worker threads for seeds")
      ->check(CLI::PositiveNumber);

  std::string config_path;
  CLI::App* run = app.add_subcommand("run", "train per the config file");
  run->fallthrough();
  run->add_option("config", config_path, "JSON config (comments allowed)")
      ->required();

  std::string suite;
  CLI::App* verify = app.add_subcommand("verify", "run an oracle suite");
  verify->fallthrough();
  verify->add_option("suite", suite, "lemma1|theorem1|gradients|occupancy|all")
      ->required()
      ->check(CLI::IsMember({"lemma1", "theorem1", "gradients", "occupancy", "all"}));

  std::string env_name, out_file;
  CLI::App* exp = app.add_subcommand("export-cmdp", "write a tabular env's exact model");
  exp->fallthrough();
  exp->add_option("env", env_name, "environment name")->required();
  exp->add_option("file", out_file, "output JSON path")->required();

  std::string ckpt_path, eval_env;
  int eval_episodes = 100;
  std::uint64_t eval_seed = 0;
  CLI::App* ev = app.add_subcommand("eval", "roll out a checkpointed policy");
  ev->fallthrough();
  ev->add_option("checkpoint", ckpt_path, "checkpoint JSON")->required();
  ev->add_option("env", eval_env, "environment name")->required();
  ev->add_option("--episodes", eval_episodes, "rollout count")
      ->check(CLI::PositiveNumber);
  ev->add_option("--seed", eval_seed, "rollout seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const std::string raw = ecop::read_file(config_path);
      const ecop::RunConfig config = ecop::parse_run_config(raw, config_path);
      return ecop::run_experiment(config, raw, opts);
    }
    if (verify->parsed()) return ecop::run_verify(suite, opts);
    if (exp->parsed()) return ecop::export_cmdp(env_name, out_file);
    if (ev->parsed())
      return ecop::eval_checkpoint(ckpt_path, eval_env, eval_episodes, eval_seed);
  } catch (const ecop::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
