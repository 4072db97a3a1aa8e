#include <cstdint>
#include <string>

#include "CLI11.hpp"
#include "mmfl/config.hpp"
#include "mmfl/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mmfl: multi-task decentralized federated learning simulator"};
  app.require_subcommand(1);

  struct Args {
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    std::string trace;
    std::string scheduler;
    std::string checkpoint;
  };

  auto add_common = [](CLI::App* cmd, Args& args, const std::string& default_scheduler) {
    cmd->add_option("--config", args.config, "JSON config file")->required();
    cmd->add_option("--seed", args.seed, "master seed (overrides config)");
    cmd->add_option("--out", args.out, "output directory")->required();
    cmd->add_option("--trace", args.trace, "mobility trace CSV");
    args.scheduler = default_scheduler;
    cmd->add_option("--scheduler", args.scheduler, "happo|era|joint-ppo|best-response");
  };

  Args sim_args, train_args, eval_args, nash_args, verify_args;
  CLI::App* sim = app.add_subcommand("simulate", "run federated rounds with a fixed scheduler");
  add_common(sim, sim_args, "era");
  CLI::App* train = app.add_subcommand("train", "train a scheduling policy");
  add_common(train, train_args, "happo");
  CLI::App* eval = app.add_subcommand("evaluate", "roll out a trained policy");
  add_common(eval, eval_args, "happo");
  eval->add_option("--checkpoint", eval_args.checkpoint, "policy checkpoint JSON");
  CLI::App* nash = app.add_subcommand("nash", "best-response equilibrium for one round");
  add_common(nash, nash_args, "best-response");
  CLI::App* verify = app.add_subcommand("verify-bounds", "convergence bound verification");
  add_common(verify, verify_args, "era");

  CLI11_PARSE(app, argc, argv);

  Args* args = nullptr;
  mmfl::RunMode mode = mmfl::RunMode::simulate;
  if (sim->parsed()) {
    args = &sim_args;
    mode = mmfl::RunMode::simulate;
  } else if (train->parsed()) {
    args = &train_args;
    mode = mmfl::RunMode::train;
  } else if (eval->parsed()) {
    args = &eval_args;
    mode = mmfl::RunMode::evaluate;
  } else if (nash->parsed()) {
    args = &nash_args;
    mode = mmfl::RunMode::nash;
  } else {
    args = &verify_args;
    mode = mmfl::RunMode::verify_bounds;
  }

  try {
    mmfl::ExperimentPlan plan;
    plan.mode = mode;
    plan.cfg = mmfl::load_config(args->config);
    plan.scheduler = mmfl::parse_scheduler(args->scheduler);
    plan.seed = args->seed;
    plan.out_dir = args->out;
    plan.trace_path = args->trace;
    plan.checkpoint_path = args->checkpoint;
    return mmfl::run_experiment(plan);
  } catch (const std::exception& e) {
    fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
