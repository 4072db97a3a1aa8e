#include "mmfl/harness.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "json.hpp"
#include "mmfl/convergence.hpp"
#include "mmfl/env.hpp"
#include "mmfl/fl.hpp"
#include "mmfl/game.hpp"
#include "mmfl/ledger.hpp"
#include "mmfl/marl.hpp"
#include "mmfl/mobility.hpp"
#include "mmfl/parallel.hpp"
#include "mmfl/scheduler.hpp"

namespace mmfl {

namespace fs = std::filesystem;
using nlohmann::json;

int log_level() {
  static int level = [] {
    const char* env = std::getenv("MMFL_LOG");
    if (!env) return 1;
    const std::string v(env);
    if (v == "quiet") return 0;
    if (v == "debug") return 2;
    return 1;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[mmfl] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_level() >= 2) std::cerr << "[mmfl:debug] " << msg << "\n";
}

RunMode parse_mode(const std::string& s) {
  if (s == "simulate") return RunMode::simulate;
  if (s == "train") return RunMode::train;
  if (s == "evaluate") return RunMode::evaluate;
  if (s == "nash") return RunMode::nash;
  if (s == "verify-bounds") return RunMode::verify_bounds;
  throw ConfigError("unknown mode \"" + s + "\"");
}

SchedulerKind parse_scheduler(const std::string& s) {
  if (s == "era") return SchedulerKind::era;
  if (s == "best-response") return SchedulerKind::best_response;
  if (s == "happo") return SchedulerKind::happo;
  if (s == "joint-ppo") return SchedulerKind::joint_ppo;
  throw ConfigError("unknown scheduler \"" + s + "\"");
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

struct SimResult {
  int rounds_attempted = 0;
  int rounds_feasible = 0;
  double max_round_time = 0.0;
  double total_energy = 0.0;
  std::vector<double> final_task_loss;
  std::optional<double> final_average;  // empty when some task had no participants at the end
  bool terminated_empty = false;
};

// Shared simulation driver for the era and best-response schedulers.
SimResult run_simulation(const ExperimentPlan& plan, const SimConfig& cfg) {
  const Scenario scenario = build_scenario(cfg);
  RngStream master(cfg.seed);

  std::optional<MobilityTrace> trace;
  if (!plan.trace_path.empty()) {
    trace = load_trace(plan.trace_path);
    if (static_cast<int>(trace->vehicle_ids.size()) < cfg.vehicles ||
        trace->max_round < cfg.rounds_max)
      throw TraceError("trace does not cover the scenario (vehicles x rounds)");
  }

  std::vector<VehicleState> world = scenario.vehicles;
  if (trace) apply_trace_round(world, *trace, 1);
  FlState fl = FlState::create(cfg, master.fork("data"));
  RngStream era_rng = master.fork("era");
  RngStream mobility_rng = master.fork("mobility");
  RngStream sgd_rng = master.fork("sgd");
  const bool parallel = cfg.threads != 1;

  std::string metrics = metrics_csv_header() + "\n";
  std::string losses = "round,task,loss\n";

  SimResult result;
  Schedule last_feasible;
  std::vector<std::vector<double>> history(cfg.task_count());

  for (int k = 1; k <= cfg.rounds_max; ++k) {
    Schedule sched(k, cfg.vehicles, cfg.task_count(), cfg.subcarriers);
    bool alloc_ok = true;
    if (plan.scheduler == SchedulerKind::era) {
      sched = era_schedule(k, world, cfg, era_rng);
      bool any = false;
      for (int m = 0; m < cfg.task_count(); ++m) any = any || sched.participant_count(m) > 0;
      if (!any) {
        result.terminated_empty = true;
        log_info("round " + std::to_string(k) + ": all vehicles depleted, stopping");
        break;
      }
    } else {
      // best response from the equal-split profile
      GameContext ctx{&cfg, &world, k, nullptr};
      Schedule init = era_schedule(k, world, cfg, era_rng);
      NeResult ne = best_response_dynamics(profile_from_schedule(init), ctx, cfg.br_max_iters,
                                           parallel);
      const ProfileEval eval = evaluate_profile(ne.profile, ctx);
      if (eval.feasible) {
        sched = eval.schedule;
        sched.round = k;
      } else {
        alloc_ok = false;
      }
    }

    // zero-dimensional accounting keeps the metrics rows well defined when
    // the round never produced a workable allocation
    RoundAccounting acc;
    acc.upload_time.assign(cfg.vehicles, 0.0);
    acc.upload_energy.assign(cfg.vehicles, 0.0);
    acc.compute_time.assign(cfg.vehicles, 0.0);
    acc.compute_energy.assign(cfg.vehicles, 0.0);
    acc.sync_point.assign(cfg.task_count(), 0.0);
    acc.energy.assign(cfg.vehicles, 0.0);
    ConstraintReport report;
    if (alloc_ok) {
      try {
        acc = compute_accounting(sched, world, cfg.tasks, cfg);
        report = validate_schedule(sched, acc, world, cfg);
      } catch (const RadioError&) {
        alloc_ok = false;
      }
    }
    const bool feasible = alloc_ok && report.feasible;
    ++result.rounds_attempted;

    if (feasible) {
      run_fl_round(fl, sched, cfg, sgd_rng, parallel);
      for (int h = 0; h < cfg.vehicles; ++h) {
        const int m = sched.task_of(h);
        if (m < 0) continue;
        world[h].e_res -= acc.energy[h];
        world[h].last_round[m] = k;
      }
      ++result.rounds_feasible;
      result.max_round_time = std::max(result.max_round_time, acc.round_time);
      for (int h = 0; h < cfg.vehicles; ++h) result.total_energy += acc.energy[h];
      last_feasible = sched;
    }

    for (int m = 0; m < cfg.task_count(); ++m) {
      metrics += metrics_csv_row(sched, m, acc, report) + "\n";
      const double loss = fl.tasks[m].global_loss(fl.global_model[m].params);
      losses += std::to_string(k) + "," + std::to_string(m + 1) + "," + fmt(loss) + "\n";
      history[m].push_back(loss);
    }

    // convergence stop: every task's windowed improvement below tolerance
    bool all_converged = true;
    for (int m = 0; m < cfg.task_count() && all_converged; ++m) {
      const auto& hist = history[m];
      if (static_cast<int>(hist.size()) < cfg.convergence_window + 1)
        all_converged = false;
      else if (hist[hist.size() - 1 - cfg.convergence_window] - hist.back() >=
               cfg.convergence_tol)
        all_converged = false;
    }
    if (all_converged) {
      log_info("round " + std::to_string(k) + ": all tasks converged");
      break;
    }

    if (trace) {
      if (k + 1 <= trace->max_round) apply_trace_round(world, *trace, k + 1);
    } else {
      advance_positions(world, cfg, k, mobility_rng);
    }
  }

  // final losses and the end-of-run average over participants
  result.final_task_loss.resize(cfg.task_count());
  for (int m = 0; m < cfg.task_count(); ++m)
    result.final_task_loss[m] = fl.tasks[m].global_loss(fl.global_model[m].params);
  if (last_feasible.vehicles > 0) {
    std::vector<double> per_task;
    bool complete = true;
    for (int m = 0; m < cfg.task_count(); ++m) {
      const auto members = last_feasible.members_of(m);
      if (members.empty()) {
        complete = false;
        break;
      }
      double mean = 0.0;
      for (int h : members)
        mean += fl.tasks[m].vehicle_loss(fl.local_model[m][h].params, h);
      per_task.push_back(mean / static_cast<double>(members.size()));
    }
    if (complete) result.final_average = final_average_loss(per_task);
  }

  write_file(fs::path(plan.out_dir) / "metrics.csv", metrics);
  write_file(fs::path(plan.out_dir) / "losses.csv", losses);
  write_file(fs::path(plan.out_dir) / "models.json", model_checkpoint_json(fl));
  return result;
}

int run_simulate(const ExperimentPlan& plan, const SimConfig& cfg) {
  const SimResult r = run_simulation(plan, cfg);
  json summary{{"mode", "simulate"},
               {"seed", cfg.seed},
               {"scheduler", plan.scheduler == SchedulerKind::era ? "era" : "best-response"},
               {"rounds_attempted", r.rounds_attempted},
               {"rounds_feasible", r.rounds_feasible},
               {"feasible_fraction",
                r.rounds_attempted > 0
                    ? static_cast<double>(r.rounds_feasible) / r.rounds_attempted
                    : 0.0},
               {"max_round_time_s", r.max_round_time},
               {"total_energy_j", r.total_energy},
               {"final_task_loss", r.final_task_loss},
               {"terminated_all_depleted", r.terminated_empty}};
  if (r.final_average)
    summary["final_average_loss"] = *r.final_average;
  else
    summary["final_average_loss"] = nullptr;
  write_file(fs::path(plan.out_dir) / "summary.json", summary.dump(2) + "\n");
  return 0;
}

int run_train(const ExperimentPlan& plan, const SimConfig& cfg) {
  const Scenario scenario = build_scenario(cfg);
  RngStream master(cfg.seed);
  EnvOptions opts;
  opts.parallel = cfg.threads != 1;
  std::optional<MobilityTrace> trace;
  if (!plan.trace_path.empty()) {
    trace = load_trace(plan.trace_path);
    opts.trace = &*trace;
  }
  MmflEnv env(scenario, opts, master.fork("env"));
  std::ostream* log = log_level() >= 2 ? &std::cerr : nullptr;
  TrainResult result = plan.scheduler == SchedulerKind::joint_ppo
                           ? joint_ppo_train(env, cfg, master.fork("train"), opts.parallel, log)
                           : happo_train(env, cfg, master.fork("train"), opts.parallel, log);

  write_file(fs::path(plan.out_dir) / "curve.csv", training_curve_csv(result));
  write_file(fs::path(plan.out_dir) / "policy.json", policy_checkpoint_json(result));

  const int last = static_cast<int>(result.episode_return.size());
  const int window = std::min(10, last);
  double tail_return = 0.0, tail_feasible = 0.0;
  for (int i = last - window; i < last; ++i) {
    tail_return += result.episode_return[i];
    tail_feasible += result.feasible_fraction[i];
  }
  json summary{{"mode", "train"},
               {"seed", cfg.seed},
               {"scheduler", plan.scheduler == SchedulerKind::joint_ppo ? "joint-ppo" : "happo"},
               {"episodes", last},
               {"final10_mean_return", window > 0 ? tail_return / window : 0.0},
               {"final10_feasible_fraction", window > 0 ? tail_feasible / window : 0.0}};
  write_file(fs::path(plan.out_dir) / "summary.json", summary.dump(2) + "\n");
  return 0;
}

int run_evaluate(const ExperimentPlan& plan, const SimConfig& cfg) {
  const Scenario scenario = build_scenario(cfg);
  RngStream master(cfg.seed);
  EnvOptions opts;
  opts.parallel = cfg.threads != 1;
  opts.allocator = plan.scheduler == SchedulerKind::era ? AllocatorKind::era
                                                        : AllocatorKind::scored;
  std::optional<MobilityTrace> trace;
  if (!plan.trace_path.empty()) {
    trace = load_trace(plan.trace_path);
    opts.trace = &*trace;
  }
  MmflEnv env(scenario, opts, master.fork("env"));

  std::ostringstream episode_log;
  EvalResult result;
  const int episodes = 5;
  if (plan.scheduler == SchedulerKind::era) {
    result = run_era_actions(env, episodes, cfg.rl.steps_per_episode);
  } else {
    std::ifstream in(plan.checkpoint_path);
    if (!in) throw ConfigError("cannot open checkpoint " + plan.checkpoint_path);
    std::stringstream ss;
    ss << in.rdbuf();
    const TrainResult policy = load_policy_checkpoint_json(ss.str());
    result = evaluate_policy(env, policy, episodes, cfg.rl.steps_per_episode,
                             master.fork("evaluate"), &episode_log);
  }

  write_file(fs::path(plan.out_dir) / "episode.jsonl", episode_log.str());
  json summary{{"mode", "evaluate"},
               {"seed", cfg.seed},
               {"episodes", episodes},
               {"mean_return", result.mean_return},
               {"returns", result.returns},
               {"feasible_fraction", result.feasible_fraction}};
  write_file(fs::path(plan.out_dir) / "summary.json", summary.dump(2) + "\n");
  return 0;
}

int run_nash(const ExperimentPlan& plan, const SimConfig& cfg) {
  const Scenario scenario = build_scenario(cfg);
  RngStream master(cfg.seed);
  std::vector<VehicleState> world = scenario.vehicles;
  GameContext ctx{&cfg, &world, 1, nullptr};
  RngStream era_rng = master.fork("era");
  const Schedule init = era_schedule(1, world, cfg, era_rng);
  NeResult ne = best_response_dynamics(profile_from_schedule(init), ctx, cfg.br_max_iters,
                                       cfg.threads != 1);
  int largest_pool = 0;
  {
    std::vector<char> taken(cfg.vehicles, 0);
    for (const auto& set : ne.profile.members)
      for (int h : set) taken[h] = 1;
    int free_count = 0;
    for (char c : taken) free_count += c == 0;
    for (const auto& set : ne.profile.members)
      largest_pool = std::max(largest_pool, static_cast<int>(set.size()) + free_count);
  }
  if (largest_pool <= 20) ne.verified_by_enumeration = is_nash_equilibrium(ne.profile, ctx);

  write_file(fs::path(plan.out_dir) / "ne_report.json", ne_report_json(ne));
  const ProfileEval eval = evaluate_profile(ne.profile, ctx);
  double total = 0.0;
  for (double u : eval.utility) total += u;
  json summary{{"mode", "nash"},
               {"seed", cfg.seed},
               {"iterations", ne.iterations},
               {"verified_by_enumeration", ne.verified_by_enumeration},
               {"total_utility", total},
               {"utilities", eval.utility},
               {"feasible", eval.feasible}};
  write_file(fs::path(plan.out_dir) / "summary.json", summary.dump(2) + "\n");
  return 0;
}

int run_verify_bounds(const ExperimentPlan& plan, const SimConfig& cfg) {
  int quad = -1;
  for (int m = 0; m < cfg.task_count(); ++m)
    if (cfg.tasks[m].family == TaskFamily::quadratic) {
      quad = m;
      break;
    }
  if (quad < 0) throw ConfigError("verify-bounds needs a quadratic task");

  RngStream master(cfg.seed);
  const SyntheticTask task = gen_synthetic_task(
      cfg.tasks[quad], cfg.vehicles, master.fork("data").fork("task", quad));

  VerifyConfig vcfg;
  vcfg.rounds = cfg.rounds_max;
  vcfg.replicates = 50;
  vcfg.batch = cfg.fl_batch;
  vcfg.local_iters = cfg.local_iters;
  vcfg.lr0 = cfg.fl_lr0;
  vcfg.lr_decay = cfg.fl_lr_decay;
  const VerificationReport report =
      verify_descent(task, vcfg, master.fork("verify"), cfg.threads != 1);

  const std::string report_json = verification_report_json(report);
  write_file(fs::path(plan.out_dir) / "verification.json", report_json);
  json summary{{"mode", "verify-bounds"},
               {"seed", cfg.seed},
               {"report", json::parse(report_json)},
               {"round_bound_pass", report.round_violation_fraction <= 0.01},
               {"gap_bound_pass", report.gap_violations.empty()}};
  write_file(fs::path(plan.out_dir) / "summary.json", summary.dump(2) + "\n");
  return 0;
}

}  // namespace

namespace {

void validate_plan(const ExperimentPlan& plan) {
  const SchedulerKind s = plan.scheduler;
  switch (plan.mode) {
    case RunMode::simulate:
      if (s != SchedulerKind::era && s != SchedulerKind::best_response)
        throw ConfigError("simulate supports --scheduler era|best-response");
      break;
    case RunMode::train:
      if (s != SchedulerKind::happo && s != SchedulerKind::joint_ppo)
        throw ConfigError("train supports --scheduler happo|joint-ppo");
      break;
    case RunMode::evaluate:
      if (s == SchedulerKind::best_response)
        throw ConfigError("evaluate supports --scheduler happo|joint-ppo|era");
      if (s != SchedulerKind::era && plan.checkpoint_path.empty())
        throw ConfigError("evaluate needs --checkpoint for policy schedulers");
      break;
    case RunMode::nash:
    case RunMode::verify_bounds:
      break;
  }
}

}  // namespace

int run_experiment(const ExperimentPlan& plan) {
  try {
    validate_plan(plan);
    SimConfig cfg = plan.cfg;
    if (plan.seed != 0) cfg.seed = plan.seed;
    cfg.finalize();
    cfg.validate();
    set_threads(cfg.threads);
    fs::create_directories(plan.out_dir);
    write_file(fs::path(plan.out_dir) / "config.json", dump_config(cfg));

    switch (plan.mode) {
      case RunMode::simulate:
        return run_simulate(plan, cfg);
      case RunMode::train:
        return run_train(plan, cfg);
      case RunMode::evaluate:
        return run_evaluate(plan, cfg);
      case RunMode::nash:
        return run_nash(plan, cfg);
      case RunMode::verify_bounds:
        return run_verify_bounds(plan, cfg);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace mmfl
