#include "mmfl/env.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "mmfl/game.hpp"
#include "mmfl/scheduler.hpp"

namespace mmfl {

MmflEnv::MmflEnv(Scenario scenario, EnvOptions opts, RngStream stream)
    : scenario_(std::move(scenario)), opts_(opts), stream_(stream) {
  if (opts_.trace) {
    if (!opts_.trace->vehicle_ids.empty() &&
        (opts_.trace->vehicle_ids.back() > scenario_.cfg.vehicles ||
         static_cast<int>(opts_.trace->vehicle_ids.size()) < scenario_.cfg.vehicles))
      throw EnvError("trace does not cover every scenario vehicle");
    if (opts_.trace->max_round < scenario_.cfg.rounds_max)
      throw EnvError("trace shorter than rounds_max");
  }
  fl_ = FlState::create(scenario_.cfg, stream_.fork("data"));
  hard_reset();
}

void MmflEnv::hard_reset() {
  world_ = scenario_.vehicles;
  if (opts_.trace) apply_trace_round(world_, *opts_.trace, 1);
  fl_.reset_models();
  last_rate_.assign(scenario_.cfg.vehicles, 0.0);
  round_ = 0;
  done_ = false;
}

std::vector<std::vector<double>> MmflEnv::reset() {
  hard_reset();
  episode_steps_ = 0;
  resets_ = 0;
  state_log_.clear();
  std::vector<std::vector<double>> obs;
  obs.reserve(agent_count());
  for (int h = 0; h < agent_count(); ++h) obs.push_back(observe(h));
  return obs;
}

Schedule MmflEnv::decode_actions(const std::vector<int>& joint_action) const {
  const SimConfig& cfg = scenario_.cfg;
  if (static_cast<int>(joint_action.size()) != cfg.vehicles)
    throw EnvError("joint action length must equal the vehicle count");
  Schedule sched(round_ + 1, cfg.vehicles, cfg.task_count(), cfg.subcarriers);
  for (int h = 0; h < cfg.vehicles; ++h) {
    const int a = joint_action[h];
    if (a < 0 || a > cfg.task_count())
      throw EnvError("action " + std::to_string(a) + " out of range for vehicle " +
                     std::to_string(h + 1));
    if (a > 0) sched.assign_at(h, a - 1) = 1;
  }
  return sched;
}

void MmflEnv::advance_mobility() {
  if (opts_.trace) {
    const int next = round_ + 1;
    if (next <= opts_.trace->max_round) apply_trace_round(world_, *opts_.trace, next);
    return;
  }
  RngStream rng = stream_.fork("mobility", static_cast<std::uint64_t>(round_));
  advance_positions(world_, scenario_.cfg, round_, rng);
}

bool MmflEnv::all_tasks_converged() const {
  const SimConfig& cfg = scenario_.cfg;
  for (int m = 0; m < cfg.task_count(); ++m) {
    const auto& hist = fl_.loss_history[m];
    if (static_cast<int>(hist.size()) < cfg.convergence_window + 1) return false;
    const double improvement = hist[hist.size() - 1 - cfg.convergence_window] - hist.back();
    if (improvement >= cfg.convergence_tol) return false;
  }
  return true;
}

StepOutcome MmflEnv::step(const std::vector<int>& joint_action) {
  if (done_) throw EnvError("env-done: call reset() before stepping again");
  const SimConfig& cfg = scenario_.cfg;
  const int H = cfg.vehicles;
  const int M = cfg.task_count();
  const int k = round_ + 1;

  StepOutcome out;
  out.rewards.assign(H, 0.0);

  Schedule assignment = decode_actions(joint_action);
  bool alloc_ok = true;
  Schedule full;
  RoundAccounting acc;
  ConstraintReport report;

  // previous-round clusters as leader candidates, when configured
  std::vector<std::vector<int>> prev_clusters;
  const std::vector<std::vector<int>>* filter = nullptr;
  if (cfg.prev_cluster_candidates) {
    prev_clusters.assign(M, {});
    for (int h = 0; h < H; ++h)
      for (int m = 0; m < M; ++m)
        if (world_[h].last_round[m] == round_ && round_ >= 1) prev_clusters[m].push_back(h);
    filter = &prev_clusters;
  }

  try {
    if (opts_.allocator == AllocatorKind::era) {
      RngStream era_rng = stream_.fork("era", static_cast<std::uint64_t>(episode_steps_));
      full = era_allocate(assignment, cfg, era_rng);
    } else {
      full = select_leaders(assignment, world_, cfg, opts_.parallel, filter);
    }
    acc = compute_accounting(full, world_, cfg.tasks, cfg);
    report = validate_schedule(full, acc, world_, cfg);
  } catch (const SchedulerError&) {
    alloc_ok = false;
  } catch (const RadioError&) {
    alloc_ok = false;
  }

  const bool feasible = alloc_ok && report.feasible;
  ++episode_steps_;

  if (!feasible) {
    // penalty for everyone, fresh run, episode continues
    for (int h = 0; h < H; ++h) out.rewards[h] = cfg.penalty;
    out.info.feasible = false;
    out.info.report = std::move(report);
    out.info.schedule = std::move(full);
    out.info.fl_round = 0;
    hard_reset();
    ++resets_;
    out.done = false;
    out.reason = DoneReason::none;
    for (int h = 0; h < H; ++h) out.observations.push_back(observe(h));
    for (const auto& o : out.observations) state_log_.push_back(o);
    return out;
  }

  // rewards use the pre-round recency
  std::vector<double> efficiency(M, 0.0);
  for (int m = 0; m < M; ++m) {
    const int n = full.participant_count(m);
    if (n >= 1) efficiency[m] = training_efficiency(n, cfg.tasks[m].beta, cfg.tasks[m].theta);
  }
  for (int h = 0; h < H; ++h) {
    const int m = full.task_of(h);
    if (m < 0) continue;
    const double recency = cfg.reward_recency_normalized
                               ? static_cast<double>(world_[h].last_round[m]) / k
                               : static_cast<double>(world_[h].last_round[m]);
    out.rewards[h] = efficiency[m] * recency;
  }

  run_fl_round(fl_, full, cfg, stream_.fork("sgd"), opts_.parallel);

  const LinkBudget budget = make_link_budget(cfg);
  for (int h = 0; h < H; ++h) {
    const int m = full.task_of(h);
    if (m < 0) {
      last_rate_[h] = 0.0;
      continue;
    }
    world_[h].e_res -= acc.energy[h];
    world_[h].last_round[m] = k;
    if (full.leader_at(h, m)) {
      last_rate_[h] = 0.0;
    } else {
      const int r = full.leader_of(m);
      const double ratio = static_cast<double>(full.grant_count(m, h)) / cfg.subcarriers;
      last_rate_[h] = tx_rate(ratio, budget, distance(world_[h], world_[r]));
    }
  }

  round_ = k;
  out.info.feasible = true;
  out.info.round_time = acc.round_time;
  out.info.fl_round = k;
  out.info.schedule = std::move(full);
  out.info.report = std::move(report);
  out.info.task_losses.resize(M);
  for (int m = 0; m < M; ++m) out.info.task_losses[m] = fl_.loss_history[m].back();

  if (k >= cfg.rounds_max) {
    done_ = true;
    out.reason = DoneReason::rounds_exhausted;
  } else if (all_tasks_converged()) {
    done_ = true;
    out.reason = DoneReason::converged;
  }
  out.done = done_;

  advance_mobility();
  for (int h = 0; h < H; ++h) out.observations.push_back(observe(h));
  for (const auto& o : out.observations) state_log_.push_back(o);
  return out;
}

std::vector<double> MmflEnv::observe(int vehicle) const {
  const SimConfig& cfg = scenario_.cfg;
  const int M = cfg.task_count();
  const VehicleState& v = world_[vehicle];
  std::vector<double> obs;
  obs.reserve(M + 5);
  const double k_norm = static_cast<double>(std::max(1, round_ + 1));
  for (int m = 0; m < M; ++m) obs.push_back(v.last_round[m] / k_norm);
  obs.push_back(v.e_res / cfg.e_init_j);
  const double rate_norm =
      cfg.bandwidth_hz * std::log2(1.0 + cfg.p_watt * cfg.h_ref_linear / cfg.sigma2_watt);
  obs.push_back(last_rate_[vehicle] / rate_norm);
  obs.push_back(v.x / cfg.map_extent_m);
  obs.push_back(v.y / cfg.map_extent_m);
  obs.push_back(v.speed / std::max(cfg.v_max_mps, 1e-9));
  return obs;
}

std::vector<double> MmflEnv::joint_observation() const {
  std::vector<double> out;
  out.reserve(static_cast<size_t>(agent_count()) * observation_dim());
  for (int h = 0; h < agent_count(); ++h) {
    const auto obs = observe(h);
    out.insert(out.end(), obs.begin(), obs.end());
  }
  return out;
}

std::string episode_log_line(int step, const std::vector<int>& actions, const StepOutcome& out) {
  nlohmann::json j{{"step", step},
                   {"round", out.info.fl_round},
                   {"actions", actions},
                   {"rewards", out.rewards},
                   {"feasible", out.info.feasible},
                   {"T_k", out.info.round_time},
                   {"losses", out.info.task_losses}};
  return j.dump();
}

}  // namespace mmfl
