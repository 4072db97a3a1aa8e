#include "mmfl/game.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "mmfl/scheduler.hpp"

namespace mmfl {

double training_efficiency(int participants, double beta, double theta) {
  if (participants < 1) throw GameError("training_efficiency: participants must be >= 1");
  return beta * std::log(static_cast<double>(participants)) + theta;
}

StrategyProfile empty_profile(int tasks) {
  StrategyProfile p;
  p.members.assign(tasks, {});
  return p;
}

StrategyProfile profile_from_schedule(const Schedule& sched) {
  StrategyProfile p;
  p.members.resize(sched.tasks);
  for (int m = 0; m < sched.tasks; ++m) p.members[m] = sched.members_of(m);
  return p;
}

Schedule assignment_from_profile(const StrategyProfile& profile, int round,
                                 const SimConfig& cfg) {
  Schedule sched(round, cfg.vehicles, cfg.task_count(), cfg.subcarriers);
  for (int m = 0; m < cfg.task_count(); ++m) {
    for (int h : profile.members[m]) {
      if (h < 0 || h >= cfg.vehicles) throw GameError("profile vehicle index out of range");
      if (sched.task_of(h) >= 0) throw GameError("profile subsets are not disjoint");
      sched.assign_at(h, m) = 1;
    }
  }
  return sched;
}

ProfileEval evaluate_profile(const StrategyProfile& profile, const GameContext& ctx) {
  const SimConfig& cfg = *ctx.cfg;
  const int M = cfg.task_count();
  if (static_cast<int>(profile.members.size()) != M)
    throw GameError("profile task count mismatch");

  ProfileEval eval;
  eval.utility.assign(M, 0.0);
  Schedule assignment = assignment_from_profile(profile, ctx.round, cfg);
  try {
    eval.schedule = select_leaders(assignment, *ctx.world, cfg, false, ctx.candidate_filter);
    const RoundAccounting acc =
        compute_accounting(eval.schedule, *ctx.world, cfg.tasks, cfg);
    eval.report = validate_schedule(eval.schedule, acc, *ctx.world, cfg);
    eval.feasible = eval.report.feasible;
  } catch (const SchedulerError&) {
    eval.feasible = false;
  } catch (const RadioError&) {
    eval.feasible = false;
  }
  if (eval.feasible) {
    for (int m = 0; m < M; ++m) {
      const int n = static_cast<int>(profile.members[m].size());
      if (n >= 1) eval.utility[m] = training_efficiency(n, cfg.tasks[m].beta, cfg.tasks[m].theta);
    }
  }
  return eval;
}

double utility(const StrategyProfile& profile, int task, const GameContext& ctx) {
  return evaluate_profile(profile, ctx).utility[task];
}

double potential_delta(const StrategyProfile& from, const StrategyProfile& to, int task,
                       const GameContext& ctx) {
  if (from.members.size() != to.members.size())
    throw GameError("potential_delta: task count mismatch");
  for (size_t m = 0; m < from.members.size(); ++m) {
    if (static_cast<int>(m) != task && from.members[m] != to.members[m])
      throw GameError("potential_delta: profiles deviate in more than one task");
  }
  const ProfileEval a = evaluate_profile(from, ctx);
  const ProfileEval b = evaluate_profile(to, ctx);
  double delta = 0.0;
  for (size_t m = 0; m < from.members.size(); ++m) delta += b.utility[m] - a.utility[m];
  return delta;
}

namespace {

std::vector<int> unassigned_vehicles(const StrategyProfile& profile, int vehicles) {
  std::vector<char> taken(vehicles, 0);
  for (const auto& set : profile.members)
    for (int h : set) taken[h] = 1;
  std::vector<int> out;
  for (int h = 0; h < vehicles; ++h)
    if (!taken[h]) out.push_back(h);
  return out;
}

// Best strategy for one task over all subsets of its candidate pool.
// Returns (found, subset, utility).
struct BestResponse {
  bool found = false;
  std::vector<int> subset;
  double task_utility = 0.0;
};

BestResponse enumerate_best(const StrategyProfile& profile, int task,
                            const std::vector<int>& pool, const GameContext& ctx,
                            double current, bool parallel) {
  const int p = static_cast<int>(pool.size());
  const std::uint64_t total = 1ULL << p;
  std::vector<double> utilities(total, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16) if (parallel)
#endif
  for (long long mask = 0; mask < static_cast<long long>(total); ++mask) {
    StrategyProfile candidate = profile;
    candidate.members[task].clear();
    for (int i = 0; i < p; ++i)
      if (mask & (1LL << i)) candidate.members[task].push_back(pool[i]);
    utilities[mask] = utility(candidate, task, ctx);
  }
  BestResponse best;
  double best_util = current;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    if (utilities[mask] > best_util + 1e-12) {
      best_util = utilities[mask];
      best.found = true;
      best.subset.clear();
      for (int i = 0; i < p; ++i)
        if (mask & (1ULL << i)) best.subset.push_back(pool[i]);
      best.task_utility = best_util;
    }
  }
  return best;
}

BestResponse single_move_best(const StrategyProfile& profile, int task,
                              const std::vector<int>& pool, const GameContext& ctx,
                              double current, bool parallel) {
  const auto& members = profile.members[task];
  std::vector<std::vector<int>> candidates;
  for (int h : pool) {
    std::vector<int> next = members;
    const auto it = std::find(next.begin(), next.end(), h);
    if (it == next.end()) {
      next.push_back(h);
      std::sort(next.begin(), next.end());
    } else {
      next.erase(it);
    }
    candidates.push_back(std::move(next));
  }
  const int count = static_cast<int>(candidates.size());
  std::vector<double> utilities(count, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
  for (int i = 0; i < count; ++i) {
    StrategyProfile candidate = profile;
    candidate.members[task] = candidates[i];
    utilities[i] = utility(candidate, task, ctx);
  }
  BestResponse best;
  double best_util = current;
  for (int i = 0; i < count; ++i) {
    if (utilities[i] > best_util + 1e-12) {
      best_util = utilities[i];
      best.found = true;
      best.subset = candidates[i];
      best.task_utility = best_util;
    }
  }
  return best;
}

}  // namespace

NeResult best_response_dynamics(StrategyProfile initial, const GameContext& ctx, int max_iters,
                                bool parallel) {
  const SimConfig& cfg = *ctx.cfg;
  const int M = cfg.task_count();
  NeResult result;
  result.profile = std::move(initial);

  ProfileEval current = evaluate_profile(result.profile, ctx);
  double omega = 0.0;
  bool improved = true;
  while (improved) {
    improved = false;
    for (int m = 0; m < M; ++m) {
      std::vector<int> pool = result.profile.members[m];
      const std::vector<int> free = unassigned_vehicles(result.profile, cfg.vehicles);
      pool.insert(pool.end(), free.begin(), free.end());
      std::sort(pool.begin(), pool.end());
      if (pool.empty()) continue;

      const double cur_util = current.utility[m];
      const BestResponse best =
          static_cast<int>(pool.size()) <= cfg.br_enum_limit
              ? enumerate_best(result.profile, m, pool, ctx, cur_util, parallel)
              : single_move_best(result.profile, m, pool, ctx, cur_util, parallel);
      if (!best.found) continue;

      StrategyProfile next = result.profile;
      next.members[m] = best.subset;
      const ProfileEval next_eval = evaluate_profile(next, ctx);
      double delta = 0.0;
      for (int i = 0; i < M; ++i) delta += next_eval.utility[i] - current.utility[i];
      omega += delta;
      result.potential_trace.push_back(omega);
      result.profile = std::move(next);
      current = next_eval;
      improved = true;
      if (++result.iterations > max_iters)
        throw GameError("iteration-cap-exceeded after " + std::to_string(result.iterations) +
                        " improvement moves");
    }
  }
  return result;
}

bool is_nash_equilibrium(const StrategyProfile& profile, const GameContext& ctx) {
  const SimConfig& cfg = *ctx.cfg;
  const ProfileEval current = evaluate_profile(profile, ctx);
  for (int m = 0; m < cfg.task_count(); ++m) {
    std::vector<int> pool = profile.members[m];
    const std::vector<int> free = unassigned_vehicles(profile, cfg.vehicles);
    pool.insert(pool.end(), free.begin(), free.end());
    std::sort(pool.begin(), pool.end());
    if (static_cast<int>(pool.size()) > 20)
      throw GameError("is_nash_equilibrium: pool too large for exhaustive check");
    const std::uint64_t total = 1ULL << pool.size();
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      StrategyProfile candidate = profile;
      candidate.members[m].clear();
      for (size_t i = 0; i < pool.size(); ++i)
        if (mask & (1ULL << i)) candidate.members[m].push_back(pool[i]);
      if (utility(candidate, m, ctx) > current.utility[m] + 1e-12) return false;
    }
  }
  return true;
}

std::string ne_report_json(const NeResult& result) {
  nlohmann::json profile = nlohmann::json::array();
  for (const auto& set : result.profile.members) {
    nlohmann::json ids = nlohmann::json::array();
    for (int h : set) ids.push_back(h + 1);
    profile.push_back(ids);
  }
  nlohmann::json j{{"profile", profile},
                   {"omega_trace", result.potential_trace},
                   {"iterations", result.iterations},
                   {"verified_by_enumeration", result.verified_by_enumeration}};
  return j.dump(2) + "\n";
}

}  // namespace mmfl
