#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mmfl/config.hpp"
#include "mmfl/ledger.hpp"
#include "mmfl/schedule.hpp"

namespace mmfl {

struct GameError : std::runtime_error {
  explicit GameError(const std::string& what) : std::runtime_error(what) {}
};

// Disjoint vehicle subsets, one per task.
struct StrategyProfile {
  std::vector<std::vector<int>> members;  // ascending 0-based vehicle indices

  bool operator==(const StrategyProfile&) const = default;
};

struct GameContext {
  const SimConfig* cfg = nullptr;
  const std::vector<VehicleState>* world = nullptr;
  int round = 1;
  // optional leader-candidate restriction, forwarded to select_leaders
  const std::vector<std::vector<int>>* candidate_filter = nullptr;
};

// beta * ln(n) + theta, n >= 1
double training_efficiency(int participants, double beta, double theta);

struct ProfileEval {
  bool feasible = false;
  std::vector<double> utility;  // per task; efficiency when feasible, else 0
  Schedule schedule;            // the witness allocation (valid when feasible)
  ConstraintReport report;
};

// Feasibility witness: runs the joint leader/subcarrier allocation for the
// profile's assignment and validates the full constraint set. Utilities are
// the per-task efficiencies when the round is feasible and 0 otherwise.
ProfileEval evaluate_profile(const StrategyProfile& profile, const GameContext& ctx);

double utility(const StrategyProfile& profile, int task, const GameContext& ctx);

// Potential difference for a single-task deviation; equals
// beta * ln(n'/n) for feasible-to-feasible moves. Throws when the profiles
// differ in more than one task.
double potential_delta(const StrategyProfile& from, const StrategyProfile& to, int task,
                       const GameContext& ctx);

struct NeResult {
  StrategyProfile profile;
  std::vector<double> potential_trace;  // cumulative potential after each accepted move
  int iterations = 0;
  bool verified_by_enumeration = false;
};

// Sequentially grants strictly improving best responses (enumeration for
// small candidate pools, greedy add/drop beyond br_enum_limit) until no task
// can improve. Throws GameError when max_iters is exceeded.
NeResult best_response_dynamics(StrategyProfile initial, const GameContext& ctx, int max_iters,
                                bool parallel = false);

// Exhaustive unilateral-deviation check; intended for small instances.
bool is_nash_equilibrium(const StrategyProfile& profile, const GameContext& ctx);

StrategyProfile profile_from_schedule(const Schedule& sched);
Schedule assignment_from_profile(const StrategyProfile& profile, int round, const SimConfig& cfg);
StrategyProfile empty_profile(int tasks);

std::string ne_report_json(const NeResult& result);

}  // namespace mmfl
