#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mmfl/config.hpp"
#include "mmfl/fl.hpp"
#include "mmfl/ledger.hpp"
#include "mmfl/mobility.hpp"
#include "mmfl/rng.hpp"
#include "mmfl/schedule.hpp"

namespace mmfl {

struct EnvError : std::runtime_error {
  explicit EnvError(const std::string& what) : std::runtime_error(what) {}
};

enum class DoneReason { none, rounds_exhausted, converged, infeasible_reset };

enum class AllocatorKind { scored, era };

struct EnvOptions {
  AllocatorKind allocator = AllocatorKind::scored;
  bool parallel = false;
  const MobilityTrace* trace = nullptr;  // positions from a trace instead of the generator
};

struct StepInfo {
  bool feasible = true;
  double round_time = 0.0;
  std::vector<double> task_losses;  // after the round, per task (empty on reject)
  Schedule schedule;
  ConstraintReport report;
  int fl_round = 0;  // round just executed; 0 right after a reset
};

struct StepOutcome {
  std::vector<std::vector<double>> observations;
  std::vector<double> rewards;
  bool done = false;
  DoneReason reason = DoneReason::none;
  StepInfo info;
};

// DEC-POMDP wrapper: joint task-choice actions in, local observations and
// recency-weighted efficiency rewards out. Infeasible joint actions penalize
// every agent and reset the run (round back to zero) without ending the
// episode.
class MmflEnv {
 public:
  MmflEnv(Scenario scenario, EnvOptions opts, RngStream stream);

  int agent_count() const { return scenario_.cfg.vehicles; }
  int action_count() const { return scenario_.cfg.task_count() + 1; }
  int observation_dim() const { return scenario_.cfg.task_count() + 5; }

  std::vector<std::vector<double>> reset();
  StepOutcome step(const std::vector<int>& joint_action);

  std::vector<double> observe(int vehicle) const;
  std::vector<double> joint_observation() const;  // all agents concatenated

  // running log of every agent observation, H entries appended per step
  const std::vector<std::vector<double>>& global_state_log() const { return state_log_; }

  // action m in 1..M assigns the vehicle to task m; 0 opts out
  Schedule decode_actions(const std::vector<int>& joint_action) const;

  const std::vector<VehicleState>& world() const { return world_; }
  const FlState& fl() const { return fl_; }
  const SimConfig& config() const { return scenario_.cfg; }
  int round() const { return round_; }
  bool is_done() const { return done_; }
  int resets() const { return resets_; }

 private:
  void hard_reset();
  void advance_mobility();
  bool all_tasks_converged() const;

  Scenario scenario_;
  EnvOptions opts_;
  RngStream stream_;
  std::vector<VehicleState> world_;
  FlState fl_;
  std::vector<double> last_rate_;  // per vehicle, realized uplink rate of the last round
  std::vector<std::vector<double>> state_log_;
  int round_ = 0;                  // completed rounds since last reset
  int episode_steps_ = 0;          // steps since construction/reset(), survives soft resets
  int resets_ = 0;
  bool done_ = false;
};

std::string episode_log_line(int step, const std::vector<int>& actions, const StepOutcome& out);

}  // namespace mmfl
