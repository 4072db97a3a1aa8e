#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "mmfl/env.hpp"
#include "mmfl/mlp.hpp"
#include "mmfl/rng.hpp"

namespace mmfl {

// One collection window of on-policy experience.
struct RolloutBatch {
  int steps = 0;
  int agents = 0;
  std::vector<std::vector<Vec>> obs;            // [t][agent]
  std::vector<Vec> global_obs;                  // [t]
  std::vector<std::vector<int>> actions;        // [t][agent]
  std::vector<std::vector<double>> logp;        // [t][agent], under the collecting policy
  std::vector<std::vector<double>> local_reward;  // [t][agent]
  std::vector<double> team_reward;              // [t]
  std::vector<double> values;                   // [t+1], bootstrap last
  std::vector<std::uint8_t> feasible;           // [t]
  std::vector<std::uint8_t> done;               // [t], env finished at this step
};

// R_hat_t = sum_m gamma^m * r_{t+m}; whole vector.
Vec discounted_returns(const std::vector<double>& rewards, double gamma);

// A_t = sum_m (gamma*smooth)^m * delta_{t+m},
// delta_t = r_t + gamma * V(s_{t+1}) - V(s_t); values has length T+1.
Vec gae_advantages(const std::vector<double>& rewards, const Vec& values, double gamma,
                   double smooth);

struct PpoUpdateStats {
  double objective_start = 0.0;
  int nan_skips = 0;
};

// Clipped-ratio policy ascent on one agent's actions, several shuffled
// minibatch epochs. weight is the (possibly compounded) advantage slot.
PpoUpdateStats ppo_clip_update(Mlp& actor, Adam& opt, const std::vector<Vec>& obs,
                               const std::vector<int>& actions, const Vec& old_logp,
                               const Vec& weight, double eps_clip, int epochs, int minibatch,
                               RngStream shuffle_rng, bool parallel);

struct TrainResult {
  std::vector<Mlp> actors;  // one per agent; single shared net for joint training
  Mlp critic;
  std::vector<double> episode_return;
  std::vector<double> feasible_fraction;
  bool joint = false;
};

// Sequential heterogeneous-agent training: per episode collect steps_per_episode
// transitions, compute advantages once, then update agents in a random
// permutation with the compounding ratio factor; critic regresses discounted
// returns. No parameter sharing between agents.
TrainResult happo_train(MmflEnv& env, const SimConfig& cfg, RngStream stream,
                        bool parallel = false, std::ostream* log = nullptr);

// Single shared policy over the joint observation, plain clipped updates
// (no sequential factor). Baseline.
TrainResult joint_ppo_train(MmflEnv& env, const SimConfig& cfg, RngStream stream,
                            bool parallel = false, std::ostream* log = nullptr);

struct EvalResult {
  double mean_return = 0.0;
  double feasible_fraction = 0.0;
  std::vector<double> returns;  // per episode
};

// Runs the policy (sampled actions) for full episodes.
EvalResult evaluate_policy(MmflEnv& env, const TrainResult& policy, int episodes, int max_steps,
                           RngStream stream, std::ostream* episode_log = nullptr);

// Fixed round-robin partition actions (the equal-resource baseline) through
// the same environment interface.
EvalResult run_era_actions(MmflEnv& env, int episodes, int max_steps);

std::string policy_checkpoint_json(const TrainResult& result);
TrainResult load_policy_checkpoint_json(const std::string& text);
std::string training_curve_csv(const TrainResult& result);

}  // namespace mmfl
