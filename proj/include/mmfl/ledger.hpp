#pragma once

#include <string>
#include <vector>

#include "mmfl/compute.hpp"
#include "mmfl/config.hpp"
#include "mmfl/radio.hpp"
#include "mmfl/schedule.hpp"

namespace mmfl {

// Per-round timeline and energy components. Upload entries hold the SOV
// upload cost for members and the cluster-head cost for leaders.
struct RoundAccounting {
  std::vector<double> upload_time;    // per vehicle
  std::vector<double> upload_energy;  // per vehicle
  std::vector<double> compute_time;   // per vehicle
  std::vector<double> compute_energy; // per vehicle
  std::vector<double> sync_point;     // per task, 0 when empty
  double round_time = 0.0;
  std::vector<double> energy;         // per vehicle, total for the round
};

RoundAccounting compute_accounting(const Schedule& sched, const std::vector<VehicleState>& world,
                                   const std::vector<TaskSpec>& tasks, const SimConfig& cfg);

// max over members of assign * (compute_time + 2 * upload_time)
double sync_point(const Schedule& sched, int m, const RoundAccounting& acc);

// max over vehicles of (sum over its tasks of sync_point + upload_time)
double round_time(const Schedule& sched, const RoundAccounting& acc);

// compute energy + 3x upload energy (distribution, update, broadcast)
double vehicle_round_energy(int h, const RoundAccounting& acc);

// initial energy minus everything spent before round k
double residual_energy(double e_init, const std::vector<double>& spent_per_round);

enum class Constraint { b0, c0, d0, e0, f0, g0, h0, i0 };

const char* constraint_name(Constraint c);

struct ConstraintViolation {
  Constraint which;
  int vehicle = -1;     // 0-based, -1 n/a
  int task = -1;        // 0-based, -1 n/a
  int subcarrier = -1;  // 0-based, -1 n/a
  std::string detail;
};

struct ConstraintReport {
  bool feasible = true;  // all hard constraints pass
  std::vector<ConstraintViolation> violations;
  bool recency_violated = false;  // leader-recency result when checked in advisory mode

  bool has(Constraint c) const {
    for (const auto& v : violations)
      if (v.which == c) return true;
    return false;
  }
};

// Full validity check of a round: latency bound, energy budget, assignment
// nesting, one leader per nonempty task, subcarrier orthogonality, leader
// recency (hard or advisory per config) and binarity.
ConstraintReport validate_schedule(const Schedule& sched, const RoundAccounting& acc,
                                   const std::vector<VehicleState>& world, const SimConfig& cfg);

// Metrics row: round,task,participants,leader_id,T_sync,T_k,energy_total,violations
std::string metrics_csv_header();
std::string metrics_csv_row(const Schedule& sched, int m, const RoundAccounting& acc,
                            const ConstraintReport& report);

}  // namespace mmfl
