#pragma once

#include "mmfl/config.hpp"
#include "mmfl/schedule.hpp"

namespace mmfl {

struct ComputeProfile {
  double cpu_hz = 6.0e9;
  double cycles_per_bit = 1000.0;
  double switch_cap = 1.0e-27;
  int local_iters = 5;
};

inline ComputeProfile make_compute_profile(const SimConfig& cfg) {
  return ComputeProfile{cfg.cpu_hz, cfg.cycles_per_bit, cfg.switch_cap, cfg.local_iters};
}

// switch_cap * f^3
double comp_power(const ComputeProfile& profile);

struct ComputeCost {
  double time_s = 0.0;
  double energy_j = 0.0;
};

// Local training cost of vehicle h for its assigned task; (0,0) when idle.
// Energy satisfies energy == comp_power * time exactly.
ComputeCost comp_cost(const Schedule& sched, int h, const std::vector<TaskSpec>& tasks,
                      const ComputeProfile& profile);

}  // namespace mmfl
