#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmfl/config.hpp"
#include "mmfl/schedule.hpp"

namespace mmfl {

struct RadioError : std::runtime_error {
  explicit RadioError(const std::string& what) : std::runtime_error(what) {}
};

// Uplink budget in linear units.
struct LinkBudget {
  double p_watt = 1.0;
  double h_ref = 3.9810717055349725e-4;  // gain at 1 m
  double sigma2_watt = 3.981071705534972e-14;
  double pathloss_exp = 2.0;
  double bandwidth_hz = 2.0e7;
  double d_direct_m = 100.0;
  double xi = 1.0;
};

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline LinkBudget make_link_budget(const SimConfig& cfg) {
  return LinkBudget{cfg.p_watt,       cfg.h_ref_linear, cfg.sigma2_watt, cfg.pathloss_exp,
                    cfg.bandwidth_hz, cfg.d_direct_m,   cfg.xi};
}

struct CostResult {
  double time_s = 0.0;
  double energy_j = 0.0;
};

// Fraction of the band granted to source vehicle s under leader r:
// (1/N) * count of subcarriers s holds on r's task. Throws when r leads no task.
double bandwidth_ratio(const Schedule& sched, int s, int r);

// Shannon-style rate; beyond the direct radius the effective distance is the
// fixed indirect value xi * d_direct. Zero iff ratio is zero.
double tx_rate(double ratio, const LinkBudget& budget, double distance_m);

// Upload time/energy of a source vehicle toward its leader. (0,0) for idle
// vehicles and for the leader itself. Throws RadioError when the vehicle is
// scheduled but holds no subcarrier (zero rate, infeasible link).
CostResult sov_cost(const Schedule& sched, int s, const LinkBudget& budget,
                    const std::vector<VehicleState>& world, const TaskSpec& task);

// Leader-side cost: members upload in parallel on disjoint subcarriers, so
// time is the max over members and energy the sum. Throws when r leads no task.
CostResult chv_cost(const Schedule& sched, int r, const LinkBudget& budget,
                    const std::vector<VehicleState>& world, const std::vector<TaskSpec>& tasks);

}  // namespace mmfl
