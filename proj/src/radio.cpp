#include "mmfl/radio.hpp"

#include <algorithm>
#include <cmath>

#include "mmfl/mobility.hpp"

namespace mmfl {

double bandwidth_ratio(const Schedule& sched, int s, int r) {
  int leader_task = -1;
  for (int m = 0; m < sched.tasks; ++m) {
    if (sched.leader_at(r, m)) {
      leader_task = m;
      break;
    }
  }
  if (leader_task < 0)
    throw RadioError("vehicle " + std::to_string(r + 1) + " leads no task");
  return static_cast<double>(sched.grant_count(leader_task, s)) /
         static_cast<double>(sched.subcarriers);
}

double tx_rate(double ratio, const LinkBudget& budget, double distance_m) {
  if (ratio <= 0.0) return 0.0;
  double d_eff = distance_m <= budget.d_direct_m ? distance_m : budget.xi * budget.d_direct_m;
  // the gain is referenced at 1 m; the path-loss term is undefined below it
  d_eff = std::max(d_eff, 1.0);
  const double snr = budget.p_watt * budget.h_ref * std::pow(d_eff, -budget.pathloss_exp) /
                     budget.sigma2_watt;
  return ratio * budget.bandwidth_hz * std::log2(1.0 + snr);
}

CostResult sov_cost(const Schedule& sched, int s, const LinkBudget& budget,
                    const std::vector<VehicleState>& world, const TaskSpec& task) {
  const int m = task.task_id - 1;
  if (!sched.assign_at(s, m)) return {0.0, 0.0};
  if (sched.leader_at(s, m)) return {0.0, 0.0};  // the leader has no uplink
  const int r = sched.leader_of(m);
  if (r < 0) throw RadioError("task " + std::to_string(task.task_id) + " has no leader");
  const double ratio = bandwidth_ratio(sched, s, r);
  const double rate = tx_rate(ratio, budget, distance(world[s], world[r]));
  if (rate <= 0.0)
    throw RadioError("vehicle " + std::to_string(s + 1) + " holds no subcarrier on task " +
                     std::to_string(task.task_id));
  const double t = static_cast<double>(task.z_bits) / rate;
  return {t, budget.p_watt * t};
}

CostResult chv_cost(const Schedule& sched, int r, const LinkBudget& budget,
                    const std::vector<VehicleState>& world, const std::vector<TaskSpec>& tasks) {
  int leader_task = -1;
  for (int m = 0; m < sched.tasks; ++m) {
    if (sched.leader_at(r, m)) {
      leader_task = m;
      break;
    }
  }
  if (leader_task < 0)
    throw RadioError("vehicle " + std::to_string(r + 1) + " leads no task");
  CostResult out;
  for (int s = 0; s < sched.vehicles; ++s) {
    if (s == r || !sched.assign_at(s, leader_task)) continue;
    const CostResult member = sov_cost(sched, s, budget, world, tasks[leader_task]);
    out.time_s = std::max(out.time_s, member.time_s);
    out.energy_j += member.energy_j;
  }
  return out;
}

}  // namespace mmfl
