#include "mmfl/ledger.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace mmfl {

RoundAccounting compute_accounting(const Schedule& sched, const std::vector<VehicleState>& world,
                                   const std::vector<TaskSpec>& tasks, const SimConfig& cfg) {
  const int H = sched.vehicles;
  const int M = sched.tasks;
  const LinkBudget budget = make_link_budget(cfg);
  const ComputeProfile profile = make_compute_profile(cfg);

  RoundAccounting acc;
  acc.upload_time.assign(H, 0.0);
  acc.upload_energy.assign(H, 0.0);
  acc.compute_time.assign(H, 0.0);
  acc.compute_energy.assign(H, 0.0);
  acc.sync_point.assign(M, 0.0);
  acc.energy.assign(H, 0.0);

  for (int h = 0; h < H; ++h) {
    const int m = sched.task_of(h);
    if (m < 0) continue;
    const ComputeCost cc = comp_cost(sched, h, tasks, profile);
    acc.compute_time[h] = cc.time_s;
    acc.compute_energy[h] = cc.energy_j;
    const CostResult uc = sched.leader_at(h, m) ? chv_cost(sched, h, budget, world, tasks)
                                                : sov_cost(sched, h, budget, world, tasks[m]);
    acc.upload_time[h] = uc.time_s;
    acc.upload_energy[h] = uc.energy_j;
  }
  for (int m = 0; m < M; ++m) acc.sync_point[m] = sync_point(sched, m, acc);
  acc.round_time = round_time(sched, acc);
  for (int h = 0; h < H; ++h) acc.energy[h] = vehicle_round_energy(h, acc);
  return acc;
}

double sync_point(const Schedule& sched, int m, const RoundAccounting& acc) {
  double worst = 0.0;
  for (int h = 0; h < sched.vehicles; ++h) {
    if (!sched.assign_at(h, m)) continue;
    worst = std::max(worst, acc.compute_time[h] + 2.0 * acc.upload_time[h]);
  }
  return worst;
}

double round_time(const Schedule& sched, const RoundAccounting& acc) {
  double worst = 0.0;
  for (int h = 0; h < sched.vehicles; ++h) {
    double total = acc.upload_time[h];
    for (int m = 0; m < sched.tasks; ++m)
      if (sched.assign_at(h, m)) total += acc.sync_point[m];
    worst = std::max(worst, total);
  }
  return worst;
}

double vehicle_round_energy(int h, const RoundAccounting& acc) {
  return acc.compute_energy[h] + 3.0 * acc.upload_energy[h];
}

double residual_energy(double e_init, const std::vector<double>& spent_per_round) {
  double total = 0.0;
  for (double e : spent_per_round) total += e;
  return e_init - total;
}

const char* constraint_name(Constraint c) {
  switch (c) {
    case Constraint::b0: return "b0";
    case Constraint::c0: return "c0";
    case Constraint::d0: return "d0";
    case Constraint::e0: return "e0";
    case Constraint::f0: return "f0";
    case Constraint::g0: return "g0";
    case Constraint::h0: return "h0";
    case Constraint::i0: return "i0";
  }
  return "?";
}

ConstraintReport validate_schedule(const Schedule& sched, const RoundAccounting& acc,
                                   const std::vector<VehicleState>& world, const SimConfig& cfg) {
  const int H = sched.vehicles;
  const int M = sched.tasks;
  const int N = sched.subcarriers;
  if (H != static_cast<int>(world.size()) || M != cfg.task_count() || N != cfg.subcarriers)
    throw std::invalid_argument("validate_schedule: dimension mismatch");

  ConstraintReport report;
  auto fail = [&](Constraint which, int vehicle, int task, int subcarrier, std::string detail) {
    report.violations.push_back({which, vehicle, task, subcarrier, std::move(detail)});
  };

  // (i0) binarity
  for (size_t i = 0; i < sched.assign.size(); ++i)
    if (sched.assign[i] > 1 || sched.leader[i] > 1) {
      fail(Constraint::i0, -1, -1, -1, "non-binary assignment entry");
      break;
    }
  for (size_t i = 0; i < sched.grant.size(); ++i)
    if (sched.grant[i] > 1) {
      fail(Constraint::i0, -1, -1, -1, "non-binary subcarrier entry");
      break;
    }

  // (b0) round time within the deadline for every participant
  for (int h = 0; h < H; ++h) {
    const int m = sched.task_of(h);
    if (m >= 0 && acc.round_time > cfg.t_round_s) {
      fail(Constraint::b0, h, m, -1,
           "round time " + std::to_string(acc.round_time) + " s exceeds deadline for vehicle " +
               std::to_string(h + 1));
    }
  }

  // (c0) energy within residual for every participant
  for (int h = 0; h < H; ++h) {
    const int m = sched.task_of(h);
    if (m >= 0 && acc.energy[h] > world[h].e_res) {
      fail(Constraint::c0, h, m, -1,
           "vehicle " + std::to_string(h + 1) + " needs " + std::to_string(acc.energy[h]) +
               " J with " + std::to_string(world[h].e_res) + " J left");
    }
  }

  // (d0) at most one task per vehicle
  for (int h = 0; h < H; ++h) {
    int count = 0;
    for (int m = 0; m < M; ++m) count += sched.assign_at(h, m);
    if (count > 1)
      fail(Constraint::d0, h, -1, -1,
           "vehicle " + std::to_string(h + 1) + " assigned to " + std::to_string(count) +
               " tasks");
  }

  // (e0) leaders must be members
  for (int h = 0; h < H; ++h)
    for (int m = 0; m < M; ++m)
      if (sched.leader_at(h, m) && !sched.assign_at(h, m))
        fail(Constraint::e0, h, m, -1,
             "vehicle " + std::to_string(h + 1) + " leads task " + std::to_string(m + 1) +
                 " without membership");

  // (f0) exactly one leader per nonempty task
  for (int m = 0; m < M; ++m) {
    int members = 0;
    int leaders = 0;
    for (int h = 0; h < H; ++h) {
      members += sched.assign_at(h, m);
      leaders += sched.assign_at(h, m) && sched.leader_at(h, m);
    }
    if (members > 0 && leaders != 1)
      fail(Constraint::f0, -1, m, -1,
           "task " + std::to_string(m + 1) + " has " + std::to_string(leaders) + " leaders");
  }

  // (g0) subcarrier orthogonality within each task
  for (int m = 0; m < M; ++m)
    for (int n = 0; n < N; ++n) {
      int holders = 0;
      for (int h = 0; h < H; ++h) holders += sched.grant_at(m, h, n);
      if (holders > 1)
        fail(Constraint::g0, -1, m, n,
             "subcarrier " + std::to_string(n + 1) + " double-granted on task " +
                 std::to_string(m + 1));
    }

  // (h0) leader has maximal recency within its cluster
  bool recency_ok = true;
  for (int m = 0; m < M; ++m) {
    const int r = sched.leader_of(m);
    if (r < 0) continue;
    int best = 0;
    for (int h = 0; h < H; ++h)
      if (sched.assign_at(h, m)) best = std::max(best, world[h].last_round[m]);
    if (world[r].last_round[m] < best) {
      recency_ok = false;
      if (cfg.leader_recency_hard)
        fail(Constraint::h0, r, m, -1,
             "leader recency " + std::to_string(world[r].last_round[m]) + " below cluster max " +
                 std::to_string(best));
    }
  }
  report.recency_violated = !recency_ok;

  report.feasible = report.violations.empty();
  return report;
}

std::string metrics_csv_header() {
  return "round,task,participants,leader_id,T_sync,T_k,energy_total,violations";
}

std::string metrics_csv_row(const Schedule& sched, int m, const RoundAccounting& acc,
                            const ConstraintReport& report) {
  double energy_total = 0.0;
  for (int h = 0; h < sched.vehicles; ++h)
    if (sched.assign_at(h, m)) energy_total += acc.energy[h];
  std::string codes;
  for (const auto& v : report.violations) {
    if (v.task >= 0 && v.task != m) continue;
    const char* name = constraint_name(v.which);
    if (codes.find(name) == std::string::npos) {
      if (!codes.empty()) codes += ';';
      codes += name;
    }
  }
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%d,%d,%d,%.10g,%.10g,%.10g,%s", sched.round, m + 1,
                sched.participant_count(m), sched.leader_of(m) + 1, acc.sync_point[m],
                acc.round_time, energy_total, codes.c_str());
  return buf;
}

}  // namespace mmfl
