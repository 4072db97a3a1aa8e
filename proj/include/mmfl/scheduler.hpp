#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmfl/config.hpp"
#include "mmfl/radio.hpp"
#include "mmfl/rng.hpp"
#include "mmfl/schedule.hpp"

namespace mmfl {

struct SchedulerError : std::runtime_error {
  explicit SchedulerError(const std::string& what) : std::runtime_error(what) {}
};

struct HeapOps {
  long pushes = 0;
  long pops = 0;
  long total() const { return pushes + pops; }
};

struct AllocationResult {
  std::vector<int> sov;           // 0-based vehicle indices, ascending
  std::vector<int> counts;        // subcarriers granted, aligned with sov
  std::vector<double> upload_time;  // final per-SOV upload time, aligned
  double max_upload_time = 0.0;   // bottleneck after all grants
  HeapOps ops;
};

// Greedy minimax: one subcarrier per source vehicle, then the remaining
// budget goes one at a time to the current slowest uploader (max-heap on
// upload time, ties to the lower vehicle id). Throws when the budget cannot
// give every source vehicle at least one subcarrier. total_subcarriers is
// the band-wide N that normalizes each grant's bandwidth share.
AllocationResult allocate_subcarriers(const std::vector<int>& members, int leader,
                                      const std::vector<VehicleState>& world,
                                      const LinkBudget& budget, std::int64_t model_bits,
                                      int subcarrier_budget, int total_subcarriers);

// recency / round - eps_weight * bottleneck / t_round
double leader_score(int last_participation_round, int round, double max_upload_time,
                    double eps_weight, double t_round_s);

// Proportional per-task subcarrier budgets: floor(N * cluster_m / total),
// remainders to nonempty tasks in ascending id order.
std::vector<int> task_subcarrier_budgets(const Schedule& assignment, int total_subcarriers);

// Scores every cluster member as a candidate leader (running the greedy
// allocation for its hypothetical cluster), picks the argmax per task and
// installs the winner's allocation. candidate_filter, when given, restricts
// the candidate pool per task (empty filter entry falls back to all members).
Schedule select_leaders(const Schedule& assignment, const std::vector<VehicleState>& world,
                        const SimConfig& cfg, bool parallel = false,
                        const std::vector<std::vector<int>>* candidate_filter = nullptr,
                        HeapOps* ops = nullptr);

// Random leader per cluster and even subcarrier split within each cluster
// (remainders to lowest ids); per-task budgets floor(N/M), remainders to
// lowest task ids.
Schedule era_allocate(const Schedule& assignment, const SimConfig& cfg, RngStream& rng);

// Equal-resource baseline: eligible vehicles (positive residual energy)
// partitioned round-robin by id into near-equal groups, then era_allocate.
// All vehicles depleted gives an empty schedule.
Schedule era_schedule(int round, const std::vector<VehicleState>& world, const SimConfig& cfg,
                      RngStream& rng);

}  // namespace mmfl
