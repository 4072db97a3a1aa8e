#include "mmfl/scheduler.hpp"

#include <algorithm>
#include <queue>

#include "mmfl/mobility.hpp"

namespace mmfl {

namespace {

struct HeapEntry {
  double time;
  int vehicle;
  int slot;  // index into the sov arrays
};

struct HeapLess {
  bool operator()(const HeapEntry& a, const HeapEntry& b) const {
    if (a.time != b.time) return a.time < b.time;
    return a.vehicle > b.vehicle;  // ties: lower id on top
  }
};

}  // namespace

AllocationResult allocate_subcarriers(const std::vector<int>& members, int leader,
                                      const std::vector<VehicleState>& world,
                                      const LinkBudget& budget, std::int64_t model_bits,
                                      int subcarrier_budget, int total_subcarriers) {
  AllocationResult out;
  for (int h : members)
    if (h != leader) out.sov.push_back(h);
  std::sort(out.sov.begin(), out.sov.end());
  const int sovs = static_cast<int>(out.sov.size());
  if (sovs == 0) return out;
  if (subcarrier_budget < sovs)
    throw SchedulerError("budget-too-small: " + std::to_string(subcarrier_budget) +
                         " subcarriers for " + std::to_string(sovs) + " source vehicles");

  out.counts.assign(sovs, 1);
  out.upload_time.assign(sovs, 0.0);

  auto upload_time = [&](int slot) {
    const int h = out.sov[slot];
    const double ratio =
        static_cast<double>(out.counts[slot]) / static_cast<double>(total_subcarriers);
    const double rate = tx_rate(ratio, budget, distance(world[h], world[leader]));
    return static_cast<double>(model_bits) / rate;
  };

  std::priority_queue<HeapEntry, std::vector<HeapEntry>, HeapLess> heap;
  for (int i = 0; i < sovs; ++i) {
    out.upload_time[i] = upload_time(i);
    heap.push({out.upload_time[i], out.sov[i], i});
    ++out.ops.pushes;
  }
  int remaining = subcarrier_budget - sovs;
  while (remaining > 0) {
    const HeapEntry top = heap.top();
    heap.pop();
    ++out.ops.pops;
    ++out.counts[top.slot];
    --remaining;
    out.upload_time[top.slot] = upload_time(top.slot);
    heap.push({out.upload_time[top.slot], top.vehicle, top.slot});
    ++out.ops.pushes;
  }
  out.max_upload_time = heap.top().time;
  ++out.ops.pops;
  return out;
}

double leader_score(int last_participation_round, int round, double max_upload_time,
                    double eps_weight, double t_round_s) {
  return static_cast<double>(last_participation_round) / static_cast<double>(round) -
         eps_weight * max_upload_time / t_round_s;
}

std::vector<int> task_subcarrier_budgets(const Schedule& assignment, int total_subcarriers) {
  const int M = assignment.tasks;
  std::vector<int> sizes(M, 0);
  int total = 0;
  for (int m = 0; m < M; ++m) {
    sizes[m] = assignment.participant_count(m);
    total += sizes[m];
  }
  std::vector<int> budgets(M, 0);
  if (total == 0) return budgets;
  int used = 0;
  for (int m = 0; m < M; ++m) {
    budgets[m] = static_cast<int>(static_cast<long long>(total_subcarriers) * sizes[m] / total);
    used += budgets[m];
  }
  // remainders to nonempty tasks in id order
  for (int m = 0; m < M && used < total_subcarriers; ++m) {
    if (sizes[m] > 0) {
      ++budgets[m];
      ++used;
    }
  }
  return budgets;
}

Schedule select_leaders(const Schedule& assignment, const std::vector<VehicleState>& world,
                        const SimConfig& cfg, bool parallel,
                        const std::vector<std::vector<int>>* candidate_filter, HeapOps* ops) {
  const int M = assignment.tasks;
  const int N = assignment.subcarriers;
  const LinkBudget budget = make_link_budget(cfg);
  const std::vector<int> budgets = task_subcarrier_budgets(assignment, N);

  Schedule out = assignment;
  std::fill(out.leader.begin(), out.leader.end(), 0);
  std::fill(out.grant.begin(), out.grant.end(), 0);

  int block_offset = 0;
  for (int m = 0; m < M; ++m) {
    const std::vector<int> members = assignment.members_of(m);
    if (members.empty()) continue;

    std::vector<int> candidates = members;
    if (candidate_filter && m < static_cast<int>(candidate_filter->size()) &&
        !(*candidate_filter)[m].empty()) {
      std::vector<int> filtered;
      for (int h : members)
        if (std::find((*candidate_filter)[m].begin(), (*candidate_filter)[m].end(), h) !=
            (*candidate_filter)[m].end())
          filtered.push_back(h);
      if (!filtered.empty()) candidates = std::move(filtered);
    }

    const int count = static_cast<int>(candidates.size());
    std::vector<AllocationResult> allocs(count);
    std::vector<double> scores(count);
    std::vector<std::string> errors(count);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
    for (int i = 0; i < count; ++i) {
      try {
        allocs[i] = allocate_subcarriers(members, candidates[i], world, budget,
                                         cfg.tasks[m].z_bits, budgets[m], N);
        scores[i] = leader_score(world[candidates[i]].last_round[m], assignment.round,
                                 allocs[i].max_upload_time, cfg.eps_weight, cfg.t_round_s);
      } catch (const SchedulerError& e) {
        errors[i] = e.what();
      }
    }
    for (int i = 0; i < count; ++i)
      if (!errors[i].empty())
        throw SchedulerError("infeasible-cluster on task " + std::to_string(m + 1) + ": " +
                             errors[i]);

    int best = 0;
    for (int i = 1; i < count; ++i)
      if (scores[i] > scores[best]) best = i;  // ties keep the lower vehicle id

    const int leader = candidates[best];
    out.leader_at(leader, m) = 1;
    const AllocationResult& alloc = allocs[best];
    int next = block_offset;
    for (size_t i = 0; i < alloc.sov.size(); ++i)
      for (int c = 0; c < alloc.counts[i]; ++c) out.grant_at(m, alloc.sov[i], next++) = 1;

    if (ops) {
      for (const auto& a : allocs) {
        ops->pushes += a.ops.pushes;
        ops->pops += a.ops.pops;
      }
    }
    block_offset += budgets[m];
  }
  return out;
}

Schedule era_allocate(const Schedule& assignment, const SimConfig& cfg, RngStream& rng) {
  (void)cfg;
  const int M = assignment.tasks;
  const int N = assignment.subcarriers;
  Schedule out = assignment;
  std::fill(out.leader.begin(), out.leader.end(), 0);
  std::fill(out.grant.begin(), out.grant.end(), 0);

  const int base_budget = N / M;
  int block_offset = 0;
  for (int m = 0; m < M; ++m) {
    const int budget = base_budget + (m < N % M ? 1 : 0);
    const std::vector<int> members = assignment.members_of(m);
    if (members.empty()) {
      block_offset += budget;
      continue;
    }
    const int leader = members[rng.bounded(members.size())];
    out.leader_at(leader, m) = 1;

    std::vector<int> sovs;
    for (int h : members)
      if (h != leader) sovs.push_back(h);
    if (!sovs.empty()) {
      const int each = budget / static_cast<int>(sovs.size());
      const int extra = budget % static_cast<int>(sovs.size());
      int next = block_offset;
      for (size_t i = 0; i < sovs.size(); ++i) {
        const int give = each + (static_cast<int>(i) < extra ? 1 : 0);
        for (int c = 0; c < give && next < block_offset + budget; ++c)
          out.grant_at(m, sovs[i], next++) = 1;
      }
    }
    block_offset += budget;
  }
  return out;
}

Schedule era_schedule(int round, const std::vector<VehicleState>& world, const SimConfig& cfg,
                      RngStream& rng) {
  const int H = static_cast<int>(world.size());
  const int M = cfg.task_count();
  Schedule assignment(round, H, M, cfg.subcarriers);

  std::vector<int> eligible;
  for (int h = 0; h < H; ++h)
    if (world[h].e_res > 0.0) eligible.push_back(h);
  if (eligible.empty()) return assignment;  // everyone depleted: empty schedule

  for (size_t i = 0; i < eligible.size(); ++i)
    assignment.assign_at(eligible[i], static_cast<int>(i) % M) = 1;
  return era_allocate(assignment, cfg, rng);
}

}  // namespace mmfl
