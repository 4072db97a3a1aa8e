#include "mmfl/compute.hpp"

namespace mmfl {

double comp_power(const ComputeProfile& profile) {
  return profile.switch_cap * profile.cpu_hz * profile.cpu_hz * profile.cpu_hz;
}

ComputeCost comp_cost(const Schedule& sched, int h, const std::vector<TaskSpec>& tasks,
                      const ComputeProfile& profile) {
  const int m = sched.task_of(h);
  if (m < 0) return {0.0, 0.0};
  const TaskSpec& task = tasks[m];
  const double data_bits =
      static_cast<double>(task.dataset_sizes[h]) * static_cast<double>(task.sample_bits);
  const double cycles = profile.local_iters * data_bits * profile.cycles_per_bit;
  const double time = cycles / profile.cpu_hz;
  const double energy = profile.switch_cap * cycles * profile.cpu_hz * profile.cpu_hz;
  return {time, energy};
}

}  // namespace mmfl
