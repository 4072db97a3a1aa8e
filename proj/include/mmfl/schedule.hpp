#pragma once

#include <cstdint>
#include <vector>

namespace mmfl {

// Per-round decision tensors: task assignment (H×M), leader selection (H×M)
// and subcarrier grants (M×H×N), all binary. Vehicle/task/subcarrier indices
// are 0-based here; external ids are 1-based.
struct Schedule {
  int round = 0;
  int vehicles = 0;
  int tasks = 0;
  int subcarriers = 0;
  std::vector<std::uint8_t> assign;
  std::vector<std::uint8_t> leader;
  std::vector<std::uint8_t> grant;

  Schedule() = default;
  Schedule(int k, int h, int m, int n)
      : round(k),
        vehicles(h),
        tasks(m),
        subcarriers(n),
        assign(static_cast<size_t>(h) * m, 0),
        leader(static_cast<size_t>(h) * m, 0),
        grant(static_cast<size_t>(m) * h * n, 0) {}

  std::uint8_t& assign_at(int h, int m) { return assign[static_cast<size_t>(h) * tasks + m]; }
  std::uint8_t assign_at(int h, int m) const { return assign[static_cast<size_t>(h) * tasks + m]; }
  std::uint8_t& leader_at(int h, int m) { return leader[static_cast<size_t>(h) * tasks + m]; }
  std::uint8_t leader_at(int h, int m) const { return leader[static_cast<size_t>(h) * tasks + m]; }
  std::uint8_t& grant_at(int m, int h, int n) {
    return grant[(static_cast<size_t>(m) * vehicles + h) * subcarriers + n];
  }
  std::uint8_t grant_at(int m, int h, int n) const {
    return grant[(static_cast<size_t>(m) * vehicles + h) * subcarriers + n];
  }

  // -1 when the vehicle is idle this round
  int task_of(int h) const {
    for (int m = 0; m < tasks; ++m)
      if (assign_at(h, m)) return m;
    return -1;
  }

  // -1 when the task has no leader
  int leader_of(int m) const {
    for (int h = 0; h < vehicles; ++h)
      if (leader_at(h, m)) return h;
    return -1;
  }

  int grant_count(int m, int h) const {
    int c = 0;
    for (int n = 0; n < subcarriers; ++n) c += grant_at(m, h, n);
    return c;
  }

  std::vector<int> members_of(int m) const {
    std::vector<int> out;
    for (int h = 0; h < vehicles; ++h)
      if (assign_at(h, m)) out.push_back(h);
    return out;
  }

  int participant_count(int m) const {
    int c = 0;
    for (int h = 0; h < vehicles; ++h) c += assign_at(h, m);
    return c;
  }

  bool operator==(const Schedule&) const = default;
};

}  // namespace mmfl
