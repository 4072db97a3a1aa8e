#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mmfl/config.hpp"
#include "mmfl/rng.hpp"

namespace mmfl {

struct TraceError : std::runtime_error {
  explicit TraceError(const std::string& what) : std::runtime_error(what) {}
};

inline double distance(double ax, double ay, double bx, double by) {
  const double dx = ax - bx;
  const double dy = ay - by;
  return std::sqrt(dx * dx + dy * dy);
}

inline double distance(const VehicleState& a, const VehicleState& b) {
  return distance(a.x, a.y, b.x, b.y);
}

struct TraceRecord {
  int round = 0;  // 1-based
  int vehicle_id = 0;
  double x = 0.0;
  double y = 0.0;
  double speed = 0.0;

  bool operator==(const TraceRecord&) const = default;
};

// Complete grid of (round, vehicle) records, rounds 1..max_round.
struct MobilityTrace {
  std::vector<TraceRecord> records;  // sorted by (round, vehicle_id)
  int max_round = 0;
  std::vector<int> vehicle_ids;  // ascending

  const TraceRecord& at(int round, int vehicle_id) const;

  bool operator==(const MobilityTrace&) const = default;
};

// Moves every vehicle along the Manhattan road grid by speed * t_round,
// turning at intersections; speeds are resampled in [v_min, v_max] before
// moving. Positions stay fixed within a round (quasi-static).
void advance_positions(std::vector<VehicleState>& world, const SimConfig& cfg, int round,
                       RngStream& rng);

// CSV header: round,vehicle_id,x_m,y_m,speed_mps
MobilityTrace parse_trace_text(const std::string& text);
MobilityTrace load_trace(const std::string& path);
std::string emit_trace(const MobilityTrace& trace);
void save_trace(const MobilityTrace& trace, const std::string& path);

// Overwrites positions/speeds from the trace row of the given round.
void apply_trace_round(std::vector<VehicleState>& world, const MobilityTrace& trace, int round);

}  // namespace mmfl
