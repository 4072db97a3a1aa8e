#include "mmfl/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace mmfl {

namespace {

// headings: 0:+x 1:-x 2:+y 3:-y
constexpr double kDirX[4] = {1.0, -1.0, 0.0, 0.0};
constexpr double kDirY[4] = {0.0, 0.0, 1.0, -1.0};

double snap(double v, double spacing) { return spacing * std::round(v / spacing); }

// Distance to the next grid intersection strictly ahead along the heading.
double dist_to_intersection(double x, double y, int heading, double spacing) {
  const double along = (heading < 2) ? x : y;
  const double cell = std::floor(along / spacing + 1e-9);
  double next;
  if (kDirX[heading] + kDirY[heading] > 0.0) {
    next = (cell + 1.0) * spacing;
    return next - along;
  }
  next = cell * spacing;
  if (along - next < 1e-9) next -= spacing;  // already on an intersection
  return along - next;
}

// Headings allowed at an intersection, staying inside [0, extent].
void allowed_headings(double x, double y, double extent, int out[4], int& count) {
  count = 0;
  if (x + 1e-9 < extent) out[count++] = 0;
  if (x > 1e-9) out[count++] = 1;
  if (y + 1e-9 < extent) out[count++] = 2;
  if (y > 1e-9) out[count++] = 3;
}

}  // namespace

void advance_positions(std::vector<VehicleState>& world, const SimConfig& cfg, int round,
                       RngStream& rng) {
  (void)round;
  const double spacing = cfg.grid_spacing_m;
  const double extent = cfg.map_extent_m;
  for (auto& v : world) {
    v.speed = rng.uniform(cfg.v_min_mps, cfg.v_max_mps);
    double remaining = v.speed * cfg.t_round_s;
    int guard = 0;
    while (remaining > 1e-12 && ++guard < 10000) {
      double ahead = dist_to_intersection(v.x, v.y, v.heading, spacing);
      // clamp to the map edge
      const double to_edge = (v.heading == 0)   ? extent - v.x
                             : (v.heading == 1) ? v.x
                             : (v.heading == 2) ? extent - v.y
                                                : v.y;
      ahead = std::min(ahead, to_edge);
      if (ahead <= 1e-9) {
        // at an intersection or edge: snap and turn
        v.x = std::clamp(snap(v.x, spacing), 0.0, extent);
        v.y = std::clamp(snap(v.y, spacing), 0.0, extent);
        int options[4];
        int count = 0;
        allowed_headings(v.x, v.y, extent, options, count);
        if (count == 0) break;
        v.heading = options[rng.bounded(static_cast<std::uint64_t>(count))];
        continue;
      }
      const double step = std::min(remaining, ahead);
      v.x += kDirX[v.heading] * step;
      v.y += kDirY[v.heading] * step;
      remaining -= step;
    }
  }
}

const TraceRecord& MobilityTrace::at(int round, int vehicle_id) const {
  const auto it =
      std::lower_bound(records.begin(), records.end(), std::make_pair(round, vehicle_id),
                       [](const TraceRecord& r, const std::pair<int, int>& key) {
                         return std::make_pair(r.round, r.vehicle_id) < key;
                       });
  if (it == records.end() || it->round != round || it->vehicle_id != vehicle_id)
    throw TraceError("trace has no record for round " + std::to_string(round) + ", vehicle " +
                     std::to_string(vehicle_id));
  return *it;
}

MobilityTrace parse_trace_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;

  if (!std::getline(in, line)) throw TraceError("trace is empty");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "round,vehicle_id,x_m,y_m,speed_mps")
    throw TraceError("line 1: bad header \"" + line + "\"");

  MobilityTrace trace;
  std::map<std::pair<int, int>, TraceRecord> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    TraceRecord r;
    char extra = 0;
    const int got = std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf%c", &r.round, &r.vehicle_id, &r.x,
                                &r.y, &r.speed, &extra);
    if (got != 5) throw TraceError("line " + std::to_string(line_no) + ": malformed row");
    if (r.round < 1)
      throw TraceError("line " + std::to_string(line_no) + ": rounds are 1-based");
    if (r.vehicle_id < 1)
      throw TraceError("line " + std::to_string(line_no) + ": vehicle ids are 1-based");
    if (!std::isfinite(r.x) || !std::isfinite(r.y))
      throw TraceError("line " + std::to_string(line_no) + ": non-finite coordinate");
    if (!(r.speed >= 0.0))
      throw TraceError("line " + std::to_string(line_no) + ": negative speed");
    const auto key = std::make_pair(r.round, r.vehicle_id);
    if (seen.count(key))
      throw TraceError("line " + std::to_string(line_no) + ": duplicate record for round " +
                       std::to_string(r.round) + ", vehicle " + std::to_string(r.vehicle_id));
    seen.emplace(key, r);
    trace.max_round = std::max(trace.max_round, r.round);
  }
  if (seen.empty()) throw TraceError("trace has no data rows");

  std::map<int, int> id_seen;
  for (const auto& [key, rec] : seen) id_seen[key.second] = 1;
  for (const auto& [id, _] : id_seen) trace.vehicle_ids.push_back(id);

  // coverage: every (round, vehicle) pair must exist
  for (int k = 1; k <= trace.max_round; ++k) {
    for (int id : trace.vehicle_ids) {
      if (!seen.count({k, id}))
        throw TraceError("coverage gap: missing record for round " + std::to_string(k) +
                         ", vehicle " + std::to_string(id));
    }
  }

  trace.records.reserve(seen.size());
  for (auto& [key, rec] : seen) trace.records.push_back(rec);
  return trace;
}

MobilityTrace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TraceError("cannot open trace file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_trace_text(ss.str());
}

std::string emit_trace(const MobilityTrace& trace) {
  std::string out = "round,vehicle_id,x_m,y_m,speed_mps\n";
  char buf[160];
  for (const auto& r : trace.records) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%.17g\n", r.round, r.vehicle_id, r.x, r.y,
                  r.speed);
    out += buf;
  }
  return out;
}

void save_trace(const MobilityTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TraceError("cannot write trace file " + path);
  out << emit_trace(trace);
}

void apply_trace_round(std::vector<VehicleState>& world, const MobilityTrace& trace, int round) {
  for (auto& v : world) {
    const TraceRecord& r = trace.at(round, v.id);
    v.x = r.x;
    v.y = r.y;
    v.speed = r.speed;
  }
}

}  // namespace mmfl
