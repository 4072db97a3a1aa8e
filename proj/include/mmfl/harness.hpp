#pragma once

#include <cstdint>
#include <string>

#include "mmfl/config.hpp"

namespace mmfl {

enum class RunMode { simulate, train, evaluate, nash, verify_bounds };
enum class SchedulerKind { era, best_response, happo, joint_ppo };

struct ExperimentPlan {
  RunMode mode = RunMode::simulate;
  SimConfig cfg;
  SchedulerKind scheduler = SchedulerKind::era;
  std::uint64_t seed = 0;  // master seed for the run
  std::string out_dir;
  std::string trace_path;       // optional mobility trace
  std::string checkpoint_path;  // policy input for evaluate
};

RunMode parse_mode(const std::string& s);
SchedulerKind parse_scheduler(const std::string& s);

// Executes the plan and writes all artifact files under out_dir.
// Returns a process exit code (0 on success). Output is reproducible from
// (config, seed) alone.
int run_experiment(const ExperimentPlan& plan);

// Log verbosity from MMFL_LOG (quiet|info|debug), default info.
int log_level();
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace mmfl
