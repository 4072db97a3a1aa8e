#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmfl {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class TaskFamily { quadratic, softmax };

// One training task. Model size is fixed at 32 bits per parameter; dataset
// sizes are sample counts and sample_bits maps them to bits for the compute
// cost model.
struct TaskSpec {
  int task_id = 1;  // 1-based
  TaskFamily family = TaskFamily::quadratic;
  int model_dim = 10;
  std::int64_t z_bits = 320;                 // 32 * model_dim
  std::vector<std::int64_t> dataset_sizes;   // per vehicle, samples
  int sample_bits = 64;
  double beta = 1.0;   // efficiency scale
  double theta = 0.0;  // efficiency offset
  double heterogeneity = 0.0;  // 0 = identical per-vehicle distributions
  double test_divergence = 0.0;
  // quadratic family shape
  double noise_std = 0.1;
  double smoothness_max = 4.0;        // largest Hessian eigenvalue
  double strong_convexity_min = 1.0;  // smallest Hessian eigenvalue
  // softmax family shape (model_dim == classes * features)
  int classes = 4;
  int features = 8;

  bool operator==(const TaskSpec&) const = default;
};

struct RlConfig {
  int episodes = 100;
  int steps_per_episode = 4000;
  int minibatch = 256;
  int update_epochs = 4;
  double gamma = 0.99;
  double gae_smooth = 0.95;
  double eps_clip = 0.2;
  double lr_actor = 3e-4;
  double lr_critic = 1e-3;
  std::vector<int> hidden{64, 64};

  bool operator==(const RlConfig&) const = default;
};

// Single source of truth for a run. Defaults follow the reference parameter
// table; everything is overridable from the JSON config file.
struct SimConfig {
  // sim
  int vehicles = 30;     // H
  int subcarriers = 60;  // N
  int rounds_max = 100;  // K_max
  double t_round_s = 30.0;
  double map_extent_m = 400.0;
  double grid_spacing_m = 100.0;
  double v_min_mps = 5.0;
  double v_max_mps = 15.0;
  double fl_lr0 = 0.1;
  double fl_lr_decay = 0.0;
  int fl_batch = 8;
  int convergence_window = 10;
  double convergence_tol = 1e-4;
  std::uint64_t seed = 1;
  int threads = 0;
  // radio
  double bandwidth_hz = 2.0e7;
  double noise_dbm = -104.0;
  double h_ref_db = -34.0;  // dimensionless gain at 1 m, in dB
  double p_dbm = 30.0;
  double pathloss_exp = 2.0;
  double d_direct_m = 100.0;
  double xi = 1.0;
  // compute
  double cpu_hz = 6.0e9;
  double cycles_per_bit = 1000.0;
  double switch_cap = 1.0e-27;
  int local_iters = 5;
  double e_init_j = 3000.0;
  // tasks
  std::vector<TaskSpec> tasks;
  // game / environment
  double eps_weight = 1.0;
  bool prev_cluster_candidates = false;  // restrict leader candidates to last round's cluster
  bool leader_recency_hard = false;      // recency constraint as hard instead of advisory
  double penalty = -10.0;
  bool reward_recency_normalized = false;
  int br_max_iters = 10000;
  int br_enum_limit = 12;
  // rl
  RlConfig rl;

  // cached linear-unit conversions, filled by finalize()
  double p_watt = 0.0;
  double sigma2_watt = 0.0;
  double h_ref_linear = 0.0;

  int task_count() const { return static_cast<int>(tasks.size()); }
  double lr_at(int round) const { return fl_lr0 / (1.0 + fl_lr_decay * round); }
  int batch_at(int /*round*/) const { return fl_batch; }

  void finalize();  // fills caches, expands per-task dataset_sizes
  void validate() const;

  bool operator==(const SimConfig&) const = default;
};

struct VehicleState {
  int id = 0;  // 1-based
  double x = 0.0;
  double y = 0.0;
  double speed = 0.0;
  int heading = 0;  // mobility bookkeeping: 0:+x 1:-x 2:+y 3:-y
  double e_res = 0.0;
  std::vector<int> last_round;  // per task, most recent participation round (0 = never)

  bool operator==(const VehicleState&) const = default;
};

struct Scenario {
  SimConfig cfg;
  std::vector<VehicleState> vehicles;

  bool operator==(const Scenario&) const = default;
};

// Deterministic per seed: equal configs give deeply equal scenarios.
Scenario build_scenario(const SimConfig& cfg);

SimConfig parse_config_text(const std::string& text);
SimConfig load_config(const std::string& path);
std::string dump_config(const SimConfig& cfg);  // resolved config, canonical formatting

}  // namespace mmfl
