#include "mmfl/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mmfl/radio.hpp"
#include "mmfl/rng.hpp"

namespace mmfl {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& item : j.items()) {
    if (!known.count(item.key()))
      throw ConfigError("unknown key \"" + item.key() + "\" in section " + where);
  }
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void require_positive(double v, const char* name) {
  if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be > 0");
}

TaskFamily parse_family(const std::string& s) {
  if (s == "quadratic") return TaskFamily::quadratic;
  if (s == "softmax") return TaskFamily::softmax;
  throw ConfigError("unknown task family \"" + s + "\"");
}

TaskSpec parse_task(const json& j, int task_id) {
  reject_unknown(j,
                 {"family", "model_dim", "samples_per_vehicle", "sample_bits", "beta", "theta",
                  "heterogeneity", "test_divergence", "noise_std", "smoothness_max",
                  "strong_convexity_min", "classes", "features"},
                 "tasks[" + std::to_string(task_id - 1) + "]");
  TaskSpec t;
  t.task_id = task_id;
  if (j.contains("family")) t.family = parse_family(j.at("family").get<std::string>());
  get_if(j, "model_dim", t.model_dim);
  get_if(j, "sample_bits", t.sample_bits);
  get_if(j, "beta", t.beta);
  get_if(j, "theta", t.theta);
  get_if(j, "heterogeneity", t.heterogeneity);
  get_if(j, "test_divergence", t.test_divergence);
  get_if(j, "noise_std", t.noise_std);
  get_if(j, "smoothness_max", t.smoothness_max);
  get_if(j, "strong_convexity_min", t.strong_convexity_min);
  get_if(j, "classes", t.classes);
  get_if(j, "features", t.features);
  if (j.contains("samples_per_vehicle")) {
    const auto& s = j.at("samples_per_vehicle");
    if (s.is_array()) {
      t.dataset_sizes = s.get<std::vector<std::int64_t>>();
    } else {
      t.dataset_sizes = {s.get<std::int64_t>()};  // expanded to H entries in finalize()
    }
  }
  t.z_bits = 32LL * t.model_dim;
  return t;
}

}  // namespace

void SimConfig::finalize() {
  p_watt = dbm_to_watt(p_dbm);
  sigma2_watt = dbm_to_watt(noise_dbm);
  h_ref_linear = db_to_linear(h_ref_db);
  for (auto& t : tasks) {
    t.z_bits = 32LL * t.model_dim;
    if (t.dataset_sizes.empty()) t.dataset_sizes = {64};
    if (static_cast<int>(t.dataset_sizes.size()) == 1 && vehicles > 1)
      t.dataset_sizes.assign(vehicles, t.dataset_sizes[0]);
  }
}

void SimConfig::validate() const {
  if (vehicles < 1) throw ConfigError("vehicles must be >= 1");
  if (tasks.empty()) throw ConfigError("at least one task required");
  if (subcarriers < vehicles) throw ConfigError("subcarriers must be >= vehicles");
  if (rounds_max < 1) throw ConfigError("rounds_max must be >= 1");
  require_positive(t_round_s, "t_round_s");
  require_positive(map_extent_m, "map_extent_m");
  require_positive(grid_spacing_m, "grid_spacing_m");
  if (v_min_mps < 0.0) throw ConfigError("v_min_mps must be >= 0");
  if (v_max_mps < v_min_mps) throw ConfigError("v_max_mps must be >= v_min_mps");
  require_positive(fl_lr0, "fl_lr0");
  if (fl_lr_decay < 0.0) throw ConfigError("fl_lr_decay must be >= 0");
  if (fl_batch < 1) throw ConfigError("fl_batch must be >= 1");
  if (convergence_window < 1) throw ConfigError("convergence_window must be >= 1");
  require_positive(bandwidth_hz, "bandwidth_hz");
  if (pathloss_exp < 1.0) throw ConfigError("pathloss_exp must be >= 1");
  require_positive(d_direct_m, "d_direct_m");
  if (xi < 1.0) throw ConfigError("xi must be >= 1");
  require_positive(cpu_hz, "cpu_hz");
  require_positive(cycles_per_bit, "cycles_per_bit");
  require_positive(switch_cap, "switch_cap");
  if (local_iters < 1) throw ConfigError("local_iters must be >= 1");
  require_positive(e_init_j, "e_init_j");
  if (eps_weight < 0.0) throw ConfigError("eps_weight must be >= 0");
  if (br_max_iters < 1) throw ConfigError("br_max_iters must be >= 1");
  if (br_enum_limit < 1) throw ConfigError("br_enum_limit must be >= 1");
  for (const auto& t : tasks) {
    if (t.model_dim < 1) throw ConfigError("task model_dim must be >= 1");
    if (t.z_bits != 32LL * t.model_dim) throw ConfigError("task z_bits must equal 32 * model_dim");
    if (static_cast<int>(t.dataset_sizes.size()) != vehicles)
      throw ConfigError("task dataset_sizes must cover every vehicle");
    for (auto s : t.dataset_sizes)
      if (s < 1) throw ConfigError("task dataset sizes must be >= 1");
    if (t.sample_bits < 1) throw ConfigError("task sample_bits must be >= 1");
    if (!(t.beta > 0.0)) throw ConfigError("task beta must be > 0");
    if (t.heterogeneity < 0.0) throw ConfigError("task heterogeneity must be >= 0");
    if (t.noise_std < 0.0) throw ConfigError("task noise_std must be >= 0");
    if (t.family == TaskFamily::quadratic) {
      if (!(t.strong_convexity_min > 0.0))
        throw ConfigError("task strong_convexity_min must be > 0");
      if (t.smoothness_max < t.strong_convexity_min)
        throw ConfigError("task smoothness_max must be >= strong_convexity_min");
    } else {
      if (t.classes < 2) throw ConfigError("softmax task needs >= 2 classes");
      if (t.features < 1) throw ConfigError("softmax task needs >= 1 feature");
      if (t.model_dim != t.classes * t.features)
        throw ConfigError("softmax model_dim must equal classes * features");
    }
  }
  if (!(rl.gamma > 0.0 && rl.gamma <= 1.0)) throw ConfigError("rl.gamma must be in (0,1]");
  if (rl.gae_smooth < 0.0 || rl.gae_smooth > 1.0)
    throw ConfigError("rl.gae_smooth must be in [0,1]");
  require_positive(rl.eps_clip, "rl.eps_clip");
  if (rl.minibatch < 1) throw ConfigError("rl.minibatch must be >= 1");
  if (rl.episodes < 1) throw ConfigError("rl.episodes must be >= 1");
  if (rl.steps_per_episode < 1) throw ConfigError("rl.steps_per_episode must be >= 1");
  if (rl.update_epochs < 1) throw ConfigError("rl.update_epochs must be >= 1");
  if (rl.hidden.empty()) throw ConfigError("rl.hidden must not be empty");
  for (int hsize : rl.hidden)
    if (hsize < 1) throw ConfigError("rl.hidden sizes must be >= 1");
}

SimConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  reject_unknown(j, {"sim", "radio", "compute", "tasks", "game", "rl"}, "(top level)");

  SimConfig cfg;
  cfg.tasks.clear();

  if (j.contains("sim")) {
    const auto& s = j.at("sim");
    reject_unknown(s,
                   {"vehicles", "subcarriers", "rounds_max", "t_round_s", "map_extent_m",
                    "grid_spacing_m", "v_min_mps", "v_max_mps", "fl_lr0", "fl_lr_decay",
                    "fl_batch", "convergence_window", "convergence_tol", "seed", "threads"},
                   "sim");
    get_if(s, "vehicles", cfg.vehicles);
    get_if(s, "subcarriers", cfg.subcarriers);
    get_if(s, "rounds_max", cfg.rounds_max);
    get_if(s, "t_round_s", cfg.t_round_s);
    get_if(s, "map_extent_m", cfg.map_extent_m);
    get_if(s, "grid_spacing_m", cfg.grid_spacing_m);
    get_if(s, "v_min_mps", cfg.v_min_mps);
    get_if(s, "v_max_mps", cfg.v_max_mps);
    get_if(s, "fl_lr0", cfg.fl_lr0);
    get_if(s, "fl_lr_decay", cfg.fl_lr_decay);
    get_if(s, "fl_batch", cfg.fl_batch);
    get_if(s, "convergence_window", cfg.convergence_window);
    get_if(s, "convergence_tol", cfg.convergence_tol);
    get_if(s, "seed", cfg.seed);
    get_if(s, "threads", cfg.threads);
  }
  if (j.contains("radio")) {
    const auto& r = j.at("radio");
    reject_unknown(
        r, {"bandwidth_hz", "noise_dbm", "h_ref_db", "p_dbm", "pathloss_exp", "d_direct_m", "xi"},
        "radio");
    get_if(r, "bandwidth_hz", cfg.bandwidth_hz);
    get_if(r, "noise_dbm", cfg.noise_dbm);
    get_if(r, "h_ref_db", cfg.h_ref_db);
    get_if(r, "p_dbm", cfg.p_dbm);
    get_if(r, "pathloss_exp", cfg.pathloss_exp);
    get_if(r, "d_direct_m", cfg.d_direct_m);
    get_if(r, "xi", cfg.xi);
  }
  if (j.contains("compute")) {
    const auto& c = j.at("compute");
    reject_unknown(c, {"cpu_hz", "cycles_per_bit", "switch_cap", "local_iters", "e_init_j"},
                   "compute");
    get_if(c, "cpu_hz", cfg.cpu_hz);
    get_if(c, "cycles_per_bit", cfg.cycles_per_bit);
    get_if(c, "switch_cap", cfg.switch_cap);
    get_if(c, "local_iters", cfg.local_iters);
    get_if(c, "e_init_j", cfg.e_init_j);
  }
  if (j.contains("tasks")) {
    const auto& ts = j.at("tasks");
    if (!ts.is_array()) throw ConfigError("tasks must be an array");
    int id = 1;
    for (const auto& tj : ts) cfg.tasks.push_back(parse_task(tj, id++));
  }
  if (cfg.tasks.empty()) cfg.tasks.push_back(TaskSpec{});
  if (j.contains("game")) {
    const auto& g = j.at("game");
    reject_unknown(g,
                   {"eps_weight", "prev_cluster_candidates", "leader_recency_hard", "penalty",
                    "reward_recency_normalized", "br_max_iters", "br_enum_limit"},
                   "game");
    get_if(g, "eps_weight", cfg.eps_weight);
    get_if(g, "prev_cluster_candidates", cfg.prev_cluster_candidates);
    get_if(g, "leader_recency_hard", cfg.leader_recency_hard);
    get_if(g, "penalty", cfg.penalty);
    get_if(g, "reward_recency_normalized", cfg.reward_recency_normalized);
    get_if(g, "br_max_iters", cfg.br_max_iters);
    get_if(g, "br_enum_limit", cfg.br_enum_limit);
  }
  if (j.contains("rl")) {
    const auto& r = j.at("rl");
    reject_unknown(r,
                   {"episodes", "steps_per_episode", "minibatch", "update_epochs", "gamma",
                    "gae_smooth", "eps_clip", "lr_actor", "lr_critic", "hidden"},
                   "rl");
    get_if(r, "episodes", cfg.rl.episodes);
    get_if(r, "steps_per_episode", cfg.rl.steps_per_episode);
    get_if(r, "minibatch", cfg.rl.minibatch);
    get_if(r, "update_epochs", cfg.rl.update_epochs);
    get_if(r, "gamma", cfg.rl.gamma);
    get_if(r, "gae_smooth", cfg.rl.gae_smooth);
    get_if(r, "eps_clip", cfg.rl.eps_clip);
    get_if(r, "lr_actor", cfg.rl.lr_actor);
    get_if(r, "lr_critic", cfg.rl.lr_critic);
    get_if(r, "hidden", cfg.rl.hidden);
  }

  cfg.finalize();
  cfg.validate();
  return cfg;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string dump_config(const SimConfig& cfg) {
  json tasks = json::array();
  for (const auto& t : cfg.tasks) {
    json tj{{"family", t.family == TaskFamily::quadratic ? "quadratic" : "softmax"},
            {"model_dim", t.model_dim},
            {"samples_per_vehicle", t.dataset_sizes},
            {"sample_bits", t.sample_bits},
            {"beta", t.beta},
            {"theta", t.theta},
            {"heterogeneity", t.heterogeneity},
            {"test_divergence", t.test_divergence},
            {"noise_std", t.noise_std},
            {"smoothness_max", t.smoothness_max},
            {"strong_convexity_min", t.strong_convexity_min},
            {"classes", t.classes},
            {"features", t.features}};
    tasks.push_back(tj);
  }
  json j{{"sim",
          {{"vehicles", cfg.vehicles},
           {"subcarriers", cfg.subcarriers},
           {"rounds_max", cfg.rounds_max},
           {"t_round_s", cfg.t_round_s},
           {"map_extent_m", cfg.map_extent_m},
           {"grid_spacing_m", cfg.grid_spacing_m},
           {"v_min_mps", cfg.v_min_mps},
           {"v_max_mps", cfg.v_max_mps},
           {"fl_lr0", cfg.fl_lr0},
           {"fl_lr_decay", cfg.fl_lr_decay},
           {"fl_batch", cfg.fl_batch},
           {"convergence_window", cfg.convergence_window},
           {"convergence_tol", cfg.convergence_tol},
           {"seed", cfg.seed},
           {"threads", cfg.threads}}},
         {"radio",
          {{"bandwidth_hz", cfg.bandwidth_hz},
           {"noise_dbm", cfg.noise_dbm},
           {"h_ref_db", cfg.h_ref_db},
           {"p_dbm", cfg.p_dbm},
           {"pathloss_exp", cfg.pathloss_exp},
           {"d_direct_m", cfg.d_direct_m},
           {"xi", cfg.xi}}},
         {"compute",
          {{"cpu_hz", cfg.cpu_hz},
           {"cycles_per_bit", cfg.cycles_per_bit},
           {"switch_cap", cfg.switch_cap},
           {"local_iters", cfg.local_iters},
           {"e_init_j", cfg.e_init_j}}},
         {"tasks", tasks},
         {"game",
          {{"eps_weight", cfg.eps_weight},
           {"prev_cluster_candidates", cfg.prev_cluster_candidates},
           {"leader_recency_hard", cfg.leader_recency_hard},
           {"penalty", cfg.penalty},
           {"reward_recency_normalized", cfg.reward_recency_normalized},
           {"br_max_iters", cfg.br_max_iters},
           {"br_enum_limit", cfg.br_enum_limit}}},
         {"rl",
          {{"episodes", cfg.rl.episodes},
           {"steps_per_episode", cfg.rl.steps_per_episode},
           {"minibatch", cfg.rl.minibatch},
           {"update_epochs", cfg.rl.update_epochs},
           {"gamma", cfg.rl.gamma},
           {"gae_smooth", cfg.rl.gae_smooth},
           {"eps_clip", cfg.rl.eps_clip},
           {"lr_actor", cfg.rl.lr_actor},
           {"lr_critic", cfg.rl.lr_critic},
           {"hidden", cfg.rl.hidden}}}};
  return j.dump(2) + "\n";
}

Scenario build_scenario(const SimConfig& cfg_in) {
  SimConfig cfg = cfg_in;
  cfg.finalize();
  cfg.validate();

  RngStream rng = RngStream(cfg.seed).fork("scenario");
  const int roads = static_cast<int>(cfg.map_extent_m / cfg.grid_spacing_m) + 1;

  Scenario sc;
  sc.cfg = cfg;
  sc.vehicles.reserve(cfg.vehicles);
  for (int h = 0; h < cfg.vehicles; ++h) {
    VehicleState v;
    v.id = h + 1;
    const bool horizontal = rng.next_u64() & 1;
    const double road = cfg.grid_spacing_m * static_cast<double>(rng.bounded(roads));
    const double offset = rng.uniform(0.0, cfg.map_extent_m);
    if (horizontal) {
      v.x = offset;
      v.y = std::min(road, cfg.map_extent_m);
      v.heading = (rng.next_u64() & 1) ? 0 : 1;  // +x / -x
    } else {
      v.x = std::min(road, cfg.map_extent_m);
      v.y = offset;
      v.heading = (rng.next_u64() & 1) ? 2 : 3;  // +y / -y
    }
    v.speed = rng.uniform(cfg.v_min_mps, cfg.v_max_mps);
    v.e_res = cfg.e_init_j;
    v.last_round.assign(cfg.task_count(), 0);
    sc.vehicles.push_back(std::move(v));
  }
  return sc;
}

}  // namespace mmfl
