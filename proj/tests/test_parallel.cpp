// Serial-vs-parallel consistency for the OpenMP kernels. Slot-output kernels
// must match bitwise; gradient reductions may differ by rounding only.

#include <cmath>

#include "doctest.h"
#include "mmfl/convergence.hpp"
#include "mmfl/fl.hpp"
#include "mmfl/game.hpp"
#include "mmfl/marl.hpp"
#include "mmfl/parallel.hpp"
#include "mmfl/scheduler.hpp"

using namespace mmfl;

namespace {

SimConfig fixture_config(int vehicles, int tasks) {
  SimConfig cfg;
  cfg.vehicles = vehicles;
  cfg.subcarriers = std::max(vehicles, 2 * tasks);
  TaskSpec t;
  t.model_dim = 6;
  t.dataset_sizes.assign(vehicles, 16);
  cfg.tasks.assign(tasks, t);
  for (int m = 0; m < tasks; ++m) cfg.tasks[m].task_id = m + 1;
  cfg.finalize();
  return cfg;
}

}  // namespace

TEST_CASE("verification replicates are bitwise identical serial vs parallel") {
  TaskSpec spec;
  spec.model_dim = 8;
  spec.dataset_sizes.assign(6, 32);
  const SyntheticTask task = gen_synthetic_task(spec, 6, RngStream(1).fork("t"));
  VerifyConfig vcfg;
  vcfg.rounds = 30;
  vcfg.replicates = 16;
  vcfg.batch = 4;
  const VerificationReport serial = verify_descent(task, vcfg, RngStream(2), false);
  const VerificationReport parallel = verify_descent(task, vcfg, RngStream(2), true);
  CHECK(serial.empirical_curve == parallel.empirical_curve);
  CHECK(serial.bound_curve == parallel.bound_curve);
  CHECK(serial.round_violations == parallel.round_violations);
}

TEST_CASE("fl rounds are bitwise identical serial vs parallel") {
  const SimConfig cfg = fixture_config(8, 2);
  FlState a = FlState::create(cfg, RngStream(5).fork("data"));
  FlState b = FlState::create(cfg, RngStream(5).fork("data"));
  for (int k = 1; k <= 5; ++k) {
    Schedule sched(k, 8, 2, cfg.subcarriers);
    for (int h = 0; h < 8; ++h) sched.assign_at(h, h % 2) = 1;
    sched.leader_at(0, 0) = 1;
    sched.leader_at(1, 1) = 1;
    run_fl_round(a, sched, cfg, RngStream(6), false);
    run_fl_round(b, sched, cfg, RngStream(6), true);
  }
  for (int m = 0; m < 2; ++m) {
    CHECK(a.global_model[m].params == b.global_model[m].params);
    CHECK(a.loss_history[m] == b.loss_history[m]);
  }
}

TEST_CASE("best-response enumeration is identical serial vs parallel") {
  const SimConfig cfg = fixture_config(7, 2);
  std::vector<VehicleState> world(7);
  RngStream rng(7);
  for (int h = 0; h < 7; ++h) {
    world[h].id = h + 1;
    world[h].x = rng.uniform(0.0, 250.0);
    world[h].y = rng.uniform(0.0, 250.0);
    world[h].e_res = cfg.e_init_j;
    world[h].last_round = {0, 0};
  }
  const GameContext ctx{&cfg, &world, 1, nullptr};
  const NeResult serial = best_response_dynamics(empty_profile(2), ctx, 10000, false);
  const NeResult parallel = best_response_dynamics(empty_profile(2), ctx, 10000, true);
  CHECK(serial.profile == parallel.profile);
  CHECK(serial.potential_trace == parallel.potential_trace);
}

TEST_CASE("minibatch gradient reduction agrees within rounding") {
  RngStream rng(9);
  Mlp serial_net({6, 32, 4}, rng.fork("net"), 0.01);
  Mlp parallel_net = serial_net;
  Adam serial_opt, parallel_opt;
  serial_opt.lr = parallel_opt.lr = 1e-3;
  serial_opt.init(serial_net);
  parallel_opt.init(parallel_net);

  const int T = 256;
  std::vector<Vec> obs(T, Vec(6));
  std::vector<int> actions(T);
  Vec old_logp(T), weight(T);
  for (int t = 0; t < T; ++t) {
    for (auto& v : obs[t]) v = rng.normal();
    actions[t] = static_cast<int>(rng.bounded(4));
    old_logp[t] = log_prob_of(serial_net.forward(obs[t]), actions[t]);
    weight[t] = rng.normal();
  }
  ppo_clip_update(serial_net, serial_opt, obs, actions, old_logp, weight, 0.2, 2, 64,
                  RngStream(10), false);
  ppo_clip_update(parallel_net, parallel_opt, obs, actions, old_logp, weight, 0.2, 2, 64,
                  RngStream(10), true);
  const Vec a = serial_net.flatten();
  const Vec b = parallel_net.flatten();
  for (size_t i = 0; i < a.size(); ++i)
    CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9));
}

TEST_CASE("thread configuration is visible") {
  set_threads(2);
  CHECK(configured_threads() == 2);
#ifdef _OPENMP
  CHECK(effective_threads() == 2);
#endif
  set_threads(0);
  CHECK(effective_threads() >= 1);
}
