// Acceptance suite: one pass/fail line per criterion, exit code equals the
// number of failures. Each criterion pins its tolerances in code.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mmfl/convergence.hpp"
#include "mmfl/env.hpp"
#include "mmfl/game.hpp"
#include "mmfl/harness.hpp"
#include "mmfl/ledger.hpp"
#include "mmfl/marl.hpp"
#include "mmfl/mobility.hpp"
#include "mmfl/scheduler.hpp"

using namespace mmfl;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("%s  criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", id, what.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------- criteria 1+2

SyntheticTask verification_task(bool noise_free) {
  TaskSpec spec;
  spec.model_dim = 10;
  spec.dataset_sizes.assign(10, 64);
  spec.smoothness_max = 4.0;
  spec.strong_convexity_min = 1.0;
  spec.noise_std = noise_free ? 0.0 : 0.25;
  return gen_synthetic_task(spec, 10, RngStream(2024).fork("task"));
}

void criterion_1_and_2() {
  const double t0 = now_seconds();
  const SyntheticTask task = verification_task(false);
  VerifyConfig vcfg;
  vcfg.rounds = 200;
  vcfg.replicates = 50;
  vcfg.batch = 8;
  vcfg.participants = 10;
  vcfg.local_iters = 1;
  vcfg.lr0 = 0.0;  // 1/L
  const VerificationReport rep = verify_descent(task, vcfg, RngStream(2025), true);
  const double elapsed = now_seconds() - t0;

  report(1, rep.round_violation_fraction <= 0.01 && elapsed < 60.0,
         "one-round expected-decrease bound holds in >= 99% of rounds",
         fmt("violating rounds %zu/200, %.1f s", rep.round_violations.size(), elapsed));

  // prefix gaps against the whole-run bound on the same stochastic run
  bool gaps_ok = rep.gap_violations.empty();

  // noise-free closed form: the bound formula must match the unrolled
  // recursion to 1e-10 relative at every prefix
  BoundInputs inputs = rep.inputs;
  inputs.grad_variance = 0.0;
  bool recursion_ok = true;
  double gap = inputs.gap0;
  for (int k = 1; k <= 200; ++k) {
    gap *= (1.0 - inputs.strong_convexity * inputs.lr[k - 1]);
    const double bound = optimality_gap_bound(inputs, k);
    if (std::fabs(bound - gap) > 1e-10 * std::max(std::fabs(gap), 1e-300)) recursion_ok = false;
  }

  // and the noise-free empirical run stays under it
  const SyntheticTask clean = verification_task(true);
  VerifyConfig fb = vcfg;
  fb.full_batch = true;
  fb.replicates = 2;
  const VerificationReport clean_rep = verify_descent(clean, fb, RngStream(2026), false);
  gaps_ok = gaps_ok && clean_rep.gap_violations.empty();

  report(2, gaps_ok && recursion_ok,
         "whole-run gap bound holds for every prefix and matches the recursion",
         fmt("stochastic violations %zu, noise-free violations %zu, recursion %s",
             rep.gap_violations.size(), clean_rep.gap_violations.size(),
             recursion_ok ? "within 1e-10" : "mismatch"));
}

// ------------------------------------------------------------------ criterion 3

void criterion_3() {
  RngStream rng(33);
  int sign_checks = 0;
  int sign_failures = 0;
  int ne_failures = 0;
  int instances = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int H = rng.uniform_int(2, 8);
    const int M = rng.uniform_int(1, 3);
    SimConfig cfg;
    cfg.vehicles = H;
    cfg.subcarriers = std::max(H, 2 * M);
    cfg.t_round_s = (trial % 3 == 0) ? rng.uniform(0.03, 0.08) : 30.0;
    cfg.bandwidth_hz = (trial % 3 == 0) ? 2e4 : 2e7;
    cfg.d_direct_m = 300.0;
    TaskSpec t;
    t.model_dim = 16;
    t.dataset_sizes.assign(H, 8);
    cfg.tasks.assign(M, t);
    for (int m = 0; m < M; ++m) cfg.tasks[m].task_id = m + 1;
    cfg.finalize();

    std::vector<VehicleState> world(H);
    for (int h = 0; h < H; ++h) {
      world[h].id = h + 1;
      world[h].x = rng.uniform(0.0, 250.0);
      world[h].y = rng.uniform(0.0, 250.0);
      world[h].e_res = (rng.next_double() < 0.1) ? 0.01 : cfg.e_init_j;
      world[h].last_round.assign(M, 0);
      for (int m = 0; m < M; ++m) world[h].last_round[m] = rng.uniform_int(0, 4);
    }
    const GameContext ctx{&cfg, &world, 5, nullptr};
    ++instances;

    // random profile plus sampled unilateral deviations
    StrategyProfile p = empty_profile(M);
    for (int h = 0; h < H; ++h) {
      const int pick = rng.uniform_int(0, M);
      if (pick > 0) p.members[pick - 1].push_back(h);
    }
    for (int dev = 0; dev < 20; ++dev) {
      const int m = rng.uniform_int(0, M - 1);
      StrategyProfile q = p;
      q.members[m].clear();
      std::vector<char> taken(H, 0);
      for (int i = 0; i < M; ++i)
        if (i != m)
          for (int h : p.members[i]) taken[h] = 1;
      for (int h = 0; h < H; ++h)
        if (!taken[h] && (rng.next_u64() & 1)) q.members[m].push_back(h);
      const double du = utility(q, m, ctx) - utility(p, m, ctx);
      if (du > 0.0) {
        ++sign_checks;
        if (potential_delta(p, q, m, ctx) <= 0.0) ++sign_failures;
      }
    }

    // best-response dynamics terminates and lands on a verified equilibrium
    try {
      RngStream era_rng = rng.fork("era", trial);
      const StrategyProfile init =
          (trial % 2 == 0) ? empty_profile(M)
                           : profile_from_schedule(era_schedule(5, world, cfg, era_rng));
      const NeResult ne = best_response_dynamics(init, ctx, cfg.br_max_iters, false);
      if (!is_nash_equilibrium(ne.profile, ctx)) ++ne_failures;
    } catch (const std::exception&) {
      ++ne_failures;
    }
  }
  report(3, sign_failures == 0 && ne_failures == 0 && sign_checks > 100,
         "potential sign coupling and verified equilibria on 100 random instances",
         fmt("%d improving deviations, %d sign failures, %d NE failures over %d instances",
             sign_checks, sign_failures, ne_failures, instances));
}

// ------------------------------------------------------------------ criterion 4

void criterion_4() {
  RngStream rng(44);
  int equal_split_losses = 0;
  int brute_mismatch = 0;
  int brute_checked = 0;

  for (int trial = 0; trial < 1000; ++trial) {
    const int sovs = rng.uniform_int(1, 6);
    const int budget_n = sovs + static_cast<int>(rng.bounded(8));
    const int N = std::max(8, budget_n);
    SimConfig cfg;
    cfg.vehicles = sovs + 1;
    cfg.subcarriers = std::max(N, cfg.vehicles);
    TaskSpec t;
    t.model_dim = 10;
    t.dataset_sizes.assign(cfg.vehicles, 8);
    cfg.tasks = {t};
    cfg.finalize();
    const LinkBudget budget = make_link_budget(cfg);

    std::vector<VehicleState> world(cfg.vehicles);
    std::vector<int> members;
    for (int h = 0; h < cfg.vehicles; ++h) {
      world[h].id = h + 1;
      world[h].x = rng.uniform(0.0, 400.0);
      world[h].y = rng.uniform(0.0, 120.0);
      members.push_back(h);
    }
    const std::int64_t bits = 320000;
    const AllocationResult alloc =
        allocate_subcarriers(members, 0, world, budget, bits, budget_n, N);

    // equal split comparison
    double equal_worst = 0.0;
    for (int i = 0; i < sovs; ++i) {
      const int c = budget_n / sovs + (i < budget_n % sovs ? 1 : 0);
      const double rate = tx_rate(static_cast<double>(c) / N, budget,
                                  distance(world[alloc.sov[i]], world[0]));
      equal_worst = std::max(equal_worst, static_cast<double>(bits) / rate);
    }
    if (alloc.max_upload_time > equal_worst + 1e-9) ++equal_split_losses;

    // exhaustive minimax oracle on small instances
    if (sovs <= 3 && budget_n <= 6) {
      ++brute_checked;
      double best = 1e300;
      std::vector<int> counts(sovs, 1);
      std::function<void(int, int)> rec = [&](int idx, int remaining) {
        if (idx == sovs - 1) {
          counts[idx] = remaining;
          double worst = 0.0;
          for (int i = 0; i < sovs; ++i) {
            const double rate = tx_rate(static_cast<double>(counts[i]) / N, budget,
                                        distance(world[alloc.sov[i]], world[0]));
            worst = std::max(worst, static_cast<double>(bits) / rate);
          }
          best = std::min(best, worst);
          return;
        }
        for (int c = 1; c <= remaining - (sovs - 1 - idx); ++c) {
          counts[idx] = c;
          rec(idx + 1, remaining - c);
        }
      };
      rec(0, budget_n);
      if (std::fabs(alloc.max_upload_time - best) > 1e-12 * best) ++brute_mismatch;
    }
  }
  report(4, equal_split_losses == 0 && brute_mismatch == 0,
         "greedy allocation never loses to the equal split and is minimax-exact when small",
         fmt("1000 clusters, %d equal-split losses, %d brute-force mismatches over %d small "
             "instances",
             equal_split_losses, brute_mismatch, brute_checked));
}

// ------------------------------------------------------------------ criterion 5

void criterion_5() {
  RngStream rng(55);
  long steps_done = 0;
  long admitted = 0;
  long rejected = 0;
  int errors = 0;

  for (int block = 0; block < 10 && errors == 0; ++block) {
    SimConfig cfg;
    cfg.vehicles = 8;
    cfg.subcarriers = 8;
    cfg.rounds_max = 25;
    cfg.map_extent_m = 200.0;
    cfg.grid_spacing_m = 50.0;
    cfg.d_direct_m = 300.0;
    cfg.bandwidth_hz = 2e4;
    cfg.t_round_s = (block % 2 == 0) ? 0.08 : 0.05;  // the tight blocks reject more
    cfg.fl_batch = 2;
    cfg.local_iters = 1;
    cfg.convergence_window = 40;
    cfg.e_init_j = (block % 5 == 4) ? 0.5 : 3000.0;  // low-energy blocks exercise (c0)
    TaskSpec t;
    t.model_dim = 16;
    t.dataset_sizes.assign(8, 8);
    cfg.tasks = {t, t};
    cfg.tasks[1].task_id = 2;
    cfg.finalize();

    EnvOptions opts;
    opts.allocator = (block % 3 == 2) ? AllocatorKind::era : AllocatorKind::scored;
    MmflEnv env(build_scenario(cfg), opts, RngStream(7000 + block).fork("env"));
    env.reset();

    for (int step = 0; step < 1000; ++step) {
      std::vector<int> actions(8);
      for (int h = 0; h < 8; ++h) actions[h] = static_cast<int>(rng.bounded(3));
      const std::vector<VehicleState> pre_world = env.world();
      const StepOutcome out = env.step(actions);
      ++steps_done;

      if (out.info.feasible) {
        ++admitted;
        // independent re-validation of the admitted round on the pre-step world
        const RoundAccounting acc =
            compute_accounting(out.info.schedule, pre_world, cfg.tasks, cfg);
        const ConstraintReport rep = validate_schedule(out.info.schedule, acc, pre_world, cfg);
        if (rep.has(Constraint::b0) || rep.has(Constraint::c0) || rep.has(Constraint::d0) ||
            rep.has(Constraint::e0) || rep.has(Constraint::f0) || rep.has(Constraint::g0) ||
            rep.has(Constraint::i0))
          ++errors;
      } else {
        ++rejected;
        // the reject path must penalize everyone and reset the run
        for (double r : out.rewards)
          if (r != cfg.penalty) ++errors;
        if (env.round() != 0) ++errors;
      }
      for (const auto& v : env.world())
        if (v.e_res < 0.0) ++errors;
      if (out.done) env.reset();
    }
  }
  report(5, errors == 0 && steps_done == 10000 && rejected > 0 && admitted > 0,
         "constraint integrity over 10,000 random-scheduler rounds",
         fmt("%ld admitted, %ld rejected, %d integrity errors", admitted, rejected, errors));
}

// ------------------------------------------------------------------ criterion 6

void criterion_6() {
  LinkBudget budget;
  budget.p_watt = dbm_to_watt(30.0);
  budget.h_ref = db_to_linear(-34.0);
  budget.sigma2_watt = dbm_to_watt(-104.0);
  budget.pathloss_exp = 2.0;
  budget.bandwidth_hz = 2.0e7;
  budget.d_direct_m = 100.0;
  const double rate = tx_rate(1.0 / 60.0, budget, 100.0);
  const bool rate_ok = std::fabs(rate - 6.6439e6) <= 0.001 * 6.6439e6;

  ComputeProfile prof;
  prof.local_iters = 5;
  prof.cycles_per_bit = 1e3;
  prof.cpu_hz = 6e9;
  prof.switch_cap = 1e-27;
  TaskSpec task;
  task.task_id = 1;
  task.sample_bits = 1000;
  task.dataset_sizes = {100};  // 1e5 bits
  Schedule sched(1, 1, 1, 2);
  sched.assign_at(0, 0) = 1;
  const ComputeCost cost = comp_cost(sched, 0, {task}, prof);
  const bool cost_ok = std::fabs(cost.time_s - 1.0 / 12.0) <= 1e-9 * (1.0 / 12.0) &&
                       std::fabs(cost.energy_j - 18.0) <= 1e-9 * 18.0;

  RngStream rng(66);
  int identity_failures = 0;
  for (int i = 0; i < 10000; ++i) {
    ComputeProfile p;
    p.cpu_hz = rng.uniform(1e8, 1e10);
    p.cycles_per_bit = rng.uniform(1.0, 1e4);
    p.switch_cap = rng.uniform(1e-28, 1e-26);
    p.local_iters = rng.uniform_int(1, 20);
    TaskSpec t;
    t.task_id = 1;
    t.sample_bits = rng.uniform_int(8, 4096);
    t.dataset_sizes = {rng.uniform_int(1, 100000)};
    const ComputeCost c = comp_cost(sched, 0, {t}, p);
    const double product = comp_power(p) * c.time_s;
    if (std::fabs(c.energy_j - product) > 1e-12 * std::fabs(product)) ++identity_failures;
  }
  report(6, rate_ok && cost_ok && identity_failures == 0,
         "radio and compute formulas reproduce the pinned reference values",
         fmt("rate %.5g bit/s, compute (%.6f s, %.9g J), %d identity failures", rate, cost.time_s,
             cost.energy_j, identity_failures));
}

// ------------------------------------------------------------------ criterion 7

void criterion_7() {
  RngStream rng(77);
  int nets_checked = 0;
  int grad_failures = 0;

  auto finite_diff = [](Mlp net, const std::function<double(const Mlp&)>& objective,
                        double step) {
    Vec flat = net.flatten();
    Vec grad(flat.size(), 0.0);
    for (size_t i = 0; i < flat.size(); ++i) {
      const double saved = flat[i];
      flat[i] = saved + step;
      net.unflatten(flat);
      const double up = objective(net);
      flat[i] = saved - step;
      net.unflatten(flat);
      const double down = objective(net);
      flat[i] = saved;
      grad[i] = (up - down) / (2.0 * step);
    }
    return grad;
  };
  auto flat_grad = [](const Mlp& net, const MlpGrad& g) {
    Vec out;
    out.reserve(net.param_count());
    for (const auto& m : g.w) out.insert(out.end(), m.a.begin(), m.a.end());
    for (const auto& v : g.b) out.insert(out.end(), v.begin(), v.end());
    return out;
  };
  auto close = [](const Vec& a, const Vec& b) {
    for (size_t i = 0; i < a.size(); ++i) {
      const double scale = std::max({std::fabs(a[i]), std::fabs(b[i]), 1e-6});
      if (std::fabs(a[i] - b[i]) / scale > 1e-4) return false;
    }
    return true;
  };

  for (int trial = 0; trial < 100; ++trial) {
    const int in = rng.uniform_int(2, 6);
    const int hidden = rng.uniform_int(4, 10);
    const int out = rng.uniform_int(2, 5);

    // policy objective: clipped-ratio surrogate at the collecting policy
    {
      Mlp actor({in, hidden, out}, rng.fork("actor", trial), 0.5);
      Vec obs(in);
      for (auto& v : obs) v = rng.normal();
      const int action = static_cast<int>(rng.bounded(out));
      const double weight = rng.normal();
      const double old_logp = log_prob_of(actor.forward(obs), action);
      auto objective = [&](const Mlp& n) {
        const double lp = log_prob_of(n.forward(obs), action);
        const double ratio = std::exp(lp - old_logp);
        const double clipped = std::clamp(ratio, 0.8, 1.2);
        return std::min(ratio * weight, clipped * weight);
      };
      Mlp::Cache cache;
      const Vec logits = actor.forward_cached(obs, cache);
      Vec upstream = softmax(logits);
      for (auto& v : upstream) v = -v;
      upstream[action] += 1.0;
      for (auto& v : upstream) v *= weight;  // ratio == 1 at the collecting policy
      MlpGrad grad = actor.zero_grad();
      actor.backward(cache, upstream, grad);
      ++nets_checked;
      if (!close(finite_diff(actor, objective, 1e-5), flat_grad(actor, grad))) ++grad_failures;
    }

    // value objective: squared regression error
    {
      Mlp critic({in, hidden, 1}, rng.fork("critic", trial), 1.0);
      Vec obs(in);
      for (auto& v : obs) v = rng.normal();
      const double target = rng.normal();
      auto objective = [&](const Mlp& n) {
        const double v = n.forward(obs)[0];
        return (v - target) * (v - target);
      };
      Mlp::Cache cache;
      const double v = critic.forward_cached(obs, cache)[0];
      MlpGrad grad = critic.zero_grad();
      critic.backward(cache, {2.0 * (v - target)}, grad);
      ++nets_checked;
      if (!close(finite_diff(critic, objective, 1e-5), flat_grad(critic, grad))) ++grad_failures;
    }
  }
  report(7, grad_failures == 0,
         "policy and value gradients match central finite differences",
         fmt("%d networks checked, %d failures", nets_checked, grad_failures));
}

// ------------------------------------------------------------------ criterion 8

SimConfig desk_scale_config() {
  SimConfig cfg;
  cfg.vehicles = 8;
  cfg.subcarriers = 8;
  cfg.rounds_max = 32;
  cfg.t_round_s = 0.08;
  cfg.map_extent_m = 200.0;
  cfg.grid_spacing_m = 50.0;
  cfg.v_min_mps = 5.0;
  cfg.v_max_mps = 15.0;
  cfg.d_direct_m = 300.0;
  cfg.bandwidth_hz = 2.0e4;
  cfg.fl_batch = 4;
  cfg.local_iters = 1;
  cfg.convergence_window = 40;  // beyond rounds_max: episodes always run 32 rounds
  TaskSpec t;
  t.model_dim = 64;
  t.dataset_sizes.assign(8, 16);
  cfg.tasks = {t, t};
  cfg.tasks[1].task_id = 2;
  cfg.rl.episodes = 100;
  cfg.rl.steps_per_episode = 512;
  cfg.rl.minibatch = 128;
  cfg.rl.update_epochs = 4;
  cfg.rl.lr_actor = 3e-4;
  cfg.rl.lr_critic = 1e-3;
  cfg.finalize();
  return cfg;
}

void criterion_8() {
  SimConfig cfg = desk_scale_config();
  int wins = 0;
  int feasible_ok = 0;
  double worst_seed_time = 0.0;
  std::string detail;

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cfg.seed = seed;
    RngStream master(seed);
    const double t0 = now_seconds();
    MmflEnv env(build_scenario(cfg), EnvOptions{}, master.fork("env"));
    const TrainResult trained = happo_train(env, cfg, master.fork("train"), true);
    const double elapsed = now_seconds() - t0;
    worst_seed_time = std::max(worst_seed_time, elapsed);

    double tail_return = 0.0, tail_feasible = 0.0;
    const int n = static_cast<int>(trained.episode_return.size());
    for (int i = n - 10; i < n; ++i) {
      tail_return += trained.episode_return[i];
      tail_feasible += trained.feasible_fraction[i];
    }
    tail_return /= 10.0;
    tail_feasible /= 10.0;

    // the equal-resource baseline through the same environment and seed,
    // scored over the same number of env steps
    EnvOptions era_opts;
    era_opts.allocator = AllocatorKind::era;
    MmflEnv era_env(build_scenario(cfg), era_opts, master.fork("env"));
    const int windows = cfg.rl.steps_per_episode / cfg.rounds_max;
    const EvalResult era = run_era_actions(era_env, windows, cfg.rounds_max);
    const double era_return = era.mean_return * windows;  // per 512-step window

    if (tail_return >= era_return) ++wins;
    if (tail_feasible >= 0.9) ++feasible_ok;
    detail += fmt("seed %llu: happo %.0f vs era %.0f, feasible %.3f, %.0f s; ",
                  static_cast<unsigned long long>(seed), tail_return, era_return, tail_feasible,
                  elapsed);
  }
  report(8, wins >= 3 && feasible_ok == 5 && worst_seed_time < 900.0,
         "desk-scale sequential-update training beats the equal-resource baseline",
         fmt("%d/5 wins, %d/5 seeds with feasible >= 0.9; %s", wins, feasible_ok,
             detail.c_str()));
}

// ------------------------------------------------------------------ criterion 9

void criterion_9() {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "mmfl_acceptance_det";
  fs::remove_all(base);

  SimConfig cfg;
  cfg.vehicles = 6;
  cfg.subcarriers = 12;
  cfg.rounds_max = 10;
  cfg.fl_batch = 4;
  TaskSpec t;
  t.model_dim = 8;
  t.dataset_sizes.assign(6, 16);
  TaskSpec s = t;
  s.family = TaskFamily::softmax;
  s.model_dim = 12;
  s.classes = 3;
  s.features = 4;
  s.task_id = 2;
  cfg.tasks = {t, s};
  cfg.rl.episodes = 2;
  cfg.rl.steps_per_episode = 32;
  cfg.rl.minibatch = 16;
  cfg.rl.update_epochs = 2;
  cfg.finalize();

  auto run_all = [&](const fs::path& dir) {
    for (const auto& [mode, scheduler] :
         std::vector<std::pair<RunMode, SchedulerKind>>{
             {RunMode::simulate, SchedulerKind::era},
             {RunMode::train, SchedulerKind::happo},
             {RunMode::nash, SchedulerKind::best_response},
             {RunMode::verify_bounds, SchedulerKind::era}}) {
      ExperimentPlan plan;
      plan.mode = mode;
      plan.cfg = cfg;
      plan.scheduler = scheduler;
      plan.seed = 11;
      plan.out_dir = (dir / std::to_string(static_cast<int>(mode))).string();
      if (run_experiment(plan) != 0) return false;
    }
    return true;
  };

  bool ok = run_all(base / "a") && run_all(base / "b");
  int files = 0;
  if (ok) {
    for (const auto& entry : fs::recursive_directory_iterator(base / "a")) {
      if (!entry.is_regular_file()) continue;
      ++files;
      const fs::path twin = base / "b" / fs::relative(entry.path(), base / "a");
      std::ifstream fa(entry.path(), std::ios::binary);
      std::ifstream fb(twin, std::ios::binary);
      std::stringstream sa, sb;
      sa << fa.rdbuf();
      sb << fb.rdbuf();
      if (sa.str() != sb.str() || sa.str().empty()) {
        ok = false;
        break;
      }
    }
  }
  report(9, ok && files >= 10, "identical config and seed give byte-identical artifacts",
         fmt("%d files compared across simulate/train/nash/verify-bounds", files));
}

// ----------------------------------------------------------------- criterion 10

void criterion_10() {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "mmfl_acceptance_xi";
  fs::remove_all(base);

  SimConfig cfg;
  cfg.vehicles = 12;
  cfg.subcarriers = 24;
  cfg.rounds_max = 40;
  cfg.t_round_s = 30.0;
  cfg.map_extent_m = 600.0;
  cfg.grid_spacing_m = 100.0;
  cfg.d_direct_m = 100.0;  // long links go indirect
  cfg.bandwidth_hz = 2e5;
  cfg.fl_batch = 4;
  cfg.local_iters = 1;
  cfg.convergence_window = 60;
  TaskSpec t;
  t.model_dim = 128;
  t.dataset_sizes.assign(12, 8);
  cfg.tasks = {t, t, t};
  cfg.tasks[1].task_id = 2;
  cfg.tasks[2].task_id = 3;

  const double xis[3] = {1.0, 2.0, 3.0};
  double mean_t[3] = {0.0, 0.0, 0.0};
  bool ran = true;
  for (int xi_idx = 0; xi_idx < 3; ++xi_idx) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      SimConfig c2 = cfg;
      c2.xi = xis[xi_idx];
      c2.finalize();
      ExperimentPlan plan;
      plan.mode = RunMode::simulate;
      plan.cfg = c2;
      plan.scheduler = SchedulerKind::era;
      plan.seed = seed;
      plan.out_dir =
          (base / fmt("xi%d_seed%llu", xi_idx, static_cast<unsigned long long>(seed))).string();
      if (run_experiment(plan) != 0) ran = false;
      std::ifstream in(fs::path(plan.out_dir) / "summary.json");
      nlohmann::json summary;
      in >> summary;
      mean_t[xi_idx] += summary.at("max_round_time_s").get<double>() / 3.0;
    }
  }
  const bool monotone = mean_t[0] <= mean_t[1] + 1e-12 && mean_t[1] <= mean_t[2] + 1e-12;
  report(10, ran && monotone,
         "round times under equal-resource scheduling rise with the indirect cost factor",
         fmt("mean max T_k: %.4f (xi=1) %.4f (xi=2) %.4f (xi=3)", mean_t[0], mean_t[1],
             mean_t[2]));
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion_1_and_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  std::printf("%s: %d criterion failure(s)\n", failures == 0 ? "SUCCESS" : "FAILURE", failures);
  return failures;
}
