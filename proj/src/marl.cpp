#include "mmfl/marl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "mmfl/parallel.hpp"

namespace mmfl {

Vec discounted_returns(const std::vector<double>& rewards, double gamma) {
  const int T = static_cast<int>(rewards.size());
  Vec out(T, 0.0);
  double acc = 0.0;
  for (int t = T - 1; t >= 0; --t) {
    acc = rewards[t] + gamma * acc;
    out[t] = acc;
  }
  return out;
}

Vec gae_advantages(const std::vector<double>& rewards, const Vec& values, double gamma,
                   double smooth) {
  const int T = static_cast<int>(rewards.size());
  if (static_cast<int>(values.size()) != T + 1)
    throw MlpError("gae_advantages: values must have length T+1");
  Vec adv(T, 0.0);
  double acc = 0.0;
  for (int t = T - 1; t >= 0; --t) {
    const double delta = rewards[t] + gamma * values[t + 1] - values[t];
    acc = delta + gamma * smooth * acc;
    adv[t] = acc;
  }
  return adv;
}

namespace {

std::vector<int> random_permutation(int n, RngStream& rng) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i >= 1; --i) {
    const int j = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

void normalize(Vec& v) {
  if (v.empty()) return;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  const double sd = std::sqrt(var) + 1e-8;
  for (double& x : v) x = (x - mean) / sd;
}

// Per-sample clipped-objective gradient accumulated into per-thread buffers,
// reduced in thread order.
struct BatchGradResult {
  MlpGrad grad;
  double objective = 0.0;
};

template <typename UpstreamFn>
BatchGradResult batch_gradient(const Mlp& net, const std::vector<int>& indices, size_t begin,
                               size_t end, bool parallel, UpstreamFn&& fn) {
  const int nthreads = parallel ? effective_threads() : 1;
  std::vector<MlpGrad> partial;
  partial.reserve(nthreads);
  for (int i = 0; i < nthreads; ++i) partial.push_back(net.zero_grad());
  std::vector<double> obj(nthreads, 0.0);
  const long long count = static_cast<long long>(end - begin);
#ifdef _OPENMP
#pragma omp parallel num_threads(nthreads) if (parallel)
#endif
  {
#ifdef _OPENMP
    const int tid = omp_get_thread_num();
#else
    const int tid = 0;
#endif
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
    for (long long i = 0; i < count; ++i)
      obj[tid] += fn(indices[begin + static_cast<size_t>(i)], partial[tid]);
  }
  BatchGradResult out{std::move(partial[0]), obj[0]};
  for (int t = 1; t < nthreads; ++t) {
    out.grad.add(partial[t]);
    out.objective += obj[t];
  }
  return out;
}

}  // namespace

PpoUpdateStats ppo_clip_update(Mlp& actor, Adam& opt, const std::vector<Vec>& obs,
                               const std::vector<int>& actions, const Vec& old_logp,
                               const Vec& weight, double eps_clip, int epochs, int minibatch,
                               RngStream shuffle_rng, bool parallel) {
  const int T = static_cast<int>(obs.size());
  if (T == 0) throw MlpError("ppo_clip_update: empty batch");
  PpoUpdateStats stats;

  // objective of the collecting policy (ratio == 1 everywhere)
  for (int t = 0; t < T; ++t) stats.objective_start += weight[t];
  stats.objective_start /= T;

  std::vector<int> indices(T);
  std::iota(indices.begin(), indices.end(), 0);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (int i = T - 1; i >= 1; --i) {
      const int j = static_cast<int>(shuffle_rng.bounded(static_cast<std::uint64_t>(i) + 1));
      std::swap(indices[i], indices[j]);
    }
    for (int start = 0; start < T; start += minibatch) {
      const size_t stop = std::min<size_t>(start + minibatch, T);
      const double inv = 1.0 / static_cast<double>(stop - start);
      BatchGradResult res = batch_gradient(
          actor, indices, start, stop, parallel, [&](int t, MlpGrad& grad) {
            Mlp::Cache cache;
            const Vec logits = actor.forward_cached(obs[t], cache);
            const double lp = log_prob_of(logits, actions[t]);
            const double ratio = std::exp(lp - old_logp[t]);
            const double clipped = std::clamp(ratio, 1.0 - eps_clip, 1.0 + eps_clip);
            const double v1 = ratio * weight[t];
            const double v2 = clipped * weight[t];
            if (v1 <= v2) {
              // unclipped branch active: d/d logits = ratio * w * (onehot - softmax)
              Vec up = softmax(logits);
              for (auto& v : up) v = -v;
              up[actions[t]] += 1.0;
              const double coeff = ratio * weight[t] * inv;
              for (auto& v : up) v *= coeff;
              actor.backward(cache, up, grad);
            }
            return std::min(v1, v2) * inv;
          });
      if (!res.grad.finite()) {
        ++stats.nan_skips;
        continue;
      }
      res.grad.scale(-1.0);  // ascend
      opt.step(actor, res.grad);
    }
  }
  return stats;
}

namespace {

struct Trainer {
  MmflEnv& env;
  const SimConfig& cfg;
  bool joint = false;
  bool parallel = false;
  std::ostream* log = nullptr;

  int agents() const { return env.agent_count(); }
  int actions_per_agent() const { return env.action_count(); }

  TrainResult run(RngStream stream) {
    const RlConfig& rl = cfg.rl;
    const int H = agents();
    const int A = actions_per_agent();
    const int obs_dim = env.observation_dim();
    const int joint_dim = H * obs_dim;

    TrainResult result;
    result.joint = joint;
    std::vector<Adam> actor_opt;
    if (joint) {
      std::vector<int> dims{joint_dim};
      dims.insert(dims.end(), rl.hidden.begin(), rl.hidden.end());
      dims.push_back(H * A);
      result.actors.emplace_back(dims, stream.fork("actor", 0), 0.01);
      actor_opt.resize(1);
    } else {
      for (int h = 0; h < H; ++h) {
        std::vector<int> dims{obs_dim};
        dims.insert(dims.end(), rl.hidden.begin(), rl.hidden.end());
        dims.push_back(A);
        result.actors.emplace_back(dims, stream.fork("actor", static_cast<std::uint64_t>(h)),
                                   0.01);
      }
      actor_opt.resize(H);
    }
    {
      std::vector<int> dims{joint_dim};
      dims.insert(dims.end(), rl.hidden.begin(), rl.hidden.end());
      dims.push_back(1);
      result.critic = Mlp(dims, stream.fork("critic"), 1.0);
    }
    for (size_t i = 0; i < result.actors.size(); ++i) {
      actor_opt[i].lr = rl.lr_actor;
      actor_opt[i].init(result.actors[i]);
    }
    Adam critic_opt;
    critic_opt.lr = rl.lr_critic;
    critic_opt.init(result.critic);

    for (int ep = 0; ep < rl.episodes; ++ep) {
      RngStream act_rng = stream.fork("rollout", static_cast<std::uint64_t>(ep));
      RolloutBatch batch = collect(result, rl.steps_per_episode, act_rng);

      double ep_return = 0.0;
      int feasible_steps = 0;
      for (int t = 0; t < batch.steps; ++t) {
        ep_return += batch.team_reward[t];
        feasible_steps += batch.feasible[t];
      }
      result.episode_return.push_back(ep_return);
      result.feasible_fraction.push_back(static_cast<double>(feasible_steps) / batch.steps);

      Vec adv = gae_advantages(batch.team_reward, batch.values, rl.gamma, rl.gae_smooth);
      normalize(adv);

      RngStream update_rng = stream.fork("update", static_cast<std::uint64_t>(ep));
      if (joint) {
        update_joint(result, actor_opt[0], batch, adv, update_rng);
      } else {
        update_sequential(result, actor_opt, batch, adv, update_rng);
      }
      update_critic(result, critic_opt, batch, update_rng);

      if (log) {
        (*log) << "episode " << ep << " return " << ep_return << " feasible "
               << result.feasible_fraction.back() << "\n";
      }
    }
    return result;
  }

  RolloutBatch collect(const TrainResult& nets, int steps, RngStream& act_rng) {
    const int H = agents();
    const int A = actions_per_agent();
    RolloutBatch batch;
    batch.steps = steps;
    batch.agents = H;
    batch.obs.resize(steps);
    batch.global_obs.resize(steps);
    batch.actions.assign(steps, std::vector<int>(H, 0));
    batch.logp.assign(steps, std::vector<double>(H, 0.0));
    batch.local_reward.assign(steps, std::vector<double>(H, 0.0));
    batch.team_reward.assign(steps, 0.0);
    batch.values.assign(steps + 1, 0.0);
    batch.feasible.assign(steps, 0);
    batch.done.assign(steps, 0);

    env.reset();
    for (int t = 0; t < steps; ++t) {
      std::vector<Vec> obs;
      obs.reserve(H);
      for (int h = 0; h < H; ++h) obs.push_back(env.observe(h));
      Vec global = env.joint_observation();
      batch.values[t] = nets.critic.forward(global)[0];

      Vec joint_logits;
      if (joint) joint_logits = nets.actors[0].forward(global);
      for (int h = 0; h < H; ++h) {
        Vec logits;
        if (joint) {
          logits.assign(joint_logits.begin() + static_cast<long>(h) * A,
                        joint_logits.begin() + static_cast<long>(h + 1) * A);
        } else {
          logits = nets.actors[h].forward(obs[h]);
        }
        const auto [action, lp] = categorical_sample(logits, act_rng);
        batch.actions[t][h] = action;
        batch.logp[t][h] = lp;
      }
      batch.obs[t] = std::move(obs);
      batch.global_obs[t] = std::move(global);

      StepOutcome out = env.step(batch.actions[t]);
      double team = 0.0;
      for (double r : out.rewards) team += r;
      batch.local_reward[t] = out.rewards;
      batch.team_reward[t] = team;
      batch.feasible[t] = out.info.feasible ? 1 : 0;
      batch.done[t] = out.done ? 1 : 0;
      if (out.done) env.reset();
    }
    batch.values[steps] = nets.critic.forward(env.joint_observation())[0];
    return batch;
  }

  void update_sequential(TrainResult& nets, std::vector<Adam>& opts, const RolloutBatch& batch,
                         const Vec& adv, RngStream& update_rng) {
    const int H = agents();
    const int T = batch.steps;
    RngStream perm_rng = update_rng.fork("perm");
    const std::vector<int> perm = random_permutation(H, perm_rng);

    Vec m_factor = adv;
    for (int slot = 0; slot < H; ++slot) {
      const int h = perm[slot];
      std::vector<Vec> obs(T);
      std::vector<int> actions(T);
      Vec old_logp(T);
      for (int t = 0; t < T; ++t) {
        obs[t] = batch.obs[t][h];
        actions[t] = batch.actions[t][h];
        old_logp[t] = batch.logp[t][h];
      }
      ppo_clip_update(nets.actors[h], opts[h], obs, actions, old_logp, m_factor, cfg.rl.eps_clip,
                      cfg.rl.update_epochs, cfg.rl.minibatch,
                      update_rng.fork("shuffle", static_cast<std::uint64_t>(h)), parallel);
      if (slot + 1 < H) {
        // compound the updated agent's ratio into the advantage slot
        std::vector<double> ratio(T, 1.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
        for (int t = 0; t < T; ++t) {
          const Vec logits = nets.actors[h].forward(obs[t]);
          ratio[t] = std::exp(log_prob_of(logits, actions[t]) - old_logp[t]);
        }
        for (int t = 0; t < T; ++t) m_factor[t] *= ratio[t];
      }
    }
  }

  void update_joint(TrainResult& nets, Adam& opt, const RolloutBatch& batch, const Vec& adv,
                    RngStream& update_rng) {
    const int H = agents();
    const int A = actions_per_agent();
    const int T = batch.steps;
    Vec old_logp(T, 0.0);
    for (int t = 0; t < T; ++t)
      for (int h = 0; h < H; ++h) old_logp[t] += batch.logp[t][h];

    Mlp& actor = nets.actors[0];
    std::vector<int> indices(T);
    std::iota(indices.begin(), indices.end(), 0);
    RngStream shuffle_rng = update_rng.fork("shuffle", 0);
    for (int epoch = 0; epoch < cfg.rl.update_epochs; ++epoch) {
      for (int i = T - 1; i >= 1; --i) {
        const int j = static_cast<int>(shuffle_rng.bounded(static_cast<std::uint64_t>(i) + 1));
        std::swap(indices[i], indices[j]);
      }
      for (int start = 0; start < T; start += cfg.rl.minibatch) {
        const size_t stop = std::min<size_t>(start + cfg.rl.minibatch, T);
        const double inv = 1.0 / static_cast<double>(stop - start);
        BatchGradResult res = batch_gradient(
            actor, indices, start, stop, parallel, [&](int t, MlpGrad& grad) {
              Mlp::Cache cache;
              const Vec logits = actor.forward_cached(batch.global_obs[t], cache);
              double lp = 0.0;
              for (int h = 0; h < H; ++h) {
                Vec head(logits.begin() + static_cast<long>(h) * A,
                         logits.begin() + static_cast<long>(h + 1) * A);
                lp += log_prob_of(head, batch.actions[t][h]);
              }
              const double ratio = std::exp(lp - old_logp[t]);
              const double clipped = std::clamp(ratio, 1.0 - cfg.rl.eps_clip, 1.0 + cfg.rl.eps_clip);
              const double v1 = ratio * adv[t];
              const double v2 = clipped * adv[t];
              if (v1 <= v2) {
                Vec up(H * A, 0.0);
                const double coeff = ratio * adv[t] * inv;
                for (int h = 0; h < H; ++h) {
                  Vec head(logits.begin() + static_cast<long>(h) * A,
                           logits.begin() + static_cast<long>(h + 1) * A);
                  Vec p = softmax(head);
                  for (auto& v : p) v = -v;
                  p[batch.actions[t][h]] += 1.0;
                  for (int a = 0; a < A; ++a) up[h * A + a] = p[a] * coeff;
                }
                actor.backward(cache, up, grad);
              }
              return std::min(v1, v2) * inv;
            });
        if (!res.grad.finite()) continue;
        res.grad.scale(-1.0);
        opt.step(actor, res.grad);
      }
    }
  }

  void update_critic(TrainResult& nets, Adam& opt, const RolloutBatch& batch,
                     RngStream& update_rng) {
    const int T = batch.steps;
    const Vec targets = discounted_returns(batch.team_reward, cfg.rl.gamma);
    std::vector<int> indices(T);
    std::iota(indices.begin(), indices.end(), 0);
    RngStream shuffle_rng = update_rng.fork("vshuffle");
    for (int epoch = 0; epoch < cfg.rl.update_epochs; ++epoch) {
      for (int i = T - 1; i >= 1; --i) {
        const int j = static_cast<int>(shuffle_rng.bounded(static_cast<std::uint64_t>(i) + 1));
        std::swap(indices[i], indices[j]);
      }
      for (int start = 0; start < T; start += cfg.rl.minibatch) {
        const size_t stop = std::min<size_t>(start + cfg.rl.minibatch, T);
        const double inv = 1.0 / static_cast<double>(stop - start);
        BatchGradResult res = batch_gradient(
            nets.critic, indices, start, stop, parallel, [&](int t, MlpGrad& grad) {
              Mlp::Cache cache;
              const double v = nets.critic.forward_cached(batch.global_obs[t], cache)[0];
              const double err = v - targets[t];
              Vec up{2.0 * err * inv};
              nets.critic.backward(cache, up, grad);
              return err * err * inv;
            });
        if (!res.grad.finite()) continue;
        opt.step(nets.critic, res.grad);  // descent on squared error
      }
    }
  }
};

}  // namespace

TrainResult happo_train(MmflEnv& env, const SimConfig& cfg, RngStream stream, bool parallel,
                        std::ostream* log) {
  Trainer trainer{env, cfg, false, parallel, log};
  return trainer.run(stream);
}

TrainResult joint_ppo_train(MmflEnv& env, const SimConfig& cfg, RngStream stream, bool parallel,
                            std::ostream* log) {
  Trainer trainer{env, cfg, true, parallel, log};
  return trainer.run(stream);
}

EvalResult evaluate_policy(MmflEnv& env, const TrainResult& policy, int episodes, int max_steps,
                           RngStream stream, std::ostream* episode_log) {
  const int H = env.agent_count();
  const int A = env.action_count();
  EvalResult out;
  long feasible = 0;
  long steps_total = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    RngStream act_rng = stream.fork("eval", static_cast<std::uint64_t>(ep));
    env.reset();
    double ep_return = 0.0;
    for (int t = 0; t < max_steps; ++t) {
      std::vector<int> actions(H, 0);
      Vec joint_logits;
      if (policy.joint) joint_logits = policy.actors[0].forward(env.joint_observation());
      for (int h = 0; h < H; ++h) {
        Vec logits;
        if (policy.joint) {
          logits.assign(joint_logits.begin() + static_cast<long>(h) * A,
                        joint_logits.begin() + static_cast<long>(h + 1) * A);
        } else {
          logits = policy.actors[h].forward(env.observe(h));
        }
        actions[h] = categorical_sample(logits, act_rng).first;
      }
      StepOutcome step = env.step(actions);
      double team = 0.0;
      for (double r : step.rewards) team += r;
      ep_return += team;
      feasible += step.info.feasible ? 1 : 0;
      ++steps_total;
      if (episode_log) (*episode_log) << episode_log_line(t, actions, step) << "\n";
      if (step.done) break;
    }
    out.returns.push_back(ep_return);
    out.mean_return += ep_return;
  }
  out.mean_return /= episodes;
  out.feasible_fraction = steps_total > 0 ? static_cast<double>(feasible) / steps_total : 0.0;
  return out;
}

EvalResult run_era_actions(MmflEnv& env, int episodes, int max_steps) {
  const int H = env.agent_count();
  const int M = env.action_count() - 1;
  EvalResult out;
  long feasible = 0;
  long steps_total = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    env.reset();
    double ep_return = 0.0;
    for (int t = 0; t < max_steps; ++t) {
      std::vector<int> actions(H, 0);
      int slot = 0;
      for (int h = 0; h < H; ++h) {
        if (env.world()[h].e_res > 0.0) {
          actions[h] = slot % M + 1;
          ++slot;
        }
      }
      StepOutcome step = env.step(actions);
      double team = 0.0;
      for (double r : step.rewards) team += r;
      ep_return += team;
      feasible += step.info.feasible ? 1 : 0;
      ++steps_total;
      if (step.done) break;
    }
    out.returns.push_back(ep_return);
    out.mean_return += ep_return;
  }
  out.mean_return /= episodes;
  out.feasible_fraction = steps_total > 0 ? static_cast<double>(feasible) / steps_total : 0.0;
  return out;
}

std::string policy_checkpoint_json(const TrainResult& result) {
  nlohmann::json actors = nlohmann::json::array();
  for (const auto& a : result.actors)
    actors.push_back({{"dims", a.dims()}, {"params", a.flatten()}});
  nlohmann::json j{{"version", 1},
                   {"joint", result.joint},
                   {"actors", actors},
                   {"critic", {{"dims", result.critic.dims()}, {"params", result.critic.flatten()}}}};
  return j.dump() + "\n";
}

TrainResult load_policy_checkpoint_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  TrainResult out;
  out.joint = j.at("joint").get<bool>();
  for (const auto& aj : j.at("actors")) {
    Mlp net(aj.at("dims").get<std::vector<int>>(), RngStream(0), 0.01);
    net.unflatten(aj.at("params").get<Vec>());
    out.actors.push_back(std::move(net));
  }
  out.critic = Mlp(j.at("critic").at("dims").get<std::vector<int>>(), RngStream(0), 1.0);
  out.critic.unflatten(j.at("critic").at("params").get<Vec>());
  return out;
}

std::string training_curve_csv(const TrainResult& result) {
  std::string out = "episode,mean_return,feasible_fraction\n";
  char buf[128];
  for (size_t i = 0; i < result.episode_return.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.10g,%.10g\n", i, result.episode_return[i],
                  result.feasible_fraction[i]);
    out += buf;
  }
  return out;
}

}  // namespace mmfl
