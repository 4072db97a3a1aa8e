#include "mmfl/fl.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace mmfl {

namespace {

Vec unit_direction(int dim, RngStream& rng) {
  Vec v(dim);
  for (auto& x : v) x = rng.normal();
  const double n = std::sqrt(norm_sq(v));
  if (n > 1e-12)
    for (auto& x : v) x /= n;
  return v;
}

}  // namespace

int SyntheticTask::vehicle_count() const {
  return is_quadratic() ? static_cast<int>(targets.size()) : static_cast<int>(samples.size());
}

double SyntheticTask::sample_loss(const Vec& w, int vehicle, int sample, Split split) const {
  if (is_quadratic()) {
    const Vec& b = (split == Split::train || test_targets.empty()) ? targets[vehicle][sample]
                                                                   : test_targets[vehicle][sample];
    Vec r = matvec(transform, w);
    axpy(-1.0, b, r);
    return 0.5 * norm_sq(r);
  }
  const SoftmaxSample& s = (split == Split::train || test_samples.empty())
                               ? samples[vehicle][sample]
                               : test_samples[vehicle][sample];
  const int C = spec.classes;
  const int F = spec.features;
  Vec logits(C, 0.0);
  for (int c = 0; c < C; ++c)
    for (int f = 0; f < F; ++f) logits[c] += w[c * F + f] * s.features[f];
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double lse = 0.0;
  for (double v : logits) lse += std::exp(v - mx);
  return mx + std::log(lse) - logits[s.label];
}

void SyntheticTask::add_sample_grad(const Vec& w, int vehicle, int sample, double scale,
                                    Vec& acc) const {
  if (is_quadratic()) {
    const Vec& b = targets[vehicle][sample];
    Vec r = matvec(transform, w);
    axpy(-1.0, b, r);
    Vec g = tmatvec(transform, r);
    axpy(scale, g, acc);
    return;
  }
  const SoftmaxSample& s = samples[vehicle][sample];
  const int C = spec.classes;
  const int F = spec.features;
  Vec logits(C, 0.0);
  for (int c = 0; c < C; ++c)
    for (int f = 0; f < F; ++f) logits[c] += w[c * F + f] * s.features[f];
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double lse = 0.0;
  for (double v : logits) lse += std::exp(v - mx);
  for (int c = 0; c < C; ++c) {
    const double p = std::exp(logits[c] - mx) / lse;
    const double coeff = scale * (p - (c == s.label ? 1.0 : 0.0));
    for (int f = 0; f < F; ++f) acc[c * F + f] += coeff * s.features[f];
  }
}

Vec SyntheticTask::sample_grad(const Vec& w, int vehicle, int sample, Split split) const {
  (void)split;
  Vec g(dim(), 0.0);
  add_sample_grad(w, vehicle, sample, 1.0, g);
  return g;
}

double SyntheticTask::vehicle_loss(const Vec& w, int vehicle, Split split) const {
  const size_t n = is_quadratic()
                       ? ((split == Split::train || test_targets.empty())
                              ? targets[vehicle].size()
                              : test_targets[vehicle].size())
                       : ((split == Split::train || test_samples.empty())
                              ? samples[vehicle].size()
                              : test_samples[vehicle].size());
  if (n == 0) throw FlError("empty dataset for vehicle " + std::to_string(vehicle + 1));
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) total += sample_loss(w, vehicle, static_cast<int>(i), split);
  return total / static_cast<double>(n);
}

Vec SyntheticTask::vehicle_grad(const Vec& w, int vehicle) const {
  const size_t n = is_quadratic() ? targets[vehicle].size() : samples[vehicle].size();
  Vec g(dim(), 0.0);
  for (size_t i = 0; i < n; ++i)
    add_sample_grad(w, vehicle, static_cast<int>(i), 1.0 / static_cast<double>(n), g);
  return g;
}

double SyntheticTask::global_loss(const Vec& w) const {
  if (is_quadratic()) {
    Vec r = matvec(transform, w);
    axpy(-1.0, pooled_target_mean, r);
    return 0.5 * norm_sq(r) + f_opt;
  }
  double total = 0.0;
  double weight = 0.0;
  for (int h = 0; h < vehicle_count(); ++h) {
    const double sz = static_cast<double>(spec.dataset_sizes[h]);
    total += sz * vehicle_loss(w, h);
    weight += sz;
  }
  return total / weight;
}

Vec SyntheticTask::global_grad(const Vec& w) const {
  if (is_quadratic()) {
    Vec r = matvec(transform, w);
    axpy(-1.0, pooled_target_mean, r);
    return tmatvec(transform, r);
  }
  Vec g(dim(), 0.0);
  double weight = 0.0;
  for (int h = 0; h < vehicle_count(); ++h) weight += static_cast<double>(spec.dataset_sizes[h]);
  for (int h = 0; h < vehicle_count(); ++h) {
    const Vec vg = vehicle_grad(w, h);
    axpy(static_cast<double>(spec.dataset_sizes[h]) / weight, vg, g);
  }
  return g;
}

SyntheticTask gen_synthetic_task(const TaskSpec& spec, int vehicles, RngStream stream) {
  if (static_cast<int>(spec.dataset_sizes.size()) != vehicles)
    throw FlError("task " + std::to_string(spec.task_id) + ": dataset_sizes must cover " +
                  std::to_string(vehicles) + " vehicles");
  SyntheticTask task;
  task.spec = spec;
  const int d = spec.model_dim;

  if (spec.family == TaskFamily::quadratic) {
    RngStream qstream = stream.fork("transform");
    const Mat q = random_orthogonal(d, qstream);
    Vec eigs(d, spec.smoothness_max);
    for (int i = 0; i < d; ++i)
      eigs[i] = d > 1 ? spec.strong_convexity_min +
                            (spec.smoothness_max - spec.strong_convexity_min) * i / (d - 1.0)
                      : spec.smoothness_max;
    // A = Q sqrt(diag) Q^T, symmetric positive definite
    task.transform = Mat(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) s += q(i, k) * std::sqrt(eigs[k]) * q(j, k);
        task.transform(i, j) = s;
      }
    task.hessian = matmul_t_self(task.transform);
    const auto spectrum = sym_eigenvalues(task.hessian);
    task.strong_convexity = spectrum.front();
    task.smoothness = spectrum.back();

    RngStream cstream = stream.fork("center");
    Vec w_center(d);
    for (auto& x : w_center) x = cstream.normal();

    task.targets.resize(vehicles);
    std::int64_t total = 0;
    Vec pooled(d, 0.0);
    for (int h = 0; h < vehicles; ++h) {
      RngStream hstream = stream.fork("targets", static_cast<std::uint64_t>(h));
      Vec center = w_center;
      if (spec.heterogeneity > 0.0) {
        const Vec dir = unit_direction(d, hstream);
        axpy(spec.heterogeneity, dir, center);
      }
      const Vec base = matvec(task.transform, center);
      const std::int64_t sz = spec.dataset_sizes[h];
      task.targets[h].reserve(sz);
      for (std::int64_t i = 0; i < sz; ++i) {
        Vec b = base;
        for (auto& x : b) x += spec.noise_std * hstream.normal();
        axpy(1.0, b, pooled);
        task.targets[h].push_back(std::move(b));
      }
      total += sz;
    }
    scale(pooled, 1.0 / static_cast<double>(total));
    task.pooled_target_mean = pooled;
    task.w_opt = solve_spd(task.transform, pooled);

    // f_opt = weighted mean of 0.5 * ||b_x - pooled||^2;
    // grad variance = max over vehicles of per-sample ||A^T (b_x - pooled)||^2
    double c0 = 0.0;
    double worst_var = 0.0;
    for (int h = 0; h < vehicles; ++h) {
      double vh = 0.0;
      for (const auto& b : task.targets[h]) {
        Vec diff = b;
        axpy(-1.0, pooled, diff);
        c0 += 0.5 * norm_sq(diff);
        vh += norm_sq(tmatvec(task.transform, diff));
      }
      worst_var = std::max(worst_var, vh / static_cast<double>(task.targets[h].size()));
    }
    task.f_opt = c0 / static_cast<double>(total);
    task.grad_variance = worst_var;

    if (spec.test_divergence > 0.0) {
      task.test_targets.resize(vehicles);
      for (int h = 0; h < vehicles; ++h) {
        RngStream hstream = stream.fork("test-targets", static_cast<std::uint64_t>(h));
        Vec center = w_center;
        const Vec dir = unit_direction(d, hstream);
        axpy(spec.test_divergence, dir, center);
        const Vec base = matvec(task.transform, center);
        for (std::int64_t i = 0; i < spec.dataset_sizes[h]; ++i) {
          Vec b = base;
          for (auto& x : b) x += spec.noise_std * hstream.normal();
          task.test_targets[h].push_back(std::move(b));
        }
      }
    }
    return task;
  }

  // softmax on Gaussian-mixture features
  const int C = spec.classes;
  const int F = spec.features;
  RngStream mstream = stream.fork("class-means");
  std::vector<Vec> means(C);
  for (auto& m : means) {
    m = unit_direction(F, mstream);
    scale(m, 2.0);
  }
  task.samples.resize(vehicles);
  for (int h = 0; h < vehicles; ++h) {
    RngStream hstream = stream.fork("samples", static_cast<std::uint64_t>(h));
    Vec shift(F, 0.0);
    if (spec.heterogeneity > 0.0) {
      shift = unit_direction(F, hstream);
      scale(shift, spec.heterogeneity);
    }
    for (std::int64_t i = 0; i < spec.dataset_sizes[h]; ++i) {
      SoftmaxSample s;
      s.label = static_cast<int>(hstream.bounded(C));
      s.features = means[s.label];
      for (int f = 0; f < F; ++f) s.features[f] += hstream.normal() + shift[f];
      task.samples[h].push_back(std::move(s));
    }
  }
  if (spec.test_divergence > 0.0) {
    task.test_samples.resize(vehicles);
    for (int h = 0; h < vehicles; ++h) {
      RngStream hstream = stream.fork("test-samples", static_cast<std::uint64_t>(h));
      Vec shift = unit_direction(F, hstream);
      scale(shift, spec.test_divergence);
      for (std::int64_t i = 0; i < spec.dataset_sizes[h]; ++i) {
        SoftmaxSample s;
        s.label = static_cast<int>(hstream.bounded(C));
        s.features = means[s.label];
        for (int f = 0; f < F; ++f) s.features[f] += hstream.normal() + shift[f];
        task.test_samples[h].push_back(std::move(s));
      }
    }
  }
  return task;
}

void distribute(const ModelVector& leader_model, std::vector<ModelVector*>& cluster) {
  for (ModelVector* member : cluster) {
    member->params = leader_model.params;
    member->task_id = leader_model.task_id;
    member->version = leader_model.version;
  }
}

ModelVector local_sgd_round(const ModelVector& model, const SyntheticTask& task, int vehicle,
                            double lr, int batch, int local_iters, RngStream rng) {
  if (batch < 1) throw FlError("batch must be >= 1");
  if (!(lr >= 0.0)) throw FlError("learning rate must be >= 0");
  ModelVector out = model;
  const std::uint64_t pool = task.is_quadratic() ? task.targets[vehicle].size()
                                                 : task.samples[vehicle].size();
  Vec grad(task.dim(), 0.0);
  for (int it = 0; it < local_iters; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (int b = 0; b < batch; ++b) {
      const int idx = static_cast<int>(rng.bounded(pool));
      task.add_sample_grad(out.params, vehicle, idx, 1.0 / batch, grad);
    }
    axpy(-lr, grad, out.params);
  }
  return out;
}

ModelVector aggregate(const std::vector<ModelVector>& models, const std::vector<double>& weights) {
  if (models.empty()) throw FlError("aggregate: no models");
  if (models.size() != weights.size()) throw FlError("aggregate: weight count mismatch");
  const size_t dim = models[0].params.size();
  ModelVector out;
  out.task_id = models[0].task_id;
  out.params.assign(dim, 0.0);
  double total = 0.0;
  for (size_t i = 0; i < models.size(); ++i) {
    if (models[i].params.size() != dim) throw FlError("aggregate: dimension mismatch");
    if (!(weights[i] > 0.0)) throw FlError("aggregate: weights must be > 0");
    axpy(weights[i], models[i].params, out.params);
    total += weights[i];
    out.version = std::max(out.version, models[i].version);
  }
  scale(out.params, 1.0 / total);
  return out;
}

double task_loss(const SyntheticTask& task, const Vec& w, int vehicle, Split split) {
  return task.vehicle_loss(w, vehicle, split);
}

double final_average_loss(const std::vector<double>& per_task_participant_mean) {
  if (per_task_participant_mean.empty()) throw FlError("final_average_loss: no tasks");
  double total = 0.0;
  for (double v : per_task_participant_mean) total += v;
  return total / static_cast<double>(per_task_participant_mean.size());
}

FlState FlState::create(const SimConfig& cfg, RngStream data_stream) {
  FlState state;
  const int M = cfg.task_count();
  state.tasks.reserve(M);
  state.global_model.resize(M);
  state.local_model.resize(M);
  state.loss_history.resize(M);
  for (int m = 0; m < M; ++m) {
    state.tasks.push_back(gen_synthetic_task(cfg.tasks[m], cfg.vehicles,
                                             data_stream.fork("task", static_cast<std::uint64_t>(m))));
    state.global_model[m].task_id = m + 1;
    state.global_model[m].params.assign(cfg.tasks[m].model_dim, 0.0);
    state.local_model[m].resize(cfg.vehicles);
    for (int h = 0; h < cfg.vehicles; ++h) {
      state.local_model[m][h].task_id = m + 1;
      state.local_model[m][h].params.assign(cfg.tasks[m].model_dim, 0.0);
    }
  }
  return state;
}

void FlState::reset_models() {
  for (size_t m = 0; m < global_model.size(); ++m) {
    std::fill(global_model[m].params.begin(), global_model[m].params.end(), 0.0);
    global_model[m].version = 0;
    for (auto& local : local_model[m]) {
      std::fill(local.params.begin(), local.params.end(), 0.0);
      local.version = 0;
    }
    loss_history[m].clear();
  }
}

void run_fl_round(FlState& state, const Schedule& sched, const SimConfig& cfg,
                  const RngStream& sgd_base, bool parallel) {
  const int k = sched.round;
  const int M = sched.tasks;
  const double lr = cfg.lr_at(k);
  const int batch = cfg.batch_at(k);

  for (int m = 0; m < M; ++m) {
    const std::vector<int> members = sched.members_of(m);
    if (members.empty()) {
      state.loss_history[m].push_back(state.tasks[m].global_loss(state.global_model[m].params));
      continue;
    }

    // distribution: every member starts from the leader's (global) model
    std::vector<ModelVector*> cluster;
    cluster.reserve(members.size());
    for (int h : members) cluster.push_back(&state.local_model[m][h]);
    distribute(state.global_model[m], cluster);

    // local training, independent rng stream per (round, task, vehicle)
    const int count = static_cast<int>(members.size());
    std::vector<ModelVector> updated(count);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
    for (int i = 0; i < count; ++i) {
      const int h = members[i];
      const std::uint64_t key =
          (static_cast<std::uint64_t>(k) * M + m) * cfg.vehicles + static_cast<std::uint64_t>(h);
      updated[i] = local_sgd_round(state.local_model[m][h], state.tasks[m], h, lr, batch,
                                   cfg.local_iters, sgd_base.fork("sgd", key));
    }

    std::vector<double> weights(count);
    for (int i = 0; i < count; ++i) {
      state.local_model[m][members[i]] = updated[i];
      weights[i] = static_cast<double>(state.tasks[m].dataset_size(members[i]));
    }
    ModelVector agg = aggregate(updated, weights);
    agg.version = k;
    state.global_model[m] = std::move(agg);
    state.loss_history[m].push_back(state.tasks[m].global_loss(state.global_model[m].params));
  }
}

std::string model_checkpoint_json(const FlState& state) {
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto& model : state.global_model) {
    tasks.push_back({{"task_id", model.task_id},
                     {"version", model.version},
                     {"dims", model.params.size()},
                     {"params", model.params}});
  }
  return nlohmann::json{{"models", tasks}}.dump(2) + "\n";
}

}  // namespace mmfl
