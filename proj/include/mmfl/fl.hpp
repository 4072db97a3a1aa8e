#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mmfl/config.hpp"
#include "mmfl/linalg.hpp"
#include "mmfl/rng.hpp"
#include "mmfl/schedule.hpp"

namespace mmfl {

struct FlError : std::runtime_error {
  explicit FlError(const std::string& what) : std::runtime_error(what) {}
};

struct ModelVector {
  Vec params;
  int task_id = 1;
  int version = 0;  // round of last aggregation

  bool operator==(const ModelVector&) const = default;
};

struct SoftmaxSample {
  Vec features;
  int label = 0;
};

enum class Split { train, test };

// Synthetic training task with analytically known structure.
//
// quadratic: per-sample loss 0.5 * ||A w - b_x||^2 with a shared symmetric
// positive definite A and per-vehicle target pools. Curvature, optimum and
// gradient-variance bound are exact:
//   hessian = A^T A, grad f(w;x) - grad F(w) = -A^T (b_x - pooled mean).
//
// softmax: cross-entropy over classes on Gaussian-mixture features; convex
// but not strongly convex, so curvature is only estimated.
struct SyntheticTask {
  TaskSpec spec;

  // quadratic family
  Mat transform;                          // A
  std::vector<std::vector<Vec>> targets;  // [vehicle][sample]
  std::vector<std::vector<Vec>> test_targets;
  Mat hessian;
  Vec pooled_target_mean;  // dataset-size weighted mean of b
  Vec w_opt;
  double f_opt = 0.0;
  double smoothness = 0.0;         // exact for quadratic
  double strong_convexity = 0.0;   // exact for quadratic
  double grad_variance = 0.0;      // max over vehicles of per-sample variance
  // softmax family
  std::vector<std::vector<SoftmaxSample>> samples;  // [vehicle][sample]
  std::vector<std::vector<SoftmaxSample>> test_samples;

  bool is_quadratic() const { return spec.family == TaskFamily::quadratic; }
  int dim() const { return spec.model_dim; }
  int vehicle_count() const;
  std::int64_t dataset_size(int vehicle) const { return spec.dataset_sizes[vehicle]; }

  double sample_loss(const Vec& w, int vehicle, int sample, Split split = Split::train) const;
  Vec sample_grad(const Vec& w, int vehicle, int sample, Split split = Split::train) const;
  void add_sample_grad(const Vec& w, int vehicle, int sample, double scale, Vec& acc) const;

  // empirical mean over the vehicle's pool
  double vehicle_loss(const Vec& w, int vehicle, Split split = Split::train) const;
  Vec vehicle_grad(const Vec& w, int vehicle) const;

  // dataset-size weighted mean over all vehicles (closed form for quadratic)
  double global_loss(const Vec& w) const;
  Vec global_grad(const Vec& w) const;
};

SyntheticTask gen_synthetic_task(const TaskSpec& spec, int vehicles, RngStream stream);

// Copies the leader model into every cluster member slot.
void distribute(const ModelVector& leader_model, std::vector<ModelVector*>& cluster);

// local_iters chained minibatch SGD steps, batch drawn uniformly (with
// replacement) from the vehicle's pool. Deterministic per stream.
ModelVector local_sgd_round(const ModelVector& model, const SyntheticTask& task, int vehicle,
                            double lr, int batch, int local_iters, RngStream rng);

// Dataset-size weighted average; throws on dimension mismatch.
ModelVector aggregate(const std::vector<ModelVector>& models, const std::vector<double>& weights);

double task_loss(const SyntheticTask& task, const Vec& w, int vehicle, Split split = Split::train);

// mean over tasks of the participant-mean local losses of the final round
double final_average_loss(const std::vector<double>& per_task_participant_mean);

// Whole-run federated state: one global model per task plus persistent
// per-vehicle local models.
struct FlState {
  std::vector<SyntheticTask> tasks;
  std::vector<ModelVector> global_model;                 // per task
  std::vector<std::vector<ModelVector>> local_model;     // [task][vehicle]
  std::vector<std::vector<double>> loss_history;         // [task][completed round]

  static FlState create(const SimConfig& cfg, RngStream data_stream);
  void reset_models();
};

// One full feasible communication round: distribute, local SGD on every
// member (parallelizable across vehicles), aggregate, broadcast.
void run_fl_round(FlState& state, const Schedule& sched, const SimConfig& cfg,
                  const RngStream& sgd_base, bool parallel);

std::string model_checkpoint_json(const FlState& state);

}  // namespace mmfl
