#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mmfl/fl.hpp"
#include "mmfl/linalg.hpp"
#include "mmfl/rng.hpp"

namespace mmfl {

struct BoundError : std::runtime_error {
  explicit BoundError(const std::string& what) : std::runtime_error(what) {}
};

struct BoundInputs {
  double smoothness = 0.0;       // L
  double strong_convexity = 0.0; // mu
  double grad_variance = 0.0;    // G^2
  double gap0 = 0.0;             // F(w_0) - F(w*)
  std::vector<double> lr;        // per round, lr[k-1] for round k
  std::vector<int> batch;
  std::vector<int> participants;
};

struct CurvatureEstimate {
  double smoothness = 0.0;
  double strong_convexity = 0.0;
  bool exact = false;  // false for families without closed-form curvature
};

// Exact Hessian extremes for the quadratic family; probe-based estimate
// (flagged approximate) for softmax.
CurvatureEstimate estimate_smoothness_convexity(const SyntheticTask& task);

// Max over probe models of the per-sample gradient variance around the full
// gradient, maximized over vehicles.
double estimate_gradient_variance(const SyntheticTask& task, const std::vector<Vec>& probes);

// Upper bound on the expected one-round loss decrease:
//   lr * (L*lr/2 - 1) * ||grad||^2 + (L*lr^2/2) * G^2 / (batch * participants)
double round_decrease_bound(double lr, double smoothness, double grad_norm_sq, double grad_variance,
                    int batch, int participants);

// Upper bound on the optimality gap after `rounds` rounds:
//   gap0 * prod(1 - mu*lr_k)
//   + sum_{k<K} (lr_k/2) * G^2/(B_k n_k) * prod_{j>k}(1 - mu*lr_j)
//   + (lr_K/2) * G^2/(B_K n_K)
// Throws BoundError when some lr_k > 1/L.
double optimality_gap_bound(const BoundInputs& inputs, int rounds);

struct VerifyConfig {
  int rounds = 200;
  int replicates = 50;
  int participants = 0;  // 0 = all vehicles
  int batch = 8;
  bool full_batch = false;  // deterministic pool gradients, G^2 = 0
  int local_iters = 1;      // >1 runs in advisory mode
  double lr0 = 0.0;         // 0 = 1/L
  double lr_decay = 0.0;
  bool strict = true;       // enforce lr <= 1/L
};

struct RoundCheck {
  int round = 0;
  double mean_decrease = 0.0;
  double mean_bound = 0.0;
  double mc_sigma = 0.0;  // Monte-Carlo std error of (decrease - bound)
  bool violated = false;
};

struct VerificationReport {
  int rounds = 0;
  int replicates = 0;
  bool advisory = false;  // local_iters > 1
  std::vector<RoundCheck> round_checks;
  std::vector<double> bound_curve;      // whole-run bound per prefix
  std::vector<double> empirical_curve;  // replicate-mean gap per prefix
  std::vector<int> round_violations;    // violating rounds
  std::vector<int> gap_violations;      // violating prefixes
  double round_violation_fraction = 0.0;
  bool bound_monotone = true;  // bound decreases across rounds when gap0 > 0
  BoundInputs inputs;
};

// Runs `replicates` independent SGD trajectories on a quadratic task and
// checks every round against round_decrease_bound (3-sigma Monte-Carlo allowance on
// the replicate mean) and every prefix against optimality_gap_bound.
VerificationReport verify_descent(const SyntheticTask& task, const VerifyConfig& vcfg,
                                  RngStream stream, bool parallel);

std::string verification_report_json(const VerificationReport& report);

}  // namespace mmfl
