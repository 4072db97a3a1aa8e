#include "mmfl/convergence.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace mmfl {

CurvatureEstimate estimate_smoothness_convexity(const SyntheticTask& task) {
  if (task.is_quadratic()) {
    const auto spectrum = sym_eigenvalues(task.hessian);
    return {spectrum.back(), spectrum.front(), true};
  }
  // softmax: no exact strong convexity; probe the curvature along random
  // gradient differences around the origin instead.
  const int d = task.dim();
  RngStream rng(0x5eed);
  double worst = 0.0;
  Vec w0(d, 0.0);
  const Vec g0 = task.global_grad(w0);
  for (int probe = 0; probe < 16; ++probe) {
    Vec w1(d);
    for (auto& x : w1) x = 0.1 * rng.normal();
    const Vec g1 = task.global_grad(w1);
    Vec dg = g1;
    axpy(-1.0, g0, dg);
    Vec dw = w1;  // w0 is the origin
    const double denom = std::sqrt(norm_sq(dw));
    if (denom > 1e-12) worst = std::max(worst, std::sqrt(norm_sq(dg)) / denom);
  }
  return {worst, 0.0, false};
}

double estimate_gradient_variance(const SyntheticTask& task, const std::vector<Vec>& probes) {
  if (probes.empty()) throw BoundError("estimate_gradient_variance: no probe models");
  double worst = 0.0;
  for (const Vec& w : probes) {
    const Vec full = task.global_grad(w);
    for (int h = 0; h < task.vehicle_count(); ++h) {
      const size_t n =
          task.is_quadratic() ? task.targets[h].size() : task.samples[h].size();
      if (n < 2 && task.vehicle_count() == 1 && n < 1)
        throw BoundError("estimate_gradient_variance: needs samples");
      double acc = 0.0;
      for (size_t i = 0; i < n; ++i) {
        Vec g = task.sample_grad(w, h, static_cast<int>(i));
        axpy(-1.0, full, g);
        acc += norm_sq(g);
      }
      worst = std::max(worst, acc / static_cast<double>(n));
    }
  }
  return worst;
}

double round_decrease_bound(double lr, double smoothness, double grad_norm_sq, double grad_variance,
                    int batch, int participants) {
  if (batch < 1 || participants < 1) throw BoundError("round_decrease_bound: batch and participants >= 1");
  return lr * (smoothness * lr / 2.0 - 1.0) * grad_norm_sq +
         (smoothness * lr * lr / 2.0) * grad_variance /
             (static_cast<double>(batch) * participants);
}

double optimality_gap_bound(const BoundInputs& inputs, int rounds) {
  if (rounds < 1) throw BoundError("optimality_gap_bound: rounds >= 1");
  if (static_cast<int>(inputs.lr.size()) < rounds ||
      static_cast<int>(inputs.batch.size()) < rounds ||
      static_cast<int>(inputs.participants.size()) < rounds)
    throw BoundError("optimality_gap_bound: schedule shorter than rounds");
  for (int k = 0; k < rounds; ++k) {
    if (inputs.lr[k] > 1.0 / inputs.smoothness + 1e-15)
      throw BoundError("optimality_gap_bound: learning rate above 1/L in round " +
                       std::to_string(k + 1));
  }
  double survival = 1.0;  // prod_{j=k+1..K} (1 - mu*lr_j), built backwards
  double noise_total = 0.0;
  // last round's noise term has no survival factor
  for (int k = rounds - 1; k >= 0; --k) {
    const double noise = inputs.lr[k] / 2.0 * inputs.grad_variance /
                         (static_cast<double>(inputs.batch[k]) * inputs.participants[k]);
    noise_total += noise * survival;
    survival *= (1.0 - inputs.strong_convexity * inputs.lr[k]);
  }
  return inputs.gap0 * survival + noise_total;
}

namespace {

struct Trajectory {
  std::vector<double> loss;          // loss[k] after round k, loss[0] = F(w0)
  std::vector<double> grad_norm_sq;  // at w_{k-1}, index k-1
};

Trajectory run_trajectory(const SyntheticTask& task, const VerifyConfig& vcfg,
                          const std::vector<int>& participants_per_round, RngStream rep_stream) {
  const int d = task.dim();
  Vec w(d, 0.0);
  Trajectory out;
  out.loss.reserve(vcfg.rounds + 1);
  out.grad_norm_sq.reserve(vcfg.rounds);
  out.loss.push_back(task.global_loss(w));

  double total_weight_all = 0.0;
  for (int h = 0; h < task.vehicle_count(); ++h)
    total_weight_all += static_cast<double>(task.dataset_size(h));

  for (int k = 1; k <= vcfg.rounds; ++k) {
    out.grad_norm_sq.push_back(norm_sq(task.global_grad(w)));
    const int n = participants_per_round[k - 1];
    const double lr = vcfg.lr0 / (1.0 + vcfg.lr_decay * k);
    Vec next(d, 0.0);
    double weight_total = 0.0;
    for (int h = 0; h < n; ++h) {
      const double weight = static_cast<double>(task.dataset_size(h));
      Vec local = w;
      if (vcfg.full_batch) {
        for (int it = 0; it < vcfg.local_iters; ++it) {
          const Vec g = task.vehicle_grad(local, h);
          axpy(-lr, g, local);
        }
      } else {
        RngStream vs = rep_stream.fork("round", static_cast<std::uint64_t>(k) * 1024 + h);
        const std::uint64_t pool = task.is_quadratic() ? task.targets[h].size()
                                                       : task.samples[h].size();
        Vec grad(d, 0.0);
        for (int it = 0; it < vcfg.local_iters; ++it) {
          std::fill(grad.begin(), grad.end(), 0.0);
          for (int b = 0; b < vcfg.batch; ++b) {
            const int idx = static_cast<int>(vs.bounded(pool));
            task.add_sample_grad(local, h, idx, 1.0 / vcfg.batch, grad);
          }
          axpy(-lr, grad, local);
        }
      }
      axpy(weight, local, next);
      weight_total += weight;
    }
    scale(next, 1.0 / weight_total);
    w = next;
    out.loss.push_back(task.global_loss(w));
  }
  return out;
}

}  // namespace

VerificationReport verify_descent(const SyntheticTask& task, const VerifyConfig& vcfg,
                                  RngStream stream, bool parallel) {
  if (!task.is_quadratic())
    throw BoundError("verify_descent: exact curvature requires the quadratic family");
  if (vcfg.replicates < 2) throw BoundError("verify_descent: needs at least 2 replicates");

  const CurvatureEstimate curv = estimate_smoothness_convexity(task);
  VerifyConfig cfg = vcfg;
  if (cfg.lr0 <= 0.0) cfg.lr0 = 1.0 / curv.smoothness;
  if (cfg.participants <= 0) cfg.participants = task.vehicle_count();
  if (cfg.strict && cfg.lr0 > 1.0 / curv.smoothness + 1e-15)
    throw BoundError("verify_descent: lr0 above 1/L in strict mode");

  VerificationReport report;
  report.rounds = cfg.rounds;
  report.replicates = cfg.replicates;
  report.advisory = cfg.local_iters > 1;

  BoundInputs inputs;
  inputs.smoothness = curv.smoothness;
  inputs.strong_convexity = curv.strong_convexity;
  inputs.grad_variance = cfg.full_batch ? 0.0 : task.grad_variance;
  Vec w0(task.dim(), 0.0);
  inputs.gap0 = task.global_loss(w0) - task.f_opt;
  inputs.lr.resize(cfg.rounds);
  inputs.batch.assign(cfg.rounds, cfg.batch);
  inputs.participants.assign(cfg.rounds, cfg.participants);
  for (int k = 1; k <= cfg.rounds; ++k) inputs.lr[k - 1] = cfg.lr0 / (1.0 + cfg.lr_decay * k);
  report.inputs = inputs;

  std::vector<int> participants_per_round(cfg.rounds, cfg.participants);

  // independent replicate trajectories; slot-per-replicate keeps the
  // parallel path bit-identical to the serial one
  std::vector<Trajectory> reps(cfg.replicates);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
  for (int r = 0; r < cfg.replicates; ++r) {
    reps[r] = run_trajectory(task, cfg, participants_per_round,
                             stream.fork("replicate", static_cast<std::uint64_t>(r)));
  }

  // per-round expected-decrease check, tower-rule form: the replicate mean of
  // (decrease - per-replicate bound) has nonpositive expectation
  const int R = cfg.replicates;
  for (int k = 1; k <= cfg.rounds; ++k) {
    double mean_dec = 0.0, mean_bound = 0.0, mean_s = 0.0, ss = 0.0;
    for (int r = 0; r < R; ++r) {
      const double dec = reps[r].loss[k] - reps[r].loss[k - 1];
      const double bound =
          round_decrease_bound(inputs.lr[k - 1], inputs.smoothness, reps[r].grad_norm_sq[k - 1],
                       inputs.grad_variance, cfg.batch, cfg.participants);
      mean_dec += dec;
      mean_bound += bound;
      mean_s += dec - bound;
    }
    mean_dec /= R;
    mean_bound /= R;
    mean_s /= R;
    for (int r = 0; r < R; ++r) {
      const double bound =
          round_decrease_bound(inputs.lr[k - 1], inputs.smoothness, reps[r].grad_norm_sq[k - 1],
                       inputs.grad_variance, cfg.batch, cfg.participants);
      const double s = (reps[r].loss[k] - reps[r].loss[k - 1]) - bound;
      ss += (s - mean_s) * (s - mean_s);
    }
    const double sigma = R > 1 ? std::sqrt(ss / (R - 1.0)) / std::sqrt(static_cast<double>(R)) : 0.0;
    RoundCheck check{k, mean_dec, mean_bound, sigma, mean_s > 3.0 * sigma + 1e-15};
    if (check.violated) report.round_violations.push_back(k);
    report.round_checks.push_back(check);
  }
  report.round_violation_fraction =
      static_cast<double>(report.round_violations.size()) / cfg.rounds;

  // prefix gap checks against the whole-run bound
  double prev_bound = inputs.gap0;
  for (int k = 1; k <= cfg.rounds; ++k) {
    double mean_loss = 0.0;
    for (int r = 0; r < R; ++r) mean_loss += reps[r].loss[k];
    mean_loss /= R;
    const double gap = mean_loss - task.f_opt;
    const double bound = optimality_gap_bound(inputs, k);
    report.empirical_curve.push_back(gap);
    report.bound_curve.push_back(bound);
    if (gap > bound + 1e-12) report.gap_violations.push_back(k);
    if (inputs.grad_variance == 0.0 && inputs.gap0 > 0.0 && bound > prev_bound + 1e-15)
      report.bound_monotone = false;
    prev_bound = bound;
  }
  return report;
}

std::string verification_report_json(const VerificationReport& report) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& rc : report.round_checks) {
    rounds.push_back({{"round", rc.round},
                      {"mean_decrease", rc.mean_decrease},
                      {"mean_bound", rc.mean_bound},
                      {"mc_sigma", rc.mc_sigma},
                      {"violated", rc.violated}});
  }
  nlohmann::json j{{"rounds", report.rounds},
                   {"replicates", report.replicates},
                   {"advisory", report.advisory},
                   {"violations", report.round_violations},
                   {"gap_violations", report.gap_violations},
                   {"round_violation_fraction", report.round_violation_fraction},
                   {"bound_monotone", report.bound_monotone},
                   {"bound_curve", report.bound_curve},
                   {"empirical_curve", report.empirical_curve},
                   {"round_checks", rounds},
                   {"inputs",
                    {{"smoothness", report.inputs.smoothness},
                     {"strong_convexity", report.inputs.strong_convexity},
                     {"grad_variance", report.inputs.grad_variance},
                     {"gap0", report.inputs.gap0}}}};
  return j.dump(2) + "\n";
}

}  // namespace mmfl
