#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mmfl/linalg.hpp"
#include "mmfl/rng.hpp"

namespace mmfl {

struct MlpError : std::runtime_error {
  explicit MlpError(const std::string& what) : std::runtime_error(what) {}
};

struct MlpGrad {
  std::vector<Mat> w;
  std::vector<Vec> b;

  void zero();
  void add(const MlpGrad& other);
  void scale(double s);
  bool finite() const;
};

// Fully connected net, tanh hidden activations, linear output.
class Mlp {
 public:
  Mlp() = default;
  // Orthogonal-style init, small gain on the output layer.
  Mlp(std::vector<int> dims, RngStream init_stream, double output_gain = 0.01);

  const std::vector<int>& dims() const { return dims_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  int layer_count() const { return static_cast<int>(w.size()); }

  Vec forward(const Vec& in) const;

  struct Cache {
    std::vector<Vec> act;  // act[0] = input, act[i] = output of layer i
  };
  Vec forward_cached(const Vec& in, Cache& cache) const;

  // Accumulates d(objective)/d(params) into grad given d(objective)/d(output).
  void backward(const Cache& cache, const Vec& upstream, MlpGrad& grad) const;

  MlpGrad zero_grad() const;
  size_t param_count() const;
  Vec flatten() const;
  void unflatten(const Vec& flat);

  std::vector<Mat> w;
  std::vector<Vec> b;

 private:
  std::vector<int> dims_;
};

// Adaptive-moment gradient descent step (callers negate gradients to ascend).
struct Adam {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long t = 0;
  std::vector<Mat> mw, vw;
  std::vector<Vec> mb, vb;

  void init(const Mlp& net);
  void step(Mlp& net, const MlpGrad& grad);
};

Vec softmax(const Vec& logits);
double log_prob_of(const Vec& logits, int action);
// Samples from the categorical distribution over softmax(logits).
std::pair<int, double> categorical_sample(const Vec& logits, RngStream& rng);

}  // namespace mmfl
