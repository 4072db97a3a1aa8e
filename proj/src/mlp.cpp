#include "mmfl/mlp.hpp"

#include <algorithm>
#include <cmath>

namespace mmfl {

void MlpGrad::zero() {
  for (auto& m : w) std::fill(m.a.begin(), m.a.end(), 0.0);
  for (auto& v : b) std::fill(v.begin(), v.end(), 0.0);
}

void MlpGrad::add(const MlpGrad& other) {
  for (size_t l = 0; l < w.size(); ++l) {
    for (size_t i = 0; i < w[l].a.size(); ++i) w[l].a[i] += other.w[l].a[i];
    for (size_t i = 0; i < b[l].size(); ++i) b[l][i] += other.b[l][i];
  }
}

void MlpGrad::scale(double s) {
  for (auto& m : w)
    for (auto& v : m.a) v *= s;
  for (auto& vec : b)
    for (auto& v : vec) v *= s;
}

bool MlpGrad::finite() const {
  for (const auto& m : w)
    for (double v : m.a)
      if (!std::isfinite(v)) return false;
  for (const auto& vec : b)
    for (double v : vec)
      if (!std::isfinite(v)) return false;
  return true;
}

namespace {

// Orthonormalizes the rows (out <= in) or columns (out > in) of a Gaussian
// matrix; standard near-orthogonal initialization.
Mat orthogonal_matrix(int out, int in, double gain, RngStream& rng) {
  Mat m(out, in);
  for (auto& v : m.a) v = rng.normal();
  if (out <= in) {
    for (int i = 0; i < out; ++i) {
      for (int k = 0; k < i; ++k) {
        double proj = 0.0;
        for (int j = 0; j < in; ++j) proj += m(i, j) * m(k, j);
        for (int j = 0; j < in; ++j) m(i, j) -= proj * m(k, j);
      }
      double nrm = 0.0;
      for (int j = 0; j < in; ++j) nrm += m(i, j) * m(i, j);
      nrm = std::sqrt(std::max(nrm, 1e-24));
      for (int j = 0; j < in; ++j) m(i, j) *= gain / nrm;
    }
  } else {
    for (int j = 0; j < in; ++j) {
      for (int k = 0; k < j; ++k) {
        double proj = 0.0;
        for (int i = 0; i < out; ++i) proj += m(i, j) * m(i, k);
        for (int i = 0; i < out; ++i) m(i, j) -= proj * m(i, k);
      }
      double nrm = 0.0;
      for (int i = 0; i < out; ++i) nrm += m(i, j) * m(i, j);
      nrm = std::sqrt(std::max(nrm, 1e-24));
      for (int i = 0; i < out; ++i) m(i, j) *= gain / nrm;
    }
  }
  return m;
}

}  // namespace

Mlp::Mlp(std::vector<int> dims, RngStream init_stream, double output_gain) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw MlpError("network needs at least input and output dims");
  const int layers = static_cast<int>(dims_.size()) - 1;
  w.reserve(layers);
  b.reserve(layers);
  for (int l = 0; l < layers; ++l) {
    const double gain = (l == layers - 1) ? output_gain : 1.0;
    RngStream layer_stream = init_stream.fork("layer", static_cast<std::uint64_t>(l));
    w.push_back(orthogonal_matrix(dims_[l + 1], dims_[l], gain, layer_stream));
    b.emplace_back(dims_[l + 1], 0.0);
  }
}

Vec Mlp::forward(const Vec& in) const {
  Cache cache;
  return forward_cached(in, cache);
}

Vec Mlp::forward_cached(const Vec& in, Cache& cache) const {
  if (static_cast<int>(in.size()) != input_dim()) throw MlpError("input dimension mismatch");
  const int layers = layer_count();
  cache.act.assign(layers + 1, {});
  cache.act[0] = in;
  for (int l = 0; l < layers; ++l) {
    Vec z = matvec(w[l], cache.act[l]);
    for (size_t i = 0; i < z.size(); ++i) z[i] += b[l][i];
    if (l + 1 < layers)
      for (auto& v : z) v = std::tanh(v);
    cache.act[l + 1] = std::move(z);
  }
  return cache.act.back();
}

void Mlp::backward(const Cache& cache, const Vec& upstream, MlpGrad& grad) const {
  const int layers = layer_count();
  if (static_cast<int>(upstream.size()) != output_dim())
    throw MlpError("upstream dimension mismatch");
  Vec delta = upstream;  // output layer is linear
  for (int l = layers - 1; l >= 0; --l) {
    const Vec& prev = cache.act[l];
    for (int i = 0; i < w[l].rows; ++i) {
      grad.b[l][i] += delta[i];
      for (int j = 0; j < w[l].cols; ++j) grad.w[l](i, j) += delta[i] * prev[j];
    }
    if (l == 0) break;
    Vec next(w[l].cols, 0.0);
    for (int i = 0; i < w[l].rows; ++i)
      for (int j = 0; j < w[l].cols; ++j) next[j] += w[l](i, j) * delta[i];
    // through tanh of the previous layer's output
    for (int j = 0; j < w[l].cols; ++j) next[j] *= 1.0 - cache.act[l][j] * cache.act[l][j];
    delta = std::move(next);
  }
}

MlpGrad Mlp::zero_grad() const {
  MlpGrad g;
  g.w.reserve(w.size());
  g.b.reserve(b.size());
  for (const auto& m : w) g.w.emplace_back(m.rows, m.cols);
  for (const auto& v : b) g.b.emplace_back(v.size(), 0.0);
  return g;
}

size_t Mlp::param_count() const {
  size_t n = 0;
  for (const auto& m : w) n += m.a.size();
  for (const auto& v : b) n += v.size();
  return n;
}

Vec Mlp::flatten() const {
  Vec out;
  out.reserve(param_count());
  for (const auto& m : w) out.insert(out.end(), m.a.begin(), m.a.end());
  for (const auto& v : b) out.insert(out.end(), v.begin(), v.end());
  return out;
}

void Mlp::unflatten(const Vec& flat) {
  if (flat.size() != param_count()) throw MlpError("flat parameter size mismatch");
  size_t pos = 0;
  for (auto& m : w) {
    std::copy(flat.begin() + pos, flat.begin() + pos + m.a.size(), m.a.begin());
    pos += m.a.size();
  }
  for (auto& v : b) {
    std::copy(flat.begin() + pos, flat.begin() + pos + v.size(), v.begin());
    pos += v.size();
  }
}

void Adam::init(const Mlp& net) {
  t = 0;
  mw.clear();
  vw.clear();
  mb.clear();
  vb.clear();
  for (const auto& m : net.w) {
    mw.emplace_back(m.rows, m.cols);
    vw.emplace_back(m.rows, m.cols);
  }
  for (const auto& v : net.b) {
    mb.emplace_back(v.size(), 0.0);
    vb.emplace_back(v.size(), 0.0);
  }
}

void Adam::step(Mlp& net, const MlpGrad& grad) {
  ++t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (size_t l = 0; l < net.w.size(); ++l) {
    for (size_t i = 0; i < net.w[l].a.size(); ++i) {
      const double g = grad.w[l].a[i];
      mw[l].a[i] = beta1 * mw[l].a[i] + (1.0 - beta1) * g;
      vw[l].a[i] = beta2 * vw[l].a[i] + (1.0 - beta2) * g * g;
      net.w[l].a[i] -= lr * (mw[l].a[i] / c1) / (std::sqrt(vw[l].a[i] / c2) + eps);
    }
    for (size_t i = 0; i < net.b[l].size(); ++i) {
      const double g = grad.b[l][i];
      mb[l][i] = beta1 * mb[l][i] + (1.0 - beta1) * g;
      vb[l][i] = beta2 * vb[l][i] + (1.0 - beta2) * g * g;
      net.b[l][i] -= lr * (mb[l][i] / c1) / (std::sqrt(vb[l][i] / c2) + eps);
    }
  }
}

Vec softmax(const Vec& logits) {
  Vec out(logits.size());
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double total = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

double log_prob_of(const Vec& logits, int action) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double lse = 0.0;
  for (double v : logits) lse += std::exp(v - mx);
  return logits[action] - mx - std::log(lse);
}

std::pair<int, double> categorical_sample(const Vec& logits, RngStream& rng) {
  const Vec probs = softmax(logits);
  const double u = rng.next_double();
  double acc = 0.0;
  int action = static_cast<int>(probs.size()) - 1;
  for (size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) {
      action = static_cast<int>(i);
      break;
    }
  }
  return {action, log_prob_of(logits, action)};
}

}  // namespace mmfl
