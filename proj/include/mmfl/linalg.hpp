#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "mmfl/rng.hpp"

namespace mmfl {

using Vec = std::vector<double>;

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill) {}

  double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

inline double dot(const Vec& x, const Vec& y) {
  assert(x.size() == y.size());
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm_sq(const Vec& x) { return dot(x, x); }

inline void axpy(double alpha, const Vec& x, Vec& y) {
  assert(x.size() == y.size());
  for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(Vec& x, double alpha) {
  for (auto& v : x) v *= alpha;
}

inline Vec matvec(const Mat& m, const Vec& x) {
  assert(static_cast<int>(x.size()) == m.cols);
  Vec y(m.rows, 0.0);
  for (int i = 0; i < m.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < m.cols; ++j) s += m(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

inline Vec tmatvec(const Mat& m, const Vec& x) {
  assert(static_cast<int>(x.size()) == m.rows);
  Vec y(m.cols, 0.0);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) y[j] += m(i, j) * x[i];
  return y;
}

inline Mat matmul_t_self(const Mat& m) {  // mᵀm
  Mat r(m.cols, m.cols);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j)
      for (int k = 0; k < m.cols; ++k) r(j, k) += m(i, j) * m(i, k);
  return r;
}

// Cyclic Jacobi eigenvalue iteration for symmetric matrices. Ascending order.
inline std::vector<double> sym_eigenvalues(Mat m, int max_sweeps = 100) {
  if (m.rows != m.cols) throw std::invalid_argument("sym_eigenvalues: square matrix required");
  const int n = m.rows;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += m(p, q) * m(p, q);
    if (off < 1e-28) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::fabs(m(p, q)) < 1e-300) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (int k = 0; k < n; ++k) {
          const double mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = m(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

// Cholesky solve for symmetric positive definite systems.
inline Vec solve_spd(Mat m, Vec b) {
  if (m.rows != m.cols || m.rows != static_cast<int>(b.size()))
    throw std::invalid_argument("solve_spd: dimension mismatch");
  const int n = m.rows;
  for (int j = 0; j < n; ++j) {
    double d = m(j, j);
    for (int k = 0; k < j; ++k) d -= m(j, k) * m(j, k);
    if (d <= 0.0) throw std::runtime_error("solve_spd: matrix not positive definite");
    m(j, j) = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (int k = 0; k < j; ++k) s -= m(i, k) * m(j, k);
      m(i, j) = s / m(j, j);
    }
  }
  // forward then backward substitution
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= m(i, k) * b[k];
    b[i] = s / m(i, i);
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int k = i + 1; k < n; ++k) s -= m(k, i) * b[k];
    b[i] = s / m(i, i);
  }
  return b;
}

// Random orthogonal matrix from modified Gram-Schmidt on a Gaussian matrix.
inline Mat random_orthogonal(int n, RngStream& rng) {
  Mat q(n, n);
  for (auto& v : q.a) v = rng.normal();
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < j; ++k) {
      double proj = 0.0;
      for (int i = 0; i < n; ++i) proj += q(i, j) * q(i, k);
      for (int i = 0; i < n; ++i) q(i, j) -= proj * q(i, k);
    }
    double nrm = 0.0;
    for (int i = 0; i < n; ++i) nrm += q(i, j) * q(i, j);
    nrm = std::sqrt(nrm);
    if (nrm < 1e-12) {  // degenerate column; replace with unit vector
      for (int i = 0; i < n; ++i) q(i, j) = (i == j) ? 1.0 : 0.0;
    } else {
      for (int i = 0; i < n; ++i) q(i, j) /= nrm;
    }
  }
  return q;
}

}  // namespace mmfl
