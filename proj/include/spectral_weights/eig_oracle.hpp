#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "graph.hpp"
#include "matrix.hpp"

namespace spectral_weights {

struct EigPair {
  double value = 0.0;
  Vector vector;
};

/// Ascending eigenvalues; column k of `vectors` belongs to values[k].
struct Spectrum {
  Vector values;
  Matrix vectors;

  std::size_t size() const { return values.size(); }
  Vector vector(std::size_t k) const {
    Vector v(vectors.rows());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = vectors(i, k);
    return v;
  }
  EigPair pair(std::size_t k) const { return {values[k], vector(k)}; }
  double lambda2() const { return values.at(1); }
  double lambda_max() const { return values.back(); }
};

/// Flips v so that its largest-magnitude entry is positive. Entries within
/// 1e-12 (relative) of the maximum count as ties; the lowest index wins.
inline void canonical_sign(Vector& v) {
  const double m = norm_inf(v);
  if (m == 0.0) return;
  for (double x : v)
    if (std::abs(x) >= m * (1.0 - 1e-12)) {
      if (x < 0.0)
        for (double& y : v) y = -y;
      return;
    }
}

/// Repeated-eigenvalue test used to pick the subgradient path.
inline bool eigenvalues_coincide(double a, double b, double lambda_max) {
  return std::abs(a - b) <= 1e-6 * std::max(1.0, lambda_max);
}

/// Cyclic Jacobi eigensolver for dense symmetric matrices.
inline Spectrum sym_eig(const Matrix& input, double tol = 1e-12, int max_sweeps = 100) {
  if (!is_symmetric(input)) throw std::invalid_argument("sym_eig: matrix is not symmetric");
  const std::size_t n = input.rows();
  Matrix a = input;
  Matrix v = Matrix::identity(n);
  // The absolute tolerance is applied relative to the matrix scale once entries exceed 1.
  const double thresh = tol * std::max(1.0, input.max_abs());

  auto off = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s = std::max(s, std::abs(a(i, j)));
    return s;
  };

  int sweep = 0;
  for (; sweep < max_sweeps && off() > thresh; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }
  if (off() > thresh) throw std::runtime_error("sym_eig: Jacobi sweeps exhausted");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });

  Spectrum s;
  s.values.resize(n);
  s.vectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    s.values[k] = a(order[k], order[k]);
    Vector col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = v(i, order[k]);
    canonical_sign(col);
    for (std::size_t i = 0; i < n; ++i) s.vectors(i, k) = col[i];
  }
  return s;
}

namespace detail {
inline double kappa_of(const Spectrum& s) {
  const double l2 = s.lambda2();
  if (l2 <= 1e-10) throw std::domain_error("condition number: lambda_2 vanishes under the given weights");
  return s.lambda_max() / l2;
}
}  // namespace detail

inline double condition_number(const Graph& g) { return detail::kappa_of(sym_eig(laplacian(g))); }

inline double condition_number(const Graph& g, const NodeWeights& w) {
  return detail::kappa_of(sym_eig(symmetric_weighted_laplacian(g, w)));
}

inline double condition_number(const Graph& g, const EdgeWeights& w) {
  return detail::kappa_of(sym_eig(edge_weighted_laplacian(g, w)));
}

/// C = V+ Lambda+^{1/2} over the nonzero eigenspace, so that C C^T = L.
inline Matrix reduced_factor(const Matrix& l) {
  const Spectrum s = sym_eig(l);
  const std::size_t n = l.rows();
  const double zero_tol = 1e-10 * std::max(1.0, std::abs(s.values.back()));
  std::size_t zeros = 0;
  for (double x : s.values) {
    if (x < -zero_tol) throw std::invalid_argument("reduced_factor: matrix is not positive semidefinite");
    if (x <= zero_tol) ++zeros;
  }
  if (zeros != 1) throw std::invalid_argument("reduced_factor: expected rank n-1 (connected graph)");
  Matrix c(n, n - 1);
  for (std::size_t k = 1; k < n; ++k) {
    const double r = std::sqrt(s.values[k]);
    for (std::size_t i = 0; i < n; ++i) c(i, k - 1) = s.vectors(i, k) * r;
  }
  return c;
}

/// C^T diag(w) C.
inline Matrix weighted_gram(const Matrix& c, const NodeWeights& w) {
  if (w.size() != c.rows()) throw std::invalid_argument("weighted_gram: length mismatch");
  const std::size_t r = c.cols();
  Matrix m(r, r);
  for (std::size_t a = 0; a < r; ++a)
    for (std::size_t b = a; b < r; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < c.rows(); ++i) s += c(i, a) * w[i] * c(i, b);
      m(a, b) = m(b, a) = s;
    }
  return m;
}

/// kappa I >= C^T diag(w) C >= I, checked through the extreme eigenvalues.
inline bool lmi_feasible(const Graph& g, const NodeWeights& w, double kappa) {
  const Spectrum s = sym_eig(weighted_gram(reduced_factor(laplacian(g)), w));
  return s.values.front() >= 1.0 - 1e-9 && s.values.back() <= kappa + 1e-9;
}

}  // namespace spectral_weights
