#pragma once

// Fixtures and independent reference computations shared by the test binaries.

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <random>
#include <string>
#include <vector>

#include <spectral_weights/spectral_weights.hpp>

namespace sw_test {

using namespace spectral_weights;

inline std::string fixture_path(const std::string& name) { return std::string(SW_FIXTURE_DIR) + "/" + name; }

inline Graph paper7() { return load_graph(fixture_path("paper7.graph")); }
inline Graph path3() { return parse_graph("3 2\n1 2\n2 3\n"); }
inline Graph k3() { return parse_graph("3 3\n1 2\n1 3\n2 3\n"); }
inline Graph star4() { return parse_graph("4 3\n1 2\n1 3\n1 4\n"); }
inline Graph cycle(std::size_t n) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return Graph(n, e);
}
inline Graph path(std::size_t n) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return Graph(n, e);
}

/// The named fixtures used by property suites.
inline std::vector<std::pair<std::string, Graph>> fixtures() {
  return {{"paper7", paper7()}, {"P3", path3()}, {"K3", k3()}, {"S4", star4()}, {"C5", cycle(5)}};
}

/// Random spanning tree plus independent extra edges with probability p.
inline Graph random_connected_graph(std::size_t n, double p, std::mt19937_64& rng) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<std::vector<bool>> has(n, std::vector<bool>(n, false));
  std::vector<NodeId> perm(n);
  for (NodeId i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  for (std::size_t k = 1; k < n; ++k) {
    const NodeId parent = perm[std::uniform_int_distribution<std::size_t>(0, k - 1)(rng)];
    const NodeId child = perm[k];
    edges.emplace_back(parent, child);
    has[parent][child] = has[child][parent] = true;
  }
  std::bernoulli_distribution coin(p);
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      if (!has[i][j] && coin(rng)) edges.emplace_back(i, j);
  return Graph(n, edges);
}

inline Vector random_vector(std::size_t n, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

/// Reference symmetric spectrum (ascending) from Eigen's self-adjoint solver.
struct RefSpectrum {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  Vector vector(std::size_t k) const {
    Vector v(vectors.rows());
    for (Eigen::Index i = 0; i < vectors.rows(); ++i) v[i] = vectors(i, k);
    return v;
  }
};

inline RefSpectrum ref_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> s(to_eigen(m));
  return {s.eigenvalues(), s.eigenvectors()};
}

/// Eigenvalues of a general real matrix sorted by real part (imaginary parts returned separately).
inline std::vector<std::complex<double>> ref_general_eigenvalues(const Matrix& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> s(to_eigen(m), false);
  std::vector<std::complex<double>> v(s.eigenvalues().data(), s.eigenvalues().data() + s.eigenvalues().size());
  std::sort(v.begin(), v.end(), [](auto a, auto b) { return a.real() < b.real(); });
  return v;
}

/// All-pairs shortest paths by Floyd-Warshall on the edge list.
inline std::size_t floyd_diameter(const Graph& g) {
  const std::size_t n = g.n(), inf = 1u << 20;
  std::vector<std::vector<std::size_t>> d(n, std::vector<std::size_t>(n, inf));
  for (NodeId i = 0; i < n; ++i) d[i][i] = 0;
  for (const auto& e : g.edges()) d[e.i][e.j] = d[e.j][e.i] = 1;
  for (NodeId k = 0; k < n; ++k)
    for (NodeId i = 0; i < n; ++i)
      for (NodeId j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  std::size_t best = 0;
  for (const auto& row : d)
    for (auto x : row) best = std::max(best, x);
  return best;
}

inline double cos_angle(const Vector& a, const Vector& b) { return std::abs(dot(a, b)) / (norm2(a) * norm2(b)); }

/// Options for the distributed estimators with exact unweighted extremes.
inline EstimatorOptions estimator_options(const Graph& g, double tol = 5e-6) {
  const auto s = ref_eig(laplacian(g));
  EstimatorOptions o;
  o.d_bound = bfs_diameter(g);
  o.tol = tol;
  o.lam2_unit = s.values(1);
  o.lamN_unit = s.values(g.n() - 1);
  return o;
}

}  // namespace sw_test
