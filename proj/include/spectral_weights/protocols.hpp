#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "graph.hpp"
#include "simnet.hpp"

namespace spectral_weights {

/// A distributed protocol did not reach its stopping rule within its round budget.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// diag(s) B^T diag(c) B diag(s). Node weights: s = sqrt(w), c = 1. Edge weights: s = 1, c = w.
/// Agent i holds s_i and the c of its incident links.
struct LaplacianOperator {
  Vector scale;
  Vector link;  // per edge, edge-list order

  static LaplacianOperator node(const Graph& g, const NodeWeights& w) {
    detail::check_node_weights(g, w);
    LaplacianOperator op{Vector(g.n()), Vector(g.m(), 1.0)};
    for (NodeId i = 0; i < g.n(); ++i) op.scale[i] = std::sqrt(w[i]);
    return op;
  }
  static LaplacianOperator edge(const Graph& g, const EdgeWeights& w) {
    detail::check_edge_weights(g, w);
    return {Vector(g.n(), 1.0), w.values};
  }
  static LaplacianOperator unit(const Graph& g) { return {Vector(g.n(), 1.0), Vector(g.m(), 1.0)}; }

  Matrix dense(const Graph& g) const {
    Matrix l = edge_weighted_laplacian(g, EdgeWeights{link});
    for (NodeId i = 0; i < g.n(); ++i)
      for (NodeId j = 0; j < g.n(); ++j) l(i, j) *= scale[i] * scale[j];
    return l;
  }

  /// Unit vector spanning the kernel (requires positive scale).
  Vector null_vector() const {
    Vector v(scale.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / scale[i];
    const double nrm = norm2(v);
    for (double& x : v) x /= nrm;
    return v;
  }

  /// Link registers of every agent, in neighbor order.
  std::vector<Vector> link_registers(const Graph& g) const {
    std::vector<Vector> out(g.n());
    for (NodeId i = 0; i < g.n(); ++i)
      for (std::size_t k = 0; k < g.degree(i); ++k) out[i].push_back(link[g.edge_of(i, k)]);
    return out;
  }

  /// Gershgorin bound max_i 2 s_i^2 sum_k c_ik, the row-sum bound of diag(s^2) B^T C B.
  double gershgorin(const Graph& g) const {
    double m = 0.0;
    for (NodeId i = 0; i < g.n(); ++i) {
      double c = 0.0;
      for (std::size_t k = 0; k < g.degree(i); ++k) c += link[g.edge_of(i, k)];
      m = std::max(m, 2.0 * scale[i] * scale[i] * c);
    }
    return m;
  }
};

namespace protocols {

/// One-round operator application seen from agent i: message is s_j x_j.
template <std::size_t K>
inline double apply_local(double x, double s, std::span<const double> lw, const simnet::Inbox<K>& in,
                          std::size_t payload = 0) {
  double acc = 0.0;
  const double sx = s * x;
  for (std::size_t k = 0; k < in.size(); ++k) acc += lw[k] * (sx - in[k][payload]);
  return s * acc;
}

/// p_i <- max(p_i, max_j p_j) for a fixed number of rounds.
struct MaxConsensus {
  static constexpr std::size_t arity = 1;
  enum : std::size_t { P, T };
  std::size_t budget = 0;

  std::vector<std::string> registers() const { return {"p", "T"}; }
  simnet::Message<1> emit(simnet::ConstAgentView a, std::size_t) const { return {a.locals[P]}; }
  void step(simnet::AgentView a, const simnet::Inbox<1>& in) const {
    double p = a.locals[P];
    for (std::size_t k = 0; k < in.size(); ++k) p = std::max(p, in[k][0]);
    a.locals[P] = p;
    a.locals[T] += 1.0;
  }
  bool done(simnet::ConstAgentView a) const { return a.locals[T] >= static_cast<double>(budget); }
};

/// Max-consensus that stops at the first round in which no agent changes.
/// "t" records the round at which the agent last changed.
struct QuiescentMax {
  static constexpr std::size_t arity = 1;
  enum : std::size_t { M, Tlast, T, Quiet };

  std::vector<std::string> registers() const { return {"m", "t", "T", "quiet"}; }
  simnet::Message<1> emit(simnet::ConstAgentView a, std::size_t) const { return {a.locals[M]}; }
  void step(simnet::AgentView a, const simnet::Inbox<1>& in) const {
    double m = a.locals[M];
    for (std::size_t k = 0; k < in.size(); ++k) m = std::max(m, in[k][0]);
    a.locals[T] += 1.0;
    if (m != a.locals[M]) {
      a.locals[M] = m;
      a.locals[Tlast] = a.locals[T];
      a.locals[Quiet] = 0.0;
    } else {
      a.locals[Quiet] = 1.0;
    }
  }
  bool done(simnet::ConstAgentView a) const { return a.locals[Quiet] != 0.0; }
};

/// Average consensus on x~ = v^2 with step 1/beta.
struct SquareAverage {
  static constexpr std::size_t arity = 1;
  enum : std::size_t { V, Xt, Delta, T };
  double inv_beta = 0.5;
  double tol = 1e-4;

  std::vector<std::string> registers() const { return {"v", "xt", "delta", "T"}; }
  simnet::Message<1> emit(simnet::ConstAgentView a, std::size_t) const { return {a.locals[Xt]}; }
  void step(simnet::AgentView a, const simnet::Inbox<1>& in) const {
    const double xt = a.locals[Xt];
    double lap = 0.0;
    for (std::size_t k = 0; k < in.size(); ++k) lap += xt - in[k][0];
    const double next = xt - inv_beta * lap;
    a.locals[Delta] = std::abs(next - xt);
    a.locals[Xt] = next;
    a.locals[T] += 1.0;
  }
  bool done(simnet::ConstAgentView a) const { return a.locals[T] >= 1.0 && a.locals[Delta] <= tol; }
};

/// Round 1: every agent applies the operator and, if |x_i| > 1e-8, forms the
/// ratio [Lx]_i / x_i. Following rounds flood the ratio and the sign of x at the
/// agent with the largest |x_i| (lowest id on ties), so every agent holds the
/// same value and can apply the sign convention locally.
struct LocalEigenvalue {
  static constexpr std::size_t arity = 5;
  enum : std::size_t { X, S, Lam, Key, KeyId, Sign, T };
  std::size_t flood_rounds = 0;

  std::vector<std::string> registers() const { return {"x", "s", "lambda", "key", "key_id", "sign", "T"}; }
  std::vector<std::string> link_registers() const { return {"c"}; }
  simnet::Message<5> emit(simnet::ConstAgentView a, std::size_t) const {
    return {a.locals[S] * a.locals[X], a.locals[Key], a.locals[KeyId], a.locals[Lam], a.locals[Sign]};
  }
  void step(simnet::AgentView a, const simnet::Inbox<5>& in) const {
    if (a.locals[T] == 0.0) {
      const double x = a.locals[X];
      const double y = apply_local(x, a.locals[S], a.links, in);
      if (std::abs(x) > 1e-8) {
        a.locals[Lam] = y / x;
        a.locals[Key] = std::abs(x);
        a.locals[Sign] = x > 0.0 ? 1.0 : -1.0;
      } else {
        a.locals[Lam] = 0.0;
        a.locals[Key] = -1.0;
        a.locals[Sign] = 1.0;
      }
      a.locals[KeyId] = -static_cast<double>(a.id);
    } else {
      for (std::size_t k = 0; k < in.size(); ++k) {
        const auto& m = in[k];
        if (m[1] > a.locals[Key] || (m[1] == a.locals[Key] && m[2] > a.locals[KeyId])) {
          a.locals[Key] = m[1];
          a.locals[KeyId] = m[2];
          a.locals[Lam] = m[3];
          a.locals[Sign] = m[4];
        }
      }
    }
    a.locals[T] += 1.0;
  }
  bool done(simnet::ConstAgentView a) const { return a.locals[T] >= static_cast<double>(flood_rounds + 1); }
};

/// One round: y = L x.
struct MatVec {
  static constexpr std::size_t arity = 1;
  enum : std::size_t { X, S, Y, T };

  std::vector<std::string> registers() const { return {"x", "s", "y", "T"}; }
  std::vector<std::string> link_registers() const { return {"c"}; }
  simnet::Message<1> emit(simnet::ConstAgentView a, std::size_t) const { return {a.locals[S] * a.locals[X]}; }
  void step(simnet::AgentView a, const simnet::Inbox<1>& in) const {
    a.locals[Y] = apply_local(a.locals[X], a.locals[S], a.links, in);
    a.locals[T] += 1.0;
  }
  bool done(simnet::ConstAgentView a) const { return a.locals[T] >= 1.0; }
};

}  // namespace protocols

// Drivers ----------------------------------------------------------------------

inline Vector max_consensus(const Graph& g, const Vector& p0, std::size_t rounds, std::size_t* rounds_used = nullptr) {
  if (p0.size() != g.n()) throw std::invalid_argument("max_consensus: one value per agent required");
  std::vector<Vector> init(g.n());
  for (NodeId i = 0; i < g.n(); ++i) init[i] = {p0[i], 0.0};
  simnet::Network<protocols::MaxConsensus> net(g, protocols::MaxConsensus{rounds}, init);
  net.run(rounds);
  if (rounds_used) *rounds_used = net.round();
  return net.column(protocols::MaxConsensus::P);
}

struct DiameterEstimate {
  std::size_t value = 0;
  std::size_t rounds_used = 0;
};

/// Two quiescence-terminated max-consensus phases: ids, then stabilization rounds.
inline DiameterEstimate estimate_diameter(const Graph& g) {
  using protocols::QuiescentMax;
  const std::size_t cap = 4 * g.n() + 4;
  std::vector<Vector> init(g.n());
  for (NodeId i = 0; i < g.n(); ++i) init[i] = {static_cast<double>(i + 1), 0.0, 0.0, 0.0};
  simnet::Network<QuiescentMax> ids(g, QuiescentMax{}, init);
  if (!ids.run(cap)) throw ConvergenceError("estimate_diameter: id flood did not settle");

  for (NodeId i = 0; i < g.n(); ++i) init[i] = {ids.get(i, QuiescentMax::Tlast), 0.0, 0.0, 0.0};
  simnet::Network<QuiescentMax> ecc(g, QuiescentMax{}, init);
  if (!ecc.run(cap)) throw ConvergenceError("estimate_diameter: eccentricity flood did not settle");

  const auto e = static_cast<std::size_t>(ecc.get(0, QuiescentMax::M));
  return {2 * e, ids.round() + ecc.round()};
}

struct NormalizedVector {
  Vector values;       // v_i / ||v||_2 as computed by agent i
  Vector norms;        // each agent's estimate of ||v||_2
  std::size_t rounds = 0;
};

/// Average consensus on v_i^2 with beta = (lam2 + lamN) / 2 of the unweighted Laplacian.
inline NormalizedVector l2_normalize(const Graph& g, const Vector& v, double lam2, double lamN, double tol = 1e-4,
                                     std::size_t max_rounds = 100000) {
  using protocols::SquareAverage;
  if (v.size() != g.n()) throw std::invalid_argument("l2_normalize: one value per agent required");
  if (!(lam2 > 0.0) || lamN < lam2) throw std::invalid_argument("l2_normalize: need 0 < lam2 <= lamN");
  const double beta = 0.5 * (lam2 + lamN);
  std::vector<Vector> init(g.n());
  for (NodeId i = 0; i < g.n(); ++i) init[i] = {v[i], v[i] * v[i], 0.0, 0.0};
  simnet::Network<SquareAverage> net(g, SquareAverage{1.0 / beta, tol}, init);
  if (!net.run(max_rounds)) throw ConvergenceError("l2_normalize: no convergence within round budget");

  NormalizedVector out;
  out.rounds = net.round();
  const double n = static_cast<double>(g.n());
  for (NodeId i = 0; i < g.n(); ++i) {
    const double xt = net.get(i, SquareAverage::Xt);
    if (!(xt > 0.0)) throw ConvergenceError("l2_normalize: vector vanished");
    const double nrm = std::sqrt(n * xt);
    out.norms.push_back(nrm);
    out.values.push_back(v[i] / nrm);
  }
  return out;
}

struct LocalEigenvalueResult {
  Vector values;  // per agent
  Vector signs;   // sign of the largest-magnitude entry, as learned by each agent
  std::size_t rounds = 0;
};

inline LocalEigenvalueResult local_eigenvalue(const Graph& g, const LaplacianOperator& op, const Vector& x,
                                              std::size_t d_bound) {
  using protocols::LocalEigenvalue;
  if (x.size() != g.n()) throw std::invalid_argument("local_eigenvalue: one value per agent required");
  std::vector<Vector> init(g.n());
  for (NodeId i = 0; i < g.n(); ++i) init[i] = {x[i], op.scale[i], 0.0, 0.0, 0.0, 1.0, 0.0};
  simnet::Network<LocalEigenvalue> net(g, LocalEigenvalue{d_bound}, init, op.link_registers(g));
  net.run(d_bound + 1);
  for (NodeId i = 0; i < g.n(); ++i)
    if (net.get(i, LocalEigenvalue::Key) < 0.0)
      throw std::invalid_argument("local_eigenvalue: all entries vanish, not an eigenvector");
  return {net.column(LocalEigenvalue::Lam), net.column(LocalEigenvalue::Sign), net.round()};
}

inline LocalEigenvalueResult local_eigenvalue(const Graph& g, const NodeWeights& w, const Vector& x,
                                              std::size_t d_bound) {
  return local_eigenvalue(g, LaplacianOperator::node(g, w), x, d_bound);
}

inline Vector dist_matvec(const Graph& g, const LaplacianOperator& op, const Vector& x) {
  using protocols::MatVec;
  if (x.size() != g.n()) throw std::invalid_argument("dist_matvec: one value per agent required");
  std::vector<Vector> init(g.n());
  for (NodeId i = 0; i < g.n(); ++i) init[i] = {x[i], op.scale[i], 0.0, 0.0};
  simnet::Network<MatVec> net(g, MatVec{}, init, op.link_registers(g));
  net.run(1);
  return net.column(MatVec::Y);
}

inline Vector dist_matvec(const Graph& g, const NodeWeights& w, const Vector& x) {
  return dist_matvec(g, LaplacianOperator::node(g, w), x);
}

}  // namespace spectral_weights
