#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "eig_oracle.hpp"
#include "estimators.hpp"
#include "graph.hpp"
#include "protocols.hpp"
#include "simnet.hpp"

namespace spectral_weights {

enum class WeightMode { node, edge };
enum class EngineKind { distributed, oracle };

inline const char* to_string(WeightMode m) { return m == WeightMode::node ? "node" : "edge"; }
inline const char* to_string(EngineKind e) { return e == EngineKind::distributed ? "distributed" : "oracle"; }

struct AugLagParams {
  double w0 = 1.0;
  double sigma0 = 0.0;
  double gamma = 1e-3;
  double rho = 20.0;
  std::size_t t_max = 750;
  double eps_w = 5e-2;
  double eps_sigma = 1e-1;
  double eps_lamN = 1e-3;
  double eps_x = 5e-6;
  double eps_xt = 1e-4;
  std::size_t consecutive = 4;              // criterion (iii) window
  std::size_t max_multiplier_updates = 200;
  std::uint64_t seed = 0x5eedULL;

  void validate() const {
    if (!(w0 > 0.0)) throw std::invalid_argument("w0 must be positive");
    if (!(sigma0 >= 0.0)) throw std::invalid_argument("sigma0 must be non-negative");
    if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
    if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
    if (t_max < 1) throw std::invalid_argument("t_max must be at least 1");
    if (!(eps_w > 0.0 && eps_sigma > 0.0 && eps_lamN > 0.0 && eps_x > 0.0 && eps_xt > 0.0))
      throw std::invalid_argument("tolerances must be positive");
  }
};

// Objective pieces --------------------------------------------------------------

inline double aug_lagrangian_value(double lamN, double lam2, double sigma, double rho) {
  const double h = std::max(0.0, 1.0 - lam2 + sigma / rho);
  return lamN + 0.5 * rho * h * h;
}

/// rho * max(0, 1 - lam2 + sigma/rho), the weight of the lambda_2 derivative.
inline double penalty_coefficient(double lam2, double sigma, double rho) {
  return rho * std::max(0.0, 1.0 - lam2 + sigma / rho);
}

inline constexpr double kWeightFloor = 1e-9;

/// Agent i's derivative; needs only (w_j, vbar_j, vund_j) of its neighbors.
inline double node_gradient_at(const Graph& g, NodeId i, const Vector& w, const Vector& vbar, const Vector& vund,
                               double coef) {
  const double wi = std::max(w[i], kWeightFloor);
  double sb = 0.0, su = 0.0;
  for (NodeId j : g.neighbors(i)) {
    const double r = std::sqrt(std::max(w[j], kWeightFloor) / wi);
    sb += vbar[i] - r * vbar[j];
    su += vund[i] - r * vund[j];
  }
  return vbar[i] * sb - coef * vund[i] * su;
}

inline Vector node_gradient(const Graph& g, const NodeWeights& w, const Vector& vbar, const Vector& vund, double lam2,
                            double sigma, double rho) {
  detail::check_node_weights(g, w);
  if (vbar.size() != g.n() || vund.size() != g.n()) throw std::invalid_argument("node_gradient: length mismatch");
  const double coef = penalty_coefficient(lam2, sigma, rho);
  Vector out(g.n());
  for (NodeId i = 0; i < g.n(); ++i) out[i] = node_gradient_at(g, i, w.values, vbar, vund, coef);
  return out;
}

/// Same formula on arbitrary members of (possibly repeated) eigenspaces.
inline Vector subgradient_node(const Graph& g, const NodeWeights& w, const Vector& vbar, const Vector& vund,
                               double lam2, double sigma, double rho) {
  return node_gradient(g, w, vbar, vund, lam2, sigma, rho);
}

inline double edge_gradient_at(double vbi, double vbj, double vui, double vuj, double coef) {
  const double db = vbi - vbj, du = vui - vuj;
  return db * db - coef * du * du;
}

inline Vector edge_gradient(const Graph& g, const EdgeWeights& w, const Vector& vbar, const Vector& vund, double lam2,
                            double sigma, double rho) {
  detail::check_edge_weights(g, w);
  if (vbar.size() != g.n() || vund.size() != g.n()) throw std::invalid_argument("edge_gradient: length mismatch");
  const double coef = penalty_coefficient(lam2, sigma, rho);
  Vector out(g.m());
  for (std::size_t e = 0; e < g.m(); ++e) {
    const auto [i, j] = g.edges()[e];
    out[e] = edge_gradient_at(vbar[i], vbar[j], vund[i], vund[j], coef);
  }
  return out;
}

inline Vector projected_step(const Vector& w, const Vector& grad, double gamma) {
  if (w.size() != grad.size()) throw std::invalid_argument("projected_step: length mismatch");
  if (!(gamma > 0.0)) throw std::invalid_argument("projected_step: gamma must be positive");
  Vector out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = std::max(w[i] - gamma * grad[i], 0.0);
  return out;
}

inline double multiplier_update(double sigma, double rho, double lam2) {
  return std::max(sigma + rho * (1.0 - lam2), 0.0);
}

// Trace -------------------------------------------------------------------------

struct OuterRecord {
  std::size_t t = 0;
  Vector w;
  double lam2 = 0.0;
  double lamN = 0.0;
  double kappa = 0.0;
  double sigma = 0.0;
  std::size_t inner_rounds = 0;
};

struct MultiplierRecord {
  std::size_t k = 0;
  double sigma = 0.0;
  std::size_t t = 0;
};

struct RunTrace {
  WeightMode mode = WeightMode::node;
  EngineKind engine = EngineKind::oracle;
  std::uint64_t seed = 0;
  std::vector<OuterRecord> steps;
  std::vector<MultiplierRecord> multipliers;
  bool converged = false;
  std::size_t subproblems_at_t_max = 0;
  std::string diagnostic;

  const OuterRecord& terminal() const {
    if (steps.empty()) throw std::logic_error("empty run trace");
    return steps.back();
  }
  std::size_t total_inner_rounds() const {
    std::size_t s = 0;
    for (const auto& r : steps) s += r.inner_rounds;
    return s;
  }
};

// Engines -----------------------------------------------------------------------

/// Eigen-information at one weight vector. Vectors are per-agent entries.
struct Estimate {
  double lam2 = 0.0;
  double lamN = 0.0;
  Vector vbar;
  Vector vund;
  std::size_t rounds = 0;
  // orthonormal bases of the lambda_N / lambda_2 eigenspaces when they are repeated (oracle only)
  std::vector<Vector> vbar_space;
  std::vector<Vector> vund_space;
};

struct WeightUpdate {
  Vector w;
  double dw_inf = 0.0;  // max_i |w_i(t+1) - w_i(t)|, known to every agent
  std::size_t rounds = 0;
};

inline LaplacianOperator make_operator(const Graph& g, WeightMode mode, const Vector& w) {
  return mode == WeightMode::node ? LaplacianOperator::node(g, NodeWeights{w}) : LaplacianOperator::edge(g, EdgeWeights{w});
}

/// Eigenpairs from the dense solver, updates computed centrally.
class OracleEngine {
 public:
  OracleEngine(const Graph& g, WeightMode mode) : g_(&g), mode_(mode) {}

  Estimate estimate(const Vector& w) {
    const std::size_t n = g_->n();
    const Spectrum s = sym_eig(make_operator(*g_, mode_, w).dense(*g_));
    Estimate e{s.lambda2(), s.lambda_max(), s.vector(n - 1), s.vector(1), 0, {}, {}};
    const double tol = 1e-9 * std::max(1.0, std::abs(e.lamN));
    for (std::size_t k = 1; k < n; ++k) {
      if (std::abs(s.values[k] - e.lamN) <= tol) e.vbar_space.push_back(s.vector(k));
      if (std::abs(s.values[k] - e.lam2) <= tol) e.vund_space.push_back(s.vector(k));
    }
    if (e.vbar_space.size() < 2) e.vbar_space.clear();
    if (e.vund_space.size() < 2) e.vund_space.clear();
    return e;
  }

  // With a repeated eigenvalue any single eigenvector gives an arbitrary
  // subgradient that breaks symmetry. Averaging the rank one terms over the
  // eigenspace basis is still a subgradient (convex combination) and the
  // gradient is additive in its lambda_N and lambda_2 parts.
  WeightUpdate update(const Vector& w, const Estimate& e, double sigma, const AugLagParams& p) {
    auto grad_at = [&](const Vector& vb, const Vector& vu) {
      return mode_ == WeightMode::node ? node_gradient(*g_, NodeWeights{w}, vb, vu, e.lam2, sigma, p.rho)
                                       : edge_gradient(*g_, EdgeWeights{w}, vb, vu, e.lam2, sigma, p.rho);
    };
    Vector grad = grad_at(e.vbar, e.vund);
    if (!e.vbar_space.empty() || !e.vund_space.empty()) {
      const Vector base = grad;
      auto add_average = [&](const std::vector<Vector>& basis, bool top) {
        if (basis.empty()) return;
        for (const auto& v : basis) {
          const Vector gk = top ? grad_at(v, e.vund) : grad_at(e.vbar, v);
          for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += (gk[i] - base[i]) / double(basis.size());
        }
      };
      add_average(e.vbar_space, true);
      add_average(e.vund_space, false);
    }
    WeightUpdate u{projected_step(w, grad, p.gamma), 0.0, 0};
    for (std::size_t i = 0; i < w.size(); ++i) u.dw_inf = std::max(u.dw_inf, std::abs(u.w[i] - w[i]));
    return u;
  }

  double multiplier(double sigma, const Estimate& e, const AugLagParams& p) {
    return multiplier_update(sigma, p.rho, e.lam2);
  }

 private:
  const Graph* g_;
  WeightMode mode_;
};

/// Raised when the two endpoints of a link computed different edge weights.
class EndpointDisagreement : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace protocols {

/// Round 0: exchange (w_j, vbar_j, vund_j), take the projected gradient step.
/// Rounds 1..d: max-consensus on |w_i(t+1) - w_i(t)|.
struct NodeWeightStep {
  static constexpr std::size_t arity = 3;
  enum : std::size_t { W, Vb, Vu, Lam2, Sigma, Dw, T };
  double rho = 20.0;
  double gamma = 1e-3;
  std::size_t d_bound = 1;

  std::vector<std::string> registers() const { return {"w", "vbar", "vund", "lambda2", "sigma", "dw", "T"}; }
  simnet::Message<3> emit(simnet::ConstAgentView a, std::size_t) const {
    if (a.locals[T] == 0.0) return {a.locals[W], a.locals[Vb], a.locals[Vu]};
    return {a.locals[Dw], 0.0, 0.0};
  }
  void step(simnet::AgentView a, const simnet::Inbox<3>& in) const {
    auto& r = a.locals;
    if (r[T] == 0.0) {
      const double coef = penalty_coefficient(r[Lam2], r[Sigma], rho);
      const double wi = std::max(r[W], kWeightFloor);
      double sb = 0.0, su = 0.0;
      for (std::size_t k = 0; k < in.size(); ++k) {
        const double q = std::sqrt(std::max(in[k][0], kWeightFloor) / wi);
        sb += r[Vb] - q * in[k][1];
        su += r[Vu] - q * in[k][2];
      }
      const double grad = r[Vb] * sb - coef * r[Vu] * su;
      const double next = std::max(r[W] - gamma * grad, 0.0);
      r[Dw] = std::abs(next - r[W]);
      r[W] = next;
    } else {
      for (std::size_t k = 0; k < in.size(); ++k) r[Dw] = std::max(r[Dw], in[k][0]);
    }
    r[T] += 1.0;
  }
  bool done(simnet::ConstAgentView a) const { return a.locals[T] >= static_cast<double>(d_bound + 1); }
};

/// Round 0: exchange (vbar_j, vund_j); each endpoint updates its copy of every
/// incident edge weight. Round 1: endpoints exchange their new value of the
/// shared edge and verify bitwise agreement. Rounds 2..d+1: flood max |dw|.
struct EdgeWeightStep {
  static constexpr std::size_t arity = 3;
  enum : std::size_t { Vb, Vu, Lam2, Sigma, Dw, T };
  enum : std::size_t { C, Cnew };  // link registers
  double rho = 20.0;
  double gamma = 1e-3;
  std::size_t d_bound = 1;

  std::vector<std::string> registers() const { return {"vbar", "vund", "lambda2", "sigma", "dw", "T"}; }
  std::vector<std::string> link_registers() const { return {"c", "c_next"}; }
  simnet::Message<3> emit(simnet::ConstAgentView a, std::size_t slot) const {
    const double t = a.locals[T];
    if (t == 0.0) return {a.locals[Vb], a.locals[Vu], 0.0};
    if (t == 1.0) return {a.links[2 * slot + Cnew], 0.0, 0.0};
    return {a.locals[Dw], 0.0, 0.0};
  }
  void step(simnet::AgentView a, const simnet::Inbox<3>& in) const {
    auto& r = a.locals;
    if (r[T] == 0.0) {
      const double coef = penalty_coefficient(r[Lam2], r[Sigma], rho);
      for (std::size_t k = 0; k < in.size(); ++k) {
        const double grad = edge_gradient_at(r[Vb], in[k][0], r[Vu], in[k][1], coef);
        a.links[2 * k + Cnew] = std::max(a.links[2 * k + C] - gamma * grad, 0.0);
      }
    } else if (r[T] == 1.0) {
      double dw = 0.0;
      for (std::size_t k = 0; k < in.size(); ++k) {
        const double mine = a.links[2 * k + Cnew];
        if (in[k][0] != mine)
          throw EndpointDisagreement("edge " + std::to_string(a.id + 1) + "-" + std::to_string(in.sender(k) + 1) +
                                     ": endpoints computed different weights");
        dw = std::max(dw, std::abs(mine - a.links[2 * k + C]));
        a.links[2 * k + C] = mine;
      }
      r[Dw] = dw;
    } else {
      for (std::size_t k = 0; k < in.size(); ++k) r[Dw] = std::max(r[Dw], in[k][0]);
    }
    r[T] += 1.0;
  }
  bool done(simnet::ConstAgentView a) const { return a.locals[T] >= static_cast<double>(d_bound + 2); }
};

}  // namespace protocols

/// Every quantity lives in per-agent registers and is produced by simnet
/// protocols. The engine only carries each agent's registers from one
/// protocol to the next.
class DistributedEngine {
 public:
  DistributedEngine(const Graph& g, WeightMode mode, const AugLagParams& p) : g_(&g), mode_(mode) {
    opts_.tol = p.eps_x;
    opts_.norm_tol = p.eps_xt;
    opts_.seed = p.seed;
    bootstrap();
    sigma_.assign(g.n(), p.sigma0);
  }

  std::size_t d_bound() const { return opts_.d_bound; }
  std::size_t bootstrap_rounds() const { return bootstrap_rounds_; }
  const EstimatorOptions& options() const { return opts_; }
  /// Per-agent multiplier registers.
  const Vector& sigma_registers() const { return sigma_; }
  /// Per-agent eigenvalue registers from the latest estimate.
  const Vector& lam2_registers() const { return lam2_; }
  const Vector& lamN_registers() const { return lamN_; }

  Estimate estimate(const Vector& w) {
    const auto op = make_operator(*g_, mode_, w);
    Estimate e;
    // Warm starts are dithered: with symmetric weights an eigenvector can sit
    // exactly in one symmetry class, and after a crossing the iteration would
    // keep following the wrong branch.
    ++calls_;
    const auto top = power_largest(*g_, op, dithered(xbar_, 2 * calls_), opts_);
    const auto lamN = local_eigenvalue(*g_, op, top.x, opts_.d_bound);
    auto cfg = fiedler_config(*g_, op, lamN.values[0], opts_.d_bound, kappa_);
    const auto fied = power_fiedler(*g_, op, cfg, dithered(yund_, 2 * calls_ + 1), opts_);
    const auto lam2 = local_eigenvalue(*g_, op, fied.x, opts_.d_bound);
    xbar_ = top.x;
    yund_ = fied.x;

    Vector sb(g_->n()), su(g_->n());
    for (NodeId i = 0; i < g_->n(); ++i) {
      sb[i] = lamN.signs[i] * top.x[i];
      su[i] = lam2.signs[i] * fied.x[i];
    }
    const auto nb = l2_normalize(*g_, sb, opts_.lam2_unit, opts_.lamN_unit, opts_.norm_tol);
    const auto nu = l2_normalize(*g_, su, opts_.lam2_unit, opts_.lamN_unit, opts_.norm_tol);
    lamN_ = lamN.values;
    lam2_ = lam2.values;
    e.lamN = lamN_[0];
    e.lam2 = lam2_[0];
    e.vbar = nb.values;
    e.vund = nu.values;
    e.rounds = top.rounds + lamN.rounds + fied.rounds + lam2.rounds + nb.rounds + nu.rounds;
    if (e.lam2 > 0.0) kappa_ = e.lamN / e.lam2;
    return e;
  }

  WeightUpdate update(const Vector& w, const Estimate& e, const AugLagParams& p) {
    return mode_ == WeightMode::node ? update_node(w, e, p) : update_edge(w, e, p);
  }

  double multiplier(double, const Estimate&, const AugLagParams& p) {
    for (NodeId i = 0; i < g_->n(); ++i) sigma_[i] = multiplier_update(sigma_[i], p.rho, lam2_[i]);
    return sigma_[0];
  }

 private:
  Vector dithered(const Vector& x, std::uint64_t stream) const {
    Vector out = x;
    for (NodeId i = 0; i < g_->n(); ++i) {
      auto rng = simnet::agent_rng(opts_.seed ^ 0xd1e7ULL, i, stream);
      out[i] += opts_.warm_dither * std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    }
    return out;
  }

  void bootstrap() {
    const auto diam = estimate_diameter(*g_);
    opts_.d_bound = diam.value;
    bootstrap_rounds_ = diam.rounds_used;
    const auto unit = LaplacianOperator::unit(*g_);
    xbar_ = detail::reseed_vector(g_->n(), opts_.seed, 0);
    yund_ = detail::reseed_vector(g_->n(), opts_.seed ^ 0x9e3779b97f4a7c15ULL, 0);
    const auto top = power_largest(*g_, unit, xbar_, opts_);
    const auto lamN = local_eigenvalue(*g_, unit, top.x, opts_.d_bound);
    const auto cfg = fiedler_config(*g_, unit, lamN.values[0], opts_.d_bound);
    const auto fied = power_fiedler(*g_, unit, cfg, yund_, opts_);
    const auto lam2 = local_eigenvalue(*g_, unit, fied.x, opts_.d_bound);
    opts_.lamN_unit = lamN.values[0];
    opts_.lam2_unit = lam2.values[0];
    bootstrap_rounds_ += top.rounds + lamN.rounds + fied.rounds + lam2.rounds;
    xbar_ = top.x;
    yund_ = fied.x;
  }

  WeightUpdate update_node(const Vector& w, const Estimate& e, const AugLagParams& p) {
    using protocols::NodeWeightStep;
    std::vector<Vector> init(g_->n());
    for (NodeId i = 0; i < g_->n(); ++i) init[i] = {w[i], e.vbar[i], e.vund[i], lam2_[i], sigma_[i], 0.0, 0.0};
    simnet::Network<NodeWeightStep> net(*g_, NodeWeightStep{p.rho, p.gamma, opts_.d_bound}, init);
    net.run(opts_.d_bound + 1);
    return {net.column(NodeWeightStep::W), net.get(0, NodeWeightStep::Dw), net.round()};
  }

  WeightUpdate update_edge(const Vector& w, const Estimate& e, const AugLagParams& p) {
    using protocols::EdgeWeightStep;
    std::vector<Vector> init(g_->n()), links(g_->n());
    for (NodeId i = 0; i < g_->n(); ++i) {
      init[i] = {e.vbar[i], e.vund[i], lam2_[i], sigma_[i], 0.0, 0.0};
      for (std::size_t k = 0; k < g_->degree(i); ++k) {
        links[i].push_back(w[g_->edge_of(i, k)]);
        links[i].push_back(0.0);
      }
    }
    simnet::Network<EdgeWeightStep> net(*g_, EdgeWeightStep{p.rho, p.gamma, opts_.d_bound}, init, links);
    net.run(opts_.d_bound + 2);
    // Each edge weight is read from its lower endpoint; both ends hold the same value.
    Vector next(g_->m());
    for (std::size_t e_idx = 0; e_idx < g_->m(); ++e_idx) {
      const auto [i, j] = g_->edges()[e_idx];
      next[e_idx] = net.links(i)[2 * g_->slot(i, j) + EdgeWeightStep::C];
    }
    return {next, net.get(0, EdgeWeightStep::Dw), net.round()};
  }

  const Graph* g_;
  WeightMode mode_;
  EstimatorOptions opts_;
  std::size_t bootstrap_rounds_ = 0;
  std::uint64_t calls_ = 0;
  Vector xbar_, yund_;
  Vector sigma_, lam2_, lamN_;
  std::optional<double> kappa_;
};

// Outer loop ----------------------------------------------------------------------

namespace detail {

template <class Engine>
WeightUpdate engine_update(Engine& eng, const Vector& w, const Estimate& e, double sigma, const AugLagParams& p) {
  if constexpr (requires { eng.update(w, e, sigma, p); })
    return eng.update(w, e, sigma, p);
  else
    return eng.update(w, e, p);
}

}  // namespace detail

/// Augmented-Lagrangian outer loop.
///
/// Subproblem k runs projected gradient steps at fixed sigma and ends when
///   (ii)  |lamN(t+1) - lamN(t)| / gamma <= eps_lamN, or
///   (iii) ||w(t+1) - w(t)||_inf / gamma <= eps_w for `consecutive` steps in a row, or
///   (i)   t_max steps were taken.
/// Both differences are divided by gamma so that the tolerances apply to rates
/// of change per unit step. The run stops when |sigma^{k+1} - sigma^k| <= eps_sigma
/// and the last subproblem either converged or left the multiplier active.
template <class Engine>
RunTrace run_outer(Engine& eng, const Vector& w0, const AugLagParams& p, WeightMode mode, EngineKind kind,
                   std::size_t initial_rounds = 0) {
  p.validate();
  RunTrace trace;
  trace.mode = mode;
  trace.engine = kind;
  trace.seed = p.seed;

  Vector w = w0;
  double sigma = p.sigma0;
  Estimate est = eng.estimate(w);
  auto record = [&](std::size_t t, std::size_t rounds) {
    trace.steps.push_back({t, w, est.lam2, est.lamN, est.lamN / est.lam2, sigma, rounds});
  };
  record(0, initial_rounds + est.rounds);

  std::size_t t = 0;
  for (std::size_t k = 0; k < p.max_multiplier_updates; ++k) {
    std::size_t run = 0, steps = 0;
    bool sub_converged = false;
    while (steps < p.t_max) {
      const WeightUpdate u = detail::engine_update(eng, w, est, sigma, p);
      const double prev_lamN = est.lamN;
      w = u.w;
      est = eng.estimate(w);
      ++t;
      ++steps;
      record(t, u.rounds + est.rounds);
      run = (u.dw_inf / p.gamma <= p.eps_w) ? run + 1 : 0;
      if (run >= p.consecutive || std::abs(est.lamN - prev_lamN) / p.gamma <= p.eps_lamN) {
        sub_converged = true;
        break;
      }
    }
    if (!sub_converged) ++trace.subproblems_at_t_max;
    const double next = eng.multiplier(sigma, est, p);
    trace.multipliers.push_back({k + 1, next, t});
    const bool settled = std::abs(next - sigma) <= p.eps_sigma;
    sigma = next;
    if (settled && (sub_converged || sigma > 0.0)) {
      trace.converged = true;
      break;
    }
  }
  if (!trace.converged)
    trace.diagnostic = "multiplier did not settle within " + std::to_string(p.max_multiplier_updates) +
                       " updates (" + std::to_string(trace.subproblems_at_t_max) + " subproblems hit t_max)";
  else if (trace.subproblems_at_t_max > 0)
    trace.diagnostic = std::to_string(trace.subproblems_at_t_max) + " subproblem(s) stopped at t_max";
  return trace;
}

inline Vector initial_weights(const Graph& g, WeightMode mode, const AugLagParams& p) {
  return Vector(mode == WeightMode::node ? g.n() : g.m(), p.w0);
}

inline RunTrace outer_solve(const Graph& g, const AugLagParams& p, WeightMode mode, EngineKind kind) {
  p.validate();
  const Vector w0 = initial_weights(g, mode, p);
  if (kind == EngineKind::oracle) {
    OracleEngine eng(g, mode);
    return run_outer(eng, w0, p, mode, kind);
  }
  DistributedEngine eng(g, mode, p);
  return run_outer(eng, w0, p, mode, kind, eng.bootstrap_rounds());
}

/// Exact condition number of the terminal weights (oracle evaluation).
inline double terminal_kappa_exact(const Graph& g, const RunTrace& trace) {
  const Vector& w = trace.terminal().w;
  return trace.mode == WeightMode::node ? condition_number(g, NodeWeights{w}) : condition_number(g, EdgeWeights{w});
}

// CSV ---------------------------------------------------------------------------

struct TraceFiles {
  std::filesystem::path weights, eigen, multiplier;
};

inline TraceFiles trace_file_names(const std::filesystem::path& dir, WeightMode mode) {
  const std::string prefix = mode == WeightMode::node ? "nodeWeight" : "edgeWeight";
  return {dir / (prefix + ".csv"), dir / (prefix + "Eigen.csv"), dir / (prefix + "Mu.csv")};
}

inline void write_weights_csv(std::ostream& out, const RunTrace& trace) {
  const std::size_t m = trace.steps.empty() ? 0 : trace.steps.front().w.size();
  out << "t";
  for (std::size_t i = 0; i < m; ++i) out << ",w" << (i + 1);
  out << '\n' << std::setprecision(10);
  for (const auto& s : trace.steps) {
    out << s.t;
    for (double x : s.w) out << ',' << x;
    out << '\n';
  }
}

inline void write_eigen_csv(std::ostream& out, const RunTrace& trace) {
  out << "t,lambda_N,lambda_2\n" << std::setprecision(10);
  for (const auto& s : trace.steps) out << s.t << ',' << s.lamN << ',' << s.lam2 << '\n';
}

inline void write_multiplier_csv(std::ostream& out, const RunTrace& trace) {
  out << "sigma,t\n" << std::setprecision(10);
  for (const auto& m : trace.multipliers) out << m.sigma << ',' << m.t << '\n';
}

inline TraceFiles write_trace_csvs(const std::filesystem::path& dir, const RunTrace& trace) {
  std::filesystem::create_directories(dir);
  const TraceFiles f = trace_file_names(dir, trace.mode);
  auto open = [](const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
  };
  {
    auto out = open(f.weights);
    write_weights_csv(out, trace);
  }
  {
    auto out = open(f.eigen);
    write_eigen_csv(out, trace);
  }
  {
    auto out = open(f.multiplier);
    write_multiplier_csv(out, trace);
  }
  return f;
}

}  // namespace spectral_weights
