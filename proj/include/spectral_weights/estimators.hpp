#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "graph.hpp"
#include "protocols.hpp"
#include "simnet.hpp"

namespace spectral_weights {

struct EigEstimate {
  Vector vector;  // l2-normalized, sign convention applied
  double value = 0.0;
  std::size_t rounds = 0;
  int reseeds = 0;
};

struct FiedlerConfig {
  double alpha = 0.0;
  std::size_t p = 1;
};

struct EstimatorOptions {
  std::size_t d_bound = 0;  // upper bound on the diameter
  double tol = 5e-6;        // eps_x
  double norm_tol = 1e-4;   // eps_x~
  double lam2_unit = 0.0;   // extremes of the unweighted Laplacian, for beta
  double lamN_unit = 0.0;
  std::uint64_t seed = 0x5eedULL;
  std::size_t max_rounds = 1000000;
  int max_reseeds = 3;
  double warm_dither = 1e-2;  // seeded perturbation added to warm starts
};

namespace protocols {

/// Power iteration with max-consensus normalization. One macro step is
/// [multiply] + d_bound flood rounds + [scale], i.e. d_bound + 2 rounds.
/// Fiedler mode multiplies by I - L/alpha, except every p-th macro step
/// (T mod p == 0) where it multiplies by L to remove the kernel direction.
struct PowerIteration {
  static constexpr std::size_t arity = 2;
  enum : std::size_t { X, S, H, P, Phase, T, Change, Stall };
  std::size_t d_bound = 1;
  double tol = 5e-6;
  bool fiedler = false;
  double inv_alpha = 0.0;
  std::size_t period = 1;

  std::vector<std::string> registers() const { return {"x", "s", "h", "p", "phase", "T", "change", "stall"}; }
  std::vector<std::string> link_registers() const { return {"c"}; }

  simnet::Message<2> emit(simnet::ConstAgentView a, std::size_t) const {
    return {a.locals[S] * a.locals[X], a.locals[P]};
  }

  bool deflating(double t) const { return static_cast<std::size_t>(t) % period == 0; }

  void step(simnet::AgentView a, const simnet::Inbox<2>& in) const {
    auto& r = a.locals;
    const auto phase = static_cast<std::size_t>(r[Phase]);
    if (phase == 0) {
      const double y = apply_local(r[X], r[S], a.links, in);
      r[H] = (fiedler && !deflating(r[T])) ? r[X] - inv_alpha * y : y;
      r[P] = std::abs(r[H]);
      r[Phase] = 1.0;
    } else if (phase <= d_bound) {
      double p = r[P];
      for (std::size_t k = 0; k < in.size(); ++k) p = std::max(p, in[k][1]);
      r[P] = p;
      r[Phase] = static_cast<double>(phase + 1);
    } else {
      if (r[P] < 1e-14 && fiedler && !deflating(r[T]) && r[T] >= 1.0) {
        // x is normalized and the shift annihilated it: x is an eigenvector
        // with value alpha (all nonzero eigenvalues coincide)
        r[Change] = 0.0;
      } else if (r[P] < 1e-14) {
        r[Stall] = 1.0;
      } else {
        const double x = r[H] / r[P];
        r[Change] = std::abs(x - r[X]);
        r[X] = x;
      }
      r[T] += 1.0;
      r[Phase] = 0.0;
    }
  }

  bool done(simnet::ConstAgentView a) const {
    const auto& r = a.locals;
    if (r[Stall] != 0.0) return true;
    return r[Phase] == 0.0 && r[T] >= 2.0 && r[Change] <= tol;
  }
};

/// Pipelined power iteration: one multiply per round, divided by delta. A
/// max-consensus flood of |x| captured every d_bound + 1 rounds yields the
/// growth of the iterate over the last block; delta is set to the per-round
/// growth, which tends to the dominant eigenvalue.
struct InterleavedPower {
  static constexpr std::size_t arity = 2;
  enum : std::size_t { X, S, Xhat, Delta, LogProd, LogBlock, Mprev, Est, R, Switched, Stall };
  std::size_t d_bound = 1;
  double switch_tol = 1e-6;

  std::vector<std::string> registers() const {
    return {"x", "s", "xhat", "delta", "logprod", "logblock", "mprev", "est", "R", "switched", "stall"};
  }
  std::vector<std::string> link_registers() const { return {"c"}; }

  simnet::Message<2> emit(simnet::ConstAgentView a, std::size_t) const {
    return {a.locals[S] * a.locals[X], a.locals[Xhat]};
  }

  void step(simnet::AgentView a, const simnet::Inbox<2>& in) const {
    auto& r = a.locals;
    const std::size_t block = d_bound + 1;
    const auto k = static_cast<std::size_t>(r[R]) % block;
    const double y = apply_local(r[X], r[S], a.links, in);
    if (k == 0) {
      r[Xhat] = std::abs(r[X]);
      r[LogBlock] = r[LogProd];
      r[LogProd] = 0.0;
    } else {
      double m = r[Xhat];
      for (std::size_t j = 0; j < in.size(); ++j) m = std::max(m, in[j][1]);
      r[Xhat] = m;
    }
    r[X] = y / r[Delta];
    r[LogProd] += std::log(r[Delta]);
    if (k == d_bound || d_bound == 0) {
      const double m = r[Xhat];  // max |x| at the last capture
      if (m < 1e-300) {
        r[Stall] = 1.0;
      } else {
        if (r[Mprev] > 0.0) {
          const double growth = std::exp((std::log(m) - std::log(r[Mprev]) + r[LogBlock]) / static_cast<double>(block));
          if (r[Est] > 0.0 && std::abs(growth - r[Est]) <= switch_tol * growth) r[Switched] = 1.0;
          if (growth < 1e-14) r[Stall] = 1.0;
          r[Est] = growth;
          r[Delta] = growth;
        }
        r[Mprev] = m;
        if (m > 1e150 || m < 1e-150) {
          r[X] /= m;
          r[LogProd] += std::log(m);
        }
      }
    }
    r[R] += 1.0;
  }

  bool done(simnet::ConstAgentView a) const { return a.locals[Switched] != 0.0 || a.locals[Stall] != 0.0; }
};

}  // namespace protocols

namespace detail {

inline Vector reseed_vector(std::size_t n, std::uint64_t seed, int attempt) {
  Vector x(n);
  for (NodeId i = 0; i < n; ++i) {
    auto rng = simnet::agent_rng(seed, i, static_cast<std::uint64_t>(attempt));
    x[i] = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
  }
  return x;
}

struct PowerRun {
  Vector x;  // infinity-normalized
  std::size_t rounds = 0;
  std::size_t macro_steps = 0;
  int reseeds = 0;
};

inline PowerRun run_power(const Graph& g, const LaplacianOperator& op, Vector x0, protocols::PowerIteration proto,
                          const EstimatorOptions& opts, std::size_t rounds_spent = 0) {
  using protocols::PowerIteration;
  PowerRun out;
  out.rounds = rounds_spent;
  const auto links = op.link_registers(g);
  for (int attempt = 0;; ++attempt) {
    std::vector<Vector> init(g.n());
    for (NodeId i = 0; i < g.n(); ++i) init[i] = {x0[i], op.scale[i], 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    simnet::Network<PowerIteration> net(g, proto, init, links);
    const std::size_t budget = opts.max_rounds > out.rounds ? opts.max_rounds - out.rounds : 0;
    const bool finished = net.run(budget);
    out.rounds += net.round();
    if (!finished) throw ConvergenceError("power iteration: max inner rounds exceeded");
    if (net.get(0, PowerIteration::Stall) == 0.0) {
      out.x = net.column(PowerIteration::X);
      out.macro_steps = static_cast<std::size_t>(net.get(0, PowerIteration::T));
      return out;
    }
    if (attempt >= opts.max_reseeds) throw ConvergenceError("power iteration: stalled after reseeding");
    ++out.reseeds;
    x0 = reseed_vector(g.n(), opts.seed, attempt + 1);
  }
}

inline void require_normalization(const EstimatorOptions& opts) {
  if (opts.d_bound == 0) throw std::invalid_argument("estimator: d_bound must be positive");
  if (!(opts.lam2_unit > 0.0) || opts.lamN_unit < opts.lam2_unit)
    throw std::invalid_argument("estimator: unweighted extremes required for l2 normalization");
}

/// local eigenvalue + sign convention + l2 normalization of an infinity-normalized iterate.
inline EigEstimate finish(const Graph& g, const LaplacianOperator& op, const PowerRun& run,
                          const EstimatorOptions& opts) {
  const auto lam = local_eigenvalue(g, op, run.x, opts.d_bound);
  Vector signed_x(g.n());
  for (NodeId i = 0; i < g.n(); ++i) signed_x[i] = lam.signs[i] * run.x[i];
  const auto nv = l2_normalize(g, signed_x, opts.lam2_unit, opts.lamN_unit, opts.norm_tol);
  EigEstimate e;
  e.vector = nv.values;
  e.value = lam.values[0];
  e.rounds = run.rounds + lam.rounds + nv.rounds;
  e.reseeds = run.reseeds;
  return e;
}

}  // namespace detail

/// Infinity-normalized dominant eigenvector by the exact cycle scheme (no l2 step).
inline detail::PowerRun power_largest(const Graph& g, const LaplacianOperator& op, const Vector& x0,
                                      const EstimatorOptions& opts) {
  if (x0.size() != g.n()) throw std::invalid_argument("power iteration: one value per agent required");
  protocols::PowerIteration proto;
  proto.d_bound = opts.d_bound;
  proto.tol = opts.tol;
  return detail::run_power(g, op, x0, proto, opts);
}

inline detail::PowerRun power_fiedler(const Graph& g, const LaplacianOperator& op, const FiedlerConfig& cfg,
                                      const Vector& y0, const EstimatorOptions& opts) {
  if (y0.size() != g.n()) throw std::invalid_argument("power iteration: one value per agent required");
  if (!(cfg.alpha > 0.0) || cfg.p < 1) throw std::invalid_argument("fiedler: invalid configuration");
  protocols::PowerIteration proto;
  proto.d_bound = opts.d_bound;
  proto.tol = opts.tol;
  proto.fiedler = true;
  proto.inv_alpha = 1.0 / cfg.alpha;
  proto.period = cfg.p;
  return detail::run_power(g, op, y0, proto, opts);
}

inline EigEstimate largest_eigpair(const Graph& g, const LaplacianOperator& op, const Vector& x0,
                                   const EstimatorOptions& opts) {
  detail::require_normalization(opts);
  return detail::finish(g, op, power_largest(g, op, x0, opts), opts);
}

inline EigEstimate largest_eigpair(const Graph& g, const NodeWeights& w, const Vector& x0,
                                   const EstimatorOptions& opts) {
  return largest_eigpair(g, LaplacianOperator::node(g, w), x0, opts);
}

/// alpha: lamN_hat when known, otherwise the Gershgorin bound spread by max-consensus.
/// p: ceil(lamN (d+1) / (4d)) + 50 before any condition-number estimate exists,
/// ceil(kappa_hat) + 50 afterwards.
inline FiedlerConfig fiedler_config(const Graph& g, const LaplacianOperator& op, std::optional<double> lamN_hat,
                                    std::size_t d_bound, std::optional<double> kappa_hat = std::nullopt) {
  if (d_bound == 0) throw std::invalid_argument("fiedler_config: d_bound must be positive");
  FiedlerConfig cfg;
  if (lamN_hat) {
    cfg.alpha = *lamN_hat;
  } else {
    Vector local(g.n());
    for (NodeId i = 0; i < g.n(); ++i) {
      double c = 0.0;
      for (std::size_t k = 0; k < g.degree(i); ++k) c += op.link[g.edge_of(i, k)];
      local[i] = 2.0 * op.scale[i] * op.scale[i] * c;
    }
    cfg.alpha = max_consensus(g, local, d_bound)[0];
  }
  const double d = static_cast<double>(d_bound);
  if (kappa_hat) {
    cfg.p = static_cast<std::size_t>(std::ceil(*kappa_hat)) + 50;
    // Between deflations the kernel direction grows by 1 / (1 - 1/kappa) per
    // step relative to the Fiedler mode. Keep that growth from rounding below
    // 1e8 or well conditioned graphs converge to the kernel.
    const double shrink = 1.0 - 1.0 / std::max(*kappa_hat, 1.0);
    if (shrink <= 0.0)
      cfg.p = 1;
    else
      cfg.p = std::min(cfg.p, std::max<std::size_t>(1, static_cast<std::size_t>(std::log(1e8) / -std::log(shrink))));
  } else
    cfg.p = static_cast<std::size_t>(std::ceil(cfg.alpha * (d + 1.0) / (4.0 * d))) + 50;
  return cfg;
}

inline FiedlerConfig fiedler_config(const Graph& g, const NodeWeights& w, std::optional<double> lamN_hat,
                                    std::size_t d_bound) {
  return fiedler_config(g, LaplacianOperator::node(g, w), lamN_hat, d_bound);
}

inline EigEstimate fiedler_eigpair(const Graph& g, const LaplacianOperator& op, const FiedlerConfig& cfg,
                                   const Vector& y0, const EstimatorOptions& opts) {
  detail::require_normalization(opts);
  return detail::finish(g, op, power_fiedler(g, op, cfg, y0, opts), opts);
}

inline EigEstimate fiedler_eigpair(const Graph& g, const NodeWeights& w, const FiedlerConfig& cfg, const Vector& y0,
                                   const EstimatorOptions& opts) {
  return fiedler_eigpair(g, LaplacianOperator::node(g, w), cfg, y0, opts);
}

struct InterleavedResult {
  EigEstimate estimate;
  std::size_t pipelined_rounds = 0;
};

/// Pipelined delta phase, then the exact scheme of largest_eigpair from where it stopped.
inline InterleavedResult interleaved_power(const Graph& g, const LaplacianOperator& op, Vector x0,
                                           const EstimatorOptions& opts, double switch_tol = 1e-6) {
  using protocols::InterleavedPower;
  detail::require_normalization(opts);
  if (x0.size() != g.n()) throw std::invalid_argument("interleaved_power: one value per agent required");
  const auto links = op.link_registers(g);
  InterleavedResult out;
  int reseeds = 0;
  Vector x;
  for (int attempt = 0;; ++attempt) {
    std::vector<Vector> init(g.n());
    for (NodeId i = 0; i < g.n(); ++i)
      init[i] = {x0[i], op.scale[i], 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    simnet::Network<InterleavedPower> net(g, InterleavedPower{opts.d_bound, switch_tol}, init, links);
    const bool finished = net.run(opts.max_rounds);
    out.pipelined_rounds += net.round();
    if (!finished) throw ConvergenceError("interleaved power: max inner rounds exceeded");
    if (net.get(0, InterleavedPower::Stall) == 0.0) {
      x = net.column(InterleavedPower::X);
      break;
    }
    if (attempt >= opts.max_reseeds) throw ConvergenceError("interleaved power: stalled after reseeding");
    ++reseeds;
    x0 = detail::reseed_vector(g.n(), opts.seed, attempt + 1);
  }
  protocols::PowerIteration proto;
  proto.d_bound = opts.d_bound;
  proto.tol = opts.tol;
  auto run = detail::run_power(g, op, x, proto, opts, out.pipelined_rounds);
  run.reseeds += reseeds;
  out.estimate = detail::finish(g, op, run, opts);
  return out;
}

}  // namespace spectral_weights
