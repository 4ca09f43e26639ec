#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "eig_oracle.hpp"
#include "graph.hpp"
#include "optimizer.hpp"

namespace spectral_weights::bench {

// Centralized reference --------------------------------------------------------------

struct CentralResult {
  RunTrace trace;
  Vector w;
  double kappa = 0.0;  // exact condition number of w
  bool certified = false;
  std::string diagnostic;
};

/// Oracle-engine outer loop plus a certificate for the terminal point: for node
/// weights, w / lambda_2 must satisfy (kappa + 1e-6) I >= C^T diag(w) C >= I.
inline CentralResult central_solve(const Graph& g, const AugLagParams& p, WeightMode mode = WeightMode::node) {
  CentralResult r;
  r.trace = outer_solve(g, p, mode, EngineKind::oracle);
  r.w = r.trace.terminal().w;
  if (mode == WeightMode::node) {
    const Spectrum s = sym_eig(symmetric_weighted_laplacian(g, NodeWeights{r.w}));
    r.kappa = s.lambda_max() / s.lambda2();
    NodeWeights scaled{r.w};
    for (double& x : scaled.values) x /= s.lambda2();
    r.certified = lmi_feasible(g, scaled, r.kappa + 1e-6);
  } else {
    const Spectrum s = sym_eig(edge_weighted_laplacian(g, EdgeWeights{r.w}));
    r.kappa = s.lambda_max() / s.lambda2();
    r.certified = s.lambda2() > 1e-10 && std::abs(r.kappa - r.trace.terminal().kappa) <= 1e-9 * r.kappa;
  }
  if (!r.certified) r.diagnostic = "terminal point failed the feasibility certificate";
  return r;
}

// Average consensus ---------------------------------------------------------------

struct ConsensusStep {
  double r_star = 0.0;
  double rho_star = 0.0;
};

inline ConsensusStep optimal_consensus_step(double lam2, double lamN) {
  if (!(lam2 > 0.0)) throw std::invalid_argument("optimal_consensus_step: lam2 must be positive");
  if (lamN < lam2) throw std::invalid_argument("optimal_consensus_step: need lam2 <= lamN");
  return {0.5 * (lamN + lam2), (lamN - lam2) / (lamN + lam2)};
}

/// x(k+1) = x(k) - (1/r) L x(k); returns x(0..steps).
inline std::vector<Vector> simulate_avg_consensus(const Matrix& l, double r, const Vector& x0, std::size_t steps) {
  if (!(r > 0.0)) throw std::invalid_argument("simulate_avg_consensus: r must be positive");
  if (l.rows() != x0.size() || l.cols() != x0.size()) throw std::invalid_argument("simulate_avg_consensus: dimension mismatch");
  std::vector<Vector> traj{x0};
  traj.reserve(steps + 1);
  for (std::size_t k = 0; k < steps; ++k) {
    const Vector& x = traj.back();
    const Vector lx = l * x;
    Vector next(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) next[i] = x[i] - lx[i] / r;
    traj.push_back(std::move(next));
  }
  return traj;
}

inline std::vector<Vector> simulate_avg_consensus(const Graph& g, double r, const Vector& x0, std::size_t steps) {
  return simulate_avg_consensus(laplacian(g), r, x0, steps);
}

/// Consensus value reached by x(k+1) = x(k) - (1/r) diag(w) L x(k): the average
/// of x0 weighted by 1/w (left kernel vector of diag(w) L).
inline double consensus_limit(const Vector& x0, const Vector& w = {}) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const double u = w.empty() ? 1.0 : 1.0 / w[i];
    num += u * x0[i];
    den += u;
  }
  return num / den;
}

/// ||x(k) - c 1||_2 for every k.
inline Vector disagreement_norms(const std::vector<Vector>& traj, double c) {
  Vector e;
  for (const auto& x : traj) {
    double s = 0.0;
    for (double v : x) s += (v - c) * (v - c);
    e.push_back(std::sqrt(s));
  }
  return e;
}

/// exp of the least-squares slope of log e(k) over k in [from, to), skipping
/// entries that have reached the rounding floor.
inline double fitted_decay_rate(const Vector& e, std::size_t from, std::size_t to, double floor = 1e-13) {
  double sk = 0, sy = 0, skk = 0, sky = 0, n = 0;
  for (std::size_t k = from; k < std::min(to, e.size()); ++k) {
    if (!(e[k] > floor)) break;
    const double y = std::log(e[k]);
    const double x = static_cast<double>(k);
    sk += x;
    sy += y;
    skk += x * x;
    sky += x * y;
    n += 1;
  }
  if (n < 2) throw std::invalid_argument("fitted_decay_rate: not enough points above the floor");
  return std::exp((n * sky - sk * sy) / (n * skk - sk * sk));
}

/// Spectral radius of I - L/r - 11^T/N for symmetric L.
inline double consensus_spectral_radius(const Matrix& l, double r) {
  const std::size_t n = l.rows();
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      m(i, j) = (i == j ? 1.0 : 0.0) - l(i, j) / r - 1.0 / static_cast<double>(n);
  const Spectrum s = sym_eig(m);
  return std::max(std::abs(s.values.front()), std::abs(s.values.back()));
}

struct GridResult {
  double r_best = 0.0;
  double radius = 0.0;
};

/// Brute-force search over r in [lo, hi] with the given spacing.
inline GridResult grid_search_step(const Matrix& l, double lo = 0.5, double hi = 10.0, double step = 0.01) {
  GridResult best{lo, std::numeric_limits<double>::infinity()};
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
  for (std::size_t k = 0; k <= count; ++k) {
    const double r = lo + static_cast<double>(k) * step;
    const double rad = consensus_spectral_radius(l, r);
    if (rad < best.radius) best = {r, rad};
  }
  return best;
}

// Output-feedback closed loop -------------------------------------------------------

/// Discrete-time agent: x+ = A x + B1 xi + B2 u, z = C1 x + D xi, y = C2 x.
struct LtiPlant {
  Matrix A, B1, B2, C1, C2, D;

  void validate() const {
    const std::size_t n = A.rows();
    if (A.cols() != n || B1.rows() != n || B2.rows() != n || C1.cols() != n || C2.cols() != n || B1.cols() != 1 ||
        B2.cols() != 1 || C1.rows() != 1 || C2.rows() != 1 || D.rows() != 1 || D.cols() != 1)
      throw std::invalid_argument("LtiPlant: dimension mismatch");
  }
  std::size_t order() const { return A.rows(); }
};

/// xc+ = Ac xc + Bc s, u = Cc xc + Dc s, with s the coupled output signal.
struct DofController {
  Matrix Ac, Bc, Cc, Dc;

  void validate(std::size_t plant_order) const {
    const std::size_t n = Ac.rows();
    if (Ac.cols() != n || Bc.rows() != n || Bc.cols() != 1 || Cc.rows() != 1 || Cc.cols() != n || Dc.rows() != 1 ||
        Dc.cols() != 1 || n != plant_order)
      throw std::invalid_argument("DofController: dimension mismatch");
  }
};

inline LtiPlant reference_plant() {
  return {Matrix{{0.9232, 0.4460}, {-0.4460, 0.9232}},
          Matrix{{0.1125}, {0.4893}},
          Matrix{{0.4893}, {-0.1125}},
          Matrix{{1.0, 1.0}},
          Matrix{{0.0, 1.0}},
          Matrix{{0.0}}};
}

/// Gains paired with the unit-weight Laplacian (H-infinity level 1.1547).
inline DofController unweighted_gains() {
  return {Matrix{{0.8346, 0.1906}, {-0.8331, -0.1892}}, Matrix{{-0.1413}, {0.1413}}, Matrix{{-0.7914, -2.2738}},
          Matrix{{-0.3995}}};
}

/// Gains paired with the optimized node-weighted Laplacian (level 0.6957).
inline DofController optimized_gains() {
  return {Matrix{{0.8341, 0.1901}, {-0.8340, -0.1901}}, Matrix{{-0.6734}, {0.6734}}, Matrix{{-0.7931, -2.2754}},
          Matrix{{-0.5415}}};
}

/// Optimized node weights of the 7-node benchmark graph.
inline NodeWeights reference_optimized_weights() {
  return {{0.9269, 0.2822, 0.4194, 0.2442, 0.9346, 0.2442, 0.6192}};
}

struct DofTrajectory {
  std::vector<Vector> states;  // per k: agent-major (x_1, x_2) pairs
  Vector disagreement;         // per k: max_i ||x_i - mean x||_inf
  std::vector<Vector> z;       // per k, per agent
  std::vector<Vector> xi;      // per k, per agent
};

/// Network of identical agents coupled through s = M y, M the (weighted) Laplacian.
/// Controller states start at zero. Noise, when seeded, is N(0,1) e^{-0.1 k} per agent.
/// z is evaluated on the disagreement coordinates.
inline DofTrajectory simulate_dof_closedloop(const Matrix& coupling, const LtiPlant& plant, const DofController& ctrl,
                                             const std::vector<Vector>& x0, std::optional<std::uint64_t> noise_seed,
                                             std::size_t steps) {
  plant.validate();
  ctrl.validate(plant.order());
  const std::size_t n = coupling.rows();
  const std::size_t q = plant.order();
  if (coupling.cols() != n || x0.size() != n) throw std::invalid_argument("simulate_dof_closedloop: dimension mismatch");
  for (const auto& xi : x0)
    if (xi.size() != q) throw std::invalid_argument("simulate_dof_closedloop: state dimension mismatch");

  std::vector<Vector> x = x0, xc(n, Vector(q, 0.0));
  std::optional<std::mt19937_64> rng;
  if (noise_seed) rng.emplace(*noise_seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  DofTrajectory out;
  for (std::size_t k = 0; k <= steps; ++k) {
    Vector noise(n, 0.0);
    if (rng) {
      const double decay = std::exp(-0.1 * static_cast<double>(k));
      for (auto& v : noise) v = normal(*rng) * decay;
    }
    Vector mean(q, 0.0);
    for (const auto& xi : x)
      for (std::size_t a = 0; a < q; ++a) mean[a] += xi[a] / static_cast<double>(n);
    double noise_mean = 0.0;
    for (double v : noise) noise_mean += v / static_cast<double>(n);

    Vector flat, zk(n), dis(n);
    double eps = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double zi = plant.D(0, 0) * (noise[i] - noise_mean);
      for (std::size_t a = 0; a < q; ++a) {
        flat.push_back(x[i][a]);
        const double e = x[i][a] - mean[a];
        eps = std::max(eps, std::abs(e));
        zi += plant.C1(0, a) * e;
      }
      zk[i] = zi;
    }
    out.states.push_back(std::move(flat));
    out.disagreement.push_back(eps);
    out.z.push_back(std::move(zk));
    out.xi.push_back(noise);
    if (k == steps) break;

    Vector y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t a = 0; a < q; ++a) y[i] += plant.C2(0, a) * x[i][a];
    const Vector s = coupling * y;
    std::vector<Vector> xn(n, Vector(q, 0.0)), xcn(n, Vector(q, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      double u = ctrl.Dc(0, 0) * s[i];
      for (std::size_t a = 0; a < q; ++a) u += ctrl.Cc(0, a) * xc[i][a];
      for (std::size_t a = 0; a < q; ++a) {
        double v = plant.B1(a, 0) * noise[i] + plant.B2(a, 0) * u;
        double vc = ctrl.Bc(a, 0) * s[i];
        for (std::size_t b = 0; b < q; ++b) {
          v += plant.A(a, b) * x[i][b];
          vc += ctrl.Ac(a, b) * xc[i][b];
        }
        xn[i][a] = v;
        xcn[i][a] = vc;
      }
    }
    x.swap(xn);
    xc.swap(xcn);
  }
  return out;
}

/// ||z||_2 / ||xi||_2 over the whole run.
inline double energy_ratio(const DofTrajectory& t) {
  double zz = 0.0, ww = 0.0;
  for (std::size_t k = 0; k < t.z.size(); ++k)
    for (std::size_t i = 0; i < t.z[k].size(); ++i) {
      zz += t.z[k][i] * t.z[k][i];
      ww += t.xi[k][i] * t.xi[k][i];
    }
  if (ww == 0.0) throw std::invalid_argument("energy_ratio: no disturbance energy");
  return std::sqrt(zz / ww);
}

/// Closed-loop matrix of the mode associated with a Laplacian eigenvalue lambda:
/// [[A + lambda B2 Dc C2, B2 Cc], [lambda Bc C2, Ac]].
inline Matrix closed_loop_mode_matrix(const LtiPlant& plant, const DofController& ctrl, double lambda) {
  const std::size_t q = plant.order();
  Matrix m(2 * q, 2 * q);
  for (std::size_t a = 0; a < q; ++a)
    for (std::size_t b = 0; b < q; ++b) {
      m(a, b) = plant.A(a, b) + lambda * plant.B2(a, 0) * ctrl.Dc(0, 0) * plant.C2(0, b);
      m(a, q + b) = plant.B2(a, 0) * ctrl.Cc(0, b);
      m(q + a, b) = lambda * ctrl.Bc(a, 0) * plant.C2(0, b);
      m(q + a, q + b) = ctrl.Ac(a, b);
    }
  return m;
}

inline double spectral_radius(const Matrix& m) {
  Eigen::MatrixXd e(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
  Eigen::EigenSolver<Eigen::MatrixXd> solver(e, false);
  double r = 0.0;
  for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k) r = std::max(r, std::abs(solver.eigenvalues()[k]));
  return r;
}

/// Seeded N(0,1) initial states, one 2-vector per agent.
inline std::vector<Vector> random_initial_states(std::size_t n, std::size_t order, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> x(n, Vector(order));
  for (auto& xi : x)
    for (auto& v : xi) v = normal(rng);
  return x;
}

/// <prefix>_sim.csv (k, x1_1, x1_2, ...) and <prefix>_inout.csv (k, xi_1..xi_N, z_1..z_N).
inline void write_dof_csvs(const std::filesystem::path& dir, const std::string& prefix, const DofTrajectory& t,
                           std::size_t order) {
  std::filesystem::create_directories(dir);
  const std::size_t n = t.z.empty() ? 0 : t.z.front().size();
  std::ofstream sim(dir / (prefix + "_sim.csv"));
  std::ofstream io(dir / (prefix + "_inout.csv"));
  if (!sim || !io) throw std::runtime_error("cannot write closed-loop CSVs in " + dir.string());
  sim << "k";
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < order; ++a) sim << ",x" << (i + 1) << '_' << (a + 1);
  sim << '\n' << std::setprecision(10);
  io << "k";
  for (std::size_t i = 0; i < n; ++i) io << ",xi" << (i + 1);
  for (std::size_t i = 0; i < n; ++i) io << ",z" << (i + 1);
  io << '\n' << std::setprecision(10);
  for (std::size_t k = 0; k < t.states.size(); ++k) {
    sim << k;
    for (double v : t.states[k]) sim << ',' << v;
    sim << '\n';
    io << k;
    for (double v : t.xi[k]) io << ',' << v;
    for (double v : t.z[k]) io << ',' << v;
    io << '\n';
  }
}

}  // namespace spectral_weights::bench
