#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace spectral_weights;
using namespace sw_test;

namespace {

/// L_rho at node weights w, evaluated with the reference solver.
double lagrangian_node(const Graph& g, const Vector& w, double sigma, double rho) {
  const auto s = ref_eig(symmetric_weighted_laplacian(g, NodeWeights{w}));
  return aug_lagrangian_value(s.values(g.n() - 1), s.values(1), sigma, rho);
}

double lagrangian_edge(const Graph& g, const Vector& w, double sigma, double rho) {
  const auto s = ref_eig(edge_weighted_laplacian(g, EdgeWeights{w}));
  return aug_lagrangian_value(s.values(g.n() - 1), s.values(1), sigma, rho);
}

bool simple_extremes(const RefSpectrum& s, std::size_t n) {
  const double scale = std::max(1.0, s.values(n - 1));
  return s.values(n - 1) - s.values(n - 2) > 1e-3 * scale && s.values(2) - s.values(1) > 1e-3 * scale;
}

}  // namespace

TEST(AugLagrangian, Examples) {
  EXPECT_DOUBLE_EQ(aug_lagrangian_value(3, 1.5, 0, 20), 3.0);
  EXPECT_DOUBLE_EQ(aug_lagrangian_value(3, 0.5, 0, 20), 5.5);
  EXPECT_NEAR(aug_lagrangian_value(3, 1, 2, 20), 3.1, 1e-12);
}

TEST(MultiplierUpdate, Examples) {
  EXPECT_EQ(multiplier_update(0, 20, 1.2), 0.0);
  EXPECT_NEAR(multiplier_update(0, 20, 0.9), 2.0, 1e-12);
  EXPECT_EQ(multiplier_update(1, 20, 1.1), 0.0);
}

TEST(ProjectedStep, Examples) {
  EXPECT_EQ(projected_step({0.3, 1.2}, {0, 0}, 1e-3), (Vector{0.3, 1.2}));
  EXPECT_EQ(projected_step({0.5}, {1000}, 1e-3), (Vector{0.0}));
}

TEST(AugLagParams, DefaultsAndValidation) {
  const AugLagParams p;
  EXPECT_EQ(p.w0, 1.0);
  EXPECT_EQ(p.sigma0, 0.0);
  EXPECT_EQ(p.gamma, 1e-3);
  EXPECT_EQ(p.rho, 20.0);
  EXPECT_EQ(p.t_max, 750u);
  EXPECT_EQ(p.eps_w, 5e-2);
  EXPECT_EQ(p.eps_sigma, 1e-1);
  EXPECT_EQ(p.eps_lamN, 1e-3);
  EXPECT_EQ(p.eps_x, 5e-6);
  EXPECT_EQ(p.eps_xt, 1e-4);
  AugLagParams bad;
  bad.rho = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = {};
  bad.gamma = -1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = {};
  bad.sigma0 = -1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(NodeGradient, FiniteDifferences) {
  std::mt19937_64 rng(103);
  for (const auto& [name, g] : fixtures()) {
    int checked = 0;
    for (int trial = 0; trial < 40 && checked < 20; ++trial) {
      const Vector w = random_vector(g.n(), 0.2, 2.0, rng);
      const auto s = ref_eig(symmetric_weighted_laplacian(g, NodeWeights{w}));
      if (!simple_extremes(s, g.n())) continue;
      ++checked;
      for (double sigma : {0.0, 3.0}) {
        const double rho = 20;
        const Vector grad =
            node_gradient(g, NodeWeights{w}, s.vector(g.n() - 1), s.vector(1), s.values(1), sigma, rho);
        const double h = 1e-6;
        for (std::size_t i = 0; i < g.n(); ++i) {
          Vector wp = w, wm = w;
          wp[i] += h;
          wm[i] -= h;
          const double fd = (lagrangian_node(g, wp, sigma, rho) - lagrangian_node(g, wm, sigma, rho)) / (2 * h);
          EXPECT_LE(std::abs(grad[i] - fd), 1e-5 * std::max(1.0, std::abs(fd))) << name << " i=" << i;
        }
      }
    }
    if (name != "K3" && name != "S4") {
      EXPECT_EQ(checked, 20) << name;
    }
  }
}

TEST(NodeGradient, CycleSymmetry) {
  const Graph g = cycle(6);
  const auto s = ref_eig(laplacian(g));
  // a unit eigenvector of each extreme eigenspace of a cycle need not be symmetric, but the
  // sum of squares over an orthonormal basis of the eigenspace is; use the lamN vector which is simple
  const Vector grad = node_gradient(g, NodeWeights{Vector(6, 2.0)}, s.vector(5), s.vector(1), 5.0, 0.0, 20.0);
  for (double x : grad) EXPECT_NEAR(x, grad[0], 1e-12);
}

TEST(NodeGradient, SignFlipInvariance) {
  std::mt19937_64 rng(107);
  const Graph g = paper7();
  const Vector w = random_vector(7, 0.3, 2.0, rng);
  const auto s = ref_eig(symmetric_weighted_laplacian(g, NodeWeights{w}));
  Vector vb = s.vector(6), vu = s.vector(1), nb = vb, nu = vu;
  for (double& x : nb) x = -x;
  for (double& x : nu) x = -x;
  const auto a = node_gradient(g, NodeWeights{w}, vb, vu, 0.8, 1.0, 20);
  const auto b = node_gradient(g, NodeWeights{w}, nb, nu, 0.8, 1.0, 20);
  EXPECT_EQ(a, b);
}

TEST(NodeGradient, WeightFloor) {
  const Graph g = path3();
  const auto s = ref_eig(laplacian(g));
  const Vector grad = node_gradient(g, NodeWeights{{0.0, 1.0, 1.0}}, s.vector(2), s.vector(1), 1.0, 0.0, 20);
  for (double x : grad) EXPECT_TRUE(std::isfinite(x));
}

TEST(EdgeGradient, FiniteDifferences) {
  std::mt19937_64 rng(109);
  for (const auto& [name, g] : fixtures()) {
    int checked = 0;
    for (int trial = 0; trial < 40 && checked < 20; ++trial) {
      const Vector w = random_vector(g.m(), 0.2, 2.0, rng);
      const auto s = ref_eig(edge_weighted_laplacian(g, EdgeWeights{w}));
      if (!simple_extremes(s, g.n())) continue;
      ++checked;
      for (double sigma : {0.0, 3.0}) {
        const double rho = 20;
        const Vector grad =
            edge_gradient(g, EdgeWeights{w}, s.vector(g.n() - 1), s.vector(1), s.values(1), sigma, rho);
        const double h = 1e-6;
        for (std::size_t e = 0; e < g.m(); ++e) {
          Vector wp = w, wm = w;
          wp[e] += h;
          wm[e] -= h;
          const double fd = (lagrangian_edge(g, wp, sigma, rho) - lagrangian_edge(g, wm, sigma, rho)) / (2 * h);
          EXPECT_LE(std::abs(grad[e] - fd), 1e-5 * std::max(1.0, std::abs(fd))) << name << " e=" << e;
        }
      }
    }
    if (name != "K3") {
      EXPECT_EQ(checked, 20) << name;
    }
  }
}

TEST(EdgeGradient, ConstantAcrossEdgeHasNoTopTerm) {
  EXPECT_EQ(edge_gradient_at(0.4, 0.4, 0.1, 0.3, 0.0), 0.0);
  EXPECT_NEAR(edge_gradient_at(0.4, 0.4, 0.1, 0.3, 2.0), -2.0 * 0.04, 1e-15);
  EXPECT_EQ(edge_gradient_at(0.7, -0.2, 0.1, 0.3, 1.5), edge_gradient_at(-0.2, 0.7, 0.3, 0.1, 1.5));
}

TEST(Subgradient, SimpleCaseEqualsGradient) {
  std::mt19937_64 rng(113);
  const Graph g = paper7();
  const Vector w = random_vector(7, 0.3, 2.0, rng);
  const auto s = ref_eig(symmetric_weighted_laplacian(g, NodeWeights{w}));
  EXPECT_EQ(subgradient_node(g, NodeWeights{w}, s.vector(6), s.vector(1), s.values(1), 0.5, 20),
            node_gradient(g, NodeWeights{w}, s.vector(6), s.vector(1), s.values(1), 0.5, 20));
}

TEST(Subgradient, RepeatedEigenvaluesDoNotIncreaseObjective) {
  for (const Graph& g : {k3(), star4()}) {
    const std::size_t n = g.n();
    const Vector w(n, 1.0);
    const auto s = ref_eig(laplacian(g));
    const double rho = 20;
    for (double sigma : {0.0, 5.0}) {
      const double base = lagrangian_node(g, w, sigma, rho);
      // several members of the eigenspaces: the solver's basis and rotations of it
      for (double theta : {0.0, 0.4, 1.1, 2.3}) {
        auto rotate = [&](std::size_t a, std::size_t b) {
          // stay inside the eigenspace of column a
          const double c = std::abs(s.values(a) - s.values(b)) < 1e-9 ? std::sin(theta) : 0.0;
          Vector v(n);
          for (std::size_t i = 0; i < n; ++i) v[i] = std::cos(theta) * s.vectors(i, a) + c * s.vectors(i, b);
          return v;
        };
        Vector vb = rotate(n - 1, n - 2), vu = rotate(1, 2);
        for (Vector* v : {&vb, &vu}) {
          const double nv = norm2(*v);
          for (double& x : *v) x /= nv;
        }
        const Vector sub = subgradient_node(g, NodeWeights{w}, vb, vu, s.values(1), sigma, rho);
        const Vector next = projected_step(w, sub, 1e-4);
        EXPECT_LE(lagrangian_node(g, next, sigma, rho), base + 1e-12) << "theta " << theta;
      }
    }
  }
}

TEST(Descent, ProjectedStepsDecreaseObjective) {
  const double gamma = 1e-3, rho = 20;
  for (const auto& [name, g] : fixtures()) {
    Vector w(g.n(), 1.0);
    if (name == "K3") continue;  // repeated extremes; covered by the subgradient test
    for (double sigma : {0.0, 2.0}) {
      for (int step = 0; step < 50; ++step) {
        const auto s = ref_eig(symmetric_weighted_laplacian(g, NodeWeights{w}));
        const Vector grad =
            node_gradient(g, NodeWeights{w}, s.vector(g.n() - 1), s.vector(1), s.values(1), sigma, rho);
        const Vector next = projected_step(w, grad, gamma);
        EXPECT_LE(lagrangian_node(g, next, sigma, rho), lagrangian_node(g, w, sigma, rho) + 1e-12) << name;
        w = next;
      }
    }
  }
}

TEST(Descent, SevenNodeFixtureOneStep) {
  const Graph g = paper7();
  const Vector w(7, 1.0);
  const auto s = ref_eig(laplacian(g));
  const Vector grad = node_gradient(g, NodeWeights{w}, s.vector(6), s.vector(1), s.values(1), 0.0, 20);
  EXPECT_LT(lagrangian_node(g, projected_step(w, grad, 1e-3), 0.0, 20), lagrangian_node(g, w, 0.0, 20));
}

TEST(DistributedStep, MatchesCentralUpdate) {
  std::mt19937_64 rng(127);
  const Graph g = paper7();
  const std::size_t d = bfs_diameter(g);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector w = random_vector(7, 0.3, 2.0, rng);
    const auto s = ref_eig(symmetric_weighted_laplacian(g, NodeWeights{w}));
    const double sigma = trial * 0.5;
    const Vector expected = projected_step(
        w, node_gradient(g, NodeWeights{w}, s.vector(6), s.vector(1), s.values(1), sigma, 20), 1e-3);
    std::vector<Vector> init;
    for (NodeId i = 0; i < 7; ++i) init.push_back({w[i], s.vectors(i, 6), s.vectors(i, 1), s.values(1), sigma, 0, 0});
    const auto trace = simnet::run_rounds(g, protocols::NodeWeightStep{20, 1e-3, d}, init, 100);
    EXPECT_EQ(trace.executed_rounds(), d + 1);
    const Vector got = trace.final_values("w");
    double dw = 0;
    for (std::size_t i = 0; i < 7; ++i) {
      EXPECT_NEAR(got[i], expected[i], 1e-14);
      dw = std::max(dw, std::abs(expected[i] - w[i]));
    }
    for (double x : trace.final_values("dw")) EXPECT_NEAR(x, dw, 1e-14);
  }
}

TEST(DistributedStep, EdgeEndpointsAgree) {
  std::mt19937_64 rng(131);
  const Graph g = paper7();
  const std::size_t d = bfs_diameter(g);
  const Vector w = random_vector(g.m(), 0.3, 2.0, rng);
  const auto s = ref_eig(edge_weighted_laplacian(g, EdgeWeights{w}));
  const Vector expected =
      projected_step(w, edge_gradient(g, EdgeWeights{w}, s.vector(6), s.vector(1), s.values(1), 0.0, 20), 1e-3);
  std::vector<Vector> init, links(7);
  for (NodeId i = 0; i < 7; ++i) {
    init.push_back({s.vectors(i, 6), s.vectors(i, 1), s.values(1), 0.0, 0, 0});
    for (std::size_t k = 0; k < g.degree(i); ++k) links[i].insert(links[i].end(), {w[g.edge_of(i, k)], 0.0});
  }
  simnet::Network<protocols::EdgeWeightStep> net(g, protocols::EdgeWeightStep{20, 1e-3, d}, init, links);
  ASSERT_TRUE(net.run(100));
  for (NodeId i = 0; i < 7; ++i)
    for (std::size_t k = 0; k < g.degree(i); ++k) EXPECT_NEAR(net.links(i)[2 * k], expected[g.edge_of(i, k)], 1e-14);

  // corrupt one endpoint's copy: the check round must catch it
  links[0][0] += 1e-3;
  simnet::Network<protocols::EdgeWeightStep> bad(g, protocols::EdgeWeightStep{20, 1e-3, d}, init, links);
  EXPECT_THROW(bad.run(100), EndpointDisagreement);
}

TEST(OuterSolve, OracleReachesCentralOptimum) {
  const Graph g = paper7();
  const auto trace = outer_solve(g, AugLagParams{}, WeightMode::node, EngineKind::oracle);
  EXPECT_TRUE(trace.converged) << trace.diagnostic;
  const double kappa = terminal_kappa_exact(g, trace);
  EXPECT_LE(std::abs(kappa - 2.5445) / 2.5445, 0.006);
  EXPECT_NEAR(trace.terminal().kappa, kappa, 1e-12);
  EXPECT_GE(trace.terminal().lam2, 1 - 5e-2);
}

TEST(OuterSolve, TraceInvariants) {
  const Graph g = paper7();
  const auto trace = outer_solve(g, AugLagParams{}, WeightMode::node, EngineKind::oracle);
  ASSERT_FALSE(trace.steps.empty());
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    const auto& r = trace.steps[t];
    EXPECT_EQ(r.t, t);
    EXPECT_DOUBLE_EQ(r.kappa, r.lamN / r.lam2);
    EXPECT_GE(r.sigma, 0.0);
    for (double x : r.w) EXPECT_GE(x, 0.0);
  }
  for (const auto& m : trace.multipliers) EXPECT_GE(m.sigma, 0.0);
}

TEST(OuterSolve, CompleteGraphStaysOptimal) {
  const Graph g = k3();
  const auto trace = outer_solve(g, AugLagParams{}, WeightMode::node, EngineKind::oracle);
  const auto& w = trace.terminal().w;
  EXPECT_NEAR(terminal_kappa_exact(g, trace), 1.0, 1e-6);
  for (double x : w) EXPECT_NEAR(x / w[0], 1.0, 1e-6);
}

TEST(OuterSolve, ScaledInitialWeights) {
  const Graph g = paper7();
  const double base = terminal_kappa_exact(g, outer_solve(g, AugLagParams{}, WeightMode::node, EngineKind::oracle));
  for (double alpha : {0.5, 2.0}) {
    AugLagParams p;
    p.w0 = alpha;
    const double k = terminal_kappa_exact(g, outer_solve(g, p, WeightMode::node, EngineKind::oracle));
    EXPECT_LE(std::abs(k - base) / base, 0.01) << alpha;
  }
}

TEST(OuterSolve, EdgeModeImprovesCondition) {
  const Graph g = paper7();
  const auto trace = outer_solve(g, AugLagParams{}, WeightMode::edge, EngineKind::oracle);
  EXPECT_LT(terminal_kappa_exact(g, trace), condition_number(g));
  EXPECT_GE(trace.terminal().lam2, 1 - 5e-2);
  EXPECT_EQ(trace.terminal().w.size(), g.m());
}

TEST(OuterSolve, TightBudgetReportsNonConvergence) {
  AugLagParams p;
  p.t_max = 2;
  p.max_multiplier_updates = 2;
  const auto trace = outer_solve(paper7(), p, WeightMode::node, EngineKind::oracle);
  EXPECT_FALSE(trace.converged);
  EXPECT_FALSE(trace.diagnostic.empty());
  EXPECT_EQ(trace.steps.size(), 5u);
}

TEST(DistributedEngine, EstimatesMatchOracle) {
  const Graph g = paper7();
  AugLagParams p;
  DistributedEngine eng(g, WeightMode::node, p);
  EXPECT_GE(eng.d_bound(), bfs_diameter(g));
  OracleEngine ora(g, WeightMode::node);
  std::mt19937_64 rng(137);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector w = random_vector(7, 0.3, 2.0, rng);
    const auto a = eng.estimate(w), b = ora.estimate(w);
    EXPECT_NEAR(a.lam2, b.lam2, 1e-4 * std::max(1.0, b.lam2));
    EXPECT_NEAR(a.lamN, b.lamN, 1e-4 * std::max(1.0, b.lamN));
    EXPECT_GE(cos_angle(a.vbar, b.vbar), 0.999);
    EXPECT_GE(cos_angle(a.vund, b.vund), 0.999);
    for (double x : eng.lam2_registers()) EXPECT_EQ(x, a.lam2);
  }
}

TEST(DistributedEngine, ReachesOptimumOnFixture) {
  const Graph g = paper7();
  const auto trace = outer_solve(g, AugLagParams{}, WeightMode::node, EngineKind::distributed);
  EXPECT_TRUE(trace.converged) << trace.diagnostic;
  const double kappa = terminal_kappa_exact(g, trace);
  EXPECT_GE(kappa, 2.51);
  EXPECT_LE(kappa, 2.61);
  EXPECT_GE(trace.terminal().lam2, 0.95);
  EXPECT_GT(trace.total_inner_rounds(), 0u);
}

TEST(DistributedEngine, EdgeModeAgreesWithOracle) {
  const Graph g = paper7();
  const double a = terminal_kappa_exact(g, outer_solve(g, AugLagParams{}, WeightMode::edge, EngineKind::distributed));
  const double b = terminal_kappa_exact(g, outer_solve(g, AugLagParams{}, WeightMode::edge, EngineKind::oracle));
  EXPECT_LE(std::abs(a - b) / b, 0.01);
}

TEST(TraceCsv, HeadersAndNames) {
  AugLagParams p;
  p.t_max = 3;
  p.max_multiplier_updates = 2;
  const auto trace = outer_solve(path3(), p, WeightMode::node, EngineKind::oracle);
  std::ostringstream w, e, m;
  write_weights_csv(w, trace);
  write_eigen_csv(e, trace);
  write_multiplier_csv(m, trace);
  EXPECT_EQ(w.str().substr(0, w.str().find('\n')), "t,w1,w2,w3");
  EXPECT_EQ(e.str().substr(0, e.str().find('\n')), "t,lambda_N,lambda_2");
  EXPECT_EQ(m.str().substr(0, m.str().find('\n')), "sigma,t");
  const std::string ws = w.str();
  EXPECT_EQ(std::count(ws.begin(), ws.end(), '\n'), static_cast<long>(trace.steps.size() + 1));
  const auto names = trace_file_names("out", WeightMode::node);
  EXPECT_EQ(names.weights.filename(), "nodeWeight.csv");
  EXPECT_EQ(names.eigen.filename(), "nodeWeightEigen.csv");
  EXPECT_EQ(names.multiplier.filename(), "nodeWeightMu.csv");
  EXPECT_EQ(trace_file_names("out", WeightMode::edge).weights.filename(), "edgeWeight.csv");
}
