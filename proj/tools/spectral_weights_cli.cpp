// spectral-weights: optimize, estimate, demo and compare on a graph file.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <spectral_weights/spectral_weights.hpp>

namespace sw = spectral_weights;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadInput = 1;
constexpr int kExitNotConverged = 2;

struct RunConfig {
  std::string graph = "fixtures/paper7.graph";
  std::string mode = "node";
  std::string engine = "distributed";
  std::string out_dir = "results";
  std::string weights;
  std::string gains = "both";
  std::optional<std::uint64_t> noise_seed;
  std::size_t steps = 200;
  sw::AugLagParams params;
};

std::uint64_t default_seed() {
  if (const char* env = std::getenv("SPECTRAL_WEIGHTS_SEED")) {
    try {
      return std::stoull(env, nullptr, 0);
    } catch (const std::exception&) {
      throw CLI::ValidationError("SPECTRAL_WEIGHTS_SEED", std::string("not an integer: ") + env);
    }
  }
  return sw::AugLagParams{}.seed;
}

sw::WeightMode parse_mode(const std::string& s) { return s == "edge" ? sw::WeightMode::edge : sw::WeightMode::node; }
sw::EngineKind parse_engine(const std::string& s) {
  return s == "oracle" ? sw::EngineKind::oracle : sw::EngineKind::distributed;
}

/// Prints to stdout and to <out>/<name> when out is non-empty.
class Report {
 public:
  explicit Report(std::optional<fs::path> file = std::nullopt) : file_(std::move(file)) {}
  ~Report() {
    if (!file_) return;
    fs::create_directories(file_->parent_path());
    std::ofstream(*file_) << buf_.str();
  }
  template <class T>
  Report& operator<<(const T& v) {
    std::cout << v;
    buf_ << v;
    return *this;
  }

 private:
  std::optional<fs::path> file_;
  std::ostringstream buf_;
};

int cmd_optimize(const RunConfig& cfg) {
  const sw::Graph g = sw::load_graph(cfg.graph);
  const auto mode = parse_mode(cfg.mode);
  const auto kind = parse_engine(cfg.engine);
  const sw::RunTrace trace = sw::outer_solve(g, cfg.params, mode, kind);
  const fs::path dir(cfg.out_dir);
  sw::write_trace_csvs(dir, trace);
  const auto& last = trace.terminal();
  Report out(dir / "summary.txt");
  out << std::setprecision(8);
  out << "engine=" << sw::to_string(kind) << '\n'
      << "mode=" << sw::to_string(mode) << '\n'
      << "seed=" << trace.seed << '\n'
      << "converged=" << (trace.converged ? "true" : "false") << '\n'
      << "kappa=" << last.kappa << '\n'
      << "kappa_exact=" << sw::terminal_kappa_exact(g, trace) << '\n'
      << "lambda_2=" << last.lam2 << '\n'
      << "lambda_N=" << last.lamN << '\n'
      << "iterations=" << last.t << '\n'
      << "multiplier_updates=" << trace.multipliers.size() << '\n'
      << "inner_rounds=" << trace.total_inner_rounds() << '\n';
  if (!trace.diagnostic.empty()) out << "diagnostic=" << trace.diagnostic << '\n';
  return trace.converged ? kExitOk : kExitNotConverged;
}

int cmd_estimate(const RunConfig& cfg) {
  const sw::Graph g = sw::load_graph(cfg.graph);
  sw::NodeWeights w = sw::NodeWeights::unit(g.n());
  if (!cfg.weights.empty()) {
    w = sw::NodeWeights{sw::load_weights(cfg.weights)};
    sw::detail::check_node_weights(g, w);
  }
  sw::DistributedEngine eng(g, sw::WeightMode::node, cfg.params);
  const sw::Estimate e = eng.estimate(w.values);
  const sw::Spectrum s = sw::sym_eig(sw::symmetric_weighted_laplacian(g, w));
  const double kappa_hat = e.lamN / e.lam2, kappa = s.lambda_max() / s.lambda2();
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
  std::cout << std::setprecision(8) << "quantity,distributed,oracle,rel_error\n"
            << "lambda_2," << e.lam2 << ',' << s.lambda2() << ',' << rel(e.lam2, s.lambda2()) << '\n'
            << "lambda_N," << e.lamN << ',' << s.lambda_max() << ',' << rel(e.lamN, s.lambda_max()) << '\n'
            << "kappa," << kappa_hat << ',' << kappa << ',' << rel(kappa_hat, kappa) << '\n'
            << "diameter," << eng.d_bound() << ',' << sw::bfs_diameter(g) << ",\n"
            << "rounds," << eng.bootstrap_rounds() + e.rounds << ",,\n";
  return kExitOk;
}

void write_consensus_csv(const fs::path& path, const std::vector<sw::Vector>& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << 'k';
  for (std::size_t i = 0; i < traj.front().size(); ++i) out << ",x" << (i + 1);
  out << '\n' << std::setprecision(10);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out << k;
    for (double v : traj[k]) out << ',' << v;
    out << '\n';
  }
}

int cmd_demo_consensus(const RunConfig& cfg) {
  namespace bench = sw::bench;
  const sw::Graph g = sw::load_graph(cfg.graph);
  sw::Vector w;
  if (!cfg.weights.empty()) {
    w = sw::load_weights(cfg.weights);
  } else {
    w = bench::central_solve(g, cfg.params).w;
  }
  sw::detail::check_node_weights(g, sw::NodeWeights{w});
  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);

  sw::Vector x0(g.n());
  std::mt19937_64 rng(cfg.params.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : x0) v = u(rng);

  std::cout << std::setprecision(6) << "case,r_star,rho_star,measured_rate\n";
  auto run = [&](const std::string& name, const sw::Matrix& l, const sw::Spectrum& s, const sw::Vector& wv) {
    const auto step = bench::optimal_consensus_step(s.lambda2(), s.lambda_max());
    const auto traj = bench::simulate_avg_consensus(l, step.r_star, x0, cfg.steps);
    const auto e = bench::disagreement_norms(traj, bench::consensus_limit(x0, wv));
    const std::size_t from = std::min<std::size_t>(10, cfg.steps / 4);
    const double rate = bench::fitted_decay_rate(e, from, cfg.steps);
    std::cout << name << ',' << step.r_star << ',' << step.rho_star << ',' << rate << '\n';
    write_consensus_csv(dir / ("consensus_" + name + ".csv"), traj);
  };
  run("baseline", sw::laplacian(g), sw::sym_eig(sw::laplacian(g)), {});
  run("optimized", sw::node_weighted_laplacian(g, sw::NodeWeights{w}),
      sw::sym_eig(sw::symmetric_weighted_laplacian(g, sw::NodeWeights{w})), w);
  return kExitOk;
}

int cmd_demo_dof(const RunConfig& cfg) {
  namespace bench = sw::bench;
  const sw::Graph g = sw::load_graph(cfg.graph);
  const auto plant = bench::reference_plant();
  const auto x0 = bench::random_initial_states(g.n(), plant.order(), cfg.params.seed);
  const fs::path dir(cfg.out_dir);
  sw::NodeWeights w = bench::reference_optimized_weights();
  if (!cfg.weights.empty()) w = sw::NodeWeights{sw::load_weights(cfg.weights)};

  std::cout << std::setprecision(6) << "gains,disagreement_final,spectral_radius";
  if (cfg.noise_seed) std::cout << ",energy_ratio";
  std::cout << '\n';
  auto run = [&](const std::string& name, const sw::Matrix& coupling, const bench::DofController& ctrl,
                 const std::string& prefix) {
    const auto t = bench::simulate_dof_closedloop(coupling, plant, ctrl, x0, cfg.noise_seed, cfg.steps);
    bench::write_dof_csvs(dir, prefix, t, plant.order());
    const auto s = sw::sym_eig(sw::symmetric_weighted_laplacian(
        g, name == "unweighted" ? sw::NodeWeights::unit(g.n()) : w));
    double radius = 0.0;
    for (std::size_t k = 1; k < g.n(); ++k)
      radius = std::max(radius, bench::spectral_radius(bench::closed_loop_mode_matrix(plant, ctrl, s.values[k])));
    std::cout << name << ',' << t.disagreement.back() << ',' << radius;
    if (cfg.noise_seed) std::cout << ',' << bench::energy_ratio(t);
    std::cout << '\n';
  };
  if (cfg.gains == "unweighted" || cfg.gains == "both")
    run("unweighted", sw::laplacian(g), bench::unweighted_gains(), "unweighted");
  if (cfg.gains == "optimized" || cfg.gains == "both") {
    sw::detail::check_node_weights(g, w);
    run("optimized", sw::node_weighted_laplacian(g, w), bench::optimized_gains(), "weighted");
  }
  return kExitOk;
}

int cmd_compare(const RunConfig& cfg) {
  const sw::Graph g = sw::load_graph(cfg.graph);
  const auto mode = parse_mode(cfg.mode);
  const auto dist = sw::outer_solve(g, cfg.params, mode, sw::EngineKind::distributed);
  const auto ora = sw::outer_solve(g, cfg.params, mode, sw::EngineKind::oracle);
  const double kd = sw::terminal_kappa_exact(g, dist), ko = sw::terminal_kappa_exact(g, ora);
  std::cout << std::setprecision(8) << "engine,kappa,iterations,converged\n"
            << "distributed," << kd << ',' << dist.terminal().t << ',' << dist.converged << '\n'
            << "oracle," << ko << ',' << ora.terminal().t << ',' << ora.converged << '\n'
            << "relative_gap=" << std::abs(kd - ko) / ko << '\n';
  return dist.converged && ora.converged ? kExitOk : kExitNotConverged;
}

void add_graph(CLI::App* app, RunConfig& cfg) {
  app->add_option("--graph", cfg.graph, "graph file (N M header, one edge per line, 1-based)");
}

void add_params(CLI::App* app, RunConfig& cfg) {
  app->add_option("--gamma", cfg.params.gamma, "projected gradient step size")->check(CLI::PositiveNumber);
  app->add_option("--rho", cfg.params.rho, "penalty parameter")->check(CLI::PositiveNumber);
  app->add_option("--t-max", cfg.params.t_max, "descent steps per multiplier update")->check(CLI::PositiveNumber);
  app->add_option("--seed", cfg.params.seed, "seed for initial vectors and demos");
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"Distributed condition-number optimization of graph Laplacian weights"};
  app.require_subcommand(1);

  try {
    cfg.params.seed = default_seed();
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << '\n';
    return kExitBadInput;
  }

  auto* optimize = app.add_subcommand("optimize", "run the augmented-Lagrangian weight optimization");
  add_graph(optimize, cfg);
  add_params(optimize, cfg);
  optimize->add_option("--mode", cfg.mode, "node or edge weights")->check(CLI::IsMember({"node", "edge"}));
  optimize->add_option("--engine", cfg.engine, "distributed or oracle")->check(CLI::IsMember({"distributed", "oracle"}));
  optimize->add_option("--out-dir", cfg.out_dir, "directory for CSV traces and the summary");

  auto* estimate = app.add_subcommand("estimate", "distributed eigenvalue estimates beside the dense solver");
  add_graph(estimate, cfg);
  estimate->add_option("--weights", cfg.weights, "node weights file (one value per line)");
  estimate->add_option("--seed", cfg.params.seed, "seed for initial vectors");

  auto* demo = app.add_subcommand("demo", "closed-form demos");
  demo->require_subcommand(1);
  auto* consensus = demo->add_subcommand("consensus", "average consensus at the optimal step size");
  add_graph(consensus, cfg);
  add_params(consensus, cfg);
  consensus->add_option("--weights", cfg.weights, "optimized node weights (default: solve centrally)");
  consensus->add_option("--out-dir", cfg.out_dir, "directory for trajectory CSVs");
  consensus->add_option("--steps", cfg.steps, "simulation length")->check(CLI::Range(8, 100000));
  auto* dof = demo->add_subcommand("dof", "output-feedback closed loop with the fixed controller gains");
  add_graph(dof, cfg);
  dof->add_option("--gains", cfg.gains, "unweighted, optimized or both")
      ->check(CLI::IsMember({"unweighted", "optimized", "both"}));
  dof->add_option("--noise-seed", cfg.noise_seed, "enable the decaying disturbance with this seed");
  dof->add_option("--seed", cfg.params.seed, "seed for the initial states");
  dof->add_option("--weights", cfg.weights, "node weights for the optimized loop");
  dof->add_option("--out-dir", cfg.out_dir, "directory for trajectory CSVs");
  dof->add_option("--steps", cfg.steps, "simulation length")->check(CLI::PositiveNumber);

  auto* compare = app.add_subcommand("compare", "run both engines and report the terminal gap");
  add_graph(compare, cfg);
  add_params(compare, cfg);
  compare->add_option("--mode", cfg.mode, "node or edge weights")->check(CLI::IsMember({"node", "edge"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadInput;
  }

  try {
    cfg.params.validate();
    if (*optimize) return cmd_optimize(cfg);
    if (*estimate) return cmd_estimate(cfg);
    if (*consensus) return cmd_demo_consensus(cfg);
    if (*dof) return cmd_demo_dof(cfg);
    if (*compare) return cmd_compare(cfg);
  } catch (const sw::ParseError& e) {
    std::cerr << "error: " << cfg.graph << ": " << e.what() << '\n';
    return kExitBadInput;
  } catch (const sw::ConvergenceError& e) {
    std::cerr << "not converged: " << e.what() << '\n';
    return kExitNotConverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadInput;
  }
  return kExitBadInput;
}
