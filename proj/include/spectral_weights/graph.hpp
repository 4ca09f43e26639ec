#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "matrix.hpp"

namespace spectral_weights {

using NodeId = std::size_t;

/// Error raised while reading an edge-list document. line() is 1-based; 0 means
/// the problem is global (e.g. the graph is disconnected).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct Edge {
  NodeId i;
  NodeId j;  // i < j
  bool operator==(const Edge&) const = default;
};

/// Undirected, connected, simple graph with 0-based node ids.
class Graph {
 public:
  Graph() = default;

  /// Builds and validates. Edge order is kept as given; each pair is stored with i < j.
  Graph(std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& edges) : n_(n), adj_(n), adj_edge_(n) {
    if (n < 2) throw std::invalid_argument("graph needs at least two nodes");
    for (std::size_t e = 0; e < edges.size(); ++e) {
      auto [a, b] = edges[e];
      if (a >= n || b >= n) throw std::invalid_argument("edge " + std::to_string(e) + ": node index out of range");
      if (a == b) throw std::invalid_argument("edge " + std::to_string(e) + ": self-loop");
      if (a > b) std::swap(a, b);
      if (std::find(adj_[a].begin(), adj_[a].end(), b) != adj_[a].end())
        throw std::invalid_argument("edge " + std::to_string(e) + ": duplicate edge");
      edges_.push_back({a, b});
      adj_[a].push_back(b);
      adj_[b].push_back(a);
    }
    for (NodeId v = 0; v < n_; ++v) std::sort(adj_[v].begin(), adj_[v].end());
    for (NodeId v = 0; v < n_; ++v) adj_edge_[v].assign(adj_[v].size(), 0);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto [a, b] = edges_[e];
      adj_edge_[a][slot(a, b)] = e;
      adj_edge_[b][slot(b, a)] = e;
    }
    if (!connected()) throw std::invalid_argument("graph is disconnected");
  }

  std::size_t n() const { return n_; }
  std::size_t m() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<NodeId>& neighbors(NodeId v) const { return adj_[v]; }
  std::size_t degree(NodeId v) const { return adj_[v].size(); }

  /// Edge index of the k-th neighbor link of v.
  std::size_t edge_of(NodeId v, std::size_t k) const { return adj_edge_[v][k]; }

  /// Position of u in v's sorted neighbor list, or degree(v) if absent.
  std::size_t slot(NodeId v, NodeId u) const {
    const auto& nb = adj_[v];
    auto it = std::lower_bound(nb.begin(), nb.end(), u);
    if (it == nb.end() || *it != u) return nb.size();
    return static_cast<std::size_t>(it - nb.begin());
  }
  bool adjacent(NodeId v, NodeId u) const { return slot(v, u) != adj_[v].size(); }

  std::size_t max_degree() const {
    std::size_t d = 0;
    for (const auto& nb : adj_) d = std::max(d, nb.size());
    return d;
  }

  /// Hop distances from src.
  std::vector<std::size_t> bfs(NodeId src) const {
    std::vector<std::size_t> dist(n_, static_cast<std::size_t>(-1));
    std::queue<NodeId> q;
    dist[src] = 0;
    q.push(src);
    while (!q.empty()) {
      const NodeId v = q.front();
      q.pop();
      for (NodeId u : adj_[v])
        if (dist[u] == static_cast<std::size_t>(-1)) {
          dist[u] = dist[v] + 1;
          q.push(u);
        }
    }
    return dist;
  }

 private:
  bool connected() const {
    const auto d = bfs(0);
    return std::none_of(d.begin(), d.end(), [](std::size_t x) { return x == static_cast<std::size_t>(-1); });
  }

  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<NodeId>> adj_;
  std::vector<std::vector<std::size_t>> adj_edge_;
};

struct NodeWeights {
  Vector values;
  static NodeWeights unit(std::size_t n) { return {Vector(n, 1.0)}; }
  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

struct EdgeWeights {
  Vector values;  // indexed in edge-list order
  static EdgeWeights unit(std::size_t m) { return {Vector(m, 1.0)}; }
  std::size_t size() const { return values.size(); }
  double operator[](std::size_t e) const { return values[e]; }
};

/// Parses "N M" followed by M lines "i j" (1-based). Blank lines and lines
/// starting with '#' are skipped.
inline Graph parse_graph(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto next = [&](std::string& out) {
    while (std::getline(in, line)) {
      ++lineno;
      auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      out = line;
      return true;
    }
    return false;
  };

  std::string header;
  if (!next(header)) throw ParseError(0, "empty graph document");
  std::istringstream hs(header);
  long long n = 0, m = 0;
  std::string rest;
  if (!(hs >> n >> m) || (hs >> rest)) throw ParseError(lineno, "expected header \"N M\"");
  if (n < 2) throw ParseError(lineno, "graph needs at least two nodes");
  if (m < 0) throw ParseError(lineno, "negative edge count");

  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<std::vector<NodeId>> seen(static_cast<std::size_t>(n));
  for (long long e = 0; e < m; ++e) {
    std::string body;
    if (!next(body)) throw ParseError(lineno, "expected " + std::to_string(m) + " edges, found " + std::to_string(e));
    std::istringstream es(body);
    long long a = 0, b = 0;
    if (!(es >> a >> b) || (es >> rest)) throw ParseError(lineno, "expected edge \"i j\"");
    if (a < 1 || b < 1 || a > n || b > n) throw ParseError(lineno, "node index out of range");
    if (a == b) throw ParseError(lineno, "self-loop at node " + std::to_string(a));
    auto lo = static_cast<NodeId>(std::min(a, b) - 1), hi = static_cast<NodeId>(std::max(a, b) - 1);
    if (std::find(seen[lo].begin(), seen[lo].end(), hi) != seen[lo].end())
      throw ParseError(lineno, "duplicate edge " + std::to_string(a) + "-" + std::to_string(b));
    seen[lo].push_back(hi);
    edges.emplace_back(static_cast<NodeId>(a - 1), static_cast<NodeId>(b - 1));
  }
  std::string extra;
  if (next(extra)) throw ParseError(lineno, "unexpected content after edge list");
  try {
    return Graph(static_cast<std::size_t>(n), edges);
  } catch (const std::invalid_argument& ex) {
    throw ParseError(0, ex.what());
  }
}

inline Graph load_graph(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open graph file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_graph(ss.str());
}

/// Reads whitespace-separated weights.
inline Vector load_weights(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open weights file: " + path);
  Vector w;
  double x;
  while (f >> x) w.push_back(x);
  if (!f.eof()) throw std::runtime_error("malformed weights file: " + path);
  return w;
}

// Laplacian builders ----------------------------------------------------------

inline Matrix laplacian(const Graph& g) {
  Matrix l(g.n(), g.n());
  for (const auto& e : g.edges()) {
    l(e.i, e.i) += 1.0;
    l(e.j, e.j) += 1.0;
    l(e.i, e.j) -= 1.0;
    l(e.j, e.i) -= 1.0;
  }
  return l;
}

namespace detail {
inline void check_node_weights(const Graph& g, const NodeWeights& w) {
  if (w.size() != g.n()) throw std::invalid_argument("node weight vector length mismatch");
  for (double x : w.values)
    if (!(x >= 0.0)) throw std::invalid_argument("node weights must be non-negative");
}
inline void check_edge_weights(const Graph& g, const EdgeWeights& w) {
  if (w.size() != g.m()) throw std::invalid_argument("edge weight vector length mismatch");
  for (double x : w.values)
    if (!(x >= 0.0)) throw std::invalid_argument("edge weights must be non-negative");
}
}  // namespace detail

/// diag(w) L. Not symmetric in general.
inline Matrix node_weighted_laplacian(const Graph& g, const NodeWeights& w) {
  detail::check_node_weights(g, w);
  Matrix l = laplacian(g);
  for (std::size_t i = 0; i < g.n(); ++i)
    for (std::size_t j = 0; j < g.n(); ++j) l(i, j) *= w[i];
  return l;
}

/// diag(w)^{1/2} L diag(w)^{1/2}.
inline Matrix symmetric_weighted_laplacian(const Graph& g, const NodeWeights& w) {
  detail::check_node_weights(g, w);
  Matrix l(g.n(), g.n());
  for (NodeId i = 0; i < g.n(); ++i) l(i, i) = w[i] * static_cast<double>(g.degree(i));
  for (const auto& e : g.edges()) {
    const double v = -std::sqrt(w[e.i]) * std::sqrt(w[e.j]);
    l(e.i, e.j) = v;
    l(e.j, e.i) = v;
  }
  return l;
}

/// |E| x n, row (i,j) has +1 at i and -1 at j.
inline Matrix incidence(const Graph& g) {
  Matrix b(g.m(), g.n());
  for (std::size_t e = 0; e < g.m(); ++e) {
    b(e, g.edges()[e].i) = 1.0;
    b(e, g.edges()[e].j) = -1.0;
  }
  return b;
}

/// B^T diag(w) B.
inline Matrix edge_weighted_laplacian(const Graph& g, const EdgeWeights& w) {
  detail::check_edge_weights(g, w);
  Matrix l(g.n(), g.n());
  for (std::size_t e = 0; e < g.m(); ++e) {
    const auto [i, j] = g.edges()[e];
    l(i, i) += w[e];
    l(j, j) += w[e];
    l(i, j) -= w[e];
    l(j, i) -= w[e];
  }
  return l;
}

inline std::size_t bfs_diameter(const Graph& g) {
  std::size_t d = 0;
  for (NodeId v = 0; v < g.n(); ++v) {
    const auto dist = g.bfs(v);
    d = std::max(d, *std::max_element(dist.begin(), dist.end()));
  }
  return d;
}

}  // namespace spectral_weights
