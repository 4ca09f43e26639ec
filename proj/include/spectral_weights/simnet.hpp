#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "graph.hpp"

namespace spectral_weights::simnet {

/// Thrown when a protocol asks for a message from an agent that is not a neighbor.
class LocalityViolation : public std::logic_error {
 public:
  LocalityViolation(NodeId self, NodeId other)
      : std::logic_error("agent " + std::to_string(self + 1) + " read a message from non-neighbor " +
                         std::to_string(other + 1)) {}
};

template <std::size_t K>
using Message = std::array<double, K>;

/// Messages delivered to one agent in one round, aligned with its sorted neighbor list.
template <std::size_t K>
class Inbox {
 public:
  Inbox(NodeId self, std::span<const NodeId> senders, std::span<const Message<K>> messages)
      : self_(self), senders_(senders), messages_(messages) {}

  std::size_t size() const { return senders_.size(); }
  NodeId sender(std::size_t k) const { return senders_[k]; }
  const Message<K>& operator[](std::size_t k) const { return messages_[k]; }

  const Message<K>& from(NodeId j) const {
    auto it = std::lower_bound(senders_.begin(), senders_.end(), j);
    if (it == senders_.end() || *it != j) throw LocalityViolation(self_, j);
    return messages_[static_cast<std::size_t>(it - senders_.begin())];
  }

 private:
  NodeId self_;
  std::span<const NodeId> senders_;
  std::span<const Message<K>> messages_;
};

/// Everything an agent may touch while stepping: its id, scalar registers, and
/// per-link registers (one row of link_width values per neighbor, neighbor order).
struct AgentView {
  NodeId id;
  std::span<double> locals;
  std::span<double> links;
};

struct ConstAgentView {
  NodeId id;
  std::span<const double> locals;
  std::span<const double> links;
};

// clang-format off
template <class P>
concept Protocol = requires(const P& p, ConstAgentView cv, AgentView v, std::size_t slot,
                            const Inbox<P::arity>& in) {
  { P::arity } -> std::convertible_to<std::size_t>;
  { p.registers() } -> std::convertible_to<std::vector<std::string>>;
  { p.emit(cv, slot) } -> std::same_as<Message<P::arity>>;
  { p.step(v, in) };
  { p.done(cv) } -> std::convertible_to<bool>;
};
// clang-format on

template <class P>
std::size_t link_width(const P& p) {
  if constexpr (requires { p.link_registers(); })
    return p.link_registers().size();
  else
    return 0;
}

/// Per-agent register snapshot at the end of a round (round 0 = initial state).
struct RoundSnapshot {
  std::size_t round = 0;
  std::vector<Vector> locals;
};

struct RoundTrace {
  std::vector<std::string> registers;
  std::vector<RoundSnapshot> rounds;
  bool terminated = false;

  std::size_t register_index(std::string_view name) const {
    for (std::size_t k = 0; k < registers.size(); ++k)
      if (registers[k] == name) return k;
    throw std::out_of_range("unknown register: " + std::string(name));
  }
  const RoundSnapshot& final_round() const {
    if (rounds.empty()) throw std::logic_error("empty trace");
    return rounds.back();
  }
  /// Values of one register across agents at the final round.
  Vector final_values(std::string_view name) const {
    const auto k = register_index(name);
    Vector out;
    for (const auto& a : final_round().locals) out.push_back(a[k]);
    return out;
  }
  std::size_t executed_rounds() const { return rounds.empty() ? 0 : rounds.size() - 1; }
};

/// Synchronous lockstep network: in each round every agent emits a message to
/// each neighbor from its current state, then every agent steps on its inbox.
template <Protocol P>
class Network {
 public:
  Network(const Graph& g, P proto, const std::vector<Vector>& init_locals, const std::vector<Vector>& init_links = {})
      : g_(&g), proto_(std::move(proto)), names_(proto_.registers()), width_(link_width(proto_)) {
    const std::size_t n = g.n();
    if (init_locals.size() != n) throw std::invalid_argument("init must cover every agent");
    regs_ = names_.size();
    locals_.resize(n * regs_);
    for (NodeId i = 0; i < n; ++i) {
      if (init_locals[i].size() != regs_)
        throw std::invalid_argument("agent " + std::to_string(i + 1) + ": register count mismatch");
      std::copy(init_locals[i].begin(), init_locals[i].end(), locals_.begin() + static_cast<std::ptrdiff_t>(i * regs_));
    }
    link_offset_.resize(n + 1, 0);
    slot_offset_.resize(n + 1, 0);
    for (NodeId i = 0; i < n; ++i) {
      link_offset_[i + 1] = link_offset_[i] + g.degree(i) * width_;
      slot_offset_[i + 1] = slot_offset_[i] + g.degree(i);
    }
    links_.assign(link_offset_[n], 0.0);
    if (width_ > 0) {
      if (init_links.size() != n) throw std::invalid_argument("link registers must cover every agent");
      for (NodeId i = 0; i < n; ++i) {
        if (init_links[i].size() != g.degree(i) * width_)
          throw std::invalid_argument("agent " + std::to_string(i + 1) + ": link register count mismatch");
        std::copy(init_links[i].begin(), init_links[i].end(), links_.begin() + static_cast<std::ptrdiff_t>(link_offset_[i]));
      }
    }
    // reverse_[slot_offset_[i] + k] = position of i in the list of its k-th neighbor
    reverse_.resize(slot_offset_[n]);
    for (NodeId i = 0; i < n; ++i)
      for (std::size_t k = 0; k < g.degree(i); ++k) reverse_[slot_offset_[i] + k] = g.slot(g.neighbors(i)[k], i);
    inbox_.resize(slot_offset_[n]);
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), NodeId{0});
  }

  const Graph& graph() const { return *g_; }
  const P& protocol() const { return proto_; }
  const std::vector<std::string>& registers() const { return names_; }
  std::size_t round() const { return round_; }

  /// Permutation used when stepping agents within a round. Results do not depend on it.
  void set_agent_order(std::vector<NodeId> order) {
    std::vector<NodeId> check = order;
    std::sort(check.begin(), check.end());
    for (NodeId i = 0; i < check.size(); ++i)
      if (check[i] != i || check.size() != g_->n()) throw std::invalid_argument("agent order must be a permutation");
    order_ = std::move(order);
  }

  ConstAgentView view(NodeId i) const {
    return {i, std::span<const double>(locals_.data() + i * regs_, regs_),
            std::span<const double>(links_.data() + link_offset_[i], link_offset_[i + 1] - link_offset_[i])};
  }

  std::size_t register_index(std::string_view name) const {
    for (std::size_t k = 0; k < names_.size(); ++k)
      if (names_[k] == name) return k;
    throw std::out_of_range("unknown register: " + std::string(name));
  }
  double get(NodeId i, std::size_t reg) const { return locals_[i * regs_ + reg]; }
  double get(NodeId i, std::string_view name) const { return get(i, register_index(name)); }
  Vector column(std::size_t reg) const {
    Vector out(g_->n());
    for (NodeId i = 0; i < g_->n(); ++i) out[i] = get(i, reg);
    return out;
  }
  Vector column(std::string_view name) const { return column(register_index(name)); }
  std::span<const double> links(NodeId i) const { return view(i).links; }

  bool all_done() const {
    for (NodeId i = 0; i < g_->n(); ++i)
      if (!proto_.done(view(i))) return false;
    return true;
  }

  void step() {
    const Graph& g = *g_;
    for (NodeId i = 0; i < g.n(); ++i) {
      const auto& nb = g.neighbors(i);
      for (std::size_t k = 0; k < nb.size(); ++k)
        inbox_[slot_offset_[i] + k] = proto_.emit(view(nb[k]), reverse_[slot_offset_[i] + k]);
    }
    next_locals_ = locals_;
    next_links_ = links_;
    for (NodeId i : order_) {
      AgentView v{i, std::span<double>(next_locals_.data() + i * regs_, regs_),
                  std::span<double>(next_links_.data() + link_offset_[i], link_offset_[i + 1] - link_offset_[i])};
      Inbox<P::arity> in(i, std::span<const NodeId>(g.neighbors(i)),
                         std::span<const Message<P::arity>>(inbox_.data() + slot_offset_[i], g.degree(i)));
      proto_.step(v, in);
    }
    locals_.swap(next_locals_);
    links_.swap(next_links_);
    ++round_;
  }

  RoundSnapshot snapshot() const {
    RoundSnapshot s{round_, {}};
    for (NodeId i = 0; i < g_->n(); ++i) s.locals.emplace_back(locals_.begin() + i * regs_, locals_.begin() + (i + 1) * regs_);
    return s;
  }

  /// Steps until every agent's termination predicate holds or max_rounds rounds ran.
  /// Returns true on termination.
  bool run(std::size_t max_rounds) {
    for (std::size_t r = 0; r < max_rounds; ++r) {
      if (all_done()) return true;
      step();
    }
    return all_done();
  }

 private:
  const Graph* g_;
  P proto_;
  std::vector<std::string> names_;
  std::size_t width_;
  std::size_t regs_ = 0;
  std::vector<double> locals_, next_locals_;
  std::vector<double> links_, next_links_;
  std::vector<std::size_t> link_offset_, slot_offset_, reverse_;
  std::vector<Message<P::arity>> inbox_;
  std::vector<NodeId> order_;
  std::size_t round_ = 0;
};

struct RunOptions {
  std::vector<NodeId> agent_order;  // empty = natural order
};

/// Runs a protocol to termination (or max_rounds) recording every round.
template <Protocol P>
RoundTrace run_rounds(const Graph& g, P proto, const std::vector<Vector>& init, std::size_t max_rounds,
                      const RunOptions& opts = {}, const std::vector<Vector>& init_links = {}) {
  if (max_rounds < 1) throw std::invalid_argument("max_rounds must be at least 1");
  Network<P> net(g, std::move(proto), init, init_links);
  if (!opts.agent_order.empty()) net.set_agent_order(opts.agent_order);
  RoundTrace trace;
  trace.registers = net.registers();
  trace.rounds.push_back(net.snapshot());
  while (!net.all_done() && net.round() < max_rounds) {
    net.step();
    trace.rounds.push_back(net.snapshot());
  }
  trace.terminated = net.all_done();
  return trace;
}

inline bool assert_uniform(const RoundTrace& trace, std::string_view name, double tol) {
  const Vector v = trace.final_values(name);
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo <= tol;
}

/// CSV with columns round,agent,register,value (agents 1-based).
inline void write_trace_csv(std::ostream& out, const RoundTrace& trace) {
  out << "round,agent,register,value\n";
  out << std::setprecision(17);
  for (const auto& snap : trace.rounds)
    for (std::size_t i = 0; i < snap.locals.size(); ++i)
      for (std::size_t k = 0; k < trace.registers.size(); ++k)
        out << snap.round << ',' << (i + 1) << ',' << trace.registers[k] << ',' << snap.locals[i][k] << '\n';
}

/// Private generator of one agent for a given attempt.
inline std::mt19937_64 agent_rng(std::uint64_t seed, NodeId id, std::uint64_t attempt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(attempt)};
  return std::mt19937_64(seq);
}

}  // namespace spectral_weights::simnet
