#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fmt/format.h>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cmrl/detail/text.hpp"
#include "cmrl/error.hpp"

namespace cmrl {

using NodeId = int;
using LinkId = int;

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

enum class NodeKind { Sdn, Legacy };

// One undirected input edge. Expands to directed links 2k (u->v) and 2k+1
// (v->u).
struct Edge {
  NodeId u = 0;
  NodeId v = 0;
  double capacity = 0.0;
  double weight = 1.0;
};

struct DirectedLink {
  LinkId id = 0;
  NodeId src = 0;
  NodeId dst = 0;
  double capacity = 0.0;
  double weight = 1.0;
  bool up = true;
};

/// Network model of a hybrid SDN: nodes tagged SDN or legacy, and directed
/// links with capacity and OSPF weight.
///
/// Link ids are dense and stable. A failed edge keeps its two link ids but is
/// marked down: it disappears from out_links()/in_links() (what routing sees)
/// while staying in out_ports()/in_ports() (what agents see), so observation
/// and action widths do not change when a link fails.
class Topology {
 public:
  Topology() = default;

  Topology(std::vector<NodeKind> kinds, std::vector<Edge> edges)
      : kinds_(std::move(kinds)), edges_(std::move(edges)) {
    const int n = node_count();
    links_.reserve(edges_.size() * 2);
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      const Edge& e = edges_[k];
      if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n)
        throw Error(fmt::format("edge {} references unknown node", k));
      if (e.u == e.v) throw Error(fmt::format("edge {} is a self-loop", k));
      if (!(e.capacity > 0.0) || !std::isfinite(e.capacity))
        throw Error(fmt::format("edge {} has non-positive capacity", k));
      if (!(e.weight > 0.0) || !std::isfinite(e.weight))
        throw Error(fmt::format("edge {} has non-positive weight", k));
      const int id = static_cast<int>(2 * k);
      links_.push_back({id, e.u, e.v, e.capacity, e.weight, true});
      links_.push_back({id + 1, e.v, e.u, e.capacity, e.weight, true});
    }
    for (NodeId v = 0; v < n; ++v)
      if (kinds_[v] == NodeKind::Sdn) sdn_nodes_.push_back(v);
    rebuild_adjacency();
  }

  int node_count() const { return static_cast<int>(kinds_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  int link_count() const { return static_cast<int>(links_.size()); }

  NodeKind kind(NodeId v) const { return kinds_.at(v); }
  bool is_sdn(NodeId v) const { return kind(v) == NodeKind::Sdn; }
  const std::vector<NodeKind>& kinds() const { return kinds_; }

  /// SDN node ids in ascending order; this is the agent order everywhere.
  const std::vector<NodeId>& sdn_nodes() const { return sdn_nodes_; }

  const std::vector<Edge>& edges() const { return edges_; }
  const DirectedLink& link(LinkId e) const { return links_.at(e); }
  const std::vector<DirectedLink>& links() const { return links_; }
  bool edge_up(int k) const { return links_.at(2 * k).up; }

  std::span<const LinkId> out_links(NodeId v) const { return out_up_.at(v); }
  std::span<const LinkId> in_links(NodeId v) const { return in_up_.at(v); }
  std::span<const LinkId> out_ports(NodeId v) const { return out_all_.at(v); }
  std::span<const LinkId> in_ports(NodeId v) const { return in_all_.at(v); }

  friend Topology apply_failure(const Topology& topo, int edge_index);
  friend Topology restore_edge(const Topology& topo, int edge_index);

 private:
  void rebuild_adjacency() {
    const int n = node_count();
    out_up_.assign(n, {});
    in_up_.assign(n, {});
    out_all_.assign(n, {});
    in_all_.assign(n, {});
    // links_ is in id order, so every list comes out ascending.
    for (const auto& l : links_) {
      out_all_[l.src].push_back(l.id);
      in_all_[l.dst].push_back(l.id);
      if (!l.up) continue;
      out_up_[l.src].push_back(l.id);
      in_up_[l.dst].push_back(l.id);
    }
  }

  void set_edge_state(int k, bool up) {
    if (k < 0 || k >= edge_count())
      throw Error(fmt::format("invalid edge index {} (edge count {})", k,
                              edge_count()));
    links_[2 * k].up = up;
    links_[2 * k + 1].up = up;
    rebuild_adjacency();
  }

  std::vector<NodeKind> kinds_;
  std::vector<Edge> edges_;
  std::vector<DirectedLink> links_;
  std::vector<NodeId> sdn_nodes_;
  std::vector<std::vector<LinkId>> out_up_, in_up_, out_all_, in_all_;
};

/// Removes both directions of undirected edge k. The input is left untouched;
/// distances and admissible sets must be recomputed for the result.
inline Topology apply_failure(const Topology& topo, int edge_index) {
  Topology out = topo;
  out.set_edge_state(edge_index, false);
  return out;
}

inline Topology restore_edge(const Topology& topo, int edge_index) {
  Topology out = topo;
  out.set_edge_state(edge_index, true);
  return out;
}

/// Parses the line-oriented TOPO v1 format:
///
///   TOPO v1
///   node <id> <sdn|legacy>
///   edge <u> <v> <capacity> [weight]
///
/// '#' starts a comment. Node ids must be dense 0..n-1. Edge order fixes link
/// ids.
inline Topology load_topology(std::string_view text,
                              std::string_view source = "topology") {
  const std::string src(source);
  const auto lines = detail::split_lines(text);
  std::vector<std::pair<long long, NodeKind>> nodes;
  std::vector<std::pair<Edge, int>> edges;  // edge, line number
  bool header = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int lineno = static_cast<int>(i) + 1;
    const auto body = detail::trim(detail::strip_comment(lines[i]));
    if (body.empty()) continue;
    const auto tok = detail::split_ws(body);
    if (!header) {
      if (tok.size() != 2 || tok[0] != "TOPO" || tok[1] != "v1")
        throw ParseError(src, lineno, "expected header 'TOPO v1'");
      header = true;
      continue;
    }
    if (tok[0] == "node") {
      if (tok.size() != 3) throw ParseError(src, lineno, "expected 'node <id> <sdn|legacy>'");
      long long id = 0;
      if (!detail::parse_int(tok[1], id) || id < 0)
        throw ParseError(src, lineno, "bad node id");
      NodeKind kind;
      if (tok[2] == "sdn") kind = NodeKind::Sdn;
      else if (tok[2] == "legacy") kind = NodeKind::Legacy;
      else throw ParseError(src, lineno, "node kind must be 'sdn' or 'legacy'");
      for (const auto& [other, _] : nodes)
        if (other == id)
          throw ParseError(src, lineno, fmt::format("duplicate node id {}", id));
      nodes.emplace_back(id, kind);
    } else if (tok[0] == "edge") {
      if (tok.size() != 4 && tok.size() != 5)
        throw ParseError(src, lineno, "expected 'edge <u> <v> <capacity> [weight]'");
      long long u = 0, v = 0;
      Edge e;
      if (!detail::parse_int(tok[1], u) || !detail::parse_int(tok[2], v))
        throw ParseError(src, lineno, "bad edge endpoint");
      const auto known = [&](long long id) {
        return std::any_of(nodes.begin(), nodes.end(),
                           [&](const auto& p) { return p.first == id; });
      };
      if (!known(u) || !known(v))
        throw ParseError(src, lineno, "edge references unknown node");
      if (u == v) throw ParseError(src, lineno, "self-loop edge");
      if (!detail::parse_double(tok[3], e.capacity))
        throw ParseError(src, lineno, "bad capacity");
      if (!(e.capacity > 0.0) || !std::isfinite(e.capacity))
        throw ParseError(src, lineno, "non-positive capacity");
      if (tok.size() == 5) {
        if (!detail::parse_double(tok[4], e.weight))
          throw ParseError(src, lineno, "bad weight");
        if (!(e.weight > 0.0) || !std::isfinite(e.weight))
          throw ParseError(src, lineno, "non-positive weight");
      }
      e.u = static_cast<NodeId>(u);
      e.v = static_cast<NodeId>(v);
      edges.emplace_back(e, lineno);
    } else {
      throw ParseError(src, lineno, fmt::format("unknown directive '{}'", tok[0]));
    }
  }
  if (!header) throw ParseError(src, 1, "expected header 'TOPO v1'");
  if (nodes.empty()) throw ParseError(src, 1, "no nodes declared");

  std::vector<NodeKind> kinds(nodes.size(), NodeKind::Legacy);
  std::vector<bool> seen(nodes.size(), false);
  for (const auto& [id, kind] : nodes) {
    if (id >= static_cast<long long>(nodes.size()))
      throw ParseError(src, 1, fmt::format("node ids must be dense 0..{}", nodes.size() - 1));
    kinds[id] = kind;
    seen[id] = true;
  }
  std::vector<Edge> plain;
  plain.reserve(edges.size());
  for (const auto& [e, _] : edges) plain.push_back(e);
  return Topology(std::move(kinds), std::move(plain));
}

/// Canonical TOPO v1 text; failure state is not part of it.
inline std::string write_topology(const Topology& topo) {
  std::string out = "TOPO v1\n";
  for (NodeId v = 0; v < topo.node_count(); ++v)
    out += fmt::format("node {} {}\n", v, topo.is_sdn(v) ? "sdn" : "legacy");
  for (const auto& e : topo.edges())
    out += fmt::format("edge {} {} {} {}\n", e.u, e.v,
                       detail::format_g17(e.capacity),
                       detail::format_g17(e.weight));
  return out;
}

/// 16 hex digits binding checkpoints to the network they were trained on.
inline std::string topology_hash(const Topology& topo) {
  return fmt::format("{:016x}", detail::fnv1a64(write_topology(topo)));
}

/// dist(q, v): shortest-path distance from v to destination q.
class DistanceTable {
 public:
  DistanceTable() = default;
  explicit DistanceTable(int n) : n_(n), d_(static_cast<std::size_t>(n) * n, kUnreachable) {}

  int node_count() const { return n_; }
  double dist(NodeId q, NodeId v) const { return d_[index(q, v)]; }
  double& at(NodeId q, NodeId v) { return d_[index(q, v)]; }
  bool reachable(NodeId q, NodeId v) const { return dist(q, v) < kUnreachable; }

  bool operator==(const DistanceTable&) const = default;

 private:
  std::size_t index(NodeId q, NodeId v) const {
    return static_cast<std::size_t>(q) * n_ + v;
  }
  int n_ = 0;
  std::vector<double> d_;
};

/// Dijkstra from every destination over reversed up links.
inline DistanceTable shortest_distances(const Topology& topo) {
  const int n = topo.node_count();
  DistanceTable table(n);
  using Item = std::pair<double, NodeId>;
  for (NodeId q = 0; q < n; ++q) {
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    table.at(q, q) = 0.0;
    heap.emplace(0.0, q);
    while (!heap.empty()) {
      const auto [d, v] = heap.top();
      heap.pop();
      if (d > table.dist(q, v)) continue;
      for (LinkId e : topo.in_links(v)) {
        const auto& l = topo.link(e);
        const double nd = d + l.weight;
        if (nd < table.dist(q, l.src)) {
          table.at(q, l.src) = nd;
          heap.emplace(nd, l.src);
        }
      }
    }
  }
  return table;
}

namespace detail {
// Equal-cost test with a relative tolerance so non-integer weights summed in
// different orders still tie.
inline bool on_shortest_path(double weight, double d_next, double d_here) {
  return std::abs(weight + d_next - d_here) <= 1e-9 * std::max(1.0, d_here);
}
}  // namespace detail

/// Out-links of v lying on some shortest path to q, ascending by id.
inline std::vector<LinkId> ecmp_next_hops(const Topology& topo,
                                          const DistanceTable& dists, NodeId v,
                                          NodeId q) {
  std::vector<LinkId> hops;
  if (v == q || !dists.reachable(q, v)) return hops;
  for (LinkId e : topo.out_links(v)) {
    const auto& l = topo.link(e);
    if (dists.reachable(q, l.dst) &&
        detail::on_shortest_path(l.weight, dists.dist(q, l.dst), dists.dist(q, v)))
      hops.push_back(e);
  }
  return hops;
}

/// L[h][q] for every SDN node h: out-links that strictly decrease the
/// distance to q. Falls back to the ECMP set if that is somehow empty.
class AdmissibleSets {
 public:
  AdmissibleSets() = default;
  explicit AdmissibleSets(int n) : n_(n), sets_(static_cast<std::size_t>(n) * n) {}

  std::span<const LinkId> links(NodeId h, NodeId q) const {
    return sets_[static_cast<std::size_t>(h) * n_ + q];
  }
  std::vector<LinkId>& mutable_links(NodeId h, NodeId q) {
    return sets_[static_cast<std::size_t>(h) * n_ + q];
  }
  int node_count() const { return n_; }

 private:
  int n_ = 0;
  std::vector<std::vector<LinkId>> sets_;
};

inline AdmissibleSets admissible_links(const Topology& topo,
                                       const DistanceTable& dists) {
  const int n = topo.node_count();
  AdmissibleSets sets(n);
  for (NodeId h : topo.sdn_nodes()) {
    for (NodeId q = 0; q < n; ++q) {
      if (q == h || !dists.reachable(q, h)) continue;
      auto& L = sets.mutable_links(h, q);
      for (LinkId e : topo.out_links(h))
        if (dists.dist(q, topo.link(e).dst) < dists.dist(q, h)) L.push_back(e);
      if (L.empty()) L = ecmp_next_hops(topo, dists, h, q);
    }
  }
  return sets;
}

/// Everything routing needs about one (possibly failed) network state.
struct RoutingContext {
  Topology topo;
  DistanceTable dists;
  AdmissibleSets admissible;

  explicit RoutingContext(Topology t)
      : topo(std::move(t)),
        dists(shortest_distances(topo)),
        admissible(admissible_links(topo, dists)) {}
};

}  // namespace cmrl
