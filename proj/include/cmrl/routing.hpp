#pragma once

#include <algorithm>
#include <fmt/format.h>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cmrl/detail/text.hpp"
#include "cmrl/error.hpp"
#include "cmrl/topology.hpp"
#include "cmrl/traffic.hpp"

namespace cmrl {

/// Splitting ratios of one SDN switch over all of its out-ports (ascending
/// link id). One vector serves every destination; policy_from_actions masks
/// it per destination.
struct SplitAction {
  NodeId node = 0;
  std::vector<double> ratios;
};

/// One SplitAction per SDN node, in ascending node order.
using JointAction = std::vector<SplitAction>;

/// frac[h][q][i]: share of destination-q traffic that SDN node h puts on
/// admissible link L[h][q][i].
class RoutingPolicy {
 public:
  RoutingPolicy() = default;
  explicit RoutingPolicy(int n) : n_(n), frac_(static_cast<std::size_t>(n) * n) {}

  int node_count() const { return n_; }
  std::span<const double> fractions(NodeId h, NodeId q) const { return frac_[idx(h, q)]; }
  std::vector<double>& mutable_fractions(NodeId h, NodeId q) { return frac_[idx(h, q)]; }

  bool operator==(const RoutingPolicy&) const = default;

 private:
  std::size_t idx(NodeId h, NodeId q) const { return static_cast<std::size_t>(h) * n_ + q; }
  int n_ = 0;
  std::vector<std::vector<double>> frac_;
};

struct LinkLoads {
  std::vector<double> load;
  // per_dest[q][e], only filled when requested.
  std::vector<std::vector<double>> per_dest;
  double unrouted = 0.0;
};

struct UtilizationState {
  std::vector<double> util;
  double mlu = 0.0;
};

/// Renormalizes each switch's ratios over L[h][q]; zero mass on L falls back
/// to uniform.
inline RoutingPolicy policy_from_actions(const JointAction& u, const Topology& topo,
                                         const AdmissibleSets& L) {
  const auto& sdn = topo.sdn_nodes();
  if (u.size() != sdn.size())
    throw Error(fmt::format("joint action has {} entries for {} SDN nodes", u.size(), sdn.size()));
  const int n = topo.node_count();
  RoutingPolicy policy(n);
  for (std::size_t i = 0; i < sdn.size(); ++i) {
    const NodeId h = sdn[i];
    const auto& a = u[i];
    const auto ports = topo.out_ports(h);
    if (a.node != h || a.ratios.size() != ports.size())
      throw Error(fmt::format("action for node {} does not match SDN node {} with {} out-ports",
                              a.node, h, ports.size()));
    for (double r : a.ratios)
      if (!(r >= 0.0) || !std::isfinite(r))
        throw Error(fmt::format("action for node {} has a negative or non-finite ratio", h));
    for (NodeId q = 0; q < n; ++q) {
      const auto links = L.links(h, q);
      if (links.empty()) continue;
      auto& f = policy.mutable_fractions(h, q);
      f.resize(links.size());
      double mass = 0.0;
      for (std::size_t j = 0; j < links.size(); ++j) {
        const auto port = std::find(ports.begin(), ports.end(), links[j]) - ports.begin();
        f[j] = a.ratios[port];
        mass += f[j];
      }
      if (mass < 1e-12) {
        std::fill(f.begin(), f.end(), 1.0 / static_cast<double>(links.size()));
      } else {
        for (double& x : f) x /= mass;
      }
    }
  }
  return policy;
}

namespace detail {

// Destination-based propagation. Nodes are visited in decreasing distance to
// q, and every next hop strictly decreases that distance, so one pass
// settles all volume. A null policy means pure OSPF/ECMP.
inline LinkLoads propagate(const Topology& topo, const DistanceTable& dists,
                           const AdmissibleSets* L, const TrafficMatrix& tm,
                           const RoutingPolicy* policy, bool keep_per_dest) {
  const int n = topo.node_count();
  if (tm.node_count() != n)
    throw Error(fmt::format("traffic matrix has {} nodes, topology {}", tm.node_count(), n));
  LinkLoads out;
  out.load.assign(topo.link_count(), 0.0);
  if (keep_per_dest) out.per_dest.assign(n, std::vector<double>(topo.link_count(), 0.0));

  std::vector<NodeId> order(n);
  std::vector<double> volume(n);
  for (NodeId q = 0; q < n; ++q) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
      return dists.dist(q, a) > dists.dist(q, b);
    });
    for (NodeId v = 0; v < n; ++v) volume[v] = v == q ? 0.0 : tm(v, q);

    for (NodeId v : order) {
      if (v == q) continue;
      const double vol = volume[v];
      if (vol == 0.0) continue;
      if (!dists.reachable(q, v)) {
        out.unrouted += vol;
        continue;
      }
      const auto send = [&](LinkId e, double f) {
        out.load[e] += f;
        if (keep_per_dest) out.per_dest[q][e] += f;
        volume[topo.link(e).dst] += f;
      };
      if (policy != nullptr && topo.is_sdn(v) && !L->links(v, q).empty()) {
        const auto links = L->links(v, q);
        const auto frac = policy->fractions(v, q);
        for (std::size_t j = 0; j < links.size(); ++j)
          if (frac[j] > 0.0) send(links[j], vol * frac[j]);
      } else {
        const auto hops = ecmp_next_hops(topo, dists, v, q);
        if (hops.empty()) {
          out.unrouted += vol;
          continue;
        }
        const double share = 1.0 / static_cast<double>(hops.size());
        for (LinkId e : hops) send(e, vol * share);
      }
    }
  }
  return out;
}

}  // namespace detail

/// Pure OSPF: every node splits equally over its shortest-path next hops.
inline LinkLoads ospf_flows(const Topology& topo, const DistanceTable& dists,
                            const TrafficMatrix& tm, bool keep_per_dest = false) {
  return detail::propagate(topo, dists, nullptr, tm, nullptr, keep_per_dest);
}

/// Hybrid routing: SDN nodes follow the policy, legacy nodes ECMP.
inline LinkLoads flows_under_policy(const Topology& topo, const DistanceTable& dists,
                                    const AdmissibleSets& L, const TrafficMatrix& tm,
                                    const RoutingPolicy& policy,
                                    bool keep_per_dest = false) {
  return detail::propagate(topo, dists, &L, tm, &policy, keep_per_dest);
}

/// Utilization may exceed 1; nothing is dropped.
inline UtilizationState utilization(const LinkLoads& loads, const Topology& topo) {
  if (static_cast<int>(loads.load.size()) != topo.link_count())
    throw Error("load vector does not match link count");
  UtilizationState s;
  s.util.resize(loads.load.size());
  for (int e = 0; e < topo.link_count(); ++e) {
    s.util[e] = loads.load[e] / topo.link(e).capacity;
    s.mlu = std::max(s.mlu, s.util[e]);
  }
  return s;
}

enum class ObservationScope { Incident, OutOnly };

inline int observation_width(const Topology& topo, NodeId h,
                             ObservationScope scope = ObservationScope::Incident) {
  const auto w = topo.out_ports(h).size() +
                 (scope == ObservationScope::Incident ? topo.in_ports(h).size() : 0);
  return static_cast<int>(w);
}

/// Utilizations of the links adjacent to switch h: out-ports then in-ports,
/// each ascending by link id.
inline std::vector<double> observe(const UtilizationState& state, const Topology& topo,
                                   NodeId h,
                                   ObservationScope scope = ObservationScope::Incident) {
  if (h < 0 || h >= topo.node_count() || !topo.is_sdn(h))
    throw Error(fmt::format("node {} is not an SDN switch", h));
  std::vector<double> o;
  o.reserve(observation_width(topo, h, scope));
  for (LinkId e : topo.out_ports(h)) o.push_back(state.util[e]);
  if (scope == ObservationScope::Incident)
    for (LinkId e : topo.in_ports(h)) o.push_back(state.util[e]);
  return o;
}

inline std::string loads_csv(const LinkLoads& loads, const Topology& topo) {
  const auto state = utilization(loads, topo);
  std::string out = "link_id,src,dst,load,capacity,utilization\n";
  for (const auto& l : topo.links())
    out += fmt::format("{},{},{},{},{},{}\n", l.id, l.src, l.dst,
                       detail::format_g17(loads.load[l.id]),
                       detail::format_g17(l.capacity),
                       detail::format_g17(state.util[l.id]));
  out += fmt::format("# mlu={}\n", detail::format_g17(state.mlu));
  return out;
}

}  // namespace cmrl
