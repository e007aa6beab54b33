#pragma once

#include <cmath>
#include <fmt/format.h>
#include <vector>

#include "cmrl/error.hpp"
#include "cmrl/routing.hpp"
#include "cmrl/topology.hpp"
#include "cmrl/traffic.hpp"

namespace cmrl::oracle {

/// Lattice of split vectors whose entries are multiples of granularity.
struct GridSpec {
  double granularity = 0.05;

  int steps() const {
    if (!(granularity > 0.0 && granularity <= 1.0))
      throw Error("grid: granularity must lie in (0, 1]");
    const double k = std::round(1.0 / granularity);
    if (std::abs(k * granularity - 1.0) > 1e-12)
      throw Error(fmt::format("grid: granularity {} does not divide 1", granularity));
    return static_cast<int>(k);
  }
};

/// C(steps + d - 1, d - 1), as a double to survive large counts.
inline double lattice_size(int steps, int d) {
  double c = 1.0;
  for (int i = 1; i < d; ++i) c = c * (steps + i) / i;
  return std::round(c);
}

/// All compositions of `steps` units into d parts, scaled to sum to one, in
/// ascending lexicographic order.
inline std::vector<std::vector<double>> simplex_lattice(int d, int steps) {
  std::vector<std::vector<double>> out;
  std::vector<int> parts(d, 0);
  const auto rec = [&](auto& self, int i, int left) -> void {
    if (i == d - 1) {
      parts[i] = left;
      std::vector<double> v(d);
      for (int j = 0; j < d; ++j) v[j] = static_cast<double>(parts[j]) / steps;
      out.push_back(std::move(v));
      return;
    }
    for (int k = 0; k <= left; ++k) {
      parts[i] = k;
      self(self, i + 1, left - k);
    }
  };
  if (d >= 1) rec(rec, 0, steps);
  return out;
}

struct BruteForceResult {
  double mlu = 0.0;
  JointAction action;
  double evaluated = 0.0;
};

inline constexpr double kSearchGuard = 1e7;

/// Exhaustive search over the per-switch lattices. Ties (within 1e-12) keep
/// the lexicographically smallest joint action.
inline BruteForceResult brute_force_min_mlu(const Topology& topo, const DistanceTable& dists,
                                            const AdmissibleSets& L, const TrafficMatrix& tm,
                                            const GridSpec& grid) {
  const int steps = grid.steps();
  const auto& sdn = topo.sdn_nodes();
  double space = 1.0;
  std::vector<std::vector<std::vector<double>>> lattices;
  for (NodeId h : sdn) {
    const int d = static_cast<int>(topo.out_ports(h).size());
    space *= lattice_size(steps, d);
    if (space > kSearchGuard)
      throw Error(fmt::format("oracle: search space exceeds {:g} joint actions", kSearchGuard));
    lattices.push_back(simplex_lattice(d, steps));
  }

  BruteForceResult best;
  best.mlu = kUnreachable;
  JointAction u(sdn.size());
  for (std::size_t i = 0; i < sdn.size(); ++i) u[i].node = sdn[i];
  std::vector<std::size_t> pick(sdn.size(), 0);
  while (true) {
    for (std::size_t i = 0; i < sdn.size(); ++i) u[i].ratios = lattices[i][pick[i]];
    const auto policy = policy_from_actions(u, topo, L);
    const double mlu = utilization(flows_under_policy(topo, dists, L, tm, policy), topo).mlu;
    best.evaluated += 1.0;
    if (mlu < best.mlu - 1e-12) {
      best.mlu = mlu;
      best.action = u;
    }
    // Odometer with the last switch varying fastest keeps lexicographic order.
    std::size_t i = sdn.size();
    while (i > 0) {
      --i;
      if (++pick[i] < lattices[i].size()) break;
      pick[i] = 0;
      if (i == 0) return best;
    }
    if (sdn.empty()) return best;
  }
}

inline constexpr int kPathEnumMaxNodes = 6;

/// Independent flow calculator: walks every next-hop path of every demand
/// and multiplies the branch fractions along it. Null policy means OSPF.
inline LinkLoads path_enum_flows(const Topology& topo, const DistanceTable& dists,
                                 const AdmissibleSets& L, const TrafficMatrix& tm,
                                 const RoutingPolicy* policy) {
  if (topo.node_count() > kPathEnumMaxNodes)
    throw Error(fmt::format("path enumeration limited to {} nodes", kPathEnumMaxNodes));
  LinkLoads out;
  out.load.assign(topo.link_count(), 0.0);
  std::vector<LinkId> path;
  const auto walk = [&](auto& self, NodeId v, NodeId q, double amount) -> void {
    if (v == q) {
      for (LinkId e : path) out.load[e] += amount;
      return;
    }
    const double here = dists.dist(q, v);
    if (!std::isfinite(here)) {
      out.unrouted += amount;
      return;
    }
    std::vector<std::pair<LinkId, double>> branches;
    if (policy != nullptr && topo.is_sdn(v) && !L.links(v, q).empty()) {
      const auto links = L.links(v, q);
      const auto frac = policy->fractions(v, q);
      for (std::size_t j = 0; j < links.size(); ++j) branches.emplace_back(links[j], frac[j]);
    } else {
      std::vector<LinkId> hops;
      for (LinkId e : topo.out_links(v)) {
        const auto& l = topo.link(e);
        const double there = dists.dist(q, l.dst);
        if (std::isfinite(there) &&
            std::abs(l.weight + there - here) <= 1e-9 * std::max(1.0, here))
          hops.push_back(e);
      }
      for (LinkId e : hops) branches.emplace_back(e, 1.0 / static_cast<double>(hops.size()));
      if (hops.empty()) {
        out.unrouted += amount;
        return;
      }
    }
    for (const auto& [e, f] : branches) {
      if (f == 0.0) continue;
      path.push_back(e);
      self(self, topo.link(e).dst, q, amount * f);
      path.pop_back();
    }
  };
  for (NodeId s = 0; s < topo.node_count(); ++s)
    for (NodeId q = 0; q < topo.node_count(); ++q)
      if (s != q && tm(s, q) > 0.0) walk(walk, s, q, tm(s, q));
  return out;
}

}  // namespace cmrl::oracle
