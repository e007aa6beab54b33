#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "cmrl/routing.hpp"
#include "cmrl/topology.hpp"
#include "cmrl/traffic.hpp"

namespace fixtures {

using namespace cmrl;

inline std::string data_path(const std::string& name) {
  return std::string(CMRL_DATA_DIR) + "/" + name;
}

// A=0 B=1 C=2 D=3; edges A-B, B-C, A-D, D-C; switch at A.
inline Topology square(double ad_cap = 10.0) {
  return Topology({NodeKind::Sdn, NodeKind::Legacy, NodeKind::Legacy, NodeKind::Legacy},
                  {{0, 1, 10.0}, {1, 2, 10.0}, {0, 3, ad_cap}, {3, 2, ad_cap}});
}

// A=0 B=1 C=2; edges A-B, B-C, A-C.
inline Topology triangle() {
  return Topology({NodeKind::Sdn, NodeKind::Legacy, NodeKind::Legacy},
                  {{0, 1, 10.0}, {1, 2, 10.0}, {0, 2, 10.0}});
}

inline TrafficMatrix single_demand(int n, NodeId s, NodeId q, double v) {
  TrafficMatrix tm(n);
  tm(s, q) = v;
  return tm;
}

inline std::vector<double> random_simplex(int d, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> v(d);
  double s = 0.0;
  for (double& x : v) s += x = e(rng);
  for (double& x : v) x /= s;
  return v;
}

struct Instance {
  Topology topo;
  TrafficMatrix tm;
  JointAction action;
};

// Connected random graph: a random spanning tree plus extra edges. Integer
// weights make ECMP ties common.
inline Instance random_instance(std::mt19937_64& rng, int max_nodes = 6, bool connected = true) {
  std::uniform_int_distribution<int> nd(2, max_nodes);
  const int n = nd(rng);
  std::vector<NodeKind> kinds(n);
  std::bernoulli_distribution sdn(0.5);
  for (auto& k : kinds) k = sdn(rng) ? NodeKind::Sdn : NodeKind::Legacy;
  std::vector<Edge> edges;
  std::vector<std::vector<bool>> has(n, std::vector<bool>(n, false));
  std::uniform_int_distribution<int> wd(1, 3);
  std::uniform_real_distribution<double> cap(1.0, 20.0);
  const auto add = [&](int u, int v) {
    if (u == v || has[u][v]) return;
    has[u][v] = has[v][u] = true;
    edges.push_back({u, v, cap(rng), static_cast<double>(wd(rng))});
  };
  for (int v = 1; v < n; ++v) {
    if (!connected && v == n - 1 && n > 2) break;
    add(v, std::uniform_int_distribution<int>(0, v - 1)(rng));
  }
  std::uniform_int_distribution<int> node(0, n - 1);
  const int extra = std::uniform_int_distribution<int>(0, n)(rng);
  for (int i = 0; i < extra; ++i) {
    const int u = node(rng), v = node(rng);
    if (!connected && (u == n - 1 || v == n - 1)) continue;
    add(u, v);
  }
  Instance inst{Topology(kinds, edges), TrafficMatrix(n), {}};
  std::uniform_real_distribution<double> dem(0.0, 5.0);
  std::bernoulli_distribution present(0.7);
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (u != v && present(rng)) inst.tm(u, v) = dem(rng);
  for (NodeId h : inst.topo.sdn_nodes()) {
    const int d = static_cast<int>(inst.topo.out_ports(h).size());
    inst.action.push_back({h, d > 0 ? random_simplex(d, rng) : std::vector<double>{}});
  }
  return inst;
}

inline DistanceTable bellman_ford(const Topology& topo) {
  const int n = topo.node_count();
  DistanceTable d(n);
  for (NodeId q = 0; q < n; ++q) {
    d.at(q, q) = 0.0;
    for (int it = 0; it < n; ++it)
      for (const auto& l : topo.links())
        if (l.up && d.dist(q, l.dst) + l.weight < d.dist(q, l.src))
          d.at(q, l.src) = d.dist(q, l.dst) + l.weight;
  }
  return d;
}

/// Largest per-destination conservation residual.
inline double conservation_residual(const Topology& topo, const DistanceTable& dists,
                                    const TrafficMatrix& tm, const LinkLoads& loads) {
  const int n = topo.node_count();
  double worst = 0.0;
  for (NodeId q = 0; q < n; ++q) {
    const auto& f = loads.per_dest[q];
    for (NodeId v = 0; v < n; ++v) {
      if (v == q || !dists.reachable(q, v)) continue;
      double in = 0.0, out = 0.0;
      for (const auto& l : topo.links()) {
        if (l.dst == v) in += f[l.id];
        if (l.src == v) out += f[l.id];
      }
      worst = std::max(worst, std::abs(in + tm(v, q) - out));
    }
    double into_q = 0.0, demanded = 0.0, lost = 0.0;
    for (const auto& l : topo.links())
      if (l.dst == q) into_q += f[l.id];
    for (NodeId u = 0; u < n; ++u) {
      if (u == q) continue;
      demanded += tm(u, q);
      if (!dists.reachable(q, u)) lost += tm(u, q);
    }
    worst = std::max(worst, std::abs(into_q - (demanded - lost)));
  }
  return worst;
}

}  // namespace fixtures
