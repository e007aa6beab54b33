#include <gtest/gtest.h>

#include <random>

#include "cmrl/oracle.hpp"
#include "cmrl/routing.hpp"
#include "fixtures.hpp"

using namespace cmrl;

namespace {

// Switch 0 with three out-ports (links 0, 2, 4 to nodes 1, 2, 3).
struct Star {
  Topology topo{{NodeKind::Sdn, NodeKind::Legacy, NodeKind::Legacy, NodeKind::Legacy},
                {{0, 1, 10.0}, {0, 2, 10.0}, {0, 3, 10.0}}};
  AdmissibleSets L{4};
};

std::vector<double> fractions(const RoutingPolicy& p, NodeId h, NodeId q) {
  const auto f = p.fractions(h, q);
  return {f.begin(), f.end()};
}

}  // namespace

TEST(Policy, RenormalizesOverAdmissible) {
  Star s;
  s.L.mutable_links(0, 1) = {0, 4};
  const auto p = policy_from_actions({{0, {0.5, 0.3, 0.2}}}, s.topo, s.L);
  const auto f = fractions(p, 0, 1);
  ASSERT_EQ(f.size(), 2u);
  EXPECT_NEAR(f[0], 0.5 / 0.7, 1e-15);
  EXPECT_NEAR(f[1], 0.2 / 0.7, 1e-15);
}

TEST(Policy, SingleAdmissibleLink) {
  Star s;
  s.L.mutable_links(0, 1) = {2};
  EXPECT_EQ(fractions(policy_from_actions({{0, {0.5, 0.3, 0.2}}}, s.topo, s.L), 0, 1),
            std::vector<double>{1.0});
}

TEST(Policy, ZeroMassFallsBackToUniform) {
  Star s;
  s.L.mutable_links(0, 1) = {2, 4};
  EXPECT_EQ(fractions(policy_from_actions({{0, {1.0, 0.0, 0.0}}}, s.topo, s.L), 0, 1),
            (std::vector<double>{0.5, 0.5}));
}

TEST(Policy, RejectsMismatch) {
  Star s;
  EXPECT_THROW(policy_from_actions({{1, {1.0, 0.0, 0.0}}}, s.topo, s.L), Error);
  EXPECT_THROW(policy_from_actions({{0, {1.0, 0.0}}}, s.topo, s.L), Error);
  EXPECT_THROW(policy_from_actions({}, s.topo, s.L), Error);
  EXPECT_THROW(policy_from_actions({{0, {1.0, -0.1, 0.1}}}, s.topo, s.L), Error);
}

TEST(Ospf, Examples) {
  const auto tri = fixtures::triangle();
  const auto lt = ospf_flows(tri, shortest_distances(tri), fixtures::single_demand(3, 0, 2, 4.0));
  EXPECT_EQ(lt.load, (std::vector<double>{0, 0, 0, 0, 4, 0}));

  const auto sq = fixtures::square();
  const auto ls = ospf_flows(sq, shortest_distances(sq), fixtures::single_demand(4, 0, 2, 8.0));
  EXPECT_EQ(ls.load, (std::vector<double>{4, 0, 4, 0, 4, 0, 4, 0}));

  const Topology cut({NodeKind::Legacy, NodeKind::Legacy, NodeKind::Legacy}, {{0, 1, 1.0}});
  const auto lc = ospf_flows(cut, shortest_distances(cut), fixtures::single_demand(3, 0, 2, 5.0));
  EXPECT_EQ(lc.unrouted, 5.0);
  EXPECT_EQ(lc.load, (std::vector<double>{0, 0}));
}

TEST(HybridFlows, SquareExample) {
  const RoutingContext ctx(fixtures::square());
  const auto p = policy_from_actions({{0, {0.75, 0.25}}}, ctx.topo, ctx.admissible);
  const auto loads = flows_under_policy(ctx.topo, ctx.dists, ctx.admissible,
                                        fixtures::single_demand(4, 0, 2, 8.0), p);
  EXPECT_EQ(loads.load, (std::vector<double>{6, 0, 6, 0, 2, 0, 2, 0}));
  const auto st = utilization(loads, ctx.topo);
  EXPECT_DOUBLE_EQ(st.mlu, 0.6);
}

TEST(HybridFlows, ZeroTm) {
  const RoutingContext ctx(fixtures::square());
  const auto p = policy_from_actions({{0, {0.3, 0.7}}}, ctx.topo, ctx.admissible);
  const auto loads = flows_under_policy(ctx.topo, ctx.dists, ctx.admissible, TrafficMatrix(4), p);
  for (double x : loads.load) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(utilization(loads, ctx.topo).mlu, 0.0);
}

TEST(HybridFlows, EcmpSharesReproduceOspf) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 200; ++i) {
    const auto inst = fixtures::random_instance(rng);
    const RoutingContext ctx(inst.topo);
    RoutingPolicy p(ctx.topo.node_count());
    for (NodeId h : ctx.topo.sdn_nodes())
      for (NodeId q = 0; q < ctx.topo.node_count(); ++q) {
        const auto L = ctx.admissible.links(h, q);
        if (L.empty()) continue;
        auto& f = p.mutable_fractions(h, q);
        const auto hops = ecmp_next_hops(ctx.topo, ctx.dists, h, q);
        for (LinkId e : L) {
          const bool on = std::find(hops.begin(), hops.end(), e) != hops.end();
          f.push_back(on ? 1.0 / static_cast<double>(hops.size()) : 0.0);
        }
      }
    const auto a = flows_under_policy(ctx.topo, ctx.dists, ctx.admissible, inst.tm, p);
    const auto b = ospf_flows(ctx.topo, ctx.dists, inst.tm);
    EXPECT_EQ(a.load, b.load);
    EXPECT_EQ(a.unrouted, b.unrouted);
  }
}

TEST(HybridFlows, ConservationNonNegativityAndPathOracle) {
  std::mt19937_64 rng(29);
  for (int i = 0; i < 200; ++i) {
    const auto inst = fixtures::random_instance(rng, 6, i % 4 != 0);
    const RoutingContext ctx(inst.topo);
    const auto p = policy_from_actions(inst.action, ctx.topo, ctx.admissible);
    const auto loads = flows_under_policy(ctx.topo, ctx.dists, ctx.admissible, inst.tm, p, true);
    for (double x : loads.load) EXPECT_GE(x, 0.0);
    EXPECT_LE(fixtures::conservation_residual(ctx.topo, ctx.dists, inst.tm, loads), 1e-9);
    for (int e = 0; e < ctx.topo.link_count(); ++e) {
      double s = 0.0;
      for (const auto& pd : loads.per_dest) s += pd[e];
      EXPECT_NEAR(s, loads.load[e], 1e-9);
    }
    const auto ref = oracle::path_enum_flows(ctx.topo, ctx.dists, ctx.admissible, inst.tm, &p);
    for (int e = 0; e < ctx.topo.link_count(); ++e) EXPECT_NEAR(loads.load[e], ref.load[e], 1e-9);
    EXPECT_NEAR(loads.unrouted, ref.unrouted, 1e-9);
  }
}

TEST(HybridFlows, ScaleEquivariance) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 100; ++i) {
    const auto inst = fixtures::random_instance(rng);
    const RoutingContext ctx(inst.topo);
    const auto p = policy_from_actions(inst.action, ctx.topo, ctx.admissible);
    const double c = 3.5;
    const auto a = flows_under_policy(ctx.topo, ctx.dists, ctx.admissible, inst.tm, p);
    const auto b = flows_under_policy(ctx.topo, ctx.dists, ctx.admissible, inst.tm.scaled(c), p);
    for (int e = 0; e < ctx.topo.link_count(); ++e)
      EXPECT_NEAR(b.load[e], c * a.load[e], 1e-9 * std::max(1.0, b.load[e]));
    EXPECT_NEAR(utilization(b, ctx.topo).mlu, c * utilization(a, ctx.topo).mlu, 1e-9);
  }
}

TEST(Utilization, Examples) {
  const auto t = load_topology("TOPO v1\nnode 0 legacy\nnode 1 legacy\nedge 0 1 10\n");
  LinkLoads l;
  l.load = {5.0, 0.0};
  const auto s = utilization(l, t);
  EXPECT_EQ(s.util[0], 0.5);
  EXPECT_EQ(s.mlu, 0.5);
  l.load = {0.0, 0.0};
  EXPECT_EQ(utilization(l, t).mlu, 0.0);
  l.load = {25.0, 0.0};
  EXPECT_EQ(utilization(l, t).mlu, 2.5);  // over capacity is kept
  l.load = {1.0};
  EXPECT_THROW(utilization(l, t), Error);
}

TEST(Observe, SquareExample) {
  const RoutingContext ctx(fixtures::square());
  const auto p = policy_from_actions({{0, {0.75, 0.25}}}, ctx.topo, ctx.admissible);
  const auto st = utilization(flows_under_policy(ctx.topo, ctx.dists, ctx.admissible,
                                                 fixtures::single_demand(4, 0, 2, 8.0), p),
                              ctx.topo);
  const auto o = observe(st, ctx.topo, 0);
  ASSERT_EQ(o.size(), 4u);
  EXPECT_DOUBLE_EQ(o[0], 0.6);
  EXPECT_DOUBLE_EQ(o[1], 0.2);
  EXPECT_EQ(o[2], 0.0);
  EXPECT_EQ(o[3], 0.0);
  EXPECT_EQ(observe(st, ctx.topo, 0, ObservationScope::OutOnly).size(), 2u);
  EXPECT_THROW(observe(st, ctx.topo, 1), Error);
}

TEST(Observe, ZeroState) {
  const auto sq = fixtures::square();
  UtilizationState st;
  st.util.assign(sq.link_count(), 0.0);
  for (double x : observe(st, sq, 0)) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(observation_width(sq, 0), 4);
}

TEST(LoadsCsv, Format) {
  const auto tri = fixtures::triangle();
  const auto csv =
      loads_csv(ospf_flows(tri, shortest_distances(tri), fixtures::single_demand(3, 0, 2, 4.0)), tri);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "link_id,src,dst,load,capacity,utilization");
  EXPECT_NE(csv.find("4,0,2,4,10,0.40000000000000002\n"), std::string::npos);
  EXPECT_NE(csv.find("# mlu=0.40000000000000002\n"), std::string::npos);
}
