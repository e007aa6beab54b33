#include <gtest/gtest.h>

#include <random>

#include "cmrl/experiment.hpp"
#include "cmrl/oracle.hpp"
#include "fixtures.hpp"

using namespace cmrl;
using namespace cmrl::oracle;

TEST(Lattice, SizeAndOrder) {
  EXPECT_EQ(lattice_size(20, 2), 21.0);
  EXPECT_EQ(lattice_size(20, 3), 231.0);
  EXPECT_EQ(lattice_size(4, 1), 1.0);
  const auto l = simplex_lattice(3, 4);
  ASSERT_EQ(l.size(), 15u);
  EXPECT_EQ(l.front(), (std::vector<double>{0.0, 0.0, 1.0}));
  EXPECT_EQ(l.back(), (std::vector<double>{1.0, 0.0, 0.0}));
  for (std::size_t i = 1; i < l.size(); ++i) EXPECT_LT(l[i - 1], l[i]);
  for (const auto& v : l) {
    double s = 0.0;
    for (double x : v) s += x;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Lattice, GridValidation) {
  EXPECT_EQ(GridSpec{0.05}.steps(), 20);
  EXPECT_EQ(GridSpec{1.0}.steps(), 1);
  EXPECT_THROW(GridSpec{0.3}.steps(), Error);
  EXPECT_THROW(GridSpec{0.0}.steps(), Error);
  EXPECT_THROW(GridSpec{1.5}.steps(), Error);
}

TEST(BruteForce, SquareOptimum) {
  const RoutingContext ctx(fixtures::square(5.0));
  const auto tm = fixtures::single_demand(4, 0, 2, 8.0);
  const auto r = brute_force_min_mlu(ctx.topo, ctx.dists, ctx.admissible, tm, GridSpec{0.05});
  EXPECT_NEAR(r.mlu, 0.56, 1e-12);
  ASSERT_EQ(r.action.size(), 1u);
  EXPECT_NEAR(r.action[0].ratios[0], 0.65, 1e-12);
  EXPECT_NEAR(r.action[0].ratios[1], 0.35, 1e-12);
  EXPECT_EQ(r.evaluated, 21.0);
  EXPECT_DOUBLE_EQ(utilization(ospf_flows(ctx.topo, ctx.dists, tm), ctx.topo).mlu, 0.8);
}

TEST(BruteForce, ZeroTrafficKeepsFirstAction) {
  const RoutingContext ctx(fixtures::square(5.0));
  const auto r =
      brute_force_min_mlu(ctx.topo, ctx.dists, ctx.admissible, TrafficMatrix(4), GridSpec{0.05});
  EXPECT_EQ(r.mlu, 0.0);
  EXPECT_EQ(r.action[0].ratios, (std::vector<double>{0.0, 1.0}));
}

TEST(BruteForce, GuardsLargeSearch) {
  const auto topo = load_topology_file(fixtures::data_path("abilene_like.topo"));
  const RoutingContext ctx(topo);
  TrafficMatrix tm(topo.node_count());
  EXPECT_THROW(brute_force_min_mlu(ctx.topo, ctx.dists, ctx.admissible, tm, GridSpec{0.01}),
               Error);
}

TEST(BruteForce, LowerBoundAndRefinement) {
  std::mt19937_64 rng(41);
  int checked = 0;
  for (int i = 0; i < 60 && checked < 25; ++i) {
    const auto inst = fixtures::random_instance(rng, 5);
    const RoutingContext ctx(inst.topo);
    double space = 1.0;
    for (NodeId h : ctx.topo.sdn_nodes())
      space *= lattice_size(10, static_cast<int>(ctx.topo.out_ports(h).size()));
    if (space > 2e4) continue;
    ++checked;
    const auto fine = brute_force_min_mlu(ctx.topo, ctx.dists, ctx.admissible, inst.tm, {0.1});
    const auto coarse = brute_force_min_mlu(ctx.topo, ctx.dists, ctx.admissible, inst.tm, {0.5});
    EXPECT_LE(fine.mlu, coarse.mlu + 1e-12);
    // Random lattice points never beat the optimum.
    std::uniform_int_distribution<int> pick(0, 10);
    for (int k = 0; k < 20; ++k) {
      JointAction u;
      for (NodeId h : ctx.topo.sdn_nodes()) {
        const int d = static_cast<int>(ctx.topo.out_ports(h).size());
        const auto lat = simplex_lattice(d, 10);
        std::uniform_int_distribution<std::size_t> at(0, lat.size() - 1);
        u.push_back({h, lat[at(rng)]});
      }
      if (u.empty()) break;
      const auto p = policy_from_actions(u, ctx.topo, ctx.admissible);
      const double mlu =
          utilization(flows_under_policy(ctx.topo, ctx.dists, ctx.admissible, inst.tm, p),
                      ctx.topo)
              .mlu;
      EXPECT_GE(mlu, fine.mlu - 1e-12);
    }
  }
  EXPECT_GE(checked, 10);
}

TEST(PathEnum, SquareSplit) {
  const RoutingContext ctx(fixtures::square());
  const auto tm = fixtures::single_demand(4, 0, 2, 8.0);
  const auto p = policy_from_actions({{0, {0.75, 0.25}}}, ctx.topo, ctx.admissible);
  const auto l = path_enum_flows(ctx.topo, ctx.dists, ctx.admissible, tm, &p);
  EXPECT_DOUBLE_EQ(l.load[0], 6.0);
  EXPECT_DOUBLE_EQ(l.load[2], 6.0);
  EXPECT_DOUBLE_EQ(l.load[4], 2.0);
  EXPECT_DOUBLE_EQ(l.load[6], 2.0);
}

TEST(PathEnum, SinglePathAndGuard) {
  const auto tri = fixtures::triangle();
  const auto d = shortest_distances(tri);
  const AdmissibleSets L = admissible_links(tri, d);
  const auto l = path_enum_flows(tri, d, L, fixtures::single_demand(3, 0, 2, 4.0), nullptr);
  EXPECT_EQ(l.load, (std::vector<double>{0, 0, 0, 0, 4, 0}));
  const auto topo = load_topology_file(fixtures::data_path("abilene_like.topo"));
  const RoutingContext big(topo);
  EXPECT_THROW(path_enum_flows(big.topo, big.dists, big.admissible, TrafficMatrix(topo.node_count()),
                               nullptr),
               Error);
}
