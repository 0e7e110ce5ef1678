#include <doctest.h>

#include <algorithm>
#include <set>

#include "macdmr/baselines.hpp"
#include "macdmr/multicast.hpp"
#include "macdmr/topogen.hpp"
#include "support.hpp"

using namespace macdmr;

namespace {

// Floyd-Warshall over directed single-edge costs inside each domain.
double max_intra_path_cost(const Topology& t, const NormalizedSnapshot& s,
                           const CostWeights& w) {
  const int n = t.network.node_count();
  std::vector<double> d(static_cast<std::size_t>(n) * n, kInf);
  for (int i = 0; i < n; ++i) d[i * n + i] = 0.0;
  for (const Edge& e : t.network.edges()) {
    if (t.partition.is_inter(e)) continue;
    d[e.u * n + e.v] = edge_cost(s.get(e.u, e.v), w);
    d[e.v * n + e.u] = edge_cost(s.get(e.v, e.u), w);
  }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        d[i * n + j] = std::min(d[i * n + j], d[i * n + k] + d[k * n + j]);
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (t.partition.domain_of(i) == t.partition.domain_of(j)) {
        worst = std::max(worst, d[i * n + j]);
      }
  return worst;
}

}  // namespace

TEST_SUITE("topology") {
  TEST_CASE("smallest single-domain file is valid") {
    const Topology t = parse_topology(
        R"({"nodes":[{"id":0,"x":0,"y":0,"domain":1},{"id":1,"x":3,"y":4,"domain":1}],
            "edges":[[0,1]]})");
    CHECK(t.network.node_count() == 2);
    CHECK(t.partition.domain_count() == 1);
    CHECK(t.network.length(0, 1) == doctest::Approx(5.0));
    CHECK(t.partition.inter_edges().empty());
  }

  TEST_CASE("node without domain is rejected by name") {
    try {
      parse_topology(
          R"({"nodes":[{"id":0,"x":0,"y":0,"domain":1},{"id":1,"x":1,"y":0}],
              "edges":[[0,1]]})");
      FAIL("expected TopologyError");
    } catch (const TopologyError& e) {
      CHECK(std::string(e.what()).find("unassigned node 1") != std::string::npos);
    }
  }

  TEST_CASE("disconnected domain is rejected") {
    // Domain 1 = {0, 2} is only connected through node 1 of domain 2.
    CHECK_THROWS_AS(parse_topology(
                        R"({"nodes":[{"id":0,"x":0,"y":0,"domain":1},
                                     {"id":1,"x":1,"y":0,"domain":2},
                                     {"id":2,"x":2,"y":0,"domain":1}],
                            "edges":[[0,1],[1,2]]})"),
                    TopologyError);
  }

  TEST_CASE("json round trip keeps lengths and domains") {
    const Topology t = testing::ring3();
    const Topology u = parse_topology(topology_to_json(t));
    CHECK(u.network.edges() == t.network.edges());
    CHECK(u.network.lengths() == t.network.lengths());
    CHECK(u.partition.assignment() == t.partition.assignment());
  }

  TEST_CASE("experiment topology file loads with four domains") {
    const Topology t = load_topology(MACDMR_SOURCE_DIR "/data/fig14_topology.json");
    CHECK(t.network.node_count() == 28);
    CHECK(t.partition.domain_count() == 4);
  }

  TEST_CASE("partition completeness and boundary nodes") {
    const Topology t = testing::ring3();
    const auto& p = t.partition;
    int total = 0;
    std::set<NodeId> seen;
    for (DomainId d = 1; d <= p.domain_count(); ++d) {
      for (NodeId v : p.nodes_in(d)) {
        CHECK(seen.insert(v).second);
        CHECK(domain_of(p, v) == d);
        ++total;
      }
      for (NodeId b : p.boundary_nodes(d)) CHECK(domain_of(p, b) == d);
    }
    CHECK(total == t.network.node_count());
    for (NodeId v = 0; v < t.network.node_count(); ++v) {
      bool crosses = false;
      for (NodeId u : t.network.neighbors(v)) crosses |= p.domain_of(u) != p.domain_of(v);
      CHECK(p.is_boundary(v) == crosses);
    }
    CHECK(p.boundary_nodes(1) == std::vector<NodeId>{2, 3});
    CHECK_THROWS_AS(p.domain_of(42), TopologyError);
  }

  TEST_CASE("single-domain partition maps everything to domain 1") {
    Network net({{0, 0}, {1, 0}, {2, 0}}, {{0, 1}, {1, 2}});
    DomainPartition p(net, {1, 1, 1});
    for (NodeId v = 0; v < 3; ++v) CHECK(p.domain_of(v) == 1);
  }

  TEST_CASE("dests_in_domain partitions the destination set") {
    const Topology t = testing::ring3();
    MulticastGroup g(0, {1, 5, 6, 9});
    CHECK(dests_in_domain(t.partition, g, 2) == std::vector<NodeId>{5, 6});
    std::vector<NodeId> all;
    for (DomainId d = 1; d <= 3; ++d) {
      auto part = dests_in_domain(t.partition, g, d);
      all.insert(all.end(), part.begin(), part.end());
    }
    std::sort(all.begin(), all.end());
    CHECK(all == g.dests());
    MulticastGroup h(0, {1, 2});
    CHECK(dests_in_domain(t.partition, h, 3).empty());
  }

  TEST_CASE("generator respects ranges and is deterministic") {
    TopoGenParams params;
    params.seed = 11;
    const GeneratedInstance a = generate_random(params);
    const GeneratedInstance b = generate_random(params);
    CHECK(topology_to_json(a.topology) == topology_to_json(b.topology));
    CHECK(a.metrics == b.metrics);
    const auto& p = a.topology.partition;
    for (const Edge& e : a.topology.network.edges()) {
      if (p.is_inter(e)) continue;
      for (auto [i, j] : {std::pair{e.u, e.v}, std::pair{e.v, e.u}}) {
        const EdgeMetrics m = a.metrics.get(i, j);
        CHECK(m.bw >= 5.0);
        CHECK(m.bw <= 40.0);
        CHECK(m.delay >= 1.0);
        CHECK(m.delay <= 10.0);
        CHECK(m.dist >= 30.0);
        CHECK(m.dist <= 120.0);
      }
    }
    CHECK(a.topology.network.node_count() == 28);
  }

  TEST_CASE("generated instances pass the hypothesis check against an oracle") {
    CostWeights w;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      TopoGenParams params;
      params.seed = seed;
      const GeneratedInstance g = generate_random(params);
      const NormalizedSnapshot s = normalize(g.metrics);
      const Hypothesis2Report r =
          check_hypothesis2(g.topology.network, g.topology.partition, s, w);
      double min_inter = kInf;
      for (const Edge& e : g.topology.partition.inter_edges()) {
        min_inter = std::min({min_inter, edge_cost(s.get(e.u, e.v), w),
                              edge_cost(s.get(e.v, e.u), w)});
      }
      const double max_intra = max_intra_path_cost(g.topology, s, w);
      CHECK(r.pass);
      CHECK(min_inter > max_intra);
      CHECK(r.min_inter == doctest::Approx(min_inter).epsilon(1e-12));
      CHECK(r.max_intra == doctest::Approx(max_intra).epsilon(1e-12));
    }
  }

  TEST_CASE("zero-cost inter edge fails the hypothesis check") {
    TopoGenParams params;
    const GeneratedInstance g = generate_random(params);
    const NormalizedSnapshot s = normalize(g.metrics);
    MetricSnapshot v = s.values();
    const Edge e = g.topology.partition.inter_edges().front();
    EdgeMetrics perfect;
    perfect.bw = 1.0;
    v.set_both(e.u, e.v, perfect);
    const Hypothesis2Report r = check_hypothesis2(
        g.topology.network, g.topology.partition, NormalizedSnapshot(v, s.ranges()),
        CostWeights{});
    CHECK_FALSE(r.pass);
    CHECK(std::find(r.violating.begin(), r.violating.end(), e) != r.violating.end());
  }

  TEST_CASE("single-domain hypothesis check passes vacuously") {
    TopoGenParams params;
    params.n_domains = 1;
    params.nodes_per_domain = 6;
    const GeneratedInstance g = generate_random(params);
    CHECK(check_hypothesis2(g.topology.network, g.topology.partition,
                            normalize(g.metrics), CostWeights{})
              .pass);
  }

  TEST_CASE("infeasible generator parameters are rejected") {
    TopoGenParams params;
    params.intra_degree = 0.5;
    CHECK_THROWS_AS(generate_random(params), std::invalid_argument);
    params = TopoGenParams{};
    params.bw_range = {5.0, 80.0};
    CHECK_THROWS_AS(generate_random(params), std::invalid_argument);
  }
}
