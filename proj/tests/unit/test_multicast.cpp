#include <doctest.h>

#include <algorithm>
#include <set>

#include "macdmr/multicast.hpp"
#include "macdmr/topogen.hpp"
#include "macdmr/trainer.hpp"
#include "support.hpp"

using namespace macdmr;

namespace {

bool has_kind(const std::vector<Violation>& v, ViolationKind k) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.kind == k; });
}

// Valid: src 0 reaches 5 through N2 and 8 through N3.
std::vector<Edge> good_edges() {
  return {{0, 1}, {1, 2}, {2, 4}, {4, 5}, {0, 3}, {3, 7}, {7, 8}};
}

MetricSnapshot chain_snapshot() {
  MetricSnapshot s(3);
  s.set(0, 1, {0.5, 0.2, 0.1, 0.0, 0.4});
  s.set(1, 2, {0.7, 0.3, 0.1, 0.0, 0.6});
  return s;
}

}  // namespace

TEST_SUITE("multicast") {
  TEST_CASE("group invariants") {
    CHECK_THROWS_AS(MulticastGroup(0, {}), std::invalid_argument);
    CHECK_THROWS_AS(MulticastGroup(0, {0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(MulticastGroup(0, {1, 1}), std::invalid_argument);
    MulticastGroup g(0, {3, 1});
    CHECK(g.dests() == std::vector<NodeId>{1, 3});
    g.set_online(3, false);
    CHECK(g.online_dests() == std::vector<NodeId>{1});
    CHECK(g.is_member(3));
    CHECK_FALSE(g.is_online(3));
  }

  TEST_CASE("path metrics aggregation") {
    MetricSnapshot s(2);
    s.set(0, 1, {0.8, 0.2, 0.1, 0.0, 0.5});
    const PathMetrics one = path_metrics({0, 1}, s);
    CHECK(one.bw == 0.8);
    CHECK(one.delay == 0.2);
    CHECK(one.loss == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(one.err == 0.0);
    CHECK(one.dist == 0.5);

    MetricSnapshot t(3);
    t.set(0, 1, {0.5, 0.2, 0.1, 0.0, 0.0});
    t.set(1, 2, {0.7, 0.3, 0.1, 0.0, 0.0});
    const PathMetrics two = path_metrics({0, 1, 2}, t);
    CHECK(std::abs(two.loss - 0.19) <= 1e-9);
    CHECK(std::abs(two.delay - 0.5) <= 1e-9);
    CHECK(two.bw == 0.5);

    const PathMetrics zero = path_metrics({2}, t);
    CHECK(zero.bw == 1.0);
    CHECK(zero.delay == 0.0);
    CHECK_THROWS_AS(path_metrics({2, 1}, t), MetricError);
  }

  TEST_CASE("path cost") {
    const CostWeights w;
    CHECK(path_cost(PathMetrics{1, 0, 0, 0, 0}, w) == 0.0);
    CHECK(std::abs(path_cost(PathMetrics{0, 1, 1, 1, 1}, w) - 1.3) <= 1e-9);
    CHECK(std::abs(path_cost(PathMetrics{0.5, 0.5, 0, 0, 0}, w) - 0.5) <= 1e-9);
  }

  TEST_CASE("path cost is monotone in every metric") {
    const CostWeights w;
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
      PathMetrics m{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
      const double c = path_cost(m, w);
      PathMetrics better = m;
      better.bw = std::min(1.0, m.bw + 0.1);
      CHECK(path_cost(better, w) <= c);
      better = m;
      better.delay *= 0.5;
      better.loss *= 0.5;
      CHECK(path_cost(better, w) <= c);
    }
  }

  TEST_CASE("loss aggregate lies between the max and the sum of its edges") {
    Rng rng(8);
    for (int i = 0; i < 100; ++i) {
      MetricSnapshot s(4);
      double mx = 0.0, sum = 0.0;
      for (int k = 0; k < 3; ++k) {
        const double l = rng.uniform(0.0, 0.3);
        s.set(k, k + 1, {0.5, 0.1, l, 0.0, 0.1});
        mx = std::max(mx, l);
        sum += l;
      }
      const double agg = path_metrics({0, 1, 2, 3}, s).loss;
      CHECK(agg >= mx - 1e-15);
      CHECK(agg <= sum + 1e-15);
    }
  }

  TEST_CASE("valid ring tree decomposes into its parts") {
    const Topology topo = testing::ring3();
    const auto& p = topo.partition;
    MulticastGroup g(0, {5, 8});
    const CrossDomainTree t = make_tree(0, good_edges(), p);
    CHECK(validate(t, g, topo.network, p).empty());
    CHECK(t.edges.size() == t.nodes().size() - 1);

    const Decomposition d = decompose(t, p);
    CHECK(d.inter.edges == std::vector<Edge>{{2, 4}, {3, 7}});
    REQUIRE(d.intra.size() == 3);
    CHECK(d.intra[0].domain == 1);
    CHECK(d.intra[0].root == 0);
    CHECK(d.intra[1].root == 4);
    CHECK(d.intra[1].edges == std::vector<Edge>{{4, 5}});
    CHECK(d.intra[2].root == 7);

    const CrossDomainTree back = compose(0, d.inter, d.intra, p);
    CHECK(back.edges == t.edges);

    const auto pn = interdomain_paths(t, g, p);
    CHECK(pn.at(5) == std::vector<DomainId>{1, 2});
    CHECK(pn.at(8) == std::vector<DomainId>{1, 3});

    const auto paths = extract_paths(t, g, topo.network.node_count());
    CHECK(paths.at(5).nodes == std::vector<NodeId>{0, 1, 2, 4, 5});
    CHECK(paths.at(8).nodes == std::vector<NodeId>{0, 3, 7, 8});
  }

  TEST_CASE("chain and star paths") {
    const Topology topo = testing::ring3();
    MulticastGroup chain(0, {2});
    const auto cp = extract_paths(make_tree(0, {{0, 1}, {1, 2}}, topo.partition), chain, 10);
    CHECK(cp.at(2).nodes == std::vector<NodeId>{0, 1, 2});
    MulticastGroup star(1, {0, 2});
    const auto sp = extract_paths(make_tree(1, {{0, 1}, {1, 2}}, topo.partition), star, 10);
    CHECK(sp.at(0).nodes == std::vector<NodeId>{1, 0});
    CHECK(sp.at(2).nodes == std::vector<NodeId>{1, 2});
    MulticastGroup local(0, {1});
    CHECK(interdomain_paths(make_tree(0, {{0, 1}}, topo.partition), local, topo.partition)
              .at(1) == std::vector<DomainId>{1});
  }

  TEST_CASE("domain loop violates the no-revisit rule") {
    const Topology topo = testing::ring3();
    MulticastGroup g(0, {3});
    const CrossDomainTree t = make_tree(
        0, {{0, 1}, {1, 2}, {2, 4}, {4, 5}, {5, 6}, {6, 9}, {8, 9}, {7, 8}, {3, 7}},
        topo.partition);
    const auto v = validate(t, g, topo.network, topo.partition);
    CHECK(has_kind(v, ViolationKind::kDomainRevisit));
    CHECK(has_kind(v, ViolationKind::kForest));
    CHECK_FALSE(has_kind(v, ViolationKind::kCycle));
    CHECK(interdomain_paths(t, g, topo.partition).at(3) == std::vector<DomainId>{1, 2, 3, 1});
  }

  TEST_CASE("same-domain destinations on different domain sequences") {
    const Topology topo = testing::ring3();
    MulticastGroup g(0, {5, 6});
    const CrossDomainTree t = make_tree(
        0, {{0, 1}, {1, 2}, {2, 4}, {4, 5}, {0, 3}, {3, 7}, {7, 8}, {8, 9}, {6, 9}},
        topo.partition);
    const auto v = validate(t, g, topo.network, topo.partition);
    CHECK(has_kind(v, ViolationKind::kInconsistentPn));
    CHECK(has_kind(v, ViolationKind::kForest));
    CHECK_FALSE(has_kind(v, ViolationKind::kDomainRevisit));
  }

  TEST_CASE("cycle, disconnection, coverage and unknown edges") {
    const Topology topo = testing::ring3();
    MulticastGroup g(0, {5});
    auto cyc = validate(
        make_tree(0, {{0, 1}, {1, 2}, {2, 4}, {4, 5}, {5, 6}, {6, 9}, {8, 9}, {7, 8}, {3, 7}, {0, 3}},
                  topo.partition),
        g, topo.network, topo.partition);
    CHECK(has_kind(cyc, ViolationKind::kCycle));

    auto cut = validate(make_tree(0, {{0, 1}, {4, 5}}, topo.partition), g, topo.network,
                        topo.partition);
    CHECK(has_kind(cut, ViolationKind::kDisconnected));
    CHECK(has_kind(cut, ViolationKind::kUncovered));

    auto unknown = validate(make_tree(0, {{0, 5}}, topo.partition), g, topo.network,
                            topo.partition);
    CHECK(has_kind(unknown, ViolationKind::kUnknownEdge));

    // Offline destinations need no coverage.
    g.set_online(5, false);
    MulticastGroup h(0, {5, 1});
    h.set_online(5, false);
    CHECK(validate(make_tree(0, {{0, 1}}, topo.partition), h, topo.network, topo.partition)
              .empty());
  }

  TEST_CASE("compose rejects dangling boundary nodes and intra edges leaving a domain") {
    const Topology topo = testing::ring3();
    const auto& p = topo.partition;
    InterdomainTree inter{{{2, 4}}};
    IntradomainTree d1{1, 0, {{0, 1}}};  // node 2 missing
    IntradomainTree d2{2, 4, {{4, 5}}};
    CHECK_THROWS_AS(compose(0, inter, {d1, d2}, p), TreeError);
    IntradomainTree bad{1, 0, {{0, 1}, {2, 4}}};
    CHECK_THROWS_AS(compose(0, InterdomainTree{}, {bad}, p), TreeError);
    IntradomainTree only{1, 0, {{0, 1}, {1, 2}}};
    CHECK(compose(0, InterdomainTree{}, {only}, p).edges == only.edges);
  }

  TEST_CASE("end-to-end cost") {
    const Network net({{0, 0}, {1, 0}, {2, 0}}, {{0, 1}, {1, 2}});
    DomainPartition p(net, {1, 1, 1});
    const MetricSnapshot s = chain_snapshot();
    const NormalizedSnapshot ns(s, {});
    const CostWeights w;
    MulticastGroup one(0, {2});
    const CrossDomainTree t = make_tree(0, {{0, 1}, {1, 2}}, p);
    CHECK(tree_cost_endtoend(t, one, ns, w) ==
          doctest::Approx(path_cost(path_metrics({0, 1, 2}, s), w)));

    // Two disjoint single-edge paths from the middle node.
    MetricSnapshot s2 = s;
    s2.set(1, 0, {0.9, 0.1, 0.0, 0.0, 0.2});
    MulticastGroup both(1, {0, 2});
    const double sum = path_cost(path_metrics({1, 0}, s2), w) + path_cost(path_metrics({1, 2}, s2), w);
    CHECK(tree_cost_endtoend(make_tree(1, {{0, 1}, {1, 2}}, p), both, NormalizedSnapshot(s2, {}), w) ==
          doctest::Approx(sum));
  }

  TEST_CASE("decomposed cost matches an independent segment sum") {
    const Topology topo = testing::ring3();
    const auto& p = topo.partition;
    Rng rng(12);
    const NormalizedSnapshot ns = normalize(testing::random_snapshot(topo.network, rng));
    const CostWeights w;
    MulticastGroup g(0, {1, 5, 8});
    const CrossDomainTree t = make_tree(0, good_edges(), p);
    const DecomposedCost dc = tree_cost_decomposed(t, g, p, ns, w);

    auto pc = [&](std::vector<NodeId> nodes) {
      return path_cost(path_metrics(nodes, ns.values()), w);
    };
    // N1 targets: destination 1, exit nodes 2 and 3. N2: 5. N3: 8.
    const double c1 = pc({0, 1}) + pc({0, 1, 2}) + pc({0, 3});
    const double c2 = pc({4, 5});
    const double c3 = pc({7, 8});
    const double cint = path_cost(edges_metrics({{2, 4}}, ns.values()), w) +
                        path_cost(edges_metrics({{3, 7}}, ns.values()), w);
    REQUIRE(dc.c_intra.size() == 3);
    CHECK(dc.c_intra[0] == doctest::Approx(c1));
    CHECK(dc.c_intra[1] == doctest::Approx(c2));
    CHECK(dc.c_intra[2] == doctest::Approx(c3));
    CHECK(dc.c_int == doctest::Approx(cint));
    CHECK(dc.total == doctest::Approx(c1 + c2 + c3 + cint));

    MulticastGroup local(0, {2});
    const DecomposedCost one = tree_cost_decomposed(make_tree(0, {{0, 1}, {1, 2}}, p), local, p, ns, w);
    CHECK(one.c_int == 0.0);
    CHECK(one.total == doctest::Approx(one.c_intra.at(0)));
  }

  TEST_CASE("tree weight sums symmetrized single-edge costs") {
    const Topology topo = testing::ring3();
    Rng rng(13);
    const NormalizedSnapshot ns = normalize(testing::random_snapshot(topo.network, rng));
    const CostWeights w;
    double expect = 0.0;
    for (const Edge& e : good_edges()) {
      expect += 0.5 * (edge_cost(ns.get(e.u, e.v), w) + edge_cost(ns.get(e.v, e.u), w));
    }
    CHECK(tree_weight(good_edges(), ns, w) == doctest::Approx(expect));
  }

  TEST_CASE("tree json round trip") {
    const Topology topo = testing::ring3();
    MulticastGroup g(0, {5, 8});
    const CrossDomainTree t = make_tree(0, good_edges(), topo.partition);
    const CrossDomainTree u = tree_from_json(tree_to_json(t, g), topo.partition);
    CHECK(u.edges == t.edges);
    CHECK(u.inter == t.inter);
    CHECK(u.intra == t.intra);
    CHECK_THROWS_AS(tree_from_json("{\"src\":0}", topo.partition), TreeError);
  }

  TEST_CASE("compose after decompose is the identity on rollout trees") {
    TopoGenParams tp;
    tp.seed = 4;
    const GeneratedInstance inst = generate_random(tp);
    Hyperparams hp;
    hp.hidden = 8;
    Rng rng(21);
    const int n = inst.topology.network.node_count();
    int checked = 0;
    for (int k = 0; k < 40; ++k) {
      std::vector<NodeId> nodes(n);
      for (int i = 0; i < n; ++i) nodes[i] = i;
      rng.shuffle(nodes);
      const int dcount = 1 + rng.index(6);
      MulticastGroup g(nodes[0], std::vector<NodeId>(nodes.begin() + 1, nodes.begin() + 1 + dcount));
      MultiAgentSystem sys(inst.topology, g, hp);
      const SnapshotView view = make_view(inst.topology, testing::random_snapshot(inst.topology.network, rng), hp.weights);
      const EpisodeResult r = greedy_rollout(sys, view);
      REQUIRE(r.valid);
      const CrossDomainTree& t = *r.tree;
      const Decomposition d = decompose(t, inst.topology.partition);
      const CrossDomainTree back = compose(t.src, d.inter, d.intra, inst.topology.partition);
      CHECK(back.edges == t.edges);
      CHECK(t.edges.size() + 1 == t.nodes().size());
      for (const auto& [dest, pn] : interdomain_paths(t, g, inst.topology.partition)) {
        CHECK(std::set<DomainId>(pn.begin(), pn.end()).size() == pn.size());
      }
      const auto dc = tree_cost_decomposed(t, g, inst.topology.partition, view.norm, hp.weights);
      double parts = dc.c_int;
      for (double c : dc.c_intra) parts += c;
      CHECK(dc.total == doctest::Approx(parts));
      ++checked;
    }
    CHECK(checked == 40);
  }
}
