#include <doctest.h>

#include <algorithm>

#include "macdmr/control_plane.hpp"
#include "macdmr/state.hpp"
#include "macdmr/traffic.hpp"
#include "support.hpp"

using namespace macdmr;

namespace {

std::string error_of(const std::string& line) {
  try {
    ccm_from_json(line);
  } catch (const CcmError& e) {
    return e.what();
  }
  return "";
}

std::vector<CcmMessage> all_messages(const Topology& topo, const CounterTrace& trace,
                                     std::uint64_t seq) {
  std::vector<CcmMessage> out;
  for (DomainId d = 0; d <= topo.partition.domain_count(); ++d) {
    out.push_back(topology_sync_message(topo, d, seq));
    out.push_back(metrics_sync_message(collect_domain_snapshot(topo, d, trace, 40.0, 1.0), seq));
  }
  return out;
}

const EdgeMetrics kFlat{20, 5, 0.01, 0.001, 60};

}  // namespace

TEST_SUITE("control_plane") {
  TEST_CASE("local controllers report their own edges") {
    const Topology topo = testing::ring3();
    const TrafficModel tm(topo.network, testing::uniform_snapshot(topo.network, kFlat));
    const CounterTrace trace = tm.counters(0);
    const DomainSnapshot d1 = collect_domain_snapshot(topo, 1, trace, 40.0, 2.5);
    CHECK(d1.entries.size() == 6);
    CHECK(d1.timestamp == 2.5);
    for (const auto& [uv, m] : d1.entries) {
      CHECK(topo.partition.domain_of(uv.first) == 1);
      CHECK(topo.partition.domain_of(uv.second) == 1);
    }
    const DomainSnapshot root = collect_domain_snapshot(topo, kRootDomain, trace, 40.0, 0.0);
    CHECK(root.entries.size() == 6);
    for (const auto& [uv, m] : root.entries) CHECK(topo.partition.is_inter(Edge(uv.first, uv.second)));
    CHECK_THROWS_AS(collect_domain_snapshot(topo, 2, CounterTrace{}, 40.0, 0.0), MetricError);
    CHECK_THROWS_AS(collect_domain_snapshot(topo, 4, trace, 40.0, 0.0), std::out_of_range);
  }

  TEST_CASE("an idle link reports the full bandwidth") {
    Network net({{0, 0}, {30, 40}}, {{0, 1}});
    const Topology topo{net, DomainPartition(net, {1, 1})};
    CounterTrace trace;
    for (auto key : {std::pair{0, 1}, std::pair{1, 0}}) {
      trace.ports[key] = {PortCounterSample{10, 10, 500, 500, 0, 0, 1.0},
                          PortCounterSample{10, 10, 500, 500, 0, 0, 2.0}};
    }
    trace.probes[{0, 1}] = DelayProbe{4.0, 4.0, 1.0, 1.0};
    const DomainSnapshot s = collect_domain_snapshot(topo, 1, trace, 40.0, 0.0);
    REQUIRE(s.entries.size() == 2);
    for (const auto& [uv, m] : s.entries) {
      CHECK(m.bw == 40.0);
      CHECK(m.dist == doctest::Approx(50.0));
    }
  }

  TEST_CASE("CCM messages round trip and reject bad fields") {
    const Topology topo = testing::ring3();
    const CcmMessage m = topology_sync_message(topo, 2, 7);
    CHECK(m.type == CcmType::kTopologySync);
    const std::string line = ccm_to_json(m);
    CHECK(line.find('\n') == std::string::npos);
    CHECK(ccm_from_json(line) == m);

    CHECK(error_of("{").rfind("message", 0) == 0);
    CHECK(error_of(R"({"msg_type":"x","domain":1,"seq":1,"payload":{}})").rfind("msg_type", 0) == 0);
    CHECK(error_of(R"({"msg_type":"group_update","domain":-1,"seq":1,"payload":{}})").rfind("domain", 0) == 0);
    CHECK(error_of(R"({"msg_type":"group_update","domain":1,"seq":-2,"payload":{}})").rfind("seq", 0) == 0);
    CHECK(error_of(R"({"msg_type":"group_update","domain":1,"seq":2})").rfind("payload", 0) == 0);
    CHECK(error_of(R"({"msg_type":"group_update","domain":1,"seq":2,"payload":{"group":1,"node":3,"op":"drop"}})")
              .rfind("payload", 0) == 0);
    CHECK(error_of(R"({"msg_type":"tree_install","domain":0,"seq":2,"payload":{"group":1,"src":0,"edges":[[1]]}})")
              .rfind("payload", 0) == 0);
    CHECK(error_of(R"({"msg_type":"group_update","domain":1,"seq":2,"payload":{"group":1,"node":3,"op":"add"}})") == "");
  }

  TEST_CASE("root store merges idempotently in any order") {
    const Topology topo = testing::ring3();
    const TrafficModel tm(topo.network, testing::uniform_snapshot(topo.network, kFlat));
    const CounterTrace trace = tm.counters(3);
    std::vector<CcmMessage> msgs = all_messages(topo, trace, 1);
    const NliStore once = sync_to_root(10, msgs);
    std::vector<CcmMessage> twice = msgs;
    twice.insert(twice.end(), msgs.begin(), msgs.end());
    CHECK(sync_to_root(10, twice) == once);
    std::vector<CcmMessage> shuffled = msgs;
    Rng rng(4);
    for (int k = 0; k < 5; ++k) {
      rng.shuffle(shuffled);
      CHECK(sync_to_root(10, shuffled) == once);
    }
    CHECK(once.edges() == topo.network.edges());
    CHECK(once.snapshot() == snapshot_from_trace(trace, topo.network, 40.0));

    NliStore store(10);
    const std::vector<CcmMessage> newer = all_messages(topo, tm.counters(4), 2);
    for (const auto& m : newer) CHECK(store.apply(m));
    for (const auto& m : msgs) CHECK_FALSE(store.apply(m));
    CHECK(store.last_seq(1, CcmType::kMetricsSync) == 2);
    CHECK(store.last_seq(1, CcmType::kGroupUpdate) == 0);
    CHECK(store.snapshot() == snapshot_from_trace(tm.counters(4), topo.network, 40.0));

    MessageBus bus;
    for (const auto& m : msgs) bus.publish(m);
    const MessageBus back = MessageBus::from_jsonl(bus.to_jsonl());
    CHECK(back.log() == bus.log());
    NliStore fresh(10);
    CHECK(back.deliver(fresh) == msgs.size());
    CHECK(fresh == once);
  }

  TEST_CASE("flow tables for a chain and a star") {
    const Topology topo = testing::ring3();
    const MulticastGroup g(0, {5});
    const CrossDomainTree chain = make_tree(0, {{0, 1}, {1, 2}, {2, 4}, {4, 5}}, topo.partition);
    FlowTables ft = install_tree(chain, g, 7, topo);
    CHECK(ft.size() == chain.nodes().size());
    CHECK_FALSE(ft.at(0)[0].in.has_value());
    CHECK(ft.at(0)[0].out == std::vector<NodeId>{1});
    CHECK(ft.at(4)[0].in == 2);
    CHECK(ft.at(5)[0].deliver);
    CHECK(ft.at(5)[0].out.empty());
    CHECK_FALSE(ft.at(2)[0].deliver);
    CHECK(simulate_delivery(ft, 7, 0) == std::set<NodeId>{5});
    CHECK(flow_tables_to_json(ft).find("\"deliver\":true") != std::string::npos);

    const MulticastGroup star_g(0, {1, 3});
    const CrossDomainTree star = make_tree(0, {{0, 1}, {0, 3}}, topo.partition);
    const FlowTables st = install_tree(star, star_g, 1, topo);
    CHECK(st.at(0)[0].out == std::vector<NodeId>{1, 3});
    CHECK(simulate_delivery(st, 1, 0) == std::set<NodeId>{1, 3});

    FlowTables broken = ft;
    broken.erase(4);
    CHECK_THROWS_AS(simulate_delivery(broken, 7, 0), TreeError);
    broken = ft;
    broken.at(4)[0].in = 1;
    CHECK_THROWS_AS(simulate_delivery(broken, 7, 0), TreeError);
    CHECK_THROWS_AS(install_tree(make_tree(0, {{0, 1}}, topo.partition), g, 7, topo), TreeError);
  }

  TEST_CASE("join and leave") {
    const Topology topo = testing::ring3();
    Rng rng(9);
    const SnapshotView view = make_view(topo, testing::random_snapshot(topo.network, rng), CostWeights{});
    const CrossDomainTree chain = make_tree(0, {{0, 1}, {1, 2}, {2, 4}, {4, 5}}, topo.partition);

    SUBCASE("adjacent node grafts one edge") {
      MulticastGroup g(0, {5});
      const MgmResult r = mgm_join(chain, g, 6, topo, view.weights, 1);
      CHECK(r.changed == std::vector<Edge>{{5, 6}});
      CHECK(g.is_online(6));
      CHECK(is_valid(r.tree, g, topo.network, topo.partition));
      CHECK(r.delta.added.size() == 2);   // new entry at 6, widened entry at 5
      CHECK(r.delta.removed.size() == 1);
    }
    SUBCASE("a tree node only changes its entry") {
      MulticastGroup g(0, {5});
      const MgmResult r = mgm_join(chain, g, 2, topo, view.weights, 1);
      CHECK(r.changed.empty());
      CHECK(r.tree.edges == chain.edges);
      REQUIRE(r.delta.added.size() == 1);
      CHECK(r.delta.added[0].first == 2);
      CHECK(r.delta.added[0].second.deliver);
    }
    SUBCASE("graft adds exactly the weight of the new path") {
      MulticastGroup g(0, {5});
      const MgmResult r = mgm_join(chain, g, 8, topo, view.weights, 1);
      CHECK(is_valid(r.tree, g, topo.network, topo.partition));
      CHECK(r.changed.size() == 3);
      double added = 0.0;
      for (const Edge& e : r.changed) added += view.weights.symmetric(e.u, e.v);
      // Both candidate grafts: 8-7-3-0 and 8-9-6-5.
      const double a = view.weights.symmetric(8, 7) + view.weights.symmetric(7, 3) + view.weights.symmetric(3, 0);
      const double b = view.weights.symmetric(8, 9) + view.weights.symmetric(9, 6) + view.weights.symmetric(6, 5);
      CHECK(added == doctest::Approx(std::min(a, b)));
    }
    SUBCASE("leave prunes up to the next member") {
      MulticastGroup g(0, {2, 5});
      const MgmResult r = mgm_leave(chain, g, 5, topo, 1);
      CHECK(r.changed == std::vector<Edge>{{2, 4}, {4, 5}});
      CHECK(r.tree.edges == std::vector<Edge>{{0, 1}, {1, 2}});
      CHECK_FALSE(g.is_online(5));
      CHECK_THROWS_AS(mgm_leave(r.tree, g, 5, topo, 1), MgmError);
    }
    SUBCASE("leaving a branch point keeps the tree") {
      MulticastGroup g(0, {2, 5});
      const MgmResult r = mgm_leave(chain, g, 2, topo, 1);
      CHECK(r.changed.empty());
      CHECK(r.tree.edges == chain.edges);
    }
    SUBCASE("join then leave restores the tree") {
      MulticastGroup g(0, {5});
      const MgmResult j = mgm_join(chain, g, 8, topo, view.weights, 1);
      const MgmResult l = mgm_leave(j.tree, g, 8, topo, 1);
      CHECK(l.tree.edges == chain.edges);
      CHECK(install_tree(l.tree, g, 1, topo) == install_tree(chain, MulticastGroup(0, {5}), 1, topo));
    }
    SUBCASE("errors") {
      MulticastGroup g(0, {5});
      CHECK_THROWS_AS(mgm_join(chain, g, 0, topo, view.weights, 1), MgmError);
      CHECK_THROWS_AS(mgm_join(chain, g, 5, topo, view.weights, 1), MgmError);
      CHECK_THROWS_AS(mgm_join(chain, g, 42, topo, view.weights, 1), MgmError);
      CHECK_THROWS_AS(mgm_leave(chain, g, 8, topo, 1), MgmError);
    }
  }

  TEST_CASE("group domains") {
    const Topology topo = testing::ring3();
    const GroupDomains gd = locate_group_domains(MulticastGroup(0, {5, 8, 9}), topo.partition);
    CHECK(gd.src_domain == 1);
    CHECK(gd.dests.size() == 2);
    CHECK(gd.dests.at(3) == std::vector<NodeId>{8, 9});
    CHECK_FALSE(gd.single_domain());
    CHECK(locate_group_domains(MulticastGroup(0, {1, 3}), topo.partition).single_domain());
  }
}
