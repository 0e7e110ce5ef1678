#include <doctest.h>

#include <sstream>

#include "macdmr/harness.hpp"
#include "support.hpp"

using namespace macdmr;

namespace {

const char* kBaseConfig = R"({
  "topology": {"generate": {"n_domains": 2, "nodes_per_domain": 5, "seed": 2}},
  "group": {"src": 0, "dests": [3, 6]}
})";

std::string with(const std::string& extra) {
  std::string s = kBaseConfig;
  s.insert(s.rfind('}'), "," + extra);
  return s;
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("config defaults and one-based ids") {
    const ExperimentConfig cfg = parse_config(kBaseConfig, "/base");
    CHECK(cfg.src == 0);
    CHECK(cfg.dests == std::vector<NodeId>{3, 6});
    CHECK(cfg.hp.hidden == 256);
    CHECK(cfg.algorithms.size() == 4);
    CHECK(cfg.output_dir == std::filesystem::path("/base/out"));
    const ExperimentConfig one = parse_config(R"({
      "topology": {"file": "t.json"},
      "group": {"src": 1, "dests": [4, 7], "one_based": true}})", "/base");
    CHECK(one.src == 0);
    CHECK(one.dests == std::vector<NodeId>{3, 6});
    CHECK(one.topology_file == std::filesystem::path("/base/t.json"));
  }

  TEST_CASE("config errors name the field") {
    CHECK(config_error("[1]").rfind("config", 0) == 0);
    CHECK(config_error("{").rfind("config", 0) == 0);
    CHECK(config_error(R"({"group": {"src": 0, "dests": [1]}})").rfind("topology", 0) == 0);
    CHECK(config_error(with(R"("bogus": 1)")).rfind("bogus", 0) == 0);
    CHECK(config_error(with(R"("hyperparams": {"gamma": "x"})")).rfind("hyperparams.gamma", 0) == 0);
    CHECK(config_error(with(R"("hyperparams": {"gamma": 2.0})")).rfind("hyperparams", 0) == 0);
    CHECK(config_error(with(R"("hyperparams": {"weights": [1, 2]})")).rfind("hyperparams.weights", 0) == 0);
    CHECK(config_error(with(R"("training": {"episodes": -3})")).rfind("training.episodes", 0) == 0);
    CHECK(config_error(with(R"("training": {"episodes": 1.5})")).rfind("training.episodes", 0) == 0);
    CHECK(config_error(with(R"("snapshots": {"count": 0})")).rfind("snapshots.count", 0) == 0);
    CHECK(config_error(with(R"("algorithms": ["kmb", "kmb"])")).rfind("algorithms", 0) == 0);
    CHECK(config_error(with(R"("algorithms": ["dijkstra"])")).rfind("algorithms", 0) == 0);
    CHECK(config_error(R"({"topology": {"file": "a"}, "group": {"src": 0, "dests": []}})")
              .rfind("group.dests", 0) == 0);
    CHECK(config_error(R"({"topology": {"file": "a"}, "group": {"src": 0, "dests": [0]}})")
              .rfind("group", 0) == 0);
    CHECK(config_error(R"({"topology": {"generate": {"n_domains": 0}}, "group": {"src": 0, "dests": [1]}})")
              .rfind("topology.generate", 0) == 0);
  }

  TEST_CASE("seed override reaches agents, traffic and snapshots") {
    ExperimentConfig cfg = parse_config(kBaseConfig);
    apply_seed(cfg, 42);
    CHECK(cfg.hp.seed == 42);
    CHECK(cfg.snapshots.seed != 1);
  }

  TEST_CASE("evaluate_tree averages per-path metrics") {
    const Topology topo = testing::ring3();
    MetricSnapshot raw = testing::uniform_snapshot(topo.network, {40, 2, 0.0, 0.0, 50});
    raw.set(0, 1, {10, 2, 0.0, 0.0, 50});
    raw.set(0, 3, {30, 4, 0.0, 0.0, 50});
    const CostWeights w;
    const SnapshotView view = make_view(topo, raw, w);
    MulticastGroup g(0, {1, 3});
    const CrossDomainTree t = make_tree(0, {{0, 1}, {0, 3}}, topo.partition);
    const TreeRow row = evaluate_tree(t, g, topo, view, w);
    CHECK(row.valid);
    CHECK(row.bw == doctest::Approx(20.0));
    CHECK(row.delay == doctest::Approx(3.0));
    CHECK(row.dist == doctest::Approx(50.0));
    CHECK(row.len == 2);
    CHECK(row.cost == doctest::Approx(tree_weight(t.edges, view.norm, w)));

    MulticastGroup far(0, {5});
    const CrossDomainTree chain = make_tree(0, {{0, 1}, {1, 2}, {2, 4}, {4, 5}}, topo.partition);
    CHECK(evaluate_tree(chain, far, topo, view, w).len == 4);

    const CrossDomainTree broken = make_tree(0, {{0, 1}}, topo.partition);
    const TreeRow bad = evaluate_tree(broken, far, topo, view, w);
    CHECK_FALSE(bad.valid);
    CHECK(bad.bw == 0.0);
    CHECK_FALSE(bad.failure.empty());
  }

  TEST_CASE("summary means cover valid rows only") {
    std::vector<TreeRow> rows(3);
    rows[0].algorithm = rows[1].algorithm = "kmb";
    rows[2].algorithm = "sctf";
    rows[0].valid = rows[2].valid = true;
    rows[0].bw = 10;
    rows[0].cost = 2;
    rows[0].len = 3;
    rows[2].bw = 7;
    const auto s = summarize(rows, {"kmb", "sctf", "exact"});
    REQUIRE(s.size() == 3);
    CHECK(s[0].rows == 2);
    CHECK(s[0].valid == 1);
    CHECK(s[0].bw == 10.0);
    CHECK(s[0].len == 3.0);
    CHECK(s[1].bw == 7.0);
    CHECK(s[2].rows == 0);

    Report r{rows, s};
    std::istringstream csv(report_csv(r));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "snapshot_id,algorithm,bw_mbps,delay_ms,loss,err,len,dist_m,cost,valid");
    int n = 0;
    while (std::getline(csv, line)) ++n;
    CHECK(n == 3);
  }

  TEST_CASE("instance JSON round trip") {
    TopoGenParams p;
    p.n_domains = 2;
    p.nodes_per_domain = 5;
    p.seed = 3;
    const Instance inst = make_instance(generate_random(p), 40.0);
    const Instance back = parse_instance(instance_to_json(inst));
    CHECK(back.base == inst.base);
    CHECK(back.bw_max == inst.bw_max);
    CHECK(back.topology.network.edges() == inst.topology.network.edges());
    CHECK(back.topology.partition.assignment() == inst.topology.partition.assignment());
    CHECK(topology_to_json(back.topology) == topology_to_json(inst.topology));
  }

  TEST_CASE("compare on baselines: one row per snapshot and algorithm") {
    ExperimentConfig cfg = parse_config(with(R"("algorithms": ["kmb", "sctf", "exact"], "snapshots": {"count": 4})"));
    const Instance inst = resolve_instance(cfg);
    const Report r = compare(cfg, inst, nullptr);
    REQUIRE(r.rows.size() == 12);
    for (int i = 0; i < 4; ++i) {
      const TreeRow& kmb = r.rows[3 * i];
      const TreeRow& exact = r.rows[3 * i + 2];
      CHECK(kmb.algorithm == "kmb");
      CHECK(exact.algorithm == "exact");
      CHECK(kmb.snapshot_id == exact.snapshot_id);
      CHECK(exact.valid);
      CHECK(exact.cost <= kmb.cost + 1e-12);
    }
    cfg.algorithms = {"macdmr"};
    CHECK_THROWS(compare(cfg, inst, nullptr));
    ExperimentConfig one = cfg;
    one.algorithms = {"exact"};
    one.snapshots.count = 1;
    CHECK(compare(one, inst, nullptr).rows.size() == 1);
  }

  TEST_CASE("baseline trees are valid") {
    ExperimentConfig cfg = parse_config(kBaseConfig);
    const Instance inst = resolve_instance(cfg);
    const MulticastGroup g = cfg.group();
    const SnapshotView view = evaluation_view(inst, cfg, 0);
    for (const char* a : {"kmb", "sctf", "exact"}) {
      const CrossDomainTree t = baseline_tree(a, inst.topology, g, view);
      CHECK(is_valid(t, g, inst.topology.network, inst.topology.partition));
    }
    CHECK_THROWS(baseline_tree("nope", inst.topology, g, view));
  }
}
