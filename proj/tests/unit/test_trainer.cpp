#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "macdmr/baselines.hpp"
#include "macdmr/trainer.hpp"
#include "support.hpp"

using namespace macdmr;

namespace {

// D1 = {0,1}, D2 = {2,3}, path 0-1-2-3.
Topology path4() {
  Network net({{0, 0}, {50, 0}, {100, 0}, {150, 0}}, {{0, 1}, {1, 2}, {2, 3}});
  DomainPartition p(net, {1, 1, 2, 2});
  return Topology{std::move(net), std::move(p)};
}

Hyperparams small_hp() {
  Hyperparams hp;
  hp.hidden = 16;
  hp.batch_size = 8;
  hp.n_update = 2;
  hp.e_off = 5;
  return hp;
}

std::vector<double> all_params(const MultiAgentSystem& sys) {
  std::vector<double> out;
  for (int i = 0; i < sys.agent_count(); ++i) {
    const auto& p = sys.agent(i).params();
    out.insert(out.end(), p.actor.params().begin(), p.actor.params().end());
    out.insert(out.end(), p.critic.params().begin(), p.critic.params().end());
  }
  return out;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("macdmr_test_" + name);
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("one agent per domain plus the inter-domain agent") {
    const Topology topo = testing::ring3();
    MultiAgentSystem sys(topo, MulticastGroup(0, {5, 8}), small_hp());
    CHECK(sys.agent_count() == 4);
    CHECK(sys.agent(0).action_count() == 3);
    CHECK(sys.agent(1).action_count() == 4);
    CHECK(sys.agent(2).action_count() == 3);
    CHECK(sys.agent(0).name() == "inter");
    CHECK(sys.agent(3).name() == "intra-3");
  }

  TEST_CASE("zero episodes leaves the parameters untouched") {
    const Topology topo = testing::ring3();
    TrafficModel traffic(topo.network, testing::uniform_snapshot(topo.network, {20, 5, 0.01, 0.001, 60}));
    MultiAgentSystem sys(topo, MulticastGroup(0, {5, 8}), small_hp());
    const auto before = all_params(sys);
    TrainOptions opt;
    opt.episodes = 0;
    const TrainResult r = train(sys, traffic, opt);
    CHECK(r.curve.empty());
    CHECK(all_params(sys) == before);
    opt.episodes = -1;
    CHECK_THROWS_AS(train(sys, traffic, opt), std::invalid_argument);
  }

  TEST_CASE("learning curve has one row per episode") {
    const Topology topo = testing::ring3();
    Rng rng(2);
    TrafficModel traffic(topo.network, testing::random_snapshot(topo.network, rng));
    MultiAgentSystem sys(topo, MulticastGroup(0, {5, 8}), small_hp());
    TrainOptions opt;
    opt.episodes = 7;
    int calls = 0;
    const TrainResult r = train(sys, traffic, opt, [&](const EpisodeRecord&) { ++calls; });
    CHECK(calls == 7);
    CHECK(r.collection_episodes == 5);
    std::istringstream csv(learning_curve_csv(r));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "episode,agent_id,total_reward,steps,valid_tree,tree_cost");
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 7);
    for (const auto& rec : r.curve) {
      CHECK(rec.agents.size() == 4);
      CHECK(rec.steps > 0);
    }
  }

  TEST_CASE("training is deterministic for a seed") {
    const Topology topo = testing::ring3();
    Rng rng(3);
    TrafficModel traffic(topo.network, testing::random_snapshot(topo.network, rng));
    auto run = [&](bool hybrid) {
      MultiAgentSystem sys(topo, MulticastGroup(0, {5, 8}), small_hp());
      TrainOptions opt;
      opt.episodes = 6;
      opt.hybrid = hybrid;
      const TrainResult r = train(sys, traffic, opt);
      return std::make_pair(learning_curve_csv(r), all_params(sys));
    };
    CHECK(run(true) == run(true));
    CHECK(run(false) == run(false));
  }

  TEST_CASE("convergence episode") {
    CHECK(convergence_episode({}) == -1);
    // Tail 1: the first episode at or above 0.9.
    CHECK(convergence_episode({0, 0, 0, 0, 0, 0, 0, 0.95, 0, 1}) == 7);
    // Tail 2, so only windows of two count.
    std::vector<double> r(20, 1.0);
    CHECK(convergence_episode(r) == 1);
    r[0] = -5;
    CHECK(convergence_episode(r) == 2);
    // Negative final mean: threshold -1.1.
    CHECK(convergence_episode({-3, -3, -1, -1, -1, -1, -1, -1, -1, -1}, 1) == 2);
    CHECK(convergence_episode({-3, -3, -1, -1, -1, -1, -1, -1, -1, -1}, 2) == 3);
    // A window longer than the series is the whole series.
    CHECK(convergence_episode({1, 2}, 5) == 1);
  }

  TEST_CASE("checkpoint round trip and corruption") {
    const Topology topo = testing::ring3();
    Rng rng(4);
    TrafficModel traffic(topo.network, testing::random_snapshot(topo.network, rng));
    MultiAgentSystem a(topo, MulticastGroup(0, {5, 8}), small_hp());
    TrainOptions opt;
    opt.episodes = 3;
    train(a, traffic, opt);
    const auto path = temp_file("ck.bin");
    save_checkpoint(a, path);

    MultiAgentSystem b(topo, MulticastGroup(0, {5, 8}), small_hp());
    CHECK(all_params(b) != all_params(a));
    load_checkpoint(b, path);
    CHECK(all_params(b) == all_params(a));

    std::string bytes;
    {
      std::ifstream is(path, std::ios::binary);
      bytes.assign(std::istreambuf_iterator<char>(is), {});
    }
    const auto bad = temp_file("ck_bad.bin");
    auto write = [&](const std::string& s) {
      std::ofstream os(bad, std::ios::binary);
      os << s;
    };
    write(bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(load_checkpoint(b, bad), std::runtime_error);
    std::string magic = bytes;
    magic[0] = 'X';
    write(magic);
    CHECK_THROWS_AS(load_checkpoint(b, bad), std::runtime_error);

    Hyperparams wide = small_hp();
    wide.hidden = 17;
    MultiAgentSystem c(topo, MulticastGroup(0, {5, 8}), wide);
    CHECK_THROWS_AS(load_checkpoint(c, path), std::runtime_error);
    CHECK_THROWS_AS(load_checkpoint(b, temp_file("missing.bin")), std::runtime_error);
    std::filesystem::remove(path);
    std::filesystem::remove(bad);
  }

  TEST_CASE("zero step cap yields an invalid episode") {
    const Topology topo = testing::ring3();
    Hyperparams hp = small_hp();
    hp.t_max = 0;
    MultiAgentSystem sys(topo, MulticastGroup(0, {5, 8}), hp);
    const SnapshotView view = make_view(
        topo, testing::uniform_snapshot(topo.network, {20, 5, 0.01, 0.001, 60}), hp.weights);
    const EpisodeResult r = greedy_rollout(sys, view);
    CHECK_FALSE(r.valid);
    CHECK_FALSE(r.failure.empty());
  }

  TEST_CASE("greedy rollout is deterministic and leaves parameters alone") {
    const Topology topo = testing::ring3();
    Rng rng(5);
    const Hyperparams hp = small_hp();
    MultiAgentSystem sys(topo, MulticastGroup(0, {5, 8}), hp);
    const SnapshotView view = make_view(topo, testing::random_snapshot(topo.network, rng), hp.weights);
    const auto before = all_params(sys);
    const EpisodeResult a = greedy_rollout(sys, view);
    const EpisodeResult b = greedy_rollout(sys, view);
    CHECK(a.valid == b.valid);
    CHECK(a.steps == b.steps);
    if (a.valid) CHECK(a.tree->edges == b.tree->edges);
    CHECK(all_params(sys) == before);
    CHECK(sys.agent(0).buffer().size() == 0);
  }

  TEST_CASE("trained system on a two-domain path finds the only tree") {
    const Topology topo = path4();
    Rng rng(6);
    TrafficModel traffic(topo.network, testing::random_snapshot(topo.network, rng));
    MultiAgentSystem sys(topo, MulticastGroup(0, {3}), small_hp());
    TrainOptions opt;
    opt.episodes = 20;
    train(sys, traffic, opt);
    const SnapshotView view = make_view(topo, traffic.snapshot(kEvalSnapshotBase), sys.hyperparams().weights);
    const EpisodeResult r = greedy_rollout(sys, view);
    REQUIRE(r.valid);
    const WeightedGraph g = symmetric_graph(topo.network, view.weights);
    const SteinerTree opt_tree = exact_steiner(g, {0, 3});
    CHECK(r.tree->edges == opt_tree.edges);
    CHECK(r.tree_cost == doctest::Approx(tree_weight(opt_tree.edges, view.norm, sys.hyperparams().weights)));
  }

  TEST_CASE("parallel intra-domain agents match the serial run") {
    const Topology topo = testing::ring3();
    Rng rng(7);
    TrafficModel traffic(topo.network, testing::random_snapshot(topo.network, rng));
    auto run = [&](bool parallel) {
      MultiAgentSystem sys(topo, MulticastGroup(0, {5, 8}), small_hp());
      TrainOptions opt;
      opt.episodes = 4;
      opt.parallel = parallel;
      const TrainResult r = train(sys, traffic, opt);
      return std::make_pair(learning_curve_csv(r), all_params(sys));
    };
    CHECK(run(true) == run(false));
  }
}
