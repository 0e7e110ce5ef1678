// Command-line front end: gen-topo, train, eval, compare, group, replay.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "macdmr/control_plane.hpp"
#include "macdmr/harness.hpp"
#include "macdmr/topogen.hpp"
#include "macdmr/traffic.hpp"

namespace fs = std::filesystem;
using namespace macdmr;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* sub, Common& c, bool need_config = true) {
  auto* opt = sub->add_option("--config", c.config, "experiment config (JSON)");
  if (need_config) opt->required();
  sub->add_option("--seed", c.seed, "override the experiment seed");
  sub->add_option("--out", c.out, "output path");
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = load_config(c.config);
  if (c.seed) apply_seed(cfg, *c.seed);
  if (!c.out.empty()) cfg.output_dir = c.out;
  return cfg;
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << text;
}

std::unique_ptr<MultiAgentSystem> agents_for(const ExperimentConfig& cfg,
                                             const Instance& inst, bool verbose) {
  auto sys = std::make_unique<MultiAgentSystem>(inst.topology, cfg.group(), cfg.hp);
  if (cfg.checkpoint) {
    load_checkpoint(*sys, *cfg.checkpoint);
  } else {
    run_training(cfg, inst, *sys, verbose);
  }
  return sys;
}

int cmd_gen_topo(const Common& c, const fs::path& out) {
  TopoGenParams params;
  if (!c.config.empty()) {
    const ExperimentConfig cfg = load_config(c.config);
    if (cfg.topology_file) throw ConfigError("topology: gen-topo needs a \"generate\" section");
    params = cfg.generator;
  }
  if (c.seed) params.seed = *c.seed;
  const GeneratedInstance g = generate_random(params);
  save_instance(make_instance(g, params.bw_max), out);
  std::printf("%s: %d nodes, %zu edges, %d domains, inter scale %g, %d attempt(s)\n",
              out.string().c_str(), g.topology.network.node_count(),
              g.topology.network.edges().size(), g.topology.partition.domain_count(),
              g.inter_scale, g.attempts);
  return 0;
}

int cmd_train(const Common& c, std::optional<int> episodes, bool quiet) {
  ExperimentConfig cfg = load(c);
  if (episodes) {
    if (*episodes < 0) throw ConfigError("--episodes: must be >= 0");
    cfg.training.episodes = *episodes;
  }
  const Instance inst = resolve_instance(cfg);
  MultiAgentSystem sys(inst.topology, cfg.group(), cfg.hp);
  const TrainResult r = run_training(cfg, inst, sys, !quiet);
  int valid = 0;
  for (const auto& e : r.curve) valid += e.valid ? 1 : 0;
  std::printf("trained %zu episodes (%d with a valid tree); outputs in %s\n",
              r.curve.size(), valid, cfg.output_dir.string().c_str());
  return 0;
}

int cmd_eval(const Common& c, const std::string& checkpoint, bool quiet) {
  ExperimentConfig cfg = load(c);
  if (!checkpoint.empty()) cfg.checkpoint = checkpoint;
  cfg.algorithms = {"macdmr"};
  const Instance inst = resolve_instance(cfg);
  auto sys = agents_for(cfg, inst, !quiet);
  const Report rep = compare(cfg, inst, sys.get());
  write_file(cfg.output_dir / "eval.csv", report_csv(rep));
  write_file(cfg.output_dir / "eval_summary.json", summary_json(rep));
  const AlgorithmSummary& s = rep.summary.front();
  std::printf("greedy rollouts: %d/%d valid, mean cost %.6f\n", s.valid, s.rows, s.cost);
  return 0;
}

int cmd_compare(const Common& c, bool quiet) {
  const ExperimentConfig cfg = load(c);
  const Instance inst = resolve_instance(cfg);
  std::unique_ptr<MultiAgentSystem> sys;
  if (std::find(cfg.algorithms.begin(), cfg.algorithms.end(), "macdmr") != cfg.algorithms.end()) {
    sys = agents_for(cfg, inst, !quiet);
  }
  const Report rep = compare(cfg, inst, sys.get());
  write_file(cfg.output_dir / "report.csv", report_csv(rep));
  write_file(cfg.output_dir / "summary.json", summary_json(rep));
  for (const auto& s : rep.summary) {
    std::printf("%-7s valid %d/%d bw %.3f delay %.3f loss %.5f len %.2f cost %.5f\n",
                s.algorithm.c_str(), s.valid, s.rows, s.bw, s.delay, s.loss, s.len, s.cost);
  }
  return 0;
}

// Builds the group's tree by successive joins, then applies random join and
// leave events.
int cmd_group(const Common& c, int events) {
  const ExperimentConfig cfg = load(c);
  const Instance inst = resolve_instance(cfg);
  const Topology& topo = inst.topology;
  const SnapshotView view = evaluation_view(inst, cfg, 0);
  const int group_id = 1;
  MulticastGroup g = cfg.group();
  for (NodeId d : g.dests()) g.set_online(d, false);
  CrossDomainTree tree = make_tree(g.src(), {}, topo.partition);
  std::ostringstream log;
  log << "event,node,op,changed_edges,tree_edges,valid,delivered_ok\n";
  int step = 0;
  auto record = [&](NodeId v, const char* op, const MgmResult& r) {
    const bool valid = is_valid(r.tree, g, topo.network, topo.partition);
    const auto ft = install_tree(r.tree, g, group_id, topo);
    auto delivered = simulate_delivery(ft, group_id, g.src());
    const auto online = g.online_dests();
    const bool ok = std::set<NodeId>(online.begin(), online.end()) == delivered;
    log << step++ << ',' << v << ',' << op << ',' << r.changed.size() << ','
        << r.tree.edges.size() << ',' << (valid ? 1 : 0) << ',' << (ok ? 1 : 0) << '\n';
    if (!valid || !ok) throw std::runtime_error("group state broken after event " + std::to_string(step - 1));
  };
  const std::vector<NodeId> initial = g.dests();
  for (NodeId d : initial) {
    MgmResult r = mgm_join(tree, g, d, topo, view.weights, group_id);
    record(d, "add", r);
    tree = std::move(r.tree);
  }
  Rng rng(mix_seed(cfg.hp.seed, 0x6E0));
  const int n = topo.network.node_count();
  for (int e = 0; e < events; ++e) {
    NodeId v = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(n)));
    if (v == g.src()) continue;
    const bool leave = g.is_member(v) && g.is_online(v);
    if (leave && g.online_dests().size() == 1) continue;
    MgmResult r = leave ? mgm_leave(tree, g, v, topo, group_id)
                        : mgm_join(tree, g, v, topo, view.weights, group_id);
    record(v, leave ? "leave" : "add", r);
    tree = std::move(r.tree);
  }
  write_file(cfg.output_dir / "group_events.csv", log.str());
  write_file(cfg.output_dir / "flow_tables.json",
             flow_tables_to_json(install_tree(tree, g, group_id, topo)) + "\n");
  write_file(cfg.output_dir / "tree.json", tree_to_json(tree, g) + "\n");
  std::printf("%d events, final tree %zu edges, %zu online destinations\n", step,
              tree.edges.size(), g.online_dests().size());
  return 0;
}

// Records a CCM trace for one snapshot (--record) or replays one (--trace)
// into the root store and writes the merged snapshot.
int cmd_replay(const Common& c, const std::string& trace, const std::string& record) {
  const ExperimentConfig cfg = load(c);
  const Instance inst = resolve_instance(cfg);
  const Topology& topo = inst.topology;
  MessageBus bus;
  if (!record.empty()) {
    TrafficModel tm(topo.network, inst.base, inst.bw_max, cfg.snapshots.jitter,
                    cfg.snapshots.seed);
    const CounterTrace counters = tm.counters(kEvalSnapshotBase);
    for (DomainId d = 0; d <= topo.partition.domain_count(); ++d) {
      bus.publish(topology_sync_message(topo, d, 1));
      bus.publish(metrics_sync_message(
          collect_domain_snapshot(topo, d, counters, inst.bw_max, 1.0), 1));
    }
    write_file(record, bus.to_jsonl());
  } else {
    if (trace.empty()) throw ConfigError("replay: --trace or --record required");
    std::ifstream in(trace);
    if (!in) throw ConfigError("--trace: cannot open " + trace);
    std::stringstream ss;
    ss << in.rdbuf();
    bus = MessageBus::from_jsonl(ss.str());
  }
  NliStore store(topo.network.node_count());
  const std::size_t accepted = bus.deliver(store);
  const MetricSnapshot snap = store.snapshot();
  write_file(cfg.output_dir / "nli_snapshot.csv", snapshot_to_csv(snap));
  const auto missing = snap.missing(topo.network);
  std::printf("%zu messages, %zu accepted, %zu directed edges merged, %zu missing\n",
              bus.log().size(), accepted, snap.entry_count(), missing.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent cross-domain multicast routing"};
  app.require_subcommand(1);

  Common gen, tr, ev, cmp, grp, rep;
  std::string gen_out;
  auto* s_gen = app.add_subcommand("gen-topo", "generate a topology instance");
  add_common(s_gen, gen, false);
  s_gen->get_option("--out")->required();

  std::optional<int> episodes;
  bool quiet = false;
  auto* s_train = app.add_subcommand("train", "train the agents");
  add_common(s_train, tr);
  s_train->add_option("--episodes", episodes, "override training.episodes");
  s_train->add_flag("--quiet", quiet, "no progress output");

  std::string checkpoint;
  auto* s_eval = app.add_subcommand("eval", "greedy rollouts on evaluation snapshots");
  add_common(s_eval, ev);
  s_eval->add_option("--checkpoint", checkpoint, "trained agents");
  s_eval->add_flag("--quiet", quiet, "no progress output");

  auto* s_cmp = app.add_subcommand("compare", "compare algorithms on evaluation snapshots");
  add_common(s_cmp, cmp);
  s_cmp->add_flag("--quiet", quiet, "no progress output");

  int events = 100;
  auto* s_grp = app.add_subcommand("group", "simulate join/leave events");
  add_common(s_grp, grp);
  s_grp->add_option("--events", events, "random events after the initial joins");

  std::string trace, record;
  auto* s_rep = app.add_subcommand("replay", "replay or record a controller message trace");
  add_common(s_rep, rep);
  s_rep->add_option("--trace", trace, "CCM JSONL trace to replay");
  s_rep->add_option("--record", record, "write a CCM trace for one snapshot");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*s_gen) return cmd_gen_topo(gen, gen.out);
    if (*s_train) return cmd_train(tr, episodes, quiet);
    if (*s_eval) return cmd_eval(ev, checkpoint, quiet);
    if (*s_cmp) return cmd_compare(cmp, quiet);
    if (*s_grp) return cmd_group(grp, events);
    if (*s_rep) return cmd_replay(rep, trace, record);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const TopologyError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
