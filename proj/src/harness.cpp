#include "macdmr/harness.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "macdmr/baselines.hpp"

namespace macdmr {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Instance files

std::string instance_to_json(const Instance& inst) {
  json doc = json::parse(topology_to_json(inst.topology));
  doc["bw_max"] = inst.bw_max;
  doc["metrics"] = json::array();
  const int n = inst.topology.network.node_count();
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v : inst.topology.network.neighbors(u)) {
      const EdgeMetrics m = inst.base.get(u, v);
      doc["metrics"].push_back({u, v, m.bw, m.delay, m.loss, m.err, m.dist});
    }
  }
  return doc.dump(1);
}

Instance parse_instance(const std::string& text) {
  Instance inst;
  inst.topology = parse_topology(text);
  const json doc = json::parse(text);
  if (!doc.contains("metrics") || !doc["metrics"].is_array()) {
    throw TopologyError("instance: missing \"metrics\" array");
  }
  inst.bw_max = doc.value("bw_max", 40.0);
  const int n = inst.topology.network.node_count();
  inst.base = MetricSnapshot(n);
  for (const auto& row : doc["metrics"]) {
    if (!row.is_array() || row.size() != 7) {
      throw TopologyError("instance: metrics rows are [u,v,bw,delay,loss,err,dist]");
    }
    const NodeId u = row[0].get<int>();
    const NodeId v = row[1].get<int>();
    if (!inst.topology.network.has_edge(u, v)) {
      throw TopologyError("instance: metrics for non-edge (" + std::to_string(u) +
                          "," + std::to_string(v) + ")");
    }
    EdgeMetrics m;
    m.bw = row[2].get<double>();
    m.delay = row[3].get<double>();
    m.loss = row[4].get<double>();
    m.err = row[5].get<double>();
    m.dist = row[6].get<double>();
    inst.base.set(u, v, m);
  }
  const auto missing = inst.base.missing(inst.topology.network);
  if (!missing.empty()) {
    throw TopologyError("instance: no metrics for edge " +
                        std::to_string(missing.front().first) + "->" +
                        std::to_string(missing.front().second));
  }
  return inst;
}

Instance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TopologyError("cannot open instance file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_instance(ss.str());
}

void save_instance(const Instance& inst, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw TopologyError("cannot write " + path.string());
  out << instance_to_json(inst) << '\n';
}

Instance make_instance(const GeneratedInstance& g, double bw_max) {
  return Instance{g.topology, g.metrics, bw_max};
}

// ---------------------------------------------------------------------------
// Config

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  throw ConfigError(field + ": " + what);
}

const json* member(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double read_num(const json& obj, const char* key, const std::string& ctx, double def) {
  const json* v = member(obj, key);
  if (!v) return def;
  if (!v->is_number()) bad(ctx + "." + key, "number required");
  return v->get<double>();
}

long long read_int(const json& obj, const char* key, const std::string& ctx,
                   long long def) {
  const json* v = member(obj, key);
  if (!v) return def;
  if (!v->is_number_integer()) bad(ctx + "." + key, "integer required");
  return v->get<long long>();
}

bool read_bool(const json& obj, const char* key, const std::string& ctx, bool def) {
  const json* v = member(obj, key);
  if (!v) return def;
  if (!v->is_boolean()) bad(ctx + "." + key, "boolean required");
  return v->get<bool>();
}

Range read_range(const json& obj, const char* key, const std::string& ctx, Range def) {
  const json* v = member(obj, key);
  if (!v) return def;
  if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
    bad(ctx + "." + key, "[min, max] required");
  }
  Range r{(*v)[0].get<double>(), (*v)[1].get<double>()};
  if (r.min > r.max) bad(ctx + "." + key, "min exceeds max");
  return r;
}

void check_keys(const json& obj, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) bad(ctx.empty() ? k : ctx + "." + k, "unknown field");
  }
}

const json& object_at(const json& doc, const char* key, const std::string& ctx) {
  const json* v = member(doc, key);
  if (!v || !v->is_object()) bad(ctx.empty() ? key : ctx + "." + key, "object required");
  return *v;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text,
                              const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!doc.is_object()) bad("config", "object required");
  check_keys(doc, "", {"topology", "group", "hyperparams", "training", "snapshots",
                       "algorithms", "checkpoint", "output_dir"});
  ExperimentConfig cfg;

  const json& topo = object_at(doc, "topology", "");
  check_keys(topo, "topology", {"file", "generate"});
  if (member(topo, "file") && member(topo, "generate")) {
    bad("topology", "give either \"file\" or \"generate\"");
  }
  if (const json* f = member(topo, "file")) {
    if (!f->is_string()) bad("topology.file", "string required");
    std::filesystem::path p = f->get<std::string>();
    cfg.topology_file = p.is_absolute() ? p : base_dir / p;
  } else if (const json* gj = member(topo, "generate")) {
    if (!gj->is_object()) bad("topology.generate", "object required");
    const std::string ctx = "topology.generate";
    check_keys(*gj, ctx, {"n_domains", "nodes_per_domain", "intra_degree",
                          "inter_links_per_adjacent_pair", "bw_range", "delay_range",
                          "dist_range", "loss_range", "err_range", "bw_max", "seed",
                          "scale_loss_err", "max_attempts"});
    TopoGenParams& g = cfg.generator;
    g.n_domains = static_cast<int>(read_int(*gj, "n_domains", ctx, g.n_domains));
    g.nodes_per_domain =
        static_cast<int>(read_int(*gj, "nodes_per_domain", ctx, g.nodes_per_domain));
    g.intra_degree = read_num(*gj, "intra_degree", ctx, g.intra_degree);
    g.inter_links_per_adjacent_pair = static_cast<int>(read_int(
        *gj, "inter_links_per_adjacent_pair", ctx, g.inter_links_per_adjacent_pair));
    g.bw_range = read_range(*gj, "bw_range", ctx, g.bw_range);
    g.delay_range = read_range(*gj, "delay_range", ctx, g.delay_range);
    g.dist_range = read_range(*gj, "dist_range", ctx, g.dist_range);
    g.loss_range = read_range(*gj, "loss_range", ctx, g.loss_range);
    g.err_range = read_range(*gj, "err_range", ctx, g.err_range);
    g.bw_max = read_num(*gj, "bw_max", ctx, g.bw_max);
    g.seed = static_cast<std::uint64_t>(read_int(*gj, "seed", ctx, 1));
    g.scale_loss_err = read_bool(*gj, "scale_loss_err", ctx, g.scale_loss_err);
    g.max_attempts = static_cast<int>(read_int(*gj, "max_attempts", ctx, g.max_attempts));
    try {
      g.validate();
    } catch (const std::invalid_argument& e) {
      bad(ctx, e.what());
    }
  } else {
    bad("topology", "\"file\" or \"generate\" required");
  }

  const json& grp = object_at(doc, "group", "");
  check_keys(grp, "group", {"src", "dests", "one_based"});
  const bool one_based = read_bool(grp, "one_based", "group", false);
  const int shift = one_based ? 1 : 0;
  if (!member(grp, "src") || !grp["src"].is_number_integer()) {
    bad("group.src", "integer required");
  }
  cfg.src = grp["src"].get<int>() - shift;
  if (cfg.src < 0) bad("group.src", "node id out of range");
  const json* dj = member(grp, "dests");
  if (!dj || !dj->is_array() || dj->empty()) bad("group.dests", "non-empty array required");
  for (const auto& v : *dj) {
    if (!v.is_number_integer()) bad("group.dests", "integer entries required");
    const int id = v.get<int>() - shift;
    if (id < 0) bad("group.dests", "node id out of range");
    cfg.dests.push_back(id);
  }
  try {
    (void)cfg.group();
  } catch (const std::invalid_argument& e) {
    bad("group", e.what());
  }

  if (const json* hj = member(doc, "hyperparams")) {
    if (!hj->is_object()) bad("hyperparams", "object required");
    const std::string ctx = "hyperparams";
    check_keys(*hj, ctx, {"weights", "alpha_actor", "alpha_critic", "gamma", "batch_size",
                          "n_update", "r_loop", "r_hell", "lambda_part", "scale_end",
                          "t_max", "e_off", "hidden", "seed"});
    Hyperparams& hp = cfg.hp;
    if (const json* w = member(*hj, "weights")) {
      if (!w->is_array() || w->size() != kMetricCount) {
        bad("hyperparams.weights", "array of 5 numbers required");
      }
      for (int i = 0; i < kMetricCount; ++i) {
        if (!(*w)[i].is_number()) bad("hyperparams.weights", "array of 5 numbers required");
        hp.weights.beta[i] = (*w)[i].get<double>();
      }
    }
    hp.alpha_actor = read_num(*hj, "alpha_actor", ctx, hp.alpha_actor);
    hp.alpha_critic = read_num(*hj, "alpha_critic", ctx, hp.alpha_critic);
    hp.gamma = read_num(*hj, "gamma", ctx, hp.gamma);
    hp.batch_size = static_cast<int>(read_int(*hj, "batch_size", ctx, hp.batch_size));
    hp.n_update = static_cast<int>(read_int(*hj, "n_update", ctx, hp.n_update));
    hp.r_loop = read_num(*hj, "r_loop", ctx, hp.r_loop);
    hp.r_hell = read_num(*hj, "r_hell", ctx, hp.r_hell);
    hp.lambda_part = read_num(*hj, "lambda_part", ctx, hp.lambda_part);
    hp.scale_end = read_bool(*hj, "scale_end", ctx, hp.scale_end);
    hp.t_max = static_cast<int>(read_int(*hj, "t_max", ctx, hp.t_max));
    hp.e_off = static_cast<int>(read_int(*hj, "e_off", ctx, hp.e_off));
    hp.hidden = static_cast<int>(read_int(*hj, "hidden", ctx, hp.hidden));
    hp.seed = static_cast<std::uint64_t>(read_int(*hj, "seed", ctx, 1));
  }

  if (const json* tj = member(doc, "training")) {
    if (!tj->is_object()) bad("training", "object required");
    const std::string ctx = "training";
    check_keys(*tj, ctx, {"episodes", "hybrid", "pretrain_batches", "offline_period",
                          "offline_batches", "parallel", "jitter"});
    TrainOptions& t = cfg.training;
    t.episodes = static_cast<int>(read_int(*tj, "episodes", ctx, t.episodes));
    t.hybrid = read_bool(*tj, "hybrid", ctx, t.hybrid);
    t.pretrain_batches =
        static_cast<int>(read_int(*tj, "pretrain_batches", ctx, t.pretrain_batches));
    t.offline_period = static_cast<int>(read_int(*tj, "offline_period", ctx, t.offline_period));
    t.offline_batches =
        static_cast<int>(read_int(*tj, "offline_batches", ctx, t.offline_batches));
    t.parallel = read_bool(*tj, "parallel", ctx, t.parallel);
    cfg.train_jitter = read_num(*tj, "jitter", ctx, cfg.train_jitter);
    if (t.episodes < 0) bad("training.episodes", "must be >= 0");
    if (t.pretrain_batches < 0) bad("training.pretrain_batches", "must be >= 0");
    if (t.offline_period < 0) bad("training.offline_period", "must be >= 0");
    if (t.offline_batches < 0) bad("training.offline_batches", "must be >= 0");
    if (cfg.train_jitter < 0.0 || cfg.train_jitter >= 1.0) {
      bad("training.jitter", "must lie in [0,1)");
    }
  }
  cfg.hp.episodes = cfg.training.episodes;
  try {
    cfg.hp.validate();
  } catch (const std::invalid_argument& e) {
    bad("hyperparams", e.what());
  }

  if (const json* sj = member(doc, "snapshots")) {
    if (!sj->is_object()) bad("snapshots", "object required");
    check_keys(*sj, "snapshots", {"count", "seed", "jitter"});
    cfg.snapshots.count = static_cast<int>(read_int(*sj, "count", "snapshots", 100));
    cfg.snapshots.seed = static_cast<std::uint64_t>(read_int(*sj, "seed", "snapshots", 1));
    cfg.snapshots.jitter = read_num(*sj, "jitter", "snapshots", 0.3);
    if (cfg.snapshots.count < 1) bad("snapshots.count", "must be >= 1");
    if (cfg.snapshots.jitter < 0.0 || cfg.snapshots.jitter >= 1.0) {
      bad("snapshots.jitter", "must lie in [0,1)");
    }
  }

  if (const json* aj = member(doc, "algorithms")) {
    if (!aj->is_array() || aj->empty()) bad("algorithms", "non-empty array required");
    cfg.algorithms.clear();
    std::set<std::string> seen;
    for (const auto& a : *aj) {
      if (!a.is_string()) bad("algorithms", "string entries required");
      const std::string name = a.get<std::string>();
      if (name != "macdmr" && name != "kmb" && name != "sctf" && name != "exact") {
        bad("algorithms", "unknown algorithm '" + name + "'");
      }
      if (!seen.insert(name).second) bad("algorithms", "duplicate '" + name + "'");
      cfg.algorithms.push_back(name);
    }
  }
  if (const json* c = member(doc, "checkpoint")) {
    if (!c->is_string()) bad("checkpoint", "string required");
    std::filesystem::path p = c->get<std::string>();
    cfg.checkpoint = p.is_absolute() ? p : base_dir / p;
  }
  if (const json* o = member(doc, "output_dir")) {
    if (!o->is_string()) bad("output_dir", "string required");
    std::filesystem::path p = o->get<std::string>();
    cfg.output_dir = p.is_absolute() ? p : base_dir / p;
  } else {
    cfg.output_dir = base_dir / "out";
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

void apply_seed(ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.hp.seed = seed;
  cfg.snapshots.seed = seed;
}

Instance resolve_instance(const ExperimentConfig& cfg) {
  Instance inst = cfg.topology_file
                      ? load_instance(*cfg.topology_file)
                      : make_instance(generate_random(cfg.generator), cfg.generator.bw_max);
  try {
    cfg.group().check_nodes(inst.topology.network);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("group: ") + e.what());
  }
  return inst;
}

// ---------------------------------------------------------------------------
// Evaluation

TreeRow evaluate_tree(const CrossDomainTree& t, const MulticastGroup& g,
                      const Topology& topo, const SnapshotView& view,
                      const CostWeights& w) {
  TreeRow row;
  const auto violations = validate(t, g, topo.network, topo.partition);
  if (!violations.empty()) {
    row.failure = std::string(violation_name(violations.front().kind)) + ": " +
                  violations.front().detail;
    return row;
  }
  const auto paths = extract_paths(t, g, topo.network.node_count());
  for (const auto& [d, path] : paths) {
    const PathMetrics m = path_metrics(path.nodes, view.raw);
    row.bw += m.bw;
    row.delay += m.delay;
    row.loss += m.loss;
    row.err += m.err;
    row.dist += m.dist;
  }
  const double k = static_cast<double>(paths.size());
  row.bw /= k;
  row.delay /= k;
  row.loss /= k;
  row.err /= k;
  row.dist /= k;
  row.len = static_cast<int>(t.edges.size());
  row.cost = tree_weight(t.edges, view.norm, w);
  row.valid = true;
  return row;
}

std::vector<AlgorithmSummary> summarize(const std::vector<TreeRow>& rows,
                                        const std::vector<std::string>& algorithms) {
  std::vector<AlgorithmSummary> out;
  for (const std::string& a : algorithms) {
    AlgorithmSummary s;
    s.algorithm = a;
    for (const TreeRow& r : rows) {
      if (r.algorithm != a) continue;
      ++s.rows;
      if (!r.valid) continue;
      ++s.valid;
      s.bw += r.bw;
      s.delay += r.delay;
      s.loss += r.loss;
      s.err += r.err;
      s.len += r.len;
      s.dist += r.dist;
      s.cost += r.cost;
    }
    if (s.valid > 0) {
      const double k = s.valid;
      s.bw /= k;
      s.delay /= k;
      s.loss /= k;
      s.err /= k;
      s.len /= k;
      s.dist /= k;
      s.cost /= k;
    }
    out.push_back(s);
  }
  return out;
}

std::string report_csv(const Report& r) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "snapshot_id,algorithm,bw_mbps,delay_ms,loss,err,len,dist_m,cost,valid\n";
  for (const TreeRow& row : r.rows) {
    os << row.snapshot_id << ',' << row.algorithm << ',';
    if (row.valid) {
      os << row.bw << ',' << row.delay << ',' << row.loss << ',' << row.err << ','
         << row.len << ',' << row.dist << ',' << row.cost << ",1\n";
    } else {
      os << ",,,,,,,0\n";
    }
  }
  return os.str();
}

std::string summary_json(const Report& r) {
  json doc = json::object();
  doc["algorithms"] = json::array();
  for (const AlgorithmSummary& s : r.summary) {
    json a;
    a["algorithm"] = s.algorithm;
    a["rows"] = s.rows;
    a["valid"] = s.valid;
    if (s.valid > 0) {
      a["bw_mbps"] = s.bw;
      a["delay_ms"] = s.delay;
      a["loss"] = s.loss;
      a["err"] = s.err;
      a["len"] = s.len;
      a["dist_m"] = s.dist;
      a["cost"] = s.cost;
    }
    doc["algorithms"].push_back(a);
  }
  return doc.dump(2);
}

CrossDomainTree baseline_tree(const std::string& algorithm, const Topology& topo,
                              const MulticastGroup& g, const SnapshotView& view) {
  const WeightedGraph wg = symmetric_graph(topo.network, view.weights);
  std::vector<NodeId> dests = g.online_dests();
  SteinerTree st;
  if (algorithm == "kmb" || algorithm == "exact") {
    std::vector<NodeId> terms = dests;
    terms.push_back(g.src());
    std::sort(terms.begin(), terms.end());
    st = algorithm == "kmb" ? kmb(wg, terms) : exact_steiner(wg, terms);
  } else if (algorithm == "sctf") {
    st = sctf(wg, g.src(), dests);
  } else {
    throw std::invalid_argument("unknown baseline '" + algorithm + "'");
  }
  return make_tree(g.src(), st.edges, topo.partition);
}

SnapshotView evaluation_view(const Instance& inst, const ExperimentConfig& cfg, int i) {
  TrafficModel tm(inst.topology.network, inst.base, inst.bw_max, cfg.snapshots.jitter,
                  cfg.snapshots.seed);
  return make_view(inst.topology, tm.snapshot(kEvalSnapshotBase + i), cfg.hp.weights);
}

TrafficModel training_traffic(const Instance& inst, const ExperimentConfig& cfg) {
  return TrafficModel(inst.topology.network, inst.base, inst.bw_max, cfg.train_jitter,
                      cfg.hp.seed);
}

Report compare(const ExperimentConfig& cfg, const Instance& inst,
               MultiAgentSystem* trained) {
  const Topology& topo = inst.topology;
  const MulticastGroup g = cfg.group();
  const bool with_agents =
      std::find(cfg.algorithms.begin(), cfg.algorithms.end(), "macdmr") != cfg.algorithms.end();
  if (with_agents && !trained) {
    throw std::invalid_argument("compare: macdmr requested without trained agents");
  }
  const int count = cfg.snapshots.count;
  const int algs = static_cast<int>(cfg.algorithms.size());
  std::vector<SnapshotView> views(count);
  for (int i = 0; i < count; ++i) views[i] = evaluation_view(inst, cfg, i);

  std::vector<TreeRow> rows(static_cast<std::size_t>(count) * algs);
  auto fill = [&](int i, int a, const std::function<CrossDomainTree()>& build) {
    TreeRow& row = rows[static_cast<std::size_t>(i) * algs + a];
    try {
      row = evaluate_tree(build(), g, topo, views[i], cfg.hp.weights);
    } catch (const std::exception& e) {
      row = TreeRow{};
      row.failure = e.what();
    }
    row.snapshot_id = kEvalSnapshotBase + i;
    row.algorithm = cfg.algorithms[a];
  };

  // The agents cache activations, so their rollouts stay on one thread.
  for (int a = 0; a < algs; ++a) {
    if (cfg.algorithms[a] != "macdmr") continue;
    for (int i = 0; i < count; ++i) {
      fill(i, a, [&]() -> CrossDomainTree {
        EpisodeResult r = greedy_rollout(*trained, views[i]);
        if (!r.tree) throw TreeError(r.failure);
        return *r.tree;
      });
    }
  }
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) {
    for (int a = 0; a < algs; ++a) {
      const std::string& name = cfg.algorithms[a];
      if (name == "macdmr") continue;
      fill(i, a, [&] { return baseline_tree(name, topo, g, views[i]); });
    }
  }
  Report rep;
  rep.rows = std::move(rows);
  rep.summary = summarize(rep.rows, cfg.algorithms);
  return rep;
}

TrainResult run_training(const ExperimentConfig& cfg, const Instance& inst,
                         MultiAgentSystem& sys, bool verbose) {
  const TrafficModel tm = training_traffic(inst, cfg);
  EpisodeCallback cb;
  if (verbose) {
    cb = [&](const EpisodeRecord& r) {
      const int every = std::max(1, cfg.training.episodes / 20);
      if ((r.episode + 1) % every == 0) {
        std::fprintf(stderr, "episode %d reward %.4f steps %d valid %d\n", r.episode + 1,
                     r.total_reward, r.steps, r.valid ? 1 : 0);
      }
    };
  }
  TrainResult res = train(sys, tm, cfg.training, cb);
  std::filesystem::create_directories(cfg.output_dir);
  {
    std::ofstream os(cfg.output_dir / "learning_curve.csv");
    os << learning_curve_csv(res);
  }
  {
    std::ofstream os(cfg.output_dir / "agent_curves.csv");
    os << agent_curves_csv(res, sys);
  }
  save_checkpoint(sys, cfg.output_dir / "checkpoint.bin");
  return res;
}

}  // namespace macdmr
