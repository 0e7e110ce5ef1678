#include "macdmr/control_plane.hpp"

#include <algorithm>
#include <queue>
#include <sstream>
#include <tuple>

#include <json.hpp>

namespace macdmr {

using nlohmann::json;

const char* ccm_type_name(CcmType t) {
  switch (t) {
    case CcmType::kTopologySync:
      return "topology_sync";
    case CcmType::kMetricsSync:
      return "metrics_sync";
    case CcmType::kTreeInstall:
      return "tree_install";
    case CcmType::kGroupUpdate:
      return "group_update";
  }
  return "?";
}

CcmType parse_ccm_type(const std::string& s) {
  for (CcmType t : {CcmType::kTopologySync, CcmType::kMetricsSync,
                    CcmType::kTreeInstall, CcmType::kGroupUpdate}) {
    if (s == ccm_type_name(t)) return t;
  }
  throw CcmError("msg_type: unknown value '" + s + "'");
}

namespace {

void need(bool cond, const std::string& what) {
  if (!cond) throw CcmError(what);
}

void check_int(const json& j, const char* key, const std::string& ctx) {
  need(j.contains(key) && j[key].is_number_integer(), ctx + "." + key + ": integer required");
}

void check_num(const json& j, const char* key, const std::string& ctx) {
  need(j.contains(key) && j[key].is_number(), ctx + "." + key + ": number required");
}

void check_pairs(const json& j, const char* key, std::size_t arity,
                 const std::string& ctx) {
  need(j.contains(key) && j[key].is_array(), ctx + "." + key + ": array required");
  for (const auto& e : j[key]) {
    need(e.is_array() && e.size() == arity,
         ctx + "." + key + ": entries must have " + std::to_string(arity) + " elements");
    for (std::size_t i = 0; i < arity; ++i) {
      need(i < 2 ? e[i].is_number_integer() : e[i].is_number(),
           ctx + "." + key + ": non-numeric entry");
    }
  }
}

void validate_json_payload(CcmType type, const json& p) {
  const std::string ctx = "payload";
  need(p.is_object(), "payload: object required");
  switch (type) {
    case CcmType::kTopologySync:
      need(p.contains("nodes") && p["nodes"].is_array(), "payload.nodes: array required");
      for (const auto& v : p["nodes"]) {
        need(v.is_number_integer(), "payload.nodes: integer entries required");
      }
      check_pairs(p, "edges", 3, ctx);
      break;
    case CcmType::kMetricsSync:
      check_num(p, "timestamp", ctx);
      need(p.contains("edges") && p["edges"].is_array(), "payload.edges: array required");
      for (const auto& e : p["edges"]) {
        need(e.is_object(), "payload.edges: objects required");
        check_int(e, "u", "payload.edges[]");
        check_int(e, "v", "payload.edges[]");
        for (const char* k : {"bw", "delay", "loss", "err", "dist"}) {
          check_num(e, k, "payload.edges[]");
        }
      }
      break;
    case CcmType::kTreeInstall:
      check_int(p, "group", ctx);
      check_int(p, "src", ctx);
      check_pairs(p, "edges", 2, ctx);
      break;
    case CcmType::kGroupUpdate:
      check_int(p, "group", ctx);
      check_int(p, "node", ctx);
      need(p.contains("op") && p["op"].is_string() &&
               (p["op"] == "add" || p["op"] == "leave"),
           "payload.op: \"add\" or \"leave\" required");
      break;
  }
}

}  // namespace

void validate_payload(CcmType type, const std::string& payload) {
  json p;
  try {
    p = json::parse(payload);
  } catch (const json::parse_error& e) {
    throw CcmError(std::string("payload: ") + e.what());
  }
  validate_json_payload(type, p);
}

std::string ccm_to_json(const CcmMessage& m) {
  json j;
  j["msg_type"] = ccm_type_name(m.type);
  j["domain"] = m.domain;
  j["seq"] = m.seq;
  j["payload"] = json::parse(m.payload);
  return j.dump();
}

CcmMessage ccm_from_json(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw CcmError(std::string("message: ") + e.what());
  }
  need(j.is_object(), "message: object required");
  need(j.contains("msg_type") && j["msg_type"].is_string(), "msg_type: string required");
  need(j.contains("domain") && j["domain"].is_number_integer() && j["domain"].get<int>() >= 0,
       "domain: non-negative integer required");
  need(j.contains("seq") && j["seq"].is_number_unsigned(), "seq: unsigned integer required");
  need(j.contains("payload"), "payload: missing");
  CcmMessage m;
  m.type = parse_ccm_type(j["msg_type"].get<std::string>());
  m.domain = j["domain"].get<int>();
  m.seq = j["seq"].get<std::uint64_t>();
  validate_json_payload(m.type, j["payload"]);
  m.payload = j["payload"].dump();
  return m;
}

DomainSnapshot collect_domain_snapshot(const Topology& topo, DomainId domain,
                                       const CounterTrace& trace, double bw_max,
                                       double timestamp) {
  const auto& p = topo.partition;
  if (domain < 0 || domain > p.domain_count()) {
    throw std::out_of_range("domain " + std::to_string(domain));
  }
  std::vector<Edge> edges;
  for (const Edge& e : topo.network.edges()) {
    const bool inter = p.is_inter(e);
    if (domain == kRootDomain ? inter : (!inter && p.domain_of(e.u) == domain)) {
      edges.push_back(e);
    }
  }
  std::string missing;
  auto has = [&](NodeId a, NodeId b) {
    auto it = trace.ports.find({a, b});
    return it != trace.ports.end() && it->second.size() >= 2;
  };
  for (const Edge& e : edges) {
    const bool probe = trace.probes.count({e.u, e.v}) > 0;
    for (auto [a, b] : {std::pair{e.u, e.v}, std::pair{e.v, e.u}}) {
      if (!has(a, b) || !has(b, a) || !probe) {
        missing += " " + std::to_string(a) + "->" + std::to_string(b);
      }
    }
  }
  if (!missing.empty()) throw MetricError("missing edge samples:" + missing);
  DomainSnapshot out;
  out.domain = domain;
  out.timestamp = timestamp;
  for (const Edge& e : edges) {
    for (auto [a, b] : {std::pair{e.u, e.v}, std::pair{e.v, e.u}}) {
      out.entries.push_back({{a, b}, metrics_from_trace(trace, topo.network, a, b, bw_max)});
    }
  }
  return out;
}

CcmMessage topology_sync_message(const Topology& topo, DomainId domain,
                                 std::uint64_t seq) {
  const auto& p = topo.partition;
  json payload;
  payload["nodes"] = json::array();
  payload["edges"] = json::array();
  if (domain != kRootDomain) {
    for (NodeId v : p.nodes_in(domain)) payload["nodes"].push_back(v);
  }
  const auto& edges = topo.network.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Edge& e = edges[i];
    const bool inter = p.is_inter(e);
    if (domain == kRootDomain ? inter : (!inter && p.domain_of(e.u) == domain)) {
      payload["edges"].push_back({e.u, e.v, topo.network.length(i)});
    }
  }
  return CcmMessage{CcmType::kTopologySync, domain, seq, payload.dump()};
}

CcmMessage metrics_sync_message(const DomainSnapshot& snap, std::uint64_t seq) {
  json payload;
  payload["timestamp"] = snap.timestamp;
  payload["edges"] = json::array();
  for (const auto& [key, m] : snap.entries) {
    payload["edges"].push_back({{"u", key.first},
                                {"v", key.second},
                                {"bw", m.bw},
                                {"delay", m.delay},
                                {"loss", m.loss},
                                {"err", m.err},
                                {"dist", m.dist}});
  }
  return CcmMessage{CcmType::kMetricsSync, snap.domain, seq, payload.dump()};
}

NliStore::NliStore(int node_count) : n_(node_count) {
  if (node_count < 0) throw std::invalid_argument("node count must be >= 0");
}

bool NliStore::apply(const CcmMessage& m) {
  validate_payload(m.type, m.payload);
  const auto key = std::pair{m.domain, static_cast<int>(m.type)};
  auto it = latest_.find(key);
  if (it != latest_.end() && m.seq <= it->second.seq) return false;
  latest_[key] = m;
  return true;
}

std::uint64_t NliStore::last_seq(DomainId d, CcmType t) const {
  auto it = latest_.find({d, static_cast<int>(t)});
  return it == latest_.end() ? 0 : it->second.seq;
}

std::optional<CcmMessage> NliStore::latest(DomainId d, CcmType t) const {
  auto it = latest_.find({d, static_cast<int>(t)});
  if (it == latest_.end()) return std::nullopt;
  return it->second;
}

MetricSnapshot NliStore::snapshot() const {
  MetricSnapshot snap(n_);
  for (const auto& [key, m] : latest_) {
    if (m.type != CcmType::kMetricsSync) continue;
    const json p = json::parse(m.payload);
    for (const auto& e : p["edges"]) {
      const NodeId u = e["u"].get<int>();
      const NodeId v = e["v"].get<int>();
      if (u < 0 || v < 0 || u >= n_ || v >= n_) {
        throw CcmError("payload.edges[]: node outside the network");
      }
      EdgeMetrics em;
      em.bw = e["bw"].get<double>();
      em.delay = e["delay"].get<double>();
      em.loss = e["loss"].get<double>();
      em.err = e["err"].get<double>();
      em.dist = e["dist"].get<double>();
      snap.set(u, v, em);
    }
  }
  return snap;
}

std::vector<Edge> NliStore::edges() const {
  std::set<Edge> out;
  for (const auto& [key, m] : latest_) {
    if (m.type != CcmType::kTopologySync) continue;
    const json p = json::parse(m.payload);
    for (const auto& e : p["edges"]) out.insert(Edge(e[0].get<int>(), e[1].get<int>()));
  }
  return {out.begin(), out.end()};
}

NliStore sync_to_root(int node_count, const std::vector<CcmMessage>& messages) {
  NliStore store(node_count);
  for (const auto& m : messages) store.apply(m);
  return store;
}

std::size_t MessageBus::deliver(NliStore& store) const {
  std::size_t n = 0;
  for (const auto& m : log_) n += store.apply(m) ? 1 : 0;
  return n;
}

std::string MessageBus::to_jsonl() const {
  std::string out;
  for (const auto& m : log_) out += ccm_to_json(m) + "\n";
  return out;
}

MessageBus MessageBus::from_jsonl(const std::string& text) {
  MessageBus bus;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      bus.publish(ccm_from_json(line));
    } catch (const CcmError& e) {
      throw CcmError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return bus;
}

// ---------------------------------------------------------------------------

FlowTables install_tree(const CrossDomainTree& t, const MulticastGroup& g,
                        int group_id, const Topology& topo) {
  const auto violations = validate(t, g, topo.network, topo.partition);
  if (!violations.empty()) {
    throw TreeError(std::string("cannot install an invalid tree: ") +
                    violation_name(violations.front().kind) + " " +
                    violations.front().detail);
  }
  const int n = topo.network.node_count();
  const std::vector<NodeId> parent = tree_parents(t, n);
  FlowTables ft;
  for (NodeId v : t.nodes()) {
    FlowEntry e;
    e.group = group_id;
    if (parent[v] >= 0) e.in = parent[v];
    e.deliver = g.is_online(v);
    ft[v].push_back(e);
  }
  for (NodeId v : t.nodes()) {
    if (parent[v] >= 0) ft[parent[v]].front().out.push_back(v);
  }
  for (auto& [v, entries] : ft) std::sort(entries.front().out.begin(), entries.front().out.end());
  return ft;
}

std::string flow_tables_to_json(const FlowTables& ft) {
  json j = json::object();
  for (const auto& [v, entries] : ft) {
    json arr = json::array();
    for (const FlowEntry& e : entries) {
      arr.push_back({{"group", e.group},
                     {"in", e.in ? json(*e.in) : json(nullptr)},
                     {"out", e.out},
                     {"deliver", e.deliver}});
    }
    j[std::to_string(v)] = arr;
  }
  return j.dump();
}

namespace {

const FlowEntry* find_entry(const FlowTables& ft, NodeId v, int group) {
  auto it = ft.find(v);
  if (it == ft.end()) return nullptr;
  for (const FlowEntry& e : it->second) {
    if (e.group == group) return &e;
  }
  return nullptr;
}

}  // namespace

std::set<NodeId> simulate_delivery(const FlowTables& ft, int group_id, NodeId src) {
  std::set<NodeId> delivered;
  std::set<NodeId> seen;
  // (node, arrived from)
  std::queue<std::pair<NodeId, NodeId>> q;
  q.push({src, -1});
  while (!q.empty()) {
    const auto [v, from] = q.front();
    q.pop();
    const FlowEntry* e = find_entry(ft, v, group_id);
    if (!e) throw TreeError("no flow entry at node " + std::to_string(v));
    if (!seen.insert(v).second) throw TreeError("packet revisits node " + std::to_string(v));
    const bool in_ok = from < 0 ? !e->in.has_value() : (e->in && *e->in == from);
    if (!in_ok) throw TreeError("in-port mismatch at node " + std::to_string(v));
    if (e->deliver) delivered.insert(v);
    for (NodeId w : e->out) q.push({w, v});
  }
  return delivered;
}

FlowDelta diff_flow_tables(const FlowTables& before, const FlowTables& after) {
  std::set<std::pair<NodeId, FlowEntry>> a, b;
  for (const auto& [v, es] : before) {
    for (const auto& e : es) a.insert({v, e});
  }
  for (const auto& [v, es] : after) {
    for (const auto& e : es) b.insert({v, e});
  }
  FlowDelta d;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(d.removed));
  std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(d.added));
  return d;
}

namespace {

// Flow tables of a tree that may carry no online destination at all (still
// one entry per node); used only for deltas.
FlowTables tables_for(const CrossDomainTree& t, const MulticastGroup& g,
                      int group_id, const Topology& topo) {
  return install_tree(t, g, group_id, topo);
}

}  // namespace

MgmResult mgm_join(const CrossDomainTree& t, MulticastGroup& g, NodeId v,
                   const Topology& topo, const EdgeWeightMap& w, int group_id) {
  const auto& net = topo.network;
  const auto& p = topo.partition;
  if (!net.contains(v)) throw MgmError("join: unknown node " + std::to_string(v));
  if (v == g.src() || (g.is_member(v) && g.is_online(v))) {
    throw MgmError("join: node " + std::to_string(v) + " is already an online member");
  }
  const FlowTables before = tables_for(t, g, group_id, topo);

  MulticastGroup next = g;
  if (next.is_member(v)) {
    next.set_online(v, true);
  } else {
    next.add_member(v);
  }

  MgmResult res;
  if (t.contains(v)) {
    res.tree = t;
  } else {
    const int m = p.domain_count();
    if (m > 30) throw MgmError("join: too many domains for the graft search");
    std::vector<char> tree_node(net.node_count(), 0);
    std::vector<char> tree_domain(m + 1, 0);
    for (NodeId x : t.nodes()) {
      tree_node[x] = 1;
      tree_domain[p.domain_of(x)] = 1;
    }
    // State: node plus the set of domains the path has left or is in.
    using State = std::pair<NodeId, std::uint32_t>;
    using Item = std::tuple<double, NodeId, std::uint32_t>;
    std::map<State, double> dist;
    std::map<State, State> prev;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    const std::uint32_t start_mask = 1u << p.domain_of(v);
    dist[{v, start_mask}] = 0.0;
    pq.push({0.0, v, start_mask});
    std::optional<State> goal;
    while (!pq.empty()) {
      const auto [d, x, mask] = pq.top();
      pq.pop();
      if (d > dist[{x, mask}]) continue;
      if (tree_node[x]) {
        goal = State{x, mask};
        break;
      }
      const DomainId dx = p.domain_of(x);
      for (NodeId y : net.neighbors(x)) {
        const DomainId dy = p.domain_of(y);
        std::uint32_t nmask = mask;
        if (dy != dx) {
          if (mask & (1u << dy)) continue;  // domain revisit
          nmask |= 1u << dy;
        }
        // Once off-tree in a domain that has tree nodes, the path must reach
        // the tree without leaving that domain.
        if (tree_domain[dx] && dy != dx && !tree_node[x]) continue;
        const double nd = d + w.symmetric(x, y);
        auto it = dist.find({y, nmask});
        if (it == dist.end() || nd < it->second) {
          dist[{y, nmask}] = nd;
          prev[{y, nmask}] = {x, mask};
          pq.push({nd, y, nmask});
        }
      }
    }
    if (!goal) {
      throw MgmError("join: node " + std::to_string(v) + " cannot reach the tree");
    }
    std::vector<Edge> edges = t.edges;
    State cur = *goal;
    while (cur.first != v) {
      const State pr = prev.at(cur);
      res.changed.emplace_back(pr.first, cur.first);
      cur = pr;
    }
    std::sort(res.changed.begin(), res.changed.end());
    edges.insert(edges.end(), res.changed.begin(), res.changed.end());
    std::sort(edges.begin(), edges.end());
    res.tree = make_tree(t.src, std::move(edges), p);
  }
  const FlowTables after = install_tree(res.tree, next, group_id, topo);
  res.delta = diff_flow_tables(before, after);
  g = std::move(next);
  return res;
}

MgmResult mgm_leave(const CrossDomainTree& t, MulticastGroup& g, NodeId v,
                    const Topology& topo, int group_id) {
  if (!g.is_member(v) || !g.is_online(v)) {
    throw MgmError("leave: node " + std::to_string(v) + " is not an online member");
  }
  const FlowTables before = tables_for(t, g, group_id, topo);
  MulticastGroup next = g;
  next.set_online(v, false);

  std::map<NodeId, int> degree;
  for (const Edge& e : t.edges) {
    ++degree[e.u];
    ++degree[e.v];
  }
  const std::vector<NodeId> parent = tree_parents(t, topo.network.node_count());
  std::set<Edge> removed;
  NodeId x = v;
  while (x != t.src && degree[x] == 1 && !next.is_online(x)) {
    const NodeId up = parent[x];
    removed.insert(Edge(x, up));
    --degree[x];
    --degree[up];
    x = up;
  }
  MgmResult res;
  res.changed.assign(removed.begin(), removed.end());
  std::vector<Edge> edges;
  for (const Edge& e : t.edges) {
    if (!removed.count(e)) edges.push_back(e);
  }
  res.tree = make_tree(t.src, std::move(edges), topo.partition);
  const FlowTables after = install_tree(res.tree, next, group_id, topo);
  res.delta = diff_flow_tables(before, after);
  g = std::move(next);
  return res;
}

GroupDomains locate_group_domains(const MulticastGroup& g, const DomainPartition& p) {
  GroupDomains out;
  out.src_domain = p.domain_of(g.src());
  for (NodeId v : g.online_dests()) out.dests[p.domain_of(v)].push_back(v);
  return out;
}

}  // namespace macdmr
