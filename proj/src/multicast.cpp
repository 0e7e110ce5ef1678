#include "macdmr/multicast.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace macdmr {

namespace {

void sort_unique(std::vector<Edge>& edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

std::vector<std::vector<NodeId>> flat_adjacency(const std::vector<Edge>& edges,
                                                int n) {
  std::vector<std::vector<NodeId>> adj(n);
  for (const Edge& e : edges) {
    if (e.u < 0 || e.v >= n) continue;
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());
  return adj;
}

int max_node(const CrossDomainTree& t) {
  int m = t.src;
  for (const Edge& e : t.edges) m = std::max(m, e.v);
  return m + 1;
}

// Nodes from src to v (inclusive) following parent pointers.
std::vector<NodeId> path_to(const std::vector<NodeId>& parent, NodeId src,
                            NodeId v) {
  std::vector<NodeId> out;
  for (NodeId x = v; x != -1; x = parent[x]) {
    out.push_back(x);
    if (x == src) break;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace

MulticastGroup::MulticastGroup(NodeId src, std::vector<NodeId> dests)
    : src_(src), dests_(std::move(dests)) {
  if (dests_.empty()) throw std::invalid_argument("group has no destinations");
  std::sort(dests_.begin(), dests_.end());
  if (std::adjacent_find(dests_.begin(), dests_.end()) != dests_.end()) {
    throw std::invalid_argument("group repeats a destination");
  }
  if (std::binary_search(dests_.begin(), dests_.end(), src_)) {
    throw std::invalid_argument("group source is also a destination");
  }
  online_.assign(dests_.size(), 1);
}

bool MulticastGroup::is_member(NodeId v) const {
  return std::binary_search(dests_.begin(), dests_.end(), v);
}

bool MulticastGroup::is_online(NodeId v) const {
  auto it = std::lower_bound(dests_.begin(), dests_.end(), v);
  if (it == dests_.end() || *it != v) return false;
  return online_[it - dests_.begin()] != 0;
}

void MulticastGroup::set_online(NodeId v, bool online) {
  auto it = std::lower_bound(dests_.begin(), dests_.end(), v);
  if (it == dests_.end() || *it != v) {
    throw std::invalid_argument("node " + std::to_string(v) +
                                " is not a group member");
  }
  online_[it - dests_.begin()] = online ? 1 : 0;
}

void MulticastGroup::add_member(NodeId v) {
  if (v == src_) throw std::invalid_argument("cannot add the source as member");
  auto it = std::lower_bound(dests_.begin(), dests_.end(), v);
  if (it != dests_.end() && *it == v) {
    online_[it - dests_.begin()] = 1;
    return;
  }
  online_.insert(online_.begin() + (it - dests_.begin()), 1);
  dests_.insert(it, v);
}

std::vector<NodeId> MulticastGroup::online_dests() const {
  std::vector<NodeId> out;
  for (std::size_t k = 0; k < dests_.size(); ++k) {
    if (online_[k]) out.push_back(dests_[k]);
  }
  return out;
}

void MulticastGroup::check_nodes(const Network& net) const {
  if (!net.contains(src_)) {
    throw std::invalid_argument("group source " + std::to_string(src_) +
                                " is not in the network");
  }
  for (NodeId d : dests_) {
    if (!net.contains(d)) {
      throw std::invalid_argument("group destination " + std::to_string(d) +
                                  " is not in the network");
    }
  }
}

std::vector<NodeId> dests_in_domain(const DomainPartition& p,
                                    const MulticastGroup& g, DomainId d) {
  std::vector<NodeId> out;
  for (NodeId v : g.dests()) {
    if (p.domain_of(v) == d) out.push_back(v);
  }
  return out;
}

std::vector<NodeId> IntradomainTree::nodes() const {
  std::vector<NodeId> out{root};
  for (const Edge& e : edges) {
    out.push_back(e.u);
    out.push_back(e.v);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<NodeId> CrossDomainTree::nodes() const {
  std::vector<NodeId> out{src};
  for (const Edge& e : edges) {
    out.push_back(e.u);
    out.push_back(e.v);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool CrossDomainTree::contains(NodeId v) const {
  if (v == src) return true;
  for (const Edge& e : edges) {
    if (e.touches(v)) return true;
  }
  return false;
}

CrossDomainTree make_tree(NodeId src, std::vector<Edge> edges,
                          const DomainPartition& p) {
  CrossDomainTree t;
  t.src = src;
  sort_unique(edges);
  t.edges = std::move(edges);
  Decomposition d = decompose(t, p);
  t.inter = std::move(d.inter);
  t.intra = std::move(d.intra);
  return t;
}

CrossDomainTree compose(NodeId src, const InterdomainTree& inter,
                        const std::vector<IntradomainTree>& intra,
                        const DomainPartition& p) {
  std::map<DomainId, std::set<NodeId>> present;
  for (const auto& ti : intra) {
    for (const Edge& e : ti.edges) {
      if (p.domain_of(e.u) != ti.domain || p.domain_of(e.v) != ti.domain) {
        throw TreeError("intra tree of domain " + std::to_string(ti.domain) +
                        " has edge (" + std::to_string(e.u) + "," +
                        std::to_string(e.v) + ") outside the domain");
      }
    }
    if (p.domain_of(ti.root) != ti.domain) {
      throw TreeError("intra tree root " + std::to_string(ti.root) +
                      " is outside domain " + std::to_string(ti.domain));
    }
    for (NodeId v : ti.nodes()) present[ti.domain].insert(v);
  }
  for (const Edge& e : inter.edges) {
    for (NodeId x : {e.u, e.v}) {
      const DomainId d = p.domain_of(x);
      if (!present[d].count(x)) {
        throw TreeError("dangling BN " + std::to_string(x) + " of domain " +
                        std::to_string(d));
      }
    }
  }
  CrossDomainTree t;
  t.src = src;
  t.inter = inter;
  sort_unique(t.inter.edges);
  t.intra = intra;
  for (auto& ti : t.intra) sort_unique(ti.edges);
  std::sort(t.intra.begin(), t.intra.end(),
            [](const IntradomainTree& a, const IntradomainTree& b) {
              return std::tie(a.domain, a.root) < std::tie(b.domain, b.root);
            });
  t.edges = t.inter.edges;
  for (const auto& ti : t.intra) {
    t.edges.insert(t.edges.end(), ti.edges.begin(), ti.edges.end());
  }
  sort_unique(t.edges);
  return t;
}

std::vector<NodeId> tree_parents(const CrossDomainTree& t, int node_count) {
  const int n = std::max(node_count, max_node(t));
  auto adj = flat_adjacency(t.edges, n);
  std::vector<NodeId> parent(n, -1);
  std::vector<char> seen(n, 0);
  std::queue<NodeId> q;
  q.push(t.src);
  seen[t.src] = 1;
  while (!q.empty()) {
    NodeId x = q.front();
    q.pop();
    for (NodeId y : adj[x]) {
      if (seen[y]) continue;
      seen[y] = 1;
      parent[y] = x;
      q.push(y);
    }
  }
  return parent;
}

Decomposition decompose(const CrossDomainTree& t, const DomainPartition& p) {
  Decomposition out;
  const int n = static_cast<int>(p.assignment().size());
  const auto nodes = t.nodes();

  // BFS depth from src for root selection.
  auto adj = flat_adjacency(t.edges, n);
  std::vector<int> depth(n, -1);
  std::queue<NodeId> q;
  q.push(t.src);
  depth[t.src] = 0;
  while (!q.empty()) {
    NodeId x = q.front();
    q.pop();
    for (NodeId y : adj[x]) {
      if (depth[y] >= 0) continue;
      depth[y] = depth[x] + 1;
      q.push(y);
    }
  }

  std::vector<int> comp(n, -1);
  for (const Edge& e : t.edges) {
    if (p.is_inter(e)) out.inter.edges.push_back(e);
  }
  int ncomp = 0;
  std::vector<std::vector<NodeId>> members;
  for (NodeId start : nodes) {
    if (comp[start] >= 0) continue;
    const DomainId d = p.domain_of(start);
    std::vector<NodeId> stack{start};
    comp[start] = ncomp;
    members.emplace_back();
    while (!stack.empty()) {
      NodeId x = stack.back();
      stack.pop_back();
      members.back().push_back(x);
      for (NodeId y : adj[x]) {
        if (comp[y] >= 0 || p.domain_of(y) != d) continue;
        comp[y] = ncomp;
        stack.push_back(y);
      }
    }
    ++ncomp;
  }
  for (int c = 0; c < ncomp; ++c) {
    auto& mem = members[c];
    std::sort(mem.begin(), mem.end());
    IntradomainTree ti;
    ti.domain = p.domain_of(mem.front());
    ti.root = mem.front();
    auto key = [&](NodeId v) {
      return depth[v] < 0 ? std::numeric_limits<int>::max() : depth[v];
    };
    for (NodeId v : mem) {
      if (key(v) < key(ti.root)) ti.root = v;
    }
    out.intra.push_back(std::move(ti));
  }
  for (const Edge& e : t.edges) {
    if (p.is_inter(e)) continue;
    out.intra[comp[e.u]].edges.push_back(e);
  }
  for (auto& ti : out.intra) sort_unique(ti.edges);
  std::sort(out.intra.begin(), out.intra.end(),
            [](const IntradomainTree& a, const IntradomainTree& b) {
              return std::tie(a.domain, a.root) < std::tie(b.domain, b.root);
            });
  return out;
}

std::map<NodeId, Path> extract_paths(const CrossDomainTree& t,
                                     const MulticastGroup& g, int node_count) {
  auto parent = tree_parents(t, node_count);
  std::map<NodeId, Path> out;
  for (NodeId d : g.online_dests()) {
    if (d >= static_cast<int>(parent.size()) || (parent[d] == -1 && d != t.src)) {
      throw TreeError("destination " + std::to_string(d) +
                      " is unreachable in the tree");
    }
    out[d] = Path{path_to(parent, t.src, d)};
  }
  return out;
}

std::map<NodeId, std::vector<DomainId>> interdomain_paths(
    const CrossDomainTree& t, const MulticastGroup& g,
    const DomainPartition& p) {
  const int n = static_cast<int>(p.assignment().size());
  std::map<NodeId, std::vector<DomainId>> out;
  for (const auto& [d, path] : extract_paths(t, g, n)) {
    std::vector<DomainId> seq;
    for (NodeId v : path.nodes) {
      DomainId dom = p.domain_of(v);
      if (seq.empty() || seq.back() != dom) seq.push_back(dom);
    }
    out[d] = std::move(seq);
  }
  return out;
}

const char* violation_name(ViolationKind k) {
  switch (k) {
    case ViolationKind::kUnknownEdge: return "unknown_edge";
    case ViolationKind::kCycle: return "cycle";
    case ViolationKind::kDisconnected: return "disconnected";
    case ViolationKind::kUncovered: return "uncovered_destination";
    case ViolationKind::kDomainRevisit: return "domain_revisit";
    case ViolationKind::kInconsistentPn: return "inconsistent_pn";
    case ViolationKind::kForest: return "intradomain_forest";
  }
  return "?";
}

std::vector<Violation> validate(const CrossDomainTree& t,
                                const MulticastGroup& g, const Network& net,
                                const DomainPartition& p) {
  std::vector<Violation> out;
  const int n = net.node_count();
  if (!net.contains(t.src)) {
    out.push_back({ViolationKind::kUnknownEdge, {t.src}, "source not in network"});
    return out;
  }
  std::vector<Edge> known;
  for (const Edge& e : t.edges) {
    if (!net.has_edge(e.u, e.v)) {
      out.push_back({ViolationKind::kUnknownEdge, {e.u, e.v},
                     "edge not in network"});
    } else {
      known.push_back(e);
    }
  }

  // (a) acyclic: union-find over the known edges.
  std::vector<int> uf(n);
  std::iota(uf.begin(), uf.end(), 0);
  auto find = [&](int x) {
    while (uf[x] != x) x = uf[x] = uf[uf[x]];
    return x;
  };
  for (const Edge& e : known) {
    int a = find(e.u), b = find(e.v);
    if (a == b) {
      out.push_back({ViolationKind::kCycle, {e.u, e.v}, "edge closes a cycle"});
    } else {
      uf[a] = b;
    }
  }

  CrossDomainTree kt = t;
  kt.edges = known;
  auto parent = tree_parents(kt, n);
  auto reached = [&](NodeId v) { return v == t.src || parent[v] != -1; };
  for (NodeId v : kt.nodes()) {
    if (!reached(v)) {
      out.push_back({ViolationKind::kDisconnected, {v},
                     "node not connected to the source"});
    }
  }

  // (b) coverage and (c)/(d) domain sequences.
  std::map<DomainId, std::pair<NodeId, std::vector<DomainId>>> pn_by_domain;
  for (NodeId d : g.online_dests()) {
    if (!net.contains(d) || !reached(d)) {
      out.push_back({ViolationKind::kUncovered, {d},
                     "online destination not covered"});
      continue;
    }
    std::vector<DomainId> seq;
    for (NodeId v : path_to(parent, t.src, d)) {
      DomainId dom = p.domain_of(v);
      if (seq.empty() || seq.back() != dom) seq.push_back(dom);
    }
    std::set<DomainId> uniq(seq.begin(), seq.end());
    if (uniq.size() != seq.size()) {
      out.push_back({ViolationKind::kDomainRevisit, {d},
                     "domain sequence repeats a domain"});
    }
    const DomainId dd = p.domain_of(d);
    auto it = pn_by_domain.find(dd);
    if (it == pn_by_domain.end()) {
      pn_by_domain[dd] = {d, seq};
    } else if (it->second.second != seq) {
      out.push_back({ViolationKind::kInconsistentPn, {it->second.first, d},
                     "same-domain destinations have different domain sequences"});
    }
  }

  // (e) one component per domain.
  std::map<DomainId, int> comps;
  for (const auto& ti : decompose(kt, p).intra) ++comps[ti.domain];
  for (const auto& [d, c] : comps) {
    if (c > 1) {
      out.push_back({ViolationKind::kForest, {d},
                     "domain holds " + std::to_string(c) + " tree components"});
    }
  }
  return out;
}

double tree_cost_endtoend(const CrossDomainTree& t, const MulticastGroup& g,
                          const NormalizedSnapshot& snap, const CostWeights& w) {
  double total = 0.0;
  for (const auto& [d, path] : extract_paths(t, g, snap.size())) {
    total += path_cost(path_metrics(path, snap), w);
  }
  return total;
}

DecomposedCost tree_cost_decomposed(const CrossDomainTree& t,
                                    const MulticastGroup& g,
                                    const DomainPartition& p,
                                    const NormalizedSnapshot& snap,
                                    const CostWeights& w) {
  const int n = static_cast<int>(p.assignment().size());
  auto parent = tree_parents(t, n);
  DecomposedCost out;
  const Decomposition dec = decompose(t, p);

  for (const auto& ti : dec.intra) {
    double c = 0.0;
    for (NodeId v : ti.nodes()) {
      bool target = g.is_online(v);
      for (const Edge& e : t.edges) {
        if (!e.touches(v) || !p.is_inter(e)) continue;
        const NodeId o = e.other(v);
        if (parent[o] == v) target = true;  // exit BN
      }
      if (!target) continue;
      std::vector<NodeId> nodes;
      for (NodeId x = v; x != -1; x = parent[x]) {
        nodes.push_back(x);
        if (x == ti.root) break;
      }
      if (nodes.back() != ti.root) {
        throw TreeError("intra tree target " + std::to_string(v) +
                        " not below root " + std::to_string(ti.root));
      }
      std::reverse(nodes.begin(), nodes.end());
      c += path_cost(path_metrics(nodes, snap.values()), w);
    }
    out.domains.push_back(ti.domain);
    out.c_intra.push_back(c);
  }

  const DomainId src_dom = p.domain_of(t.src);
  std::map<DomainId, NodeId> first_dest;
  for (NodeId d : g.online_dests()) {
    const DomainId dd = p.domain_of(d);
    if (dd != src_dom && !first_dest.count(dd)) first_dest[dd] = d;
  }
  for (const auto& [dd, d] : first_dest) {
    if (d >= n || parent[d] == -1) {
      throw TreeError("destination " + std::to_string(d) + " is unreachable");
    }
    auto nodes = path_to(parent, t.src, d);
    std::vector<std::pair<NodeId, NodeId>> inter;
    for (std::size_t k = 1; k < nodes.size(); ++k) {
      if (p.domain_of(nodes[k - 1]) != p.domain_of(nodes[k])) {
        inter.emplace_back(nodes[k - 1], nodes[k]);
      }
    }
    out.c_int += path_cost(edges_metrics(inter, snap.values()), w);
  }

  out.total = out.c_int;
  for (double c : out.c_intra) out.total += c;
  return out;
}

double tree_weight(const std::vector<Edge>& edges,
                   const NormalizedSnapshot& snap, const CostWeights& w) {
  double total = 0.0;
  for (const Edge& e : edges) {
    total += 0.5 * (edge_cost(snap.get(e.u, e.v), w) +
                    edge_cost(snap.get(e.v, e.u), w));
  }
  return total;
}

std::string tree_to_json(const CrossDomainTree& t, const MulticastGroup& g) {
  using nlohmann::json;
  json doc;
  doc["src"] = t.src;
  doc["dests"] = g.dests();
  doc["inter_edges"] = json::array();
  for (const Edge& e : t.inter.edges) doc["inter_edges"].push_back({e.u, e.v});
  doc["intra"] = json::array();
  for (const auto& ti : t.intra) {
    json edges = json::array();
    for (const Edge& e : ti.edges) edges.push_back({e.u, e.v});
    doc["intra"].push_back({{"domain", ti.domain}, {"root", ti.root}, {"edges", edges}});
  }
  return doc.dump();
}

CrossDomainTree tree_from_json(const std::string& text,
                               const DomainPartition& p) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
    InterdomainTree inter;
    for (const auto& e : doc.at("inter_edges")) {
      inter.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    }
    std::vector<IntradomainTree> intra;
    for (const auto& j : doc.at("intra")) {
      IntradomainTree ti;
      ti.domain = j.at("domain").get<int>();
      ti.root = j.at("root").get<int>();
      for (const auto& e : j.at("edges")) {
        ti.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
      }
      intra.push_back(std::move(ti));
    }
    return compose(doc.at("src").get<int>(), inter, intra, p);
  } catch (const json::exception& e) {
    throw TreeError(std::string("tree json: ") + e.what());
  }
}

}  // namespace macdmr
