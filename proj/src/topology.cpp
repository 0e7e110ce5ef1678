#include "macdmr/topology.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "json.hpp"

namespace macdmr {

namespace {

using nlohmann::json;

bool bfs_connected(int n, const std::vector<std::vector<NodeId>>& adj,
                   const std::vector<NodeId>& subset,
                   const std::vector<char>& allowed) {
  if (subset.empty()) return true;
  std::vector<char> seen(n, 0);
  std::queue<NodeId> q;
  q.push(subset.front());
  seen[subset.front()] = 1;
  std::size_t count = 1;
  while (!q.empty()) {
    NodeId x = q.front();
    q.pop();
    for (NodeId y : adj[x]) {
      if (!allowed[y] || seen[y]) continue;
      seen[y] = 1;
      ++count;
      q.push(y);
    }
  }
  return count == subset.size();
}

}  // namespace

Network::Network(std::vector<Point> coords, std::vector<Edge> edges,
                 std::vector<double> lengths)
    : coords_(std::move(coords)), adj_(coords_.size()) {
  const int n = node_count();
  if (n == 0) throw TopologyError("network has no nodes");
  if (!lengths.empty() && lengths.size() != edges.size()) {
    throw TopologyError("edge length count does not match edge count");
  }

  // Sort edges (and their lengths) lexicographically.
  std::vector<std::size_t> order(edges.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return edges[a] < edges[b]; });

  for (std::size_t k = 0; k < order.size(); ++k) {
    const Edge& e = edges[order[k]];
    if (e.u < 0 || e.v >= n) {
      throw TopologyError("edge (" + std::to_string(e.u) + "," +
                          std::to_string(e.v) + ") references unknown node");
    }
    if (e.u == e.v) {
      throw TopologyError("self-loop at node " + std::to_string(e.u));
    }
    if (!edges_.empty() && edges_.back() == e) {
      throw TopologyError("parallel edge (" + std::to_string(e.u) + "," +
                          std::to_string(e.v) + ")");
    }
    edges_.push_back(e);
    if (!lengths.empty()) {
      double len = lengths[order[k]];
      if (!(len >= 0.0) || !std::isfinite(len)) {
        throw TopologyError("edge (" + std::to_string(e.u) + "," +
                            std::to_string(e.v) + ") has invalid length");
      }
      lengths_.push_back(len);
    } else {
      const Point& a = coords_[e.u];
      const Point& b = coords_[e.v];
      lengths_.push_back(std::hypot(a.x - b.x, a.y - b.y));
    }
    adj_[e.u].push_back(e.v);
    adj_[e.v].push_back(e.u);
  }
  for (auto& nb : adj_) std::sort(nb.begin(), nb.end());

  std::vector<NodeId> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;
  if (!bfs_connected(n, adj_, all, std::vector<char>(n, 1))) {
    throw TopologyError("network is not connected");
  }
}

const std::vector<NodeId>& Network::neighbors(NodeId v) const {
  if (!contains(v)) throw TopologyError("unknown node " + std::to_string(v));
  return adj_[v];
}

const Point& Network::coord(NodeId v) const {
  if (!contains(v)) throw TopologyError("unknown node " + std::to_string(v));
  return coords_[v];
}

bool Network::has_edge(NodeId a, NodeId b) const {
  return edge_index(a, b).has_value();
}

std::optional<std::size_t> Network::edge_index(NodeId a, NodeId b) const {
  if (a == b || !contains(a) || !contains(b)) return std::nullopt;
  Edge key(a, b);
  auto it = std::lower_bound(edges_.begin(), edges_.end(), key);
  if (it == edges_.end() || *it != key) return std::nullopt;
  return static_cast<std::size_t>(it - edges_.begin());
}

double Network::length(NodeId a, NodeId b) const {
  auto idx = edge_index(a, b);
  if (!idx) {
    throw TopologyError("no edge (" + std::to_string(a) + "," +
                        std::to_string(b) + ")");
  }
  return lengths_[*idx];
}

DomainPartition::DomainPartition(const Network& net,
                                 std::vector<DomainId> assignment)
    : assignment_(std::move(assignment)) {
  const int n = net.node_count();
  if (static_cast<int>(assignment_.size()) != n) {
    throw TopologyError("domain assignment covers " +
                        std::to_string(assignment_.size()) + " of " +
                        std::to_string(n) + " nodes");
  }
  for (int v = 0; v < n; ++v) {
    if (assignment_[v] < 1) {
      throw TopologyError("unassigned node " + std::to_string(v));
    }
    domain_count_ = std::max(domain_count_, assignment_[v]);
  }
  members_.assign(domain_count_, {});
  boundary_.assign(domain_count_, {});
  for (int v = 0; v < n; ++v) members_[assignment_[v] - 1].push_back(v);
  for (int d = 1; d <= domain_count_; ++d) {
    if (members_[d - 1].empty()) {
      throw TopologyError("domain " + std::to_string(d) + " has no nodes");
    }
  }

  std::vector<std::set<NodeId>> bnd(domain_count_);
  for (const Edge& e : net.edges()) {
    DomainId du = assignment_[e.u];
    DomainId dv = assignment_[e.v];
    if (du != dv) {
      inter_edges_.push_back(e);
      bnd[du - 1].insert(e.u);
      bnd[dv - 1].insert(e.v);
    }
  }
  for (int d = 0; d < domain_count_; ++d) {
    boundary_[d].assign(bnd[d].begin(), bnd[d].end());
  }

  // Each domain must be connected through its own edges.
  std::vector<std::vector<NodeId>> intra_adj(n);
  for (const Edge& e : net.edges()) {
    if (assignment_[e.u] == assignment_[e.v]) {
      intra_adj[e.u].push_back(e.v);
      intra_adj[e.v].push_back(e.u);
    }
  }
  for (int d = 1; d <= domain_count_; ++d) {
    std::vector<char> allowed(n, 0);
    for (NodeId v : members_[d - 1]) allowed[v] = 1;
    if (!bfs_connected(n, intra_adj, members_[d - 1], allowed)) {
      throw TopologyError("domain " + std::to_string(d) + " is not connected");
    }
  }
}

DomainId DomainPartition::domain_of(NodeId v) const {
  if (v < 0 || v >= static_cast<int>(assignment_.size())) {
    throw TopologyError("unknown node " + std::to_string(v));
  }
  return assignment_[v];
}

const std::vector<NodeId>& DomainPartition::nodes_in(DomainId d) const {
  if (d < 1 || d > domain_count_) {
    throw TopologyError("unknown domain " + std::to_string(d));
  }
  return members_[d - 1];
}

const std::vector<NodeId>& DomainPartition::boundary_nodes(DomainId d) const {
  if (d < 1 || d > domain_count_) {
    throw TopologyError("unknown domain " + std::to_string(d));
  }
  return boundary_[d - 1];
}

bool DomainPartition::is_boundary(NodeId v) const {
  const auto& b = boundary_nodes(domain_of(v));
  return std::binary_search(b.begin(), b.end(), v);
}

std::vector<DomainId> DomainPartition::adjacent_domains(DomainId d) const {
  std::set<DomainId> out;
  for (const Edge& e : inter_edges_) {
    if (assignment_[e.u] == d) out.insert(assignment_[e.v]);
    if (assignment_[e.v] == d) out.insert(assignment_[e.u]);
  }
  return {out.begin(), out.end()};
}

Topology parse_topology(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw TopologyError(std::string("topology parse error: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array()) {
    throw TopologyError("topology: missing \"nodes\" array");
  }
  if (!doc.contains("edges") || !doc["edges"].is_array()) {
    throw TopologyError("topology: missing \"edges\" array");
  }

  const auto& nodes = doc["nodes"];
  const int n = static_cast<int>(nodes.size());
  std::vector<Point> coords(n);
  std::vector<DomainId> assignment(n, 0);
  std::vector<char> seen(n, 0);
  for (const auto& node : nodes) {
    if (!node.contains("id") || !node["id"].is_number_integer()) {
      throw TopologyError("topology: node without integer \"id\"");
    }
    int id = node["id"].get<int>();
    if (id < 0 || id >= n) {
      throw TopologyError("topology: node id " + std::to_string(id) +
                          " outside 0.." + std::to_string(n - 1));
    }
    if (seen[id]) {
      throw TopologyError("topology: duplicate node id " + std::to_string(id));
    }
    seen[id] = 1;
    coords[id] = Point{node.value("x", 0.0), node.value("y", 0.0)};
    if (!node.contains("domain") || node["domain"].is_null()) {
      throw TopologyError("unassigned node " + std::to_string(id));
    }
    assignment[id] = node["domain"].get<int>();
  }

  std::vector<Edge> edges;
  std::vector<double> lengths;
  bool any_length = false;
  bool all_length = true;
  for (const auto& e : doc["edges"]) {
    if (!e.is_array() || e.size() < 2 || e.size() > 3) {
      throw TopologyError("topology: edge must be [u,v] or [u,v,length]");
    }
    edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    if (e.size() == 3) {
      any_length = true;
      lengths.push_back(e[2].get<double>());
    } else {
      all_length = false;
      lengths.push_back(0.0);
    }
  }
  if (any_length && !all_length) {
    // Mixed: fill missing lengths from coordinates.
    for (std::size_t i = 0; i < edges.size(); ++i) {
      if (doc["edges"][i].size() == 2) {
        const Point& a = coords.at(edges[i].u);
        const Point& b = coords.at(edges[i].v);
        lengths[i] = std::hypot(a.x - b.x, a.y - b.y);
      }
    }
  }
  if (!any_length) lengths.clear();

  Topology topo;
  topo.network = Network(std::move(coords), std::move(edges), std::move(lengths));
  topo.partition = DomainPartition(topo.network, std::move(assignment));
  return topo;
}

Topology load_topology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TopologyError("cannot open topology file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_topology(ss.str());
}

std::string topology_to_json(const Topology& topo) {
  json doc;
  doc["nodes"] = json::array();
  for (int v = 0; v < topo.network.node_count(); ++v) {
    const Point& p = topo.network.coord(v);
    doc["nodes"].push_back(
        {{"id", v}, {"x", p.x}, {"y", p.y}, {"domain", topo.partition.domain_of(v)}});
  }
  doc["edges"] = json::array();
  const auto& edges = topo.network.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    doc["edges"].push_back({edges[i].u, edges[i].v, topo.network.length(i)});
  }
  return doc.dump(2);
}

void save_topology(const std::filesystem::path& path, const Topology& topo) {
  std::ofstream out(path);
  if (!out) throw TopologyError("cannot write " + path.string());
  out << topology_to_json(topo) << '\n';
}

}  // namespace macdmr
