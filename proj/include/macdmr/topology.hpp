#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace macdmr {

// Nodes are dense 0-based ids; domains are 1-based (N_1..N_m).
using NodeId = int;
using DomainId = int;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Undirected edge, always stored with u < v.
struct Edge {
  NodeId u = 0;
  NodeId v = 0;

  Edge() = default;
  Edge(NodeId a, NodeId b) : u(std::min(a, b)), v(std::max(a, b)) {}

  NodeId other(NodeId x) const { return x == u ? v : u; }
  bool touches(NodeId x) const { return x == u || x == v; }
  auto operator<=>(const Edge&) const = default;
};

class TopologyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Network {
 public:
  Network() = default;

  // Lengths are meters per edge (parallel to `edges`). When empty, every
  // length is the Euclidean distance between the endpoint coordinates.
  // Throws TopologyError on self-loops, duplicate edges, out-of-range
  // endpoints, length/edge count mismatch or a disconnected graph.
  Network(std::vector<Point> coords, std::vector<Edge> edges,
          std::vector<double> lengths = {});

  int node_count() const { return static_cast<int>(coords_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<NodeId>& neighbors(NodeId v) const;
  const Point& coord(NodeId v) const;

  bool contains(NodeId v) const { return v >= 0 && v < node_count(); }
  bool has_edge(NodeId a, NodeId b) const;
  std::optional<std::size_t> edge_index(NodeId a, NodeId b) const;

  double length(std::size_t edge_idx) const { return lengths_.at(edge_idx); }
  double length(NodeId a, NodeId b) const;
  const std::vector<double>& lengths() const { return lengths_; }

 private:
  std::vector<Point> coords_;
  std::vector<Edge> edges_;
  std::vector<double> lengths_;
  std::vector<std::vector<NodeId>> adj_;
};

class DomainPartition {
 public:
  DomainPartition() = default;

  // assignment[v] is the 1-based domain of node v. Domains must be numbered
  // 1..m without gaps and each must induce a connected subgraph.
  DomainPartition(const Network& net, std::vector<DomainId> assignment);

  int domain_count() const { return domain_count_; }
  DomainId domain_of(NodeId v) const;
  const std::vector<DomainId>& assignment() const { return assignment_; }

  const std::vector<NodeId>& nodes_in(DomainId d) const;
  // BND(N_d): nodes of d incident to at least one inter-domain edge.
  const std::vector<NodeId>& boundary_nodes(DomainId d) const;
  const std::vector<Edge>& inter_edges() const { return inter_edges_; }

  bool is_inter(const Edge& e) const {
    return domain_of(e.u) != domain_of(e.v);
  }
  bool is_boundary(NodeId v) const;
  std::vector<DomainId> adjacent_domains(DomainId d) const;

 private:
  int domain_count_ = 0;
  std::vector<DomainId> assignment_;
  std::vector<std::vector<NodeId>> members_;   // index d-1
  std::vector<std::vector<NodeId>> boundary_;  // index d-1
  std::vector<Edge> inter_edges_;
};

struct Topology {
  Network network;
  DomainPartition partition;
};

// Reads the topology JSON format:
//   { "nodes": [{"id":int,"x":float,"y":float,"domain":int}],
//     "edges": [[int,int]] }
// An edge may carry an optional third element, its length in meters.
Topology load_topology(const std::filesystem::path& path);
Topology parse_topology(const std::string& json_text);
std::string topology_to_json(const Topology& topo);
void save_topology(const std::filesystem::path& path, const Topology& topo);

inline DomainId domain_of(const DomainPartition& p, NodeId v) {
  return p.domain_of(v);
}

}  // namespace macdmr
