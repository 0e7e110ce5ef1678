#pragma once

#include <limits>
#include <stdexcept>
#include <vector>

#include "macdmr/cost.hpp"
#include "macdmr/topology.hpp"

namespace macdmr {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Directed single-edge cost w(i,j) on a dense N x N grid; NaN where no edge.
class EdgeWeightMap {
 public:
  EdgeWeightMap() = default;
  explicit EdgeWeightMap(int n);

  int size() const { return n_; }
  double at(NodeId i, NodeId j) const { return w_[idx(i, j)]; }
  void set(NodeId i, NodeId j, double w) { w_[idx(i, j)] = w; }
  // Mean of both directions.
  double symmetric(NodeId i, NodeId j) const {
    return 0.5 * (at(i, j) + at(j, i));
  }

 private:
  std::size_t idx(NodeId i, NodeId j) const {
    return static_cast<std::size_t>(i) * n_ + j;
  }
  int n_ = 0;
  std::vector<double> w_;
};

EdgeWeightMap edge_weights(const Network& net, const NormalizedSnapshot& snap,
                           const CostWeights& w);

struct Arc {
  NodeId to;
  double w;
};

// Adjacency lists sorted by neighbor id. Arcs may be asymmetric.
struct WeightedGraph {
  int n = 0;
  std::vector<std::vector<Arc>> adj;

  double weight(NodeId u, NodeId v) const;  // throws if no arc
};

// Undirected view with symmetrized weights.
WeightedGraph symmetric_graph(const Network& net, const EdgeWeightMap& w);

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct ShortestPaths {
  NodeId src = 0;
  std::vector<double> dist;    // kInf when unreachable
  std::vector<NodeId> parent;  // -1 for src and unreachable nodes

  std::vector<NodeId> path_to(NodeId v) const;  // empty if unreachable
};

// Ties: nodes settle in (distance, id) order; an equal-distance relaxation
// keeps the smaller predecessor id.
ShortestPaths dijkstra(const WeightedGraph& g, NodeId src);
// Distances from the nearest of several sources (all at distance 0).
ShortestPaths dijkstra_multi(const WeightedGraph& g,
                             const std::vector<NodeId>& sources);

struct SteinerTree {
  std::vector<Edge> edges;  // sorted
  double cost = 0.0;
};

double total_weight(const WeightedGraph& g, const std::vector<Edge>& edges);

SteinerTree kmb(const WeightedGraph& g, const std::vector<NodeId>& terminals);
SteinerTree sctf(const WeightedGraph& g, NodeId src,
                 const std::vector<NodeId>& dests);

inline constexpr int kExactMaxNodes = 16;
// Minimum Steiner tree by enumerating Steiner-node subsets and taking the MST
// of each induced subgraph. Ties go to the lowest subset mask.
SteinerTree exact_steiner(const WeightedGraph& g,
                          const std::vector<NodeId>& terminals);
// Serial reference of the same enumeration.
SteinerTree exact_steiner_serial(const WeightedGraph& g,
                                 const std::vector<NodeId>& terminals);

}  // namespace macdmr
