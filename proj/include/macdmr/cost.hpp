#pragma once

#include <array>
#include <vector>

#include "macdmr/link_metrics.hpp"

namespace macdmr {

// beta_1..beta_5 for bandwidth, delay, loss, err, dist.
struct CostWeights {
  std::array<double, kMetricCount> beta{0.7, 0.3, 0.1, 0.1, 0.1};

  double sum() const;
  void validate() const;  // throws std::invalid_argument
};

// Node sequence v_0..v_L. Metrics of a path use the directed entries
// (v_k, v_{k+1}).
struct Path {
  std::vector<NodeId> nodes;

  std::size_t hops() const { return nodes.empty() ? 0 : nodes.size() - 1; }
  bool operator==(const Path&) const = default;
};

struct PathMetrics {
  double bw = 1.0;  // bottleneck
  double delay = 0.0;
  double loss = 0.0;
  double err = 0.0;
  double dist = 0.0;  // mean
};

// Aggregation over the path's edges: min bw, summed delay, complement
// products for loss/err, mean dist. A zero-hop path yields the identity
// metrics {bw 1, rest 0}. Throws MetricError on a missing edge metric.
PathMetrics path_metrics(const std::vector<NodeId>& nodes,
                         const MetricSnapshot& snap);
inline PathMetrics path_metrics(const Path& p, const NormalizedSnapshot& snap) {
  return path_metrics(p.nodes, snap.values());
}
// Aggregates an explicit list of directed edges (not necessarily contiguous).
PathMetrics edges_metrics(const std::vector<std::pair<NodeId, NodeId>>& edges,
                          const MetricSnapshot& snap);

double path_cost(const PathMetrics& m, const CostWeights& w);
// Single-edge cost on normalized metrics.
double edge_cost(const EdgeMetrics& m, const CostWeights& w);

// Step reward for adding one edge and terminal reward for a completed path.
double reward_part(const EdgeMetrics& m, const CostWeights& w);
double reward_end(const PathMetrics& m, const CostWeights& w);

}  // namespace macdmr
