#include "macdmr/cost.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace macdmr {

double CostWeights::sum() const {
  double s = 0.0;
  for (double b : beta) s += b;
  return s;
}

void CostWeights::validate() const {
  bool any = false;
  for (double b : beta) {
    if (!(b >= 0.0) || !std::isfinite(b)) {
      throw std::invalid_argument("cost weights must be finite and >= 0");
    }
    any = any || b > 0.0;
  }
  if (!any) throw std::invalid_argument("cost weights are all zero");
}

PathMetrics edges_metrics(const std::vector<std::pair<NodeId, NodeId>>& edges,
                          const MetricSnapshot& snap) {
  PathMetrics m;
  if (edges.empty()) return m;
  double keep_loss = 1.0;
  double keep_err = 1.0;
  double dist_sum = 0.0;
  bool first = true;
  for (const auto& [a, b] : edges) {
    const EdgeMetrics e = snap.get(a, b);
    m.bw = first ? e.bw : std::min(m.bw, e.bw);
    first = false;
    m.delay += e.delay;
    keep_loss *= 1.0 - e.loss;
    keep_err *= 1.0 - e.err;
    dist_sum += e.dist;
  }
  m.loss = 1.0 - keep_loss;
  m.err = 1.0 - keep_err;
  m.dist = dist_sum / static_cast<double>(edges.size());
  return m;
}

PathMetrics path_metrics(const std::vector<NodeId>& nodes,
                         const MetricSnapshot& snap) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    edges.emplace_back(nodes[k - 1], nodes[k]);
  }
  return edges_metrics(edges, snap);
}

double path_cost(const PathMetrics& m, const CostWeights& w) {
  const auto& b = w.beta;
  return b[0] * (1.0 - m.bw) + b[1] * m.delay + b[2] * m.loss + b[3] * m.err +
         b[4] * m.dist;
}

double edge_cost(const EdgeMetrics& m, const CostWeights& w) {
  const auto& b = w.beta;
  return b[0] * (1.0 - m.bw) + b[1] * m.delay + b[2] * m.loss + b[3] * m.err +
         b[4] * m.dist;
}

double reward_part(const EdgeMetrics& m, const CostWeights& w) {
  const auto& b = w.beta;
  return b[0] * m.bw + b[1] * (1.0 - m.delay) + b[2] * (1.0 - m.loss) +
         b[3] * (1.0 - m.err) + b[4] * (1.0 - m.dist);
}

double reward_end(const PathMetrics& m, const CostWeights& w) {
  const auto& b = w.beta;
  return b[0] * m.bw + b[1] * (1.0 - m.delay) + b[2] * (1.0 - m.loss) +
         b[3] * (1.0 - m.err) + b[4] * (1.0 - m.dist);
}

}  // namespace macdmr
