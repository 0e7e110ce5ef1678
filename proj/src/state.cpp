#include "macdmr/state.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace macdmr {

SparseVec metric_features(const NormalizedSnapshot& snap) {
  const int n = snap.size();
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  SparseVec out;
  for (int c = 0; c < kMetricCount; ++c) {
    const auto& ch = snap.values().channel(static_cast<Metric>(c));
    const auto& mask = snap.values().mask();
    for (std::size_t k = 0; k < nn; ++k) {
      if (!mask[k] || ch[k] == 0.0) continue;
      out.idx.push_back(static_cast<int>(c * nn + k));
      out.val.push_back(ch[k]);
    }
  }
  return out;
}

StateTensor::StateTensor(int n, std::shared_ptr<const SparseVec> metrics,
                         std::vector<std::pair<int, double>> tree)
    : n_(n), metrics_(std::move(metrics)), tree_(std::move(tree)) {
  std::sort(tree_.begin(), tree_.end());
}

double StateTensor::at(int c, NodeId i, NodeId j) const {
  if (c < 0 || c >= kStateChannels || i < 0 || j < 0 || i >= n_ || j >= n_) {
    throw std::out_of_range("state index");
  }
  const int local = i * n_ + j;
  if (c == kTreeChannel) {
    auto it = std::lower_bound(tree_.begin(), tree_.end(),
                               std::pair<int, double>{local, -1.0});
    return it != tree_.end() && it->first == local ? it->second : 0.0;
  }
  const int flat = c * n_ * n_ + local;
  auto it = std::lower_bound(metrics_->idx.begin(), metrics_->idx.end(), flat);
  if (it == metrics_->idx.end() || *it != flat) return 0.0;
  return metrics_->val[it - metrics_->idx.begin()];
}

SparseVec StateTensor::sparse() const {
  SparseVec out;
  if (metrics_) out = *metrics_;
  const int base = kTreeChannel * n_ * n_;
  for (const auto& [k, v] : tree_) {
    if (v == 0.0) continue;
    out.idx.push_back(base + k);
    out.val.push_back(v);
  }
  return out;
}

std::vector<double> StateTensor::dense() const {
  std::vector<double> out(size(), 0.0);
  const SparseVec s = sparse();
  for (std::size_t k = 0; k < s.nnz(); ++k) out[s.idx[k]] = s.val[k];
  return out;
}

StateTensor build_state(const NormalizedSnapshot& snap,
                        const std::vector<double>& tree_matrix) {
  const int n = snap.size();
  if (tree_matrix.size() != static_cast<std::size_t>(n) * n) {
    throw std::invalid_argument("build_state: tree matrix is not N x N");
  }
  std::vector<std::pair<int, double>> tree;
  for (std::size_t k = 0; k < tree_matrix.size(); ++k) {
    const double v = tree_matrix[k];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("build_state: tree entry outside [0,1]");
    }
    if (v != 0.0) tree.emplace_back(static_cast<int>(k), v);
  }
  for (int c = 0; c < kMetricCount; ++c) {
    for (double v : snap.values().channel(static_cast<Metric>(c))) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument("build_state: metric entry outside [0,1]");
      }
    }
  }
  return StateTensor(n, std::make_shared<const SparseVec>(metric_features(snap)),
                     std::move(tree));
}

std::vector<std::pair<int, double>> tree_entries(
    int n, const std::vector<Edge>& edges,
    const std::vector<std::pair<NodeId, double>>& roles) {
  std::map<int, double> m;
  for (const Edge& e : edges) {
    m[e.u * n + e.v] = 1.0;
    m[e.v * n + e.u] = 1.0;
  }
  for (const auto& [v, r] : roles) {
    double& slot = m[v * n + v];
    slot = std::max(slot, r);
  }
  return {m.begin(), m.end()};
}

SnapshotView make_view(const Topology& topo, MetricSnapshot raw,
                       const CostWeights& w) {
  SnapshotView v;
  v.topo = &topo;
  auto missing = raw.missing(topo.network);
  if (!missing.empty()) {
    throw MetricError("snapshot lacks edge (" + std::to_string(missing.front().first) +
                      "," + std::to_string(missing.front().second) + ")");
  }
  v.raw = std::move(raw);
  v.norm = normalize(v.raw);
  v.features = std::make_shared<const SparseVec>(metric_features(v.norm));
  v.weights = edge_weights(topo.network, v.norm, w);
  return v;
}

}  // namespace macdmr
