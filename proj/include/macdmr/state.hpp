#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "macdmr/baselines.hpp"
#include "macdmr/link_metrics.hpp"
#include "macdmr/nn.hpp"
#include "macdmr/topology.hpp"

namespace macdmr {

inline constexpr int kStateChannels = 6;
inline constexpr int kTreeChannel = 5;

// Diagonal role marks of the tree-state channel.
namespace role {
inline constexpr double kSource = 1.0;
inline constexpr double kReachedTarget = 0.75;
inline constexpr double kTarget = 0.5;
inline constexpr double kInTree = 0.25;
}  // namespace role

// Nonzero entries of the five normalized metric channels, flattened as
// c*N*N + i*N + j. Non-edges are zero.
SparseVec metric_features(const NormalizedSnapshot& snap);

// Six-channel N x N observation. The metric channels are shared between all
// states built on one snapshot; the tree channel is stored compactly.
class StateTensor {
 public:
  StateTensor() = default;
  StateTensor(int n, std::shared_ptr<const SparseVec> metrics,
              std::vector<std::pair<int, double>> tree);

  int n() const { return n_; }
  int size() const { return kStateChannels * n_ * n_; }
  double at(int c, NodeId i, NodeId j) const;
  SparseVec sparse() const;
  std::vector<double> dense() const;
  const std::vector<std::pair<int, double>>& tree_entries() const { return tree_; }

 private:
  int n_ = 0;
  std::shared_ptr<const SparseVec> metrics_;
  std::vector<std::pair<int, double>> tree_;  // (i*N+j, value), sorted
};

// Stacks the snapshot channels with a dense N x N tree matrix. Throws
// std::invalid_argument on a dimension mismatch or an entry outside [0,1].
StateTensor build_state(const NormalizedSnapshot& snap,
                        const std::vector<double>& tree_matrix);

// Tree channel from edges (both orientations set to 1) and diagonal roles.
std::vector<std::pair<int, double>> tree_entries(
    int n, const std::vector<Edge>& edges,
    const std::vector<std::pair<NodeId, double>>& roles);

// One snapshot prepared for the agents.
struct SnapshotView {
  const Topology* topo = nullptr;
  MetricSnapshot raw;
  NormalizedSnapshot norm;
  std::shared_ptr<const SparseVec> features;
  EdgeWeightMap weights;  // directed single-edge cost
};

SnapshotView make_view(const Topology& topo, MetricSnapshot raw,
                       const CostWeights& w);

}  // namespace macdmr
