#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "macdmr/cost.hpp"
#include "macdmr/multicast.hpp"
#include "macdmr/state.hpp"

namespace macdmr {

struct Hyperparams {
  CostWeights weights;
  double alpha_actor = 1e-4;
  double alpha_critic = 3e-4;
  double gamma = 0.9;
  int batch_size = 32;  // k
  int n_update = 10;
  int episodes = 2000;
  double r_loop = -0.5;
  double r_hell = -0.7;
  double lambda_part = 0.1;
  // When true the step reward is scaled instead of the terminal one.
  bool scale_end = false;
  int t_max = -1;  // -1: 4 x action count
  int e_off = 50;
  int hidden = 256;
  std::uint64_t seed = 1;

  void validate() const;  // throws std::invalid_argument
};

enum class StepKind { kValid, kLoop, kHell };

struct StepResult {
  StateTensor next;
  double reward = 0.0;
  bool done = false;
  StepKind kind = StepKind::kValid;
};

// Reward shaping shared by both environments.
struct RewardModel {
  const Hyperparams* hp = nullptr;
  double part(const EdgeMetrics& m) const;
  double end(const PathMetrics& m) const;
};

// Builds the inter-domain tree one boundary-node edge at a time. An edge is
// valid when exactly one of its domains is already connected to the source
// domain; joining two connected domains is a loop, joining two unconnected
// ones is out of reach.
class InterdomainEnv {
 public:
  InterdomainEnv(const Topology& topo, const MulticastGroup& group,
                 const Hyperparams& hp);

  // Sorted inter-domain edges.
  const std::vector<Edge>& actions() const { return actions_; }
  int action_count() const { return static_cast<int>(actions_.size()); }
  int t_max() const { return t_max_; }

  StateTensor reset(const SnapshotView& view);
  StepResult step(int action);
  std::vector<char> valid_mask() const;

  const StateTensor& state() const { return state_; }
  bool done() const { return done_; }
  bool success() const { return success_; }
  int steps() const { return steps_; }

  // Inter edges left after dropping connected domains that are leaves of the
  // domain tree and hold no destination.
  InterdomainTree result() const;

 private:
  StateTensor make_state() const;
  bool finished() const;

  const Topology* topo_;
  const MulticastGroup* group_;
  const Hyperparams* hp_;
  RewardModel reward_;
  std::vector<Edge> actions_;
  std::vector<DomainId> dest_domains_;
  int t_max_ = 0;

  const SnapshotView* view_ = nullptr;
  std::vector<char> connected_;                     // by domain
  std::vector<std::pair<NodeId, NodeId>> via_;      // by domain: entry edge (from, to)
  std::vector<DomainId> parent_domain_;
  std::vector<Edge> chosen_;
  StateTensor state_;
  int steps_ = 0;
  bool done_ = false;
  bool success_ = false;
};

// Per-domain task derived from a finished inter-domain tree.
struct DomainTask {
  DomainId domain = 0;
  NodeId root = 0;
  std::vector<NodeId> targets;  // online destinations and exit BNs, sorted
};

// Tasks for every domain touched by the inter tree (or the source domain
// alone). Domains are visited in increasing id.
std::vector<DomainTask> domain_tasks(const Topology& topo,
                                     const MulticastGroup& group,
                                     const InterdomainTree& inter);

// Grows a tree inside one domain by picking the next node. A node adjacent
// to the tree joins through its cheapest connecting edge (lowest tree node
// on ties); an in-tree node is a loop; a non-adjacent node is out of reach.
class IntradomainEnv {
 public:
  IntradomainEnv(const Topology& topo, DomainId domain, NodeId src,
                 const Hyperparams& hp);

  DomainId domain() const { return domain_; }
  const std::vector<NodeId>& actions() const { return actions_; }
  int action_count() const { return static_cast<int>(actions_.size()); }
  int t_max() const { return t_max_; }

  StateTensor reset(const SnapshotView& view, const DomainTask& task);
  StepResult step(int action);
  std::vector<char> valid_mask() const;

  const StateTensor& state() const { return state_; }
  bool done() const { return done_; }
  bool success() const { return success_; }
  int steps() const { return steps_; }

  // Tree with non-target leaves pruned.
  IntradomainTree result() const;

 private:
  StateTensor make_state() const;
  bool adjacent_to_tree(NodeId v, NodeId* via) const;

  const Topology* topo_;
  DomainId domain_;
  NodeId src_;
  const Hyperparams* hp_;
  RewardModel reward_;
  std::vector<NodeId> actions_;
  int t_max_ = 0;

  const SnapshotView* view_ = nullptr;
  DomainTask task_;
  std::vector<char> in_tree_;  // by global node id
  std::vector<NodeId> parent_;
  std::vector<char> reached_;
  std::vector<Edge> edges_;
  StateTensor state_;
  int steps_ = 0;
  bool done_ = false;
  bool success_ = false;
};

}  // namespace macdmr
