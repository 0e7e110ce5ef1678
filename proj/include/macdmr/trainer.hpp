#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "macdmr/agent.hpp"
#include "macdmr/env.hpp"
#include "macdmr/multicast.hpp"
#include "macdmr/traffic.hpp"

namespace macdmr {

// One inter-domain agent plus one intra-domain agent per domain, each with
// its own parameters, buffer, environment and RNG stream. Agent index 0 is
// the inter-domain agent, index d the agent of domain d.
class MultiAgentSystem {
 public:
  MultiAgentSystem(const Topology& topo, MulticastGroup group, Hyperparams hp,
                   std::size_t buffer_capacity = 10000);
  MultiAgentSystem(const MultiAgentSystem&) = delete;
  MultiAgentSystem& operator=(const MultiAgentSystem&) = delete;

  const Topology& topology() const { return *topo_; }
  const MulticastGroup& group() const { return group_; }
  const Hyperparams& hyperparams() const { return hp_; }
  int agent_count() const { return static_cast<int>(agents_.size()); }

  ActorCriticAgent& agent(int i) { return *agents_.at(i); }
  const ActorCriticAgent& agent(int i) const { return *agents_.at(i); }
  InterdomainEnv& inter_env() { return *inter_env_; }
  IntradomainEnv& intra_env(DomainId d) { return *intra_envs_.at(d - 1); }
  // Steps seen by agent i, drives periodic offline training.
  long& step_counter(int i) { return counters_.at(i); }
  void set_parallel_kernels(bool on);

 private:
  const Topology* topo_;
  MulticastGroup group_;
  Hyperparams hp_;
  std::vector<std::unique_ptr<ActorCriticAgent>> agents_;
  std::unique_ptr<InterdomainEnv> inter_env_;
  std::vector<std::unique_ptr<IntradomainEnv>> intra_envs_;
  std::vector<long> counters_;
};

enum class ActionMode {
  kSample,     // draw from pi over all actions
  kBehaviour,  // 80% uniform valid, 20% uniform any
  kGreedy,     // argmax over valid actions
};

struct EpisodeOptions {
  ActionMode mode = ActionMode::kSample;
  bool online = true;       // n_update updates after every step
  bool store = true;        // push transitions into the agent's buffer
  int offline_period = 0;   // agent steps between offline trainings, 0 = off
  int offline_batches = 1;
  bool parallel = false;    // intra-domain agents on separate threads
};

struct AgentStats {
  bool active = false;
  double reward = 0.0;
  int steps = 0;
  bool success = false;
  double cost = 0.0;  // tree_weight of the agent's own edges
};

struct EpisodeResult {
  bool valid = false;
  std::optional<CrossDomainTree> tree;
  std::string failure;
  double total_reward = 0.0;
  int steps = 0;
  double tree_cost = 0.0;  // tree_weight of the composed tree
  std::vector<AgentStats> agents;
};

// Inter-domain agent first, then every intra-domain agent touched by the
// inter-domain tree, then composition and validation.
EpisodeResult run_episode(MultiAgentSystem& sys, const SnapshotView& view,
                          const EpisodeOptions& opt);

// Masked argmax rollout without learning.
EpisodeResult greedy_rollout(MultiAgentSystem& sys, const SnapshotView& view);

struct TrainOptions {
  int episodes = 2000;
  bool hybrid = true;
  int pretrain_batches = 100;  // per agent, after the E_off collection
  int offline_period = 10;
  int offline_batches = 1;
  bool parallel = false;
  // Snapshot ids: training episode e uses e, collection episode e uses
  // kCollectionBase + e.
  static constexpr std::uint64_t kCollectionBase = 1ull << 40;
};

struct EpisodeRecord {
  int episode = 0;
  double total_reward = 0.0;
  int steps = 0;
  bool valid = false;
  double tree_cost = 0.0;
  std::vector<AgentStats> agents;
};

struct TrainResult {
  std::vector<EpisodeRecord> curve;  // one row per training episode
  int collection_episodes = 0;
};

using EpisodeCallback = std::function<void(const EpisodeRecord&)>;

// Hybrid: E_off behaviour episodes fill the buffers, every agent pre-trains
// offline, then the online episodes interleave periodic offline training.
// Pure online: the online episodes only, no buffer use. Zero episodes leaves
// the parameters untouched.
TrainResult train(MultiAgentSystem& sys, const TrafficModel& traffic,
                  const TrainOptions& opt, const EpisodeCallback& cb = {});

// Held-out snapshot ids start here.
inline constexpr std::uint64_t kEvalSnapshotBase = 1ull << 48;

// Last episode of the first full moving-average window whose mean reaches
// final - 0.1 |final|, final being the mean of the last 10% of episodes.
// window <= 0 uses the same 10% span for the moving average. Returns -1 for
// an empty series.
int convergence_episode(const std::vector<double>& rewards, int window = 0);

// CSV: episode,agent_id,total_reward,steps,valid_tree,tree_cost
std::string learning_curve_csv(const TrainResult& r);
std::string agent_curves_csv(const TrainResult& r, const MultiAgentSystem& sys);

// Binary checkpoint: "MACDMRCK", u32 version, u32 agents; per agent the
// name, then actor and critic as layer shapes and row-major doubles.
void save_checkpoint(const MultiAgentSystem& sys, const std::filesystem::path& path);
void load_checkpoint(MultiAgentSystem& sys, const std::filesystem::path& path);

}  // namespace macdmr
