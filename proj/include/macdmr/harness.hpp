#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "macdmr/env.hpp"
#include "macdmr/multicast.hpp"
#include "macdmr/topogen.hpp"
#include "macdmr/trainer.hpp"

namespace macdmr {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Topology plus the base metrics the traffic model jitters. On disk: the
// topology JSON with two extra keys, "bw_max" and
// "metrics": [[u,v,bw,delay,loss,err,dist], ...] per directed edge.
struct Instance {
  Topology topology;
  MetricSnapshot base;
  double bw_max = 40.0;
};

std::string instance_to_json(const Instance& inst);
Instance parse_instance(const std::string& text);
Instance load_instance(const std::filesystem::path& path);
void save_instance(const Instance& inst, const std::filesystem::path& path);
Instance make_instance(const GeneratedInstance& g, double bw_max);

struct SnapshotSchedule {
  int count = 100;
  std::uint64_t seed = 1;
  double jitter = 0.3;
};

struct ExperimentConfig {
  std::optional<std::filesystem::path> topology_file;
  TopoGenParams generator;  // used when no file is given
  NodeId src = 0;
  std::vector<NodeId> dests;  // zero-based after parsing
  Hyperparams hp;
  TrainOptions training;
  double train_jitter = 0.3;
  SnapshotSchedule snapshots;
  std::vector<std::string> algorithms{"macdmr", "kmb", "sctf", "exact"};
  std::optional<std::filesystem::path> checkpoint;
  std::filesystem::path output_dir = "out";

  MulticastGroup group() const { return MulticastGroup(src, dests); }
};

// Field-level ConfigError on bad input. Relative paths resolve against
// base_dir.
ExperimentConfig parse_config(const std::string& text,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
// A --seed override: agent initialisation, training traffic and evaluation
// snapshots.
void apply_seed(ExperimentConfig& cfg, std::uint64_t seed);

Instance resolve_instance(const ExperimentConfig& cfg);

struct TreeRow {
  std::uint64_t snapshot_id = 0;
  std::string algorithm;
  bool valid = false;
  double bw = 0.0;     // mean bottleneck, Mbps
  double delay = 0.0;  // mean path delay, ms
  double loss = 0.0;
  double err = 0.0;
  int len = 0;          // edge count
  double dist = 0.0;    // mean of per-path mean link distance, m
  double cost = 0.0;    // tree_weight on the normalized snapshot
  std::string failure;  // why the row is invalid
};

// Per-path raw metrics averaged over the online destinations. An invalid
// tree gives a row with valid = false and zeroed metrics.
TreeRow evaluate_tree(const CrossDomainTree& t, const MulticastGroup& g,
                      const Topology& topo, const SnapshotView& view,
                      const CostWeights& w);

struct AlgorithmSummary {
  std::string algorithm;
  int rows = 0;
  int valid = 0;
  double bw = 0.0, delay = 0.0, loss = 0.0, err = 0.0, len = 0.0, dist = 0.0,
         cost = 0.0;  // means over valid rows
};

struct Report {
  std::vector<TreeRow> rows;
  std::vector<AlgorithmSummary> summary;  // in configured algorithm order
};

std::vector<AlgorithmSummary> summarize(const std::vector<TreeRow>& rows,
                                        const std::vector<std::string>& algorithms);
// Columns: snapshot_id,algorithm,bw_mbps,delay_ms,loss,err,len,dist_m,cost,valid
std::string report_csv(const Report& r);
std::string summary_json(const Report& r);

// Baseline trees on the symmetrized single-edge weights. Throws
// SolverError (exact on more than kExactMaxNodes nodes, no tree).
CrossDomainTree baseline_tree(const std::string& algorithm, const Topology& topo,
                              const MulticastGroup& g, const SnapshotView& view);

// Runs every configured algorithm on each evaluation snapshot. A trained
// system is required when "macdmr" is listed. Baselines run
// snapshot-parallel; results do not depend on the thread count.
Report compare(const ExperimentConfig& cfg, const Instance& inst,
               MultiAgentSystem* trained);

// Evaluation snapshot ids: kEvalSnapshotBase + i.
SnapshotView evaluation_view(const Instance& inst, const ExperimentConfig& cfg,
                             int i);
TrafficModel training_traffic(const Instance& inst, const ExperimentConfig& cfg);

// Writes learning_curve.csv, agent_curves.csv and checkpoint.bin under
// cfg.output_dir.
TrainResult run_training(const ExperimentConfig& cfg, const Instance& inst,
                         MultiAgentSystem& sys, bool verbose);

}  // namespace macdmr
