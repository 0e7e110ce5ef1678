#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "macdmr/baselines.hpp"
#include "macdmr/link_metrics.hpp"
#include "macdmr/multicast.hpp"
#include "macdmr/topology.hpp"

namespace macdmr {

class CcmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MgmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Domain 0 is the root controller; it owns the inter-domain edges.
inline constexpr DomainId kRootDomain = 0;

enum class CcmType { kTopologySync, kMetricsSync, kTreeInstall, kGroupUpdate };
const char* ccm_type_name(CcmType t);
CcmType parse_ccm_type(const std::string& s);  // throws CcmError

// Payload schemas (JSON):
//   topology_sync: {"nodes":[int],"edges":[[u,v,length]]}
//   metrics_sync:  {"timestamp":num,"edges":[{"u":int,"v":int,"bw":num,
//                   "delay":num,"loss":num,"err":num,"dist":num}]}
//   tree_install:  {"group":int,"src":int,"edges":[[u,v]]}
//   group_update:  {"group":int,"node":int,"op":"add"|"leave"}
// The payload is kept as serialized JSON text.
struct CcmMessage {
  CcmType type = CcmType::kTopologySync;
  DomainId domain = 0;
  std::uint64_t seq = 0;
  std::string payload;

  bool operator==(const CcmMessage&) const = default;
};

// {"msg_type":..,"domain":..,"seq":..,"payload":{..}} on one line.
std::string ccm_to_json(const CcmMessage& m);
// Throws CcmError naming the offending field.
CcmMessage ccm_from_json(const std::string& line);
void validate_payload(CcmType type, const std::string& payload);

// Metrics a local controller measured for its own edges (the root controller
// for the inter-domain edges), both directions.
struct DomainSnapshot {
  DomainId domain = 0;
  double timestamp = 0.0;
  std::vector<std::pair<std::pair<NodeId, NodeId>, EdgeMetrics>> entries;
};

// Intra edges of `domain`, or the inter edges for kRootDomain. Throws
// MetricError listing every directed edge without samples.
DomainSnapshot collect_domain_snapshot(const Topology& topo, DomainId domain,
                                       const CounterTrace& trace, double bw_max,
                                       double timestamp);

CcmMessage topology_sync_message(const Topology& topo, DomainId domain,
                                 std::uint64_t seq);
CcmMessage metrics_sync_message(const DomainSnapshot& snap, std::uint64_t seq);

// Root-side network link information. Last writer wins per (domain, type) by
// seq; stale or repeated messages are ignored, so merging is idempotent and
// independent of arrival order.
class NliStore {
 public:
  explicit NliStore(int node_count);

  // True if the message replaced the stored one.
  bool apply(const CcmMessage& m);
  std::uint64_t last_seq(DomainId d, CcmType t) const;  // 0 if none
  std::optional<CcmMessage> latest(DomainId d, CcmType t) const;

  // Union of the latest metrics_sync payloads.
  MetricSnapshot snapshot() const;
  // Union of the latest topology_sync edges, sorted.
  std::vector<Edge> edges() const;
  std::size_t message_count() const { return latest_.size(); }

  bool operator==(const NliStore& o) const { return latest_ == o.latest_; }

 private:
  int n_;
  std::map<std::pair<DomainId, int>, CcmMessage> latest_;
};

NliStore sync_to_root(int node_count, const std::vector<CcmMessage>& messages);

// In-process transport with JSONL record/replay.
class MessageBus {
 public:
  void publish(CcmMessage m) { log_.push_back(std::move(m)); }
  const std::vector<CcmMessage>& log() const { return log_; }
  // Applies everything published so far; returns how many were accepted.
  std::size_t deliver(NliStore& store) const;
  std::string to_jsonl() const;
  static MessageBus from_jsonl(const std::string& text);

 private:
  std::vector<CcmMessage> log_;
};

struct FlowEntry {
  int group = 0;
  std::optional<NodeId> in;  // tree parent, none at the source
  std::vector<NodeId> out;   // tree children, sorted
  bool deliver = false;      // node is an online destination

  bool operator==(const FlowEntry&) const = default;
  auto operator<=>(const FlowEntry&) const = default;
};

using FlowTables = std::map<NodeId, std::vector<FlowEntry>>;

// One entry per in-tree node. Throws TreeError if validate reports anything.
FlowTables install_tree(const CrossDomainTree& t, const MulticastGroup& g,
                        int group_id, const Topology& topo);
// {"node":[{"group":int,"in":int|null,"out":[int],"deliver":bool}]}
std::string flow_tables_to_json(const FlowTables& ft);

// Follows out-neighbours from src, checking that every hop arrives on the
// entry's in-neighbour. Returns the nodes whose entry delivers. Throws
// TreeError on a missing entry, an in-port mismatch or a revisit.
std::set<NodeId> simulate_delivery(const FlowTables& ft, int group_id, NodeId src);

struct FlowDelta {
  std::vector<std::pair<NodeId, FlowEntry>> removed;
  std::vector<std::pair<NodeId, FlowEntry>> added;
};
FlowDelta diff_flow_tables(const FlowTables& before, const FlowTables& after);

struct MgmResult {
  CrossDomainTree tree;
  FlowDelta delta;
  std::vector<Edge> changed;  // grafted or pruned edges
};

// Grafts the cheapest path (symmetrized single-edge weights) from v to the
// tree and marks v online. The path never revisits a domain and only enters
// domains without tree nodes, except the domain of the tree node it ends on,
// so the grafted tree keeps every domain in one piece. Throws MgmError if v
// is already an online member or no such path exists.
MgmResult mgm_join(const CrossDomainTree& t, MulticastGroup& g, NodeId v,
                   const Topology& topo, const EdgeWeightMap& w, int group_id);

// Marks v offline and prunes its branch upward until a branch point, the
// source or another online destination. Throws MgmError if v is not an online
// member.
MgmResult mgm_leave(const CrossDomainTree& t, MulticastGroup& g, NodeId v,
                    const Topology& topo, int group_id);

struct GroupDomains {
  DomainId src_domain = 0;
  std::map<DomainId, std::vector<NodeId>> dests;  // online destinations
  bool single_domain() const {
    return dests.size() == 1 && dests.begin()->first == src_domain;
  }
};
GroupDomains locate_group_domains(const MulticastGroup& g, const DomainPartition& p);

}  // namespace macdmr
