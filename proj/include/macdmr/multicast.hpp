#pragma once

#include <map>
#include <string>
#include <vector>

#include "macdmr/cost.hpp"
#include "macdmr/topology.hpp"

namespace macdmr {

class TreeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MulticastGroup {
 public:
  MulticastGroup() = default;
  // All destinations start online. Throws std::invalid_argument when dests
  // is empty, contains src, or repeats a node.
  MulticastGroup(NodeId src, std::vector<NodeId> dests);

  NodeId src() const { return src_; }
  const std::vector<NodeId>& dests() const { return dests_; }  // sorted
  bool is_member(NodeId v) const;
  bool is_online(NodeId v) const;
  void set_online(NodeId v, bool online);
  // Adds v as a new (online) destination.
  void add_member(NodeId v);
  std::vector<NodeId> online_dests() const;

  void check_nodes(const Network& net) const;

 private:
  NodeId src_ = 0;
  std::vector<NodeId> dests_;
  std::vector<char> online_;
};

std::vector<NodeId> dests_in_domain(const DomainPartition& p,
                                    const MulticastGroup& g, DomainId d);

struct InterdomainTree {
  std::vector<Edge> edges;  // sorted
  bool operator==(const InterdomainTree&) const = default;
};

struct IntradomainTree {
  DomainId domain = 0;
  NodeId root = 0;
  std::vector<Edge> edges;  // sorted

  std::vector<NodeId> nodes() const;  // root plus edge endpoints, sorted
  bool operator==(const IntradomainTree&) const = default;
};

struct CrossDomainTree {
  NodeId src = 0;
  InterdomainTree inter;
  std::vector<IntradomainTree> intra;  // ordered by (domain, root)
  std::vector<Edge> edges;             // flat union, sorted

  std::vector<NodeId> nodes() const;  // src plus edge endpoints, sorted
  bool contains(NodeId v) const;
};

// Flat tree from an edge set; the inter/intra parts are filled by decompose.
CrossDomainTree make_tree(NodeId src, std::vector<Edge> edges,
                          const DomainPartition& p);

// Flat union of the parts. Throws TreeError when an inter edge endpoint is
// absent from every intra tree of its domain, or an intra edge leaves its
// domain.
CrossDomainTree compose(NodeId src, const InterdomainTree& inter,
                        const std::vector<IntradomainTree>& intra,
                        const DomainPartition& p);

struct Decomposition {
  InterdomainTree inter;
  std::vector<IntradomainTree> intra;
};
// One IntradomainTree per connected component of each domain's tree nodes
// (joined by intra-domain tree edges). Root is the component node nearest to
// src along the tree.
Decomposition decompose(const CrossDomainTree& t, const DomainPartition& p);

// Parent of every node reachable from src over the flat edges (BFS, lowest id
// first); -1 for src and unreachable nodes.
std::vector<NodeId> tree_parents(const CrossDomainTree& t, int node_count);

// Unique src->d path for each online destination. Throws TreeError if a
// destination is unreachable.
std::map<NodeId, Path> extract_paths(const CrossDomainTree& t,
                                     const MulticastGroup& g, int node_count);

// Domain sequence PN_i per online destination, consecutive repeats collapsed.
std::map<NodeId, std::vector<DomainId>> interdomain_paths(
    const CrossDomainTree& t, const MulticastGroup& g, const DomainPartition& p);

enum class ViolationKind {
  kUnknownEdge,
  kCycle,
  kDisconnected,
  kUncovered,
  kDomainRevisit,   // Theorem 1(1)
  kInconsistentPn,  // Theorem 1(2)
  kForest,          // Theorem 2
};
const char* violation_name(ViolationKind k);

struct Violation {
  ViolationKind kind;
  std::vector<int> subject;  // nodes or domains involved
  std::string detail;
};

std::vector<Violation> validate(const CrossDomainTree& t,
                                const MulticastGroup& g, const Network& net,
                                const DomainPartition& p);
inline bool is_valid(const CrossDomainTree& t, const MulticastGroup& g,
                     const Network& net, const DomainPartition& p) {
  return validate(t, g, net, p).empty();
}

// Sum of path costs over online destinations.
double tree_cost_endtoend(const CrossDomainTree& t, const MulticastGroup& g,
                          const NormalizedSnapshot& snap, const CostWeights& w);

struct DecomposedCost {
  // One entry per IntradomainTree of decompose(t), same order.
  std::vector<DomainId> domains;
  std::vector<double> c_intra;
  double c_int = 0.0;
  double total = 0.0;
};
// C_i sums root->target path costs inside each intra tree, where targets are
// the online destinations and exit boundary nodes of that tree. C_int sums,
// per destination domain other than the source domain, the cost of the
// inter-domain edges on the tree path into that domain.
DecomposedCost tree_cost_decomposed(const CrossDomainTree& t,
                                    const MulticastGroup& g,
                                    const DomainPartition& p,
                                    const NormalizedSnapshot& snap,
                                    const CostWeights& w);

// Sum of single-edge costs over the flat edges, each edge weighted by the
// mean of its two directions (the Steiner objective).
double tree_weight(const std::vector<Edge>& edges,
                   const NormalizedSnapshot& snap, const CostWeights& w);

// {"src":int,"dests":[int],"inter_edges":[[int,int]],
//  "intra":[{"domain":int,"root":int,"edges":[[int,int]]}]}
std::string tree_to_json(const CrossDomainTree& t, const MulticastGroup& g);
CrossDomainTree tree_from_json(const std::string& text,
                               const DomainPartition& p);

}  // namespace macdmr
