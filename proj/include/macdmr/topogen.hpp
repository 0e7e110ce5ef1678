#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "macdmr/cost.hpp"
#include "macdmr/link_metrics.hpp"
#include "macdmr/topology.hpp"

namespace macdmr {

struct TopoGenParams {
  int n_domains = 4;
  int nodes_per_domain = 7;
  double intra_degree = 3.0;
  int inter_links_per_adjacent_pair = 2;
  Range bw_range{5.0, 40.0};       // Mbps
  Range delay_range{1.0, 10.0};    // ms
  Range dist_range{30.0, 120.0};   // m
  Range loss_range{0.0, 0.05};
  Range err_range{0.0, 0.01};
  double bw_max = 40.0;
  std::uint64_t seed = 1;
  // Inter-domain loss/err are scaled along with delay and dist.
  bool scale_loss_err = true;
  int max_attempts = 64;
  CostWeights weights;  // used by the Hypothesis-2 check

  void validate() const;  // throws std::invalid_argument
};

struct GeneratedInstance {
  Topology topology;
  MetricSnapshot metrics;  // raw units, both directions of every edge
  double inter_scale = 1.0;
  int attempts = 1;
};

// Domains sit on a near-square grid and each domain links to its grid
// neighbours. Each domain is a random spanning tree plus extra edges up to
// the target degree. Inter-domain delay/dist (and loss/err when enabled) are
// multiplied by a doubling scale and bandwidth divided by it until
// check_hypothesis2 passes; after 2^10 the metrics are redrawn.
GeneratedInstance generate_random(const TopoGenParams& params);
// The two halves of generate_random. assign_metrics keeps the shape but
// replaces edge lengths with the drawn (and scaled) distances.
Topology generate_shape(const TopoGenParams& params);
GeneratedInstance assign_metrics(const Topology& shape,
                                 const TopoGenParams& params);

struct Hypothesis2Report {
  bool pass = true;
  double min_inter = 0.0;  // cheapest inter edge, cheaper direction
  double max_intra = 0.0;  // costliest intra-domain min-cost path
  DomainId worst_domain = 0;
  NodeId worst_from = -1;
  NodeId worst_to = -1;
  std::vector<Edge> violating;  // inter edges with cost <= max_intra
};

// Intra-domain path costs come from directed Dijkstra over single-edge
// costs restricted to each domain.
Hypothesis2Report check_hypothesis2(const Network& net,
                                    const DomainPartition& p,
                                    const NormalizedSnapshot& snap,
                                    const CostWeights& w);

}  // namespace macdmr
