#pragma once

#include <cstdint>

#include "macdmr/link_metrics.hpp"
#include "macdmr/topology.hpp"

namespace macdmr {

// Synthetic background traffic. Each snapshot jitters the base metrics by a
// uniform factor in [1-jitter, 1+jitter], turns them into port counters and
// probes, and recovers the metrics through the counter formulas.
class TrafficModel {
 public:
  TrafficModel(const Network& net, MetricSnapshot base, double bw_max = 40.0,
               double jitter = 0.3, std::uint64_t seed = 1);

  CounterTrace counters(std::uint64_t snapshot_id) const;
  MetricSnapshot snapshot(std::uint64_t snapshot_id) const;

  const MetricSnapshot& base() const { return base_; }
  double bw_max() const { return bw_max_; }

 private:
  const Network* net_;
  MetricSnapshot base_;
  double bw_max_;
  double jitter_;
  std::uint64_t seed_;
};

// Metrics of every directed edge from a trace; throws MetricError listing
// every edge without samples.
MetricSnapshot snapshot_from_trace(const CounterTrace& trace,
                                   const Network& net, double bw_max);

}  // namespace macdmr
