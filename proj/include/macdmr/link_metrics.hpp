#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "macdmr/topology.hpp"

namespace macdmr {

class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PortCounterSample {
  std::uint64_t tx_p = 0;
  std::uint64_t rx_p = 0;
  std::uint64_t tx_b = 0;
  std::uint64_t rx_b = 0;
  std::uint64_t tx_err = 0;
  std::uint64_t rx_err = 0;
  double t_dur = 0.0;  // seconds since port up
};

struct DelayProbe {
  double t_fwd = 0.0;  // ms
  double t_re = 0.0;
  double rtt1 = 0.0;
  double rtt2 = 0.0;
};

enum class Metric : int { kBw = 0, kDelay = 1, kLoss = 2, kErr = 3, kDist = 4 };
inline constexpr int kMetricCount = 5;
const char* metric_name(Metric m);

struct EdgeMetrics {
  double bw = 0.0;     // Mbps remaining
  double delay = 0.0;  // ms
  double loss = 0.0;
  double err = 0.0;
  double dist = 0.0;   // meters

  double get(Metric m) const;
  void set(Metric m, double value);
};

struct Bandwidth {
  double ubw = 0.0;  // used, Mbps
  double bw = 0.0;   // remaining, Mbps
};

// Throughput from the byte delta between two samples of one port. Order of
// the samples does not matter; throws if the time delta is not positive.
Bandwidth compute_bandwidth(const PortCounterSample& s1,
                            const PortCounterSample& s2, double bw_max);
double compute_loss(const PortCounterSample& tx, const PortCounterSample& rx);
double compute_err(const PortCounterSample& sender,
                   const PortCounterSample& receiver);
double compute_delay(const DelayProbe& p);
double distance(const Point& a, const Point& b);

// Per-directed-edge metrics over a dense N x N grid. Only entries whose
// `present` flag is set carry data.
class MetricSnapshot {
 public:
  MetricSnapshot() = default;
  explicit MetricSnapshot(int n);

  int size() const { return n_; }
  bool has(NodeId i, NodeId j) const;
  EdgeMetrics get(NodeId i, NodeId j) const;  // throws on missing entry
  void set(NodeId i, NodeId j, const EdgeMetrics& m);
  void set_both(NodeId i, NodeId j, const EdgeMetrics& m) {
    set(i, j, m);
    set(j, i, m);
  }
  std::size_t entry_count() const;

  // Raw channel storage, row-major N*N.
  const std::vector<double>& channel(Metric m) const {
    return ch_[static_cast<int>(m)];
  }
  const std::vector<std::uint8_t>& mask() const { return present_; }

  // Names every topology edge direction without metrics; empty when complete.
  std::vector<std::pair<NodeId, NodeId>> missing(const Network& net) const;

  bool operator==(const MetricSnapshot&) const = default;

 private:
  std::size_t idx(NodeId i, NodeId j) const;

  int n_ = 0;
  std::array<std::vector<double>, kMetricCount> ch_;
  std::vector<std::uint8_t> present_;
};

struct Range {
  double min = 0.0;
  double max = 0.0;
};

class NormalizedSnapshot {
 public:
  NormalizedSnapshot() = default;
  NormalizedSnapshot(MetricSnapshot values, std::array<Range, kMetricCount> ranges)
      : values_(std::move(values)), ranges_(ranges) {}

  int size() const { return values_.size(); }
  bool has(NodeId i, NodeId j) const { return values_.has(i, j); }
  EdgeMetrics get(NodeId i, NodeId j) const { return values_.get(i, j); }
  const MetricSnapshot& values() const { return values_; }
  const Range& range(Metric m) const { return ranges_[static_cast<int>(m)]; }
  const std::array<Range, kMetricCount>& ranges() const { return ranges_; }

  double denormalize(Metric m, double x) const;
  EdgeMetrics denormalize(const EdgeMetrics& e) const;
  MetricSnapshot denormalized() const;

 private:
  MetricSnapshot values_;
  std::array<Range, kMetricCount> ranges_{};
};

// Max-min normalization per channel over all present entries. A channel
// whose min equals its max maps to 0 everywhere.
NormalizedSnapshot normalize(const MetricSnapshot& snap);

// Counter-trace records, one JSON object per line:
//   {"u":int,"v":int,"sample":int,"tx_p":..,"rx_p":..,"tx_b":..,"rx_b":..,
//    "tx_err":..,"rx_err":..,"t_dur":float}
//   {"u":int,"v":int,"probe":{"t_fwd":..,"t_re":..,"rtt1":..,"rtt2":..}}
// A counter record is the port on u facing v.
struct CounterTrace {
  // (u, v) -> samples ordered by sample index
  std::map<std::pair<NodeId, NodeId>, std::vector<PortCounterSample>> ports;
  std::map<std::pair<NodeId, NodeId>, DelayProbe> probes;  // key u < v
};

CounterTrace parse_counter_trace(const std::string& jsonl);
CounterTrace load_counter_trace(const std::filesystem::path& path);
std::string counter_trace_to_jsonl(const CounterTrace& trace);

// Metrics for the directed edge u->v from the trace: bw and loss/err from the
// first and last samples of ports (u,v) and (v,u), delay from the probe, dist
// from the network edge length.
EdgeMetrics metrics_from_trace(const CounterTrace& trace, const Network& net,
                               NodeId u, NodeId v, double bw_max);

// Snapshot CSV: header "edge,bw,delay,loss,err,dist", one row per directed
// edge, edge written as "u-v".
std::string snapshot_to_csv(const MetricSnapshot& snap);

}  // namespace macdmr
