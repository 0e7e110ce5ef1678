#include "macdmr/traffic.hpp"

#include <algorithm>
#include <cmath>

#include "macdmr/random.hpp"

namespace macdmr {

namespace {

constexpr double kWindow = 1.0;          // seconds between samples
constexpr double kPackets = 1.0e6;       // packets sent per direction per window

std::uint64_t to_count(double x) {
  return static_cast<std::uint64_t>(std::llround(std::max(0.0, x)));
}

}  // namespace

TrafficModel::TrafficModel(const Network& net, MetricSnapshot base,
                           double bw_max, double jitter, std::uint64_t seed)
    : net_(&net), base_(std::move(base)), bw_max_(bw_max), jitter_(jitter),
      seed_(seed) {
  if (base_.size() != net.node_count()) {
    throw MetricError("traffic model: base snapshot size mismatch");
  }
  auto missing = base_.missing(net);
  if (!missing.empty()) {
    throw MetricError("traffic model: base snapshot lacks edge (" +
                      std::to_string(missing.front().first) + "," +
                      std::to_string(missing.front().second) + ")");
  }
  if (!(jitter >= 0.0 && jitter < 1.0)) {
    throw MetricError("traffic model: jitter must lie in [0,1)");
  }
}

CounterTrace TrafficModel::counters(std::uint64_t snapshot_id) const {
  Rng rng(mix_seed(seed_, snapshot_id));
  auto jit = [&](double x) { return x * rng.uniform(1.0 - jitter_, 1.0 + jitter_); };

  struct Dir {
    double bw, loss, err;
  };
  CounterTrace trace;
  for (const Edge& e : net_->edges()) {
    const EdgeMetrics fwd = base_.get(e.u, e.v);
    const EdgeMetrics rev = base_.get(e.v, e.u);
    const double delay = jit(0.5 * (fwd.delay + rev.delay));
    Dir d[2];
    const EdgeMetrics* src[2] = {&fwd, &rev};
    for (int k = 0; k < 2; ++k) {
      d[k].bw = std::clamp(jit(src[k]->bw), 0.0, bw_max_);
      d[k].loss = std::clamp(jit(src[k]->loss), 0.0, 1.0);
      d[k].err = std::clamp(jit(src[k]->err), 0.0, 1.0);
    }
    const NodeId ends[2] = {e.u, e.v};
    PortCounterSample before[2], after[2];
    for (int k = 0; k < 2; ++k) {
      before[k].tx_p = rng.below(1u << 20);
      before[k].rx_p = rng.below(1u << 20);
      before[k].tx_b = rng.below(1u << 30);
      before[k].rx_b = rng.below(1u << 30);
      before[k].tx_err = rng.below(1u << 10);
      before[k].rx_err = rng.below(1u << 10);
      before[k].t_dur = rng.uniform(10.0, 1000.0);
    }
    // Port k faces port 1-k; port k sends direction k.
    for (int k = 0; k < 2; ++k) {
      const int o = 1 - k;
      const double sent = kPackets;
      const double got = kPackets * (1.0 - d[o].loss);  // received from the peer
      const double used_bytes = (bw_max_ - d[k].bw) * kWindow / 8e-6;
      PortCounterSample dl;
      dl.tx_p = to_count(sent);
      dl.rx_p = to_count(got);
      dl.tx_b = to_count(std::ceil(used_bytes / 2.0));
      dl.rx_b = to_count(std::floor(used_bytes / 2.0));
      dl.tx_err = to_count(d[k].err * sent);
      dl.rx_err = to_count(d[o].err * got);
      after[k] = before[k];
      after[k].tx_p += dl.tx_p;
      after[k].rx_p += dl.rx_p;
      after[k].tx_b += dl.tx_b;
      after[k].rx_b += dl.rx_b;
      after[k].tx_err += dl.tx_err;
      after[k].rx_err += dl.rx_err;
      after[k].t_dur += kWindow;
      trace.ports[{ends[k], ends[o]}] = {before[k], after[k]};
    }
    DelayProbe probe;
    probe.rtt1 = rng.uniform(0.5, 2.0);
    probe.rtt2 = rng.uniform(0.5, 2.0);
    probe.t_fwd = probe.rtt1 + delay;
    probe.t_re = probe.rtt2 + delay;
    trace.probes[{e.u, e.v}] = probe;
  }
  return trace;
}

MetricSnapshot TrafficModel::snapshot(std::uint64_t snapshot_id) const {
  return snapshot_from_trace(counters(snapshot_id), *net_, bw_max_);
}

MetricSnapshot snapshot_from_trace(const CounterTrace& trace,
                                   const Network& net, double bw_max) {
  MetricSnapshot snap(net.node_count());
  std::string missing;
  for (const Edge& e : net.edges()) {
    for (auto [a, b] : {std::pair{e.u, e.v}, std::pair{e.v, e.u}}) {
      try {
        snap.set(a, b, metrics_from_trace(trace, net, a, b, bw_max));
      } catch (const MetricError&) {
        missing += (missing.empty() ? "" : " ") + std::to_string(a) + "->" +
                   std::to_string(b);
      }
    }
  }
  if (!missing.empty()) throw MetricError("missing edge samples: " + missing);
  return snap;
}

}  // namespace macdmr
