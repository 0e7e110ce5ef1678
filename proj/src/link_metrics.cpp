#include "macdmr/link_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace macdmr {

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

std::string edge_name(NodeId u, NodeId v) {
  return "(" + std::to_string(u) + "," + std::to_string(v) + ")";
}

}  // namespace

const char* metric_name(Metric m) {
  switch (m) {
    case Metric::kBw: return "bw";
    case Metric::kDelay: return "delay";
    case Metric::kLoss: return "loss";
    case Metric::kErr: return "err";
    case Metric::kDist: return "dist";
  }
  return "?";
}

double EdgeMetrics::get(Metric m) const {
  switch (m) {
    case Metric::kBw: return bw;
    case Metric::kDelay: return delay;
    case Metric::kLoss: return loss;
    case Metric::kErr: return err;
    case Metric::kDist: return dist;
  }
  return 0.0;
}

void EdgeMetrics::set(Metric m, double value) {
  switch (m) {
    case Metric::kBw: bw = value; break;
    case Metric::kDelay: delay = value; break;
    case Metric::kLoss: loss = value; break;
    case Metric::kErr: err = value; break;
    case Metric::kDist: dist = value; break;
  }
}

Bandwidth compute_bandwidth(const PortCounterSample& s1,
                            const PortCounterSample& s2, double bw_max) {
  const PortCounterSample& early = s1.t_dur <= s2.t_dur ? s1 : s2;
  const PortCounterSample& late = s1.t_dur <= s2.t_dur ? s2 : s1;
  const double dt = late.t_dur - early.t_dur;
  if (!(dt > 0.0)) {
    throw MetricError("compute_bandwidth: non-positive time delta");
  }
  const double b_late = static_cast<double>(late.tx_b) + static_cast<double>(late.rx_b);
  const double b_early = static_cast<double>(early.tx_b) + static_cast<double>(early.rx_b);
  Bandwidth out;
  out.ubw = 8e-6 * std::abs(b_late - b_early) / dt;
  out.bw = std::max(0.0, bw_max - out.ubw);
  return out;
}

double compute_loss(const PortCounterSample& tx, const PortCounterSample& rx) {
  if (tx.tx_p == 0) throw MetricError("compute_loss: undefined loss, tx_p = 0");
  const double t = static_cast<double>(tx.tx_p);
  return clamp01((t - static_cast<double>(rx.rx_p)) / t);
}

double compute_err(const PortCounterSample& sender,
                   const PortCounterSample& receiver) {
  const double den =
      static_cast<double>(sender.tx_p) + static_cast<double>(receiver.rx_p);
  if (den <= 0.0) throw MetricError("compute_err: zero packet count");
  const double num =
      static_cast<double>(sender.tx_err) + static_cast<double>(receiver.rx_err);
  return clamp01(num / den);
}

double compute_delay(const DelayProbe& p) {
  return std::max(0.0, (p.t_fwd + p.t_re - p.rtt1 - p.rtt2) / 2.0);
}

double distance(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

MetricSnapshot::MetricSnapshot(int n) : n_(n) {
  if (n < 0) throw MetricError("negative snapshot size");
  const std::size_t cells = static_cast<std::size_t>(n) * n;
  for (auto& c : ch_) c.assign(cells, 0.0);
  present_.assign(cells, 0);
}

std::size_t MetricSnapshot::idx(NodeId i, NodeId j) const {
  if (i < 0 || j < 0 || i >= n_ || j >= n_) {
    throw MetricError("snapshot index " + edge_name(i, j) + " out of range");
  }
  return static_cast<std::size_t>(i) * n_ + j;
}

bool MetricSnapshot::has(NodeId i, NodeId j) const {
  if (i < 0 || j < 0 || i >= n_ || j >= n_) return false;
  return present_[static_cast<std::size_t>(i) * n_ + j] != 0;
}

EdgeMetrics MetricSnapshot::get(NodeId i, NodeId j) const {
  const std::size_t k = idx(i, j);
  if (!present_[k]) throw MetricError("missing edge metric " + edge_name(i, j));
  EdgeMetrics m;
  m.bw = ch_[0][k];
  m.delay = ch_[1][k];
  m.loss = ch_[2][k];
  m.err = ch_[3][k];
  m.dist = ch_[4][k];
  return m;
}

void MetricSnapshot::set(NodeId i, NodeId j, const EdgeMetrics& m) {
  const std::size_t k = idx(i, j);
  ch_[0][k] = m.bw;
  ch_[1][k] = m.delay;
  ch_[2][k] = m.loss;
  ch_[3][k] = m.err;
  ch_[4][k] = m.dist;
  present_[k] = 1;
}

std::size_t MetricSnapshot::entry_count() const {
  return static_cast<std::size_t>(
      std::count(present_.begin(), present_.end(), std::uint8_t{1}));
}

std::vector<std::pair<NodeId, NodeId>> MetricSnapshot::missing(
    const Network& net) const {
  std::vector<std::pair<NodeId, NodeId>> out;
  for (const Edge& e : net.edges()) {
    if (!has(e.u, e.v)) out.emplace_back(e.u, e.v);
    if (!has(e.v, e.u)) out.emplace_back(e.v, e.u);
  }
  return out;
}

double NormalizedSnapshot::denormalize(Metric m, double x) const {
  const Range& r = range(m);
  return r.min + x * (r.max - r.min);
}

EdgeMetrics NormalizedSnapshot::denormalize(const EdgeMetrics& e) const {
  EdgeMetrics out;
  for (int c = 0; c < kMetricCount; ++c) {
    auto m = static_cast<Metric>(c);
    out.set(m, denormalize(m, e.get(m)));
  }
  return out;
}

MetricSnapshot NormalizedSnapshot::denormalized() const {
  MetricSnapshot out(size());
  for (int i = 0; i < size(); ++i) {
    for (int j = 0; j < size(); ++j) {
      if (values_.has(i, j)) out.set(i, j, denormalize(values_.get(i, j)));
    }
  }
  return out;
}

NormalizedSnapshot normalize(const MetricSnapshot& snap) {
  const int n = snap.size();
  if (snap.entry_count() == 0) throw MetricError("normalize: empty snapshot");
  std::array<Range, kMetricCount> ranges{};
  for (int c = 0; c < kMetricCount; ++c) {
    const auto& ch = snap.channel(static_cast<Metric>(c));
    bool first = true;
    for (std::size_t k = 0; k < ch.size(); ++k) {
      if (!snap.mask()[k]) continue;
      if (first) {
        ranges[c] = {ch[k], ch[k]};
        first = false;
      } else {
        ranges[c].min = std::min(ranges[c].min, ch[k]);
        ranges[c].max = std::max(ranges[c].max, ch[k]);
      }
    }
  }
  MetricSnapshot out(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!snap.has(i, j)) continue;
      EdgeMetrics raw = snap.get(i, j);
      EdgeMetrics norm;
      for (int c = 0; c < kMetricCount; ++c) {
        auto m = static_cast<Metric>(c);
        const double span = ranges[c].max - ranges[c].min;
        norm.set(m, span > 0.0 ? (raw.get(m) - ranges[c].min) / span : 0.0);
      }
      out.set(i, j, norm);
    }
  }
  return NormalizedSnapshot(std::move(out), ranges);
}

CounterTrace parse_counter_trace(const std::string& jsonl) {
  using nlohmann::json;
  CounterTrace trace;
  std::map<std::pair<NodeId, NodeId>, std::map<int, PortCounterSample>> ordered;
  std::istringstream in(jsonl);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
      const NodeId u = rec.at("u").get<int>();
      const NodeId v = rec.at("v").get<int>();
      if (rec.contains("probe")) {
        const auto& p = rec["probe"];
        DelayProbe probe{p.at("t_fwd").get<double>(), p.at("t_re").get<double>(),
                         p.at("rtt1").get<double>(), p.at("rtt2").get<double>()};
        trace.probes[{std::min(u, v), std::max(u, v)}] = probe;
        continue;
      }
      PortCounterSample s;
      s.tx_p = rec.at("tx_p").get<std::uint64_t>();
      s.rx_p = rec.at("rx_p").get<std::uint64_t>();
      s.tx_b = rec.at("tx_b").get<std::uint64_t>();
      s.rx_b = rec.at("rx_b").get<std::uint64_t>();
      s.tx_err = rec.at("tx_err").get<std::uint64_t>();
      s.rx_err = rec.at("rx_err").get<std::uint64_t>();
      s.t_dur = rec.at("t_dur").get<double>();
      ordered[{u, v}][rec.value("sample", 0)] = s;
    } catch (const json::exception& e) {
      throw MetricError("counter trace line " + std::to_string(lineno) + ": " +
                        e.what());
    }
  }
  for (auto& [key, samples] : ordered) {
    auto& dst = trace.ports[key];
    for (auto& [idx, s] : samples) dst.push_back(s);
  }
  return trace;
}

CounterTrace load_counter_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MetricError("cannot open counter trace " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_counter_trace(ss.str());
}

std::string counter_trace_to_jsonl(const CounterTrace& trace) {
  using nlohmann::json;
  std::ostringstream out;
  for (const auto& [key, samples] : trace.ports) {
    for (std::size_t k = 0; k < samples.size(); ++k) {
      const auto& s = samples[k];
      json rec = {{"u", key.first},     {"v", key.second},
                  {"sample", k},        {"tx_p", s.tx_p},
                  {"rx_p", s.rx_p},     {"tx_b", s.tx_b},
                  {"rx_b", s.rx_b},     {"tx_err", s.tx_err},
                  {"rx_err", s.rx_err}, {"t_dur", s.t_dur}};
      out << rec.dump() << '\n';
    }
  }
  for (const auto& [key, p] : trace.probes) {
    json rec = {{"u", key.first},
                {"v", key.second},
                {"probe",
                 {{"t_fwd", p.t_fwd}, {"t_re", p.t_re}, {"rtt1", p.rtt1}, {"rtt2", p.rtt2}}}};
    out << rec.dump() << '\n';
  }
  return out.str();
}

EdgeMetrics metrics_from_trace(const CounterTrace& trace, const Network& net,
                               NodeId u, NodeId v, double bw_max) {
  auto out_it = trace.ports.find({u, v});
  auto in_it = trace.ports.find({v, u});
  auto probe_it = trace.probes.find({std::min(u, v), std::max(u, v)});
  if (out_it == trace.ports.end() || out_it->second.size() < 2 ||
      in_it == trace.ports.end() || in_it->second.size() < 2 ||
      probe_it == trace.probes.end()) {
    throw MetricError("missing samples for edge " + edge_name(u, v));
  }
  const auto& tx = out_it->second;
  const auto& rx = in_it->second;

  // Packet/error deltas over the sampling window.
  auto delta = [](const PortCounterSample& a, const PortCounterSample& b) {
    PortCounterSample d;
    d.tx_p = b.tx_p - a.tx_p;
    d.rx_p = b.rx_p - a.rx_p;
    d.tx_b = b.tx_b - a.tx_b;
    d.rx_b = b.rx_b - a.rx_b;
    d.tx_err = b.tx_err - a.tx_err;
    d.rx_err = b.rx_err - a.rx_err;
    d.t_dur = b.t_dur - a.t_dur;
    return d;
  };
  for (const auto* series : {&tx, &rx}) {
    for (std::size_t k = 1; k < series->size(); ++k) {
      const auto& a = (*series)[k - 1];
      const auto& b = (*series)[k];
      if (b.tx_p < a.tx_p || b.rx_p < a.rx_p || b.tx_b < a.tx_b ||
          b.rx_b < a.rx_b || b.tx_err < a.tx_err || b.rx_err < a.rx_err) {
        throw MetricError("non-monotone counters on edge " + edge_name(u, v));
      }
    }
  }
  const PortCounterSample dtx = delta(tx.front(), tx.back());
  const PortCounterSample drx = delta(rx.front(), rx.back());

  EdgeMetrics m;
  m.bw = compute_bandwidth(tx.front(), tx.back(), bw_max).bw;
  m.loss = dtx.tx_p > 0 ? compute_loss(dtx, drx) : 0.0;
  m.err = (dtx.tx_p + drx.rx_p) > 0 ? compute_err(dtx, drx) : 0.0;
  m.delay = compute_delay(probe_it->second);
  m.dist = net.length(u, v);
  return m;
}

std::string snapshot_to_csv(const MetricSnapshot& snap) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "edge,bw,delay,loss,err,dist\n";
  for (int i = 0; i < snap.size(); ++i) {
    for (int j = 0; j < snap.size(); ++j) {
      if (!snap.has(i, j)) continue;
      EdgeMetrics m = snap.get(i, j);
      out << i << '-' << j << ',' << m.bw << ',' << m.delay << ',' << m.loss
          << ',' << m.err << ',' << m.dist << '\n';
    }
  }
  return out.str();
}

}  // namespace macdmr
