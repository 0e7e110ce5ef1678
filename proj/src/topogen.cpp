#include "macdmr/topogen.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "macdmr/baselines.hpp"
#include "macdmr/random.hpp"

namespace macdmr {

namespace {

void check_range(const Range& r, const char* name) {
  if (!(r.min >= 0.0) || !(r.max >= r.min) || !std::isfinite(r.max)) {
    throw std::invalid_argument(std::string("generator: bad ") + name + " range");
  }
}

constexpr double kCell = 300.0;  // meters per grid cell

struct Draw {
  double delay, dist;
  double bw[2], loss[2], err[2];  // [0] = u->v, [1] = v->u
};

}  // namespace

void TopoGenParams::validate() const {
  if (n_domains < 1) throw std::invalid_argument("generator: n_domains < 1");
  if (nodes_per_domain < 1) {
    throw std::invalid_argument("generator: nodes_per_domain < 1");
  }
  check_range(bw_range, "bw");
  check_range(delay_range, "delay");
  check_range(dist_range, "dist");
  check_range(loss_range, "loss");
  check_range(err_range, "err");
  if (loss_range.max > 1.0 || err_range.max > 1.0) {
    throw std::invalid_argument("generator: loss/err range exceeds 1");
  }
  if (!(bw_range.min > 0.0) || bw_range.max > bw_max) {
    throw std::invalid_argument("generator: bw range must lie in (0, bw_max]");
  }
  const int k = nodes_per_domain;
  if (k > 1) {
    const double tree_degree = 2.0 * (k - 1) / k;
    if (intra_degree + 1e-9 < tree_degree) {
      throw std::invalid_argument("generator: infeasible, intra_degree " +
                                  std::to_string(intra_degree) +
                                  " too low to connect a domain");
    }
    if (intra_degree > k - 1 + 1e-9) {
      throw std::invalid_argument("generator: infeasible, intra_degree " +
                                  std::to_string(intra_degree) +
                                  " exceeds a complete domain");
    }
  }
  if (n_domains > 1) {
    if (inter_links_per_adjacent_pair < 1 ||
        inter_links_per_adjacent_pair > k * k) {
      throw std::invalid_argument(
          "generator: infeasible inter_links_per_adjacent_pair");
    }
  }
  if (max_attempts < 1) throw std::invalid_argument("generator: max_attempts < 1");
  weights.validate();
}

Topology generate_shape(const TopoGenParams& params) {
  params.validate();
  Rng rng(mix_seed(params.seed, 0));
  const int m = params.n_domains;
  const int k = params.nodes_per_domain;
  const int n = m * k;
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(m))));

  std::vector<Point> coords(n);
  std::vector<DomainId> assignment(n);
  std::set<Edge> edge_set;
  for (int d = 0; d < m; ++d) {
    const double ox = (d % cols) * kCell;
    const double oy = (d / cols) * kCell;
    const int base = d * k;
    for (int i = 0; i < k; ++i) {
      coords[base + i] = {ox + rng.uniform(0.1, 0.9) * kCell,
                          oy + rng.uniform(0.1, 0.9) * kCell};
      assignment[base + i] = d + 1;
    }
    // Random spanning tree over a shuffled order.
    std::vector<int> order(k);
    for (int i = 0; i < k; ++i) order[i] = base + i;
    rng.shuffle(order);
    for (int i = 1; i < k; ++i) {
      edge_set.insert(Edge(order[i], order[rng.index(i)]));
    }
    const int target = static_cast<int>(std::lround(params.intra_degree * k / 2.0));
    std::vector<Edge> candidates;
    for (int a = 0; a < k; ++a) {
      for (int b = a + 1; b < k; ++b) {
        Edge e(base + a, base + b);
        if (!edge_set.count(e)) candidates.push_back(e);
      }
    }
    rng.shuffle(candidates);
    int have = k - 1;
    for (const Edge& e : candidates) {
      if (have >= target) break;
      edge_set.insert(e);
      ++have;
    }
  }
  // Grid-adjacent domain pairs.
  for (int d = 0; d < m; ++d) {
    const int r = d / cols, c = d % cols;
    std::vector<int> nbrs;
    if (c + 1 < cols && d + 1 < m) nbrs.push_back(d + 1);
    if ((r + 1) * cols + c < m) nbrs.push_back(d + cols);
    for (int e : nbrs) {
      std::vector<Edge> pairs;
      for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) pairs.emplace_back(d * k + a, e * k + b);
      }
      rng.shuffle(pairs);
      for (int i = 0; i < params.inter_links_per_adjacent_pair; ++i) {
        edge_set.insert(pairs[i]);
      }
    }
  }
  const std::vector<Edge> edges(edge_set.begin(), edge_set.end());
  Network net(coords, edges);
  DomainPartition part(net, assignment);
  return Topology{std::move(net), std::move(part)};
}

GeneratedInstance assign_metrics(const Topology& shape,
                                 const TopoGenParams& params) {
  params.validate();
  const int n = shape.network.node_count();
  std::vector<Point> coords(n);
  for (int v = 0; v < n; ++v) coords[v] = shape.network.coord(v);
  const std::vector<Edge>& edges = shape.network.edges();
  const std::vector<DomainId>& assignment = shape.partition.assignment();
  const DomainPartition& part = shape.partition;

  for (int attempt = 1; attempt <= params.max_attempts; ++attempt) {
    Rng mrng(mix_seed(params.seed, static_cast<std::uint64_t>(attempt)));
    std::vector<Draw> draws(edges.size());
    for (auto& dr : draws) {
      dr.delay = mrng.uniform(params.delay_range.min, params.delay_range.max);
      dr.dist = mrng.uniform(params.dist_range.min, params.dist_range.max);
      for (int s = 0; s < 2; ++s) {
        dr.bw[s] = mrng.uniform(params.bw_range.min, params.bw_range.max);
        dr.loss[s] = mrng.uniform(params.loss_range.min, params.loss_range.max);
        dr.err[s] = mrng.uniform(params.err_range.min, params.err_range.max);
      }
    }
    for (double scale = 1.0; scale <= 1024.0; scale *= 2.0) {
      std::vector<double> lengths(edges.size());
      MetricSnapshot snap(n);
      for (std::size_t i = 0; i < edges.size(); ++i) {
        const Edge& e = edges[i];
        const bool inter = part.is_inter(e);
        const double s = inter ? scale : 1.0;
        const double ls = inter && params.scale_loss_err ? scale : 1.0;
        const Draw& dr = draws[i];
        lengths[i] = dr.dist * s;
        for (int dir = 0; dir < 2; ++dir) {
          EdgeMetrics em;
          em.bw = dr.bw[dir] / s;
          em.delay = dr.delay * s;
          em.loss = std::min(1.0, dr.loss[dir] * ls);
          em.err = std::min(1.0, dr.err[dir] * ls);
          em.dist = lengths[i];
          if (dir == 0) {
            snap.set(e.u, e.v, em);
          } else {
            snap.set(e.v, e.u, em);
          }
        }
      }
      Network net(coords, edges, lengths);
      DomainPartition p(net, assignment);
      const auto report =
          check_hypothesis2(net, p, normalize(snap), params.weights);
      if (report.pass) {
        GeneratedInstance out;
        out.topology = Topology{std::move(net), std::move(p)};
        out.metrics = std::move(snap);
        out.inter_scale = scale;
        out.attempts = attempt;
        return out;
      }
    }
  }
  throw std::invalid_argument(
      "generator: infeasible, no metric draw satisfied the inter-domain cost "
      "separation within " + std::to_string(params.max_attempts) + " attempts");
}

GeneratedInstance generate_random(const TopoGenParams& params) {
  return assign_metrics(generate_shape(params), params);
}

Hypothesis2Report check_hypothesis2(const Network& net,
                                    const DomainPartition& p,
                                    const NormalizedSnapshot& snap,
                                    const CostWeights& w) {
  Hypothesis2Report r;
  const auto& inter = p.inter_edges();
  if (inter.empty()) return r;  // vacuous

  std::vector<double> inter_cost;
  r.min_inter = kInf;
  for (const Edge& e : inter) {
    const double c = std::min(edge_cost(snap.get(e.u, e.v), w),
                              edge_cost(snap.get(e.v, e.u), w));
    inter_cost.push_back(c);
    r.min_inter = std::min(r.min_inter, c);
  }

  for (DomainId d = 1; d <= p.domain_count(); ++d) {
    WeightedGraph g;
    g.n = net.node_count();
    g.adj.resize(g.n);
    for (NodeId u : p.nodes_in(d)) {
      for (NodeId v : net.neighbors(u)) {
        if (p.domain_of(v) == d) g.adj[u].push_back({v, edge_cost(snap.get(u, v), w)});
      }
    }
    for (NodeId u : p.nodes_in(d)) {
      const ShortestPaths sp = dijkstra(g, u);
      for (NodeId v : p.nodes_in(d)) {
        if (sp.dist[v] > r.max_intra) {
          r.max_intra = sp.dist[v];
          r.worst_domain = d;
          r.worst_from = u;
          r.worst_to = v;
        }
      }
    }
  }

  for (std::size_t i = 0; i < inter.size(); ++i) {
    if (!(inter_cost[i] > r.max_intra)) r.violating.push_back(inter[i]);
  }
  r.pass = r.violating.empty();
  return r;
}

}  // namespace macdmr
