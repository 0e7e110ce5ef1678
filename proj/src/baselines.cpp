#include "macdmr/baselines.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>
#include <tuple>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace macdmr {

EdgeWeightMap::EdgeWeightMap(int n)
    : n_(n),
      w_(static_cast<std::size_t>(n) * n,
         std::numeric_limits<double>::quiet_NaN()) {}

EdgeWeightMap edge_weights(const Network& net, const NormalizedSnapshot& snap,
                           const CostWeights& w) {
  EdgeWeightMap out(net.node_count());
  for (const Edge& e : net.edges()) {
    out.set(e.u, e.v, edge_cost(snap.get(e.u, e.v), w));
    out.set(e.v, e.u, edge_cost(snap.get(e.v, e.u), w));
  }
  return out;
}

double WeightedGraph::weight(NodeId u, NodeId v) const {
  for (const Arc& a : adj.at(u)) {
    if (a.to == v) return a.w;
  }
  throw SolverError("no arc " + std::to_string(u) + "->" + std::to_string(v));
}

WeightedGraph symmetric_graph(const Network& net, const EdgeWeightMap& w) {
  WeightedGraph g;
  g.n = net.node_count();
  g.adj.resize(g.n);
  for (const Edge& e : net.edges()) {
    const double x = w.symmetric(e.u, e.v);
    if (!(x >= 0.0)) {
      throw SolverError("edge (" + std::to_string(e.u) + "," +
                        std::to_string(e.v) + ") has invalid weight");
    }
    g.adj[e.u].push_back({e.v, x});
    g.adj[e.v].push_back({e.u, x});
  }
  for (auto& a : g.adj) {
    std::sort(a.begin(), a.end(),
              [](const Arc& x, const Arc& y) { return x.to < y.to; });
  }
  return g;
}

std::vector<NodeId> ShortestPaths::path_to(NodeId v) const {
  if (v < 0 || v >= static_cast<int>(dist.size()) || dist[v] == kInf) return {};
  std::vector<NodeId> out;
  for (NodeId x = v; x != -1; x = parent[x]) out.push_back(x);
  std::reverse(out.begin(), out.end());
  return out;
}

ShortestPaths dijkstra_multi(const WeightedGraph& g,
                             const std::vector<NodeId>& sources) {
  ShortestPaths sp;
  sp.src = sources.empty() ? -1 : sources.front();
  sp.dist.assign(g.n, kInf);
  sp.parent.assign(g.n, -1);
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  for (NodeId s : sources) {
    if (s < 0 || s >= g.n) throw SolverError("unknown source node");
    sp.dist[s] = 0.0;
    pq.push({0.0, s});
  }
  std::vector<char> done(g.n, 0);
  while (!pq.empty()) {
    auto [d, x] = pq.top();
    pq.pop();
    if (done[x]) continue;
    done[x] = 1;
    for (const Arc& a : g.adj[x]) {
      if (done[a.to]) continue;
      const double nd = d + a.w;
      if (nd < sp.dist[a.to] ||
          (nd == sp.dist[a.to] && sp.parent[a.to] != -1 && x < sp.parent[a.to])) {
        sp.dist[a.to] = nd;
        sp.parent[a.to] = x;
        pq.push({nd, a.to});
      }
    }
  }
  return sp;
}

ShortestPaths dijkstra(const WeightedGraph& g, NodeId src) {
  return dijkstra_multi(g, {src});
}

double total_weight(const WeightedGraph& g, const std::vector<Edge>& edges) {
  double s = 0.0;
  for (const Edge& e : edges) s += g.weight(e.u, e.v);
  return s;
}

namespace {

struct WEdge {
  double w;
  NodeId u, v;
  bool operator<(const WEdge& o) const {
    return std::tie(w, u, v) < std::tie(o.w, o.u, o.v);
  }
};

struct UnionFind {
  std::vector<int> p;
  explicit UnionFind(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) {
    while (p[x] != x) x = p[x] = p[p[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    p[a] = b;
    return true;
  }
};

std::vector<WEdge> sorted_edges(const WeightedGraph& g) {
  std::vector<WEdge> out;
  for (NodeId u = 0; u < g.n; ++u) {
    for (const Arc& a : g.adj[u]) {
      if (u < a.to) out.push_back({a.w, u, a.to});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Repeatedly removes leaves that are not terminals.
std::vector<Edge> prune_leaves(std::vector<Edge> edges,
                               const std::vector<NodeId>& terminals) {
  std::set<NodeId> term(terminals.begin(), terminals.end());
  bool changed = true;
  while (changed) {
    changed = false;
    std::map<NodeId, int> deg;
    for (const Edge& e : edges) {
      ++deg[e.u];
      ++deg[e.v];
    }
    std::vector<Edge> keep;
    for (const Edge& e : edges) {
      const bool leaf_u = deg[e.u] == 1 && !term.count(e.u);
      const bool leaf_v = deg[e.v] == 1 && !term.count(e.v);
      if (leaf_u || leaf_v) {
        changed = true;
      } else {
        keep.push_back(e);
      }
    }
    edges.swap(keep);
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

std::vector<NodeId> unique_terminals(const WeightedGraph& g,
                                     std::vector<NodeId> t) {
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  for (NodeId v : t) {
    if (v < 0 || v >= g.n) throw SolverError("unknown terminal node");
  }
  if (t.empty()) throw SolverError("empty terminal set");
  return t;
}

void add_path(std::set<Edge>& acc, const std::vector<NodeId>& path) {
  for (std::size_t k = 1; k < path.size(); ++k) acc.insert(Edge(path[k - 1], path[k]));
}

}  // namespace

SteinerTree kmb(const WeightedGraph& g, const std::vector<NodeId>& terminals) {
  const auto term = unique_terminals(g, terminals);
  const int k = static_cast<int>(term.size());
  SteinerTree out;
  if (k == 1) return out;

  // 1. metric closure over the terminals
  std::vector<ShortestPaths> sp;
  sp.reserve(k);
  for (NodeId t : term) sp.push_back(dijkstra(g, t));
  std::vector<WEdge> closure;
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      const double d = sp[i].dist[term[j]];
      if (d == kInf) throw SolverError("disconnected terminals");
      closure.push_back({d, i, j});
    }
  }
  // 2. MST of the closure
  std::sort(closure.begin(), closure.end());
  UnionFind uf(k);
  std::set<Edge> expanded;
  for (const WEdge& e : closure) {
    if (!uf.unite(e.u, e.v)) continue;
    // 3. expand into graph paths
    add_path(expanded, sp[e.u].path_to(term[e.v]));
  }
  // 4. MST of the expanded subgraph
  std::vector<WEdge> sub;
  for (const Edge& e : expanded) sub.push_back({g.weight(e.u, e.v), e.u, e.v});
  std::sort(sub.begin(), sub.end());
  UnionFind uf2(g.n);
  std::vector<Edge> mst;
  for (const WEdge& e : sub) {
    if (uf2.unite(e.u, e.v)) mst.emplace_back(e.u, e.v);
  }
  // 5. prune non-terminal leaves
  out.edges = prune_leaves(std::move(mst), term);
  out.cost = total_weight(g, out.edges);
  return out;
}

SteinerTree sctf(const WeightedGraph& g, NodeId src,
                 const std::vector<NodeId>& dests) {
  auto rest = unique_terminals(g, dests);
  rest.erase(std::remove(rest.begin(), rest.end(), src), rest.end());
  if (src < 0 || src >= g.n) throw SolverError("unknown source node");
  std::vector<NodeId> in_tree{src};
  std::vector<char> member(g.n, 0);
  member[src] = 1;
  std::set<Edge> edges;
  while (!rest.empty()) {
    const ShortestPaths sp = dijkstra_multi(g, in_tree);
    std::size_t best = 0;
    for (std::size_t i = 1; i < rest.size(); ++i) {
      if (sp.dist[rest[i]] < sp.dist[rest[best]]) best = i;
    }
    if (sp.dist[rest[best]] == kInf) throw SolverError("disconnected terminals");
    const auto path = sp.path_to(rest[best]);
    add_path(edges, path);
    for (NodeId v : path) {
      if (!member[v]) {
        member[v] = 1;
        in_tree.push_back(v);
      }
    }
    rest.erase(std::remove_if(rest.begin(), rest.end(),
                              [&](NodeId v) { return member[v] != 0; }),
               rest.end());
  }
  SteinerTree out;
  out.edges.assign(edges.begin(), edges.end());
  out.cost = total_weight(g, out.edges);
  return out;
}

namespace {

struct ExactSetup {
  std::vector<NodeId> term;
  std::vector<NodeId> optional;  // Steiner candidates
  std::vector<WEdge> edges;      // sorted by (w,u,v)
  std::uint32_t term_mask = 0;
};

ExactSetup exact_setup(const WeightedGraph& g,
                       const std::vector<NodeId>& terminals) {
  if (g.n > kExactMaxNodes) {
    throw SolverError("exact_steiner: instance too large (" +
                      std::to_string(g.n) + " nodes, limit " +
                      std::to_string(kExactMaxNodes) + ")");
  }
  ExactSetup s;
  s.term = unique_terminals(g, terminals);
  for (NodeId v : s.term) s.term_mask |= 1u << v;
  for (NodeId v = 0; v < g.n; ++v) {
    if (!(s.term_mask >> v & 1u)) s.optional.push_back(v);
  }
  s.edges = sorted_edges(g);
  return s;
}

// MST cost over the node set `nodes` (bitmask); kInf when disconnected.
double subset_mst(const ExactSetup& s, int n, std::uint32_t nodes,
                  std::vector<Edge>* out_edges) {
  UnionFind uf(n);
  double cost = 0.0;
  int joined = 0;
  const int need = std::popcount(nodes) - 1;
  for (const WEdge& e : s.edges) {
    if (!(nodes >> e.u & 1u) || !(nodes >> e.v & 1u)) continue;
    if (!uf.unite(e.u, e.v)) continue;
    cost += e.w;
    if (out_edges) out_edges->emplace_back(e.u, e.v);
    if (++joined == need) break;
  }
  return joined == need ? cost : kInf;
}

std::uint32_t expand_mask(const ExactSetup& s, std::uint64_t sub) {
  std::uint32_t nodes = s.term_mask;
  for (std::size_t b = 0; b < s.optional.size(); ++b) {
    if (sub >> b & 1u) nodes |= 1u << s.optional[b];
  }
  return nodes;
}

SteinerTree exact_finish(const WeightedGraph& g, const ExactSetup& s,
                         double best, std::uint64_t best_sub) {
  if (best == kInf) throw SolverError("disconnected terminals");
  SteinerTree out;
  subset_mst(s, g.n, expand_mask(s, best_sub), &out.edges);
  std::sort(out.edges.begin(), out.edges.end());
  out.cost = total_weight(g, out.edges);
  return out;
}

}  // namespace

SteinerTree exact_steiner_serial(const WeightedGraph& g,
                                 const std::vector<NodeId>& terminals) {
  const ExactSetup s = exact_setup(g, terminals);
  const std::uint64_t total = std::uint64_t{1} << s.optional.size();
  double best = kInf;
  std::uint64_t best_sub = 0;
  for (std::uint64_t sub = 0; sub < total; ++sub) {
    const double c = subset_mst(s, g.n, expand_mask(s, sub), nullptr);
    if (c < best) {
      best = c;
      best_sub = sub;
    }
  }
  return exact_finish(g, s, best, best_sub);
}

SteinerTree exact_steiner(const WeightedGraph& g,
                          const std::vector<NodeId>& terminals) {
  const ExactSetup s = exact_setup(g, terminals);
  const std::int64_t total = std::int64_t{1} << s.optional.size();
  double best = kInf;
  std::uint64_t best_sub = 0;
#pragma omp parallel
  {
    double local = kInf;
    std::uint64_t local_sub = 0;
#pragma omp for schedule(static) nowait
    for (std::int64_t sub = 0; sub < total; ++sub) {
      const double c =
          subset_mst(s, g.n, expand_mask(s, static_cast<std::uint64_t>(sub)), nullptr);
      if (c < local) {
        local = c;
        local_sub = static_cast<std::uint64_t>(sub);
      }
    }
#pragma omp critical(macdmr_exact_reduce)
    {
      if (local < best || (local == best && local_sub < best_sub)) {
        best = local;
        best_sub = local_sub;
      }
    }
  }
  return exact_finish(g, s, best, best_sub);
}

}  // namespace macdmr
