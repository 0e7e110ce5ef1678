// Fixtures shared by the unit and acceptance tests.
#pragma once

#include <vector>

#include "macdmr/link_metrics.hpp"
#include "macdmr/random.hpp"
#include "macdmr/topology.hpp"

namespace macdmr::testing {

// Three domains in a ring:
//   N1 = {0,1,2,3}: 0-1, 1-2, 0-3
//   N2 = {4,5,6}:   4-5, 5-6
//   N3 = {7,8,9}:   7-8, 8-9
//   inter: 2-4 (N1-N2), 3-7 (N1-N3), 6-9 (N2-N3)
inline Topology ring3() {
  std::vector<Point> xy = {{0, 0},  {40, 0},  {80, 0},  {0, 40},  {120, 0},
                           {160, 0}, {160, 40}, {0, 80}, {40, 80}, {160, 80}};
  std::vector<Edge> edges = {{0, 1}, {1, 2}, {0, 3}, {4, 5}, {5, 6},
                             {7, 8}, {8, 9}, {2, 4}, {3, 7}, {6, 9}};
  Network net(xy, edges);
  DomainPartition p(net, {1, 1, 1, 1, 2, 2, 2, 3, 3, 3});
  return Topology{std::move(net), std::move(p)};
}

// Every directed edge gets the same metrics.
inline MetricSnapshot uniform_snapshot(const Network& net, const EdgeMetrics& m) {
  MetricSnapshot s(net.node_count());
  for (const Edge& e : net.edges()) s.set_both(e.u, e.v, m);
  return s;
}

// Raw metrics drawn independently per direction.
inline MetricSnapshot random_snapshot(const Network& net, Rng& rng) {
  MetricSnapshot s(net.node_count());
  for (const Edge& e : net.edges()) {
    for (int dir = 0; dir < 2; ++dir) {
      EdgeMetrics m;
      m.bw = rng.uniform(5.0, 40.0);
      m.delay = rng.uniform(1.0, 10.0);
      m.loss = rng.uniform(0.0, 0.05);
      m.err = rng.uniform(0.0, 0.01);
      m.dist = rng.uniform(30.0, 120.0);
      if (dir == 0) {
        s.set(e.u, e.v, m);
      } else {
        s.set(e.v, e.u, m);
      }
    }
  }
  return s;
}

}  // namespace macdmr::testing
