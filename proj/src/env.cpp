#include "macdmr/env.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <stdexcept>

namespace macdmr {

void Hyperparams::validate() const {
  weights.validate();
  if (!(alpha_actor > 0.0) || !(alpha_critic > 0.0)) {
    throw std::invalid_argument("learning rates must be > 0");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("gamma must lie in [0,1]");
  }
  if (batch_size < 1) throw std::invalid_argument("batch size k must be >= 1");
  if (n_update < 0) throw std::invalid_argument("n_update must be >= 0");
  if (episodes < 0) throw std::invalid_argument("episodes must be >= 0");
  if (e_off < 0) throw std::invalid_argument("e_off must be >= 0");
  if (hidden < 1) throw std::invalid_argument("hidden width must be >= 1");
  if (t_max < -1) throw std::invalid_argument("t_max must be >= 0 or -1");
}

double RewardModel::part(const EdgeMetrics& m) const {
  const double r = reward_part(m, hp->weights);
  return hp->scale_end ? r : hp->lambda_part * r;
}

double RewardModel::end(const PathMetrics& m) const {
  const double r = reward_end(m, hp->weights);
  return hp->scale_end ? hp->lambda_part * r : r;
}

// ---------------------------------------------------------------------------

InterdomainEnv::InterdomainEnv(const Topology& topo, const MulticastGroup& group,
                               const Hyperparams& hp)
    : topo_(&topo), group_(&group), hp_(&hp), reward_{&hp},
      actions_(topo.partition.inter_edges()) {
  t_max_ = hp.t_max >= 0 ? hp.t_max : 4 * action_count();
}

bool InterdomainEnv::finished() const {
  return std::all_of(dest_domains_.begin(), dest_domains_.end(),
                     [&](DomainId d) { return connected_[d] != 0; });
}

StateTensor InterdomainEnv::reset(const SnapshotView& view) {
  view_ = &view;
  const int m = topo_->partition.domain_count();
  const DomainId sd = topo_->partition.domain_of(group_->src());
  connected_.assign(m + 1, 0);
  connected_[sd] = 1;
  via_.assign(m + 1, {-1, -1});
  parent_domain_.assign(m + 1, 0);
  chosen_.clear();
  std::set<DomainId> dd;
  for (NodeId d : group_->online_dests()) {
    const DomainId x = topo_->partition.domain_of(d);
    if (x != sd) dd.insert(x);
  }
  dest_domains_.assign(dd.begin(), dd.end());
  steps_ = 0;
  done_ = finished();
  success_ = done_;
  if (!done_ && t_max_ == 0) done_ = true;
  state_ = make_state();
  return state_;
}

std::vector<char> InterdomainEnv::valid_mask() const {
  std::vector<char> mask(actions_.size(), 0);
  for (std::size_t a = 0; a < actions_.size(); ++a) {
    const Edge& e = actions_[a];
    mask[a] = connected_[topo_->partition.domain_of(e.u)] !=
              connected_[topo_->partition.domain_of(e.v)];
  }
  return mask;
}

StepResult InterdomainEnv::step(int action) {
  if (action < 0 || action >= action_count()) {
    throw std::out_of_range("inter-domain action " + std::to_string(action) +
                            " out of range");
  }
  if (done_) throw std::logic_error("inter-domain episode already finished");
  ++steps_;
  StepResult res;
  const Edge& e = actions_[action];
  const DomainId du = topo_->partition.domain_of(e.u);
  const DomainId dv = topo_->partition.domain_of(e.v);
  if (connected_[du] && connected_[dv]) {
    res.kind = StepKind::kLoop;
    res.reward = hp_->r_loop;
  } else if (!connected_[du] && !connected_[dv]) {
    res.kind = StepKind::kHell;
    res.reward = hp_->r_hell;
  } else {
    const NodeId from = connected_[du] ? e.u : e.v;
    const NodeId to = e.other(from);
    const DomainId nd = topo_->partition.domain_of(to);
    connected_[nd] = 1;
    via_[nd] = {from, to};
    parent_domain_[nd] = topo_->partition.domain_of(from);
    chosen_.push_back(e);
    res.reward = reward_.part(view_->norm.get(from, to));
    if (std::binary_search(dest_domains_.begin(), dest_domains_.end(), nd)) {
      const DomainId sd = topo_->partition.domain_of(group_->src());
      std::vector<std::pair<NodeId, NodeId>> chain;
      for (DomainId d = nd; d != sd; d = parent_domain_[d]) chain.push_back(via_[d]);
      std::reverse(chain.begin(), chain.end());
      res.reward += reward_.end(edges_metrics(chain, view_->norm.values()));
    }
  }
  if (finished()) {
    done_ = true;
    success_ = true;
  } else if (steps_ >= t_max_) {
    done_ = true;
  }
  state_ = make_state();
  res.next = state_;
  res.done = done_;
  return res;
}

StateTensor InterdomainEnv::make_state() const {
  const int n = topo_->network.node_count();
  std::vector<std::pair<NodeId, double>> roles;
  roles.emplace_back(group_->src(), role::kSource);
  for (NodeId d : group_->online_dests()) {
    roles.emplace_back(d, connected_[topo_->partition.domain_of(d)]
                              ? role::kReachedTarget
                              : role::kTarget);
  }
  for (const Edge& e : chosen_) {
    roles.emplace_back(e.u, role::kInTree);
    roles.emplace_back(e.v, role::kInTree);
  }
  return StateTensor(n, view_->features, tree_entries(n, chosen_, roles));
}

InterdomainTree InterdomainEnv::result() const {
  const int m = topo_->partition.domain_count();
  const DomainId sd = topo_->partition.domain_of(group_->src());
  std::vector<char> keep(connected_.begin(), connected_.end());
  std::vector<char> needed(m + 1, 0);
  needed[sd] = 1;
  for (DomainId d : dest_domains_) needed[d] = 1;
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<int> children(m + 1, 0);
    for (DomainId d = 1; d <= m; ++d) {
      if (keep[d] && d != sd) ++children[parent_domain_[d]];
    }
    for (DomainId d = 1; d <= m; ++d) {
      if (keep[d] && !needed[d] && children[d] == 0) {
        keep[d] = 0;
        changed = true;
      }
    }
  }
  InterdomainTree out;
  for (DomainId d = 1; d <= m; ++d) {
    if (keep[d] && d != sd) out.edges.emplace_back(via_[d].first, via_[d].second);
  }
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

// ---------------------------------------------------------------------------

std::vector<DomainTask> domain_tasks(const Topology& topo,
                                     const MulticastGroup& group,
                                     const InterdomainTree& inter) {
  const auto& p = topo.partition;
  const int m = p.domain_count();
  const DomainId sd = p.domain_of(group.src());
  std::vector<char> seen(m + 1, 0);
  std::vector<NodeId> root(m + 1, -1);
  std::vector<std::set<NodeId>> exits(m + 1);
  seen[sd] = 1;
  root[sd] = group.src();
  std::queue<DomainId> q;
  q.push(sd);
  while (!q.empty()) {
    const DomainId a = q.front();
    q.pop();
    for (const Edge& e : inter.edges) {
      NodeId here = -1, there = -1;
      if (p.domain_of(e.u) == a) {
        here = e.u;
        there = e.v;
      } else if (p.domain_of(e.v) == a) {
        here = e.v;
        there = e.u;
      } else {
        continue;
      }
      const DomainId b = p.domain_of(there);
      if (seen[b]) continue;
      seen[b] = 1;
      root[b] = there;
      exits[a].insert(here);
      q.push(b);
    }
  }
  std::vector<DomainTask> out;
  for (DomainId d = 1; d <= m; ++d) {
    if (!seen[d]) continue;
    DomainTask t;
    t.domain = d;
    t.root = root[d];
    std::set<NodeId> targets = exits[d];
    for (NodeId v : group.online_dests()) {
      if (p.domain_of(v) == d) targets.insert(v);
    }
    targets.erase(t.root);
    t.targets.assign(targets.begin(), targets.end());
    out.push_back(std::move(t));
  }
  return out;
}

IntradomainEnv::IntradomainEnv(const Topology& topo, DomainId domain,
                               NodeId src, const Hyperparams& hp)
    : topo_(&topo), domain_(domain), src_(src), hp_(&hp), reward_{&hp},
      actions_(topo.partition.nodes_in(domain)) {
  t_max_ = hp.t_max >= 0 ? hp.t_max : 4 * action_count();
}

StateTensor IntradomainEnv::reset(const SnapshotView& view,
                                  const DomainTask& task) {
  if (task.domain != domain_) {
    throw std::invalid_argument("domain task does not match the environment");
  }
  view_ = &view;
  task_ = task;
  const int n = topo_->network.node_count();
  in_tree_.assign(n, 0);
  reached_.assign(n, 0);
  parent_.assign(n, -1);
  in_tree_[task.root] = 1;
  edges_.clear();
  steps_ = 0;
  done_ = task.targets.empty();
  success_ = done_;
  if (!done_ && t_max_ == 0) done_ = true;
  state_ = make_state();
  return state_;
}

bool IntradomainEnv::adjacent_to_tree(NodeId v, NodeId* via) const {
  bool found = false;
  double best = 0.0;
  for (NodeId t : topo_->network.neighbors(v)) {
    if (!in_tree_[t] || topo_->partition.domain_of(t) != domain_) continue;
    const double w = view_->weights.at(t, v);
    if (!found || w < best) {
      found = true;
      best = w;
      *via = t;
    }
  }
  return found;
}

std::vector<char> IntradomainEnv::valid_mask() const {
  std::vector<char> mask(actions_.size(), 0);
  for (std::size_t a = 0; a < actions_.size(); ++a) {
    NodeId via;
    mask[a] = !in_tree_[actions_[a]] && adjacent_to_tree(actions_[a], &via);
  }
  return mask;
}

StepResult IntradomainEnv::step(int action) {
  if (action < 0 || action >= action_count()) {
    throw std::out_of_range("intra-domain action " + std::to_string(action) +
                            " out of range");
  }
  if (done_) throw std::logic_error("intra-domain episode already finished");
  ++steps_;
  StepResult res;
  const NodeId v = actions_[action];
  NodeId via = -1;
  if (in_tree_[v]) {
    res.kind = StepKind::kLoop;
    res.reward = hp_->r_loop;
  } else if (!adjacent_to_tree(v, &via)) {
    res.kind = StepKind::kHell;
    res.reward = hp_->r_hell;
  } else {
    in_tree_[v] = 1;
    parent_[v] = via;
    edges_.emplace_back(via, v);
    res.reward = reward_.part(view_->norm.get(via, v));
    if (std::binary_search(task_.targets.begin(), task_.targets.end(), v)) {
      reached_[v] = 1;
      std::vector<NodeId> path;
      for (NodeId x = v; x != -1; x = parent_[x]) path.push_back(x);
      std::reverse(path.begin(), path.end());
      res.reward += reward_.end(path_metrics(path, view_->norm.values()));
    }
  }
  const bool all = std::all_of(task_.targets.begin(), task_.targets.end(),
                               [&](NodeId t) { return reached_[t] != 0; });
  if (all) {
    done_ = true;
    success_ = true;
  } else if (steps_ >= t_max_) {
    done_ = true;
  }
  state_ = make_state();
  res.next = state_;
  res.done = done_;
  return res;
}

StateTensor IntradomainEnv::make_state() const {
  const int n = topo_->network.node_count();
  std::vector<std::pair<NodeId, double>> roles;
  roles.emplace_back(src_, role::kSource);
  for (NodeId v : actions_) {
    if (in_tree_[v]) roles.emplace_back(v, role::kInTree);
  }
  for (NodeId t : task_.targets) {
    roles.emplace_back(t, reached_[t] ? role::kReachedTarget : role::kTarget);
  }
  return StateTensor(n, view_->features, tree_entries(n, edges_, roles));
}

IntradomainTree IntradomainEnv::result() const {
  std::vector<Edge> edges = edges_;
  std::set<NodeId> keep(task_.targets.begin(), task_.targets.end());
  keep.insert(task_.root);
  bool changed = true;
  while (changed) {
    changed = false;
    std::map<NodeId, int> deg;
    for (const Edge& e : edges) {
      ++deg[e.u];
      ++deg[e.v];
    }
    std::vector<Edge> next;
    for (const Edge& e : edges) {
      const bool drop = (deg[e.u] == 1 && !keep.count(e.u)) ||
                        (deg[e.v] == 1 && !keep.count(e.v));
      if (drop) {
        changed = true;
      } else {
        next.push_back(e);
      }
    }
    edges.swap(next);
  }
  std::sort(edges.begin(), edges.end());
  return IntradomainTree{domain_, task_.root, edges};
}

}  // namespace macdmr
