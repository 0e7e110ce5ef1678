#include "macdmr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace macdmr {

MultiAgentSystem::MultiAgentSystem(const Topology& topo, MulticastGroup group,
                                   Hyperparams hp, std::size_t buffer_capacity)
    : topo_(&topo), group_(std::move(group)), hp_(hp) {
  hp_.validate();
  group_.check_nodes(topo.network);
  const int n = topo.network.node_count();
  const int input = kStateChannels * n * n;
  inter_env_ = std::make_unique<InterdomainEnv>(topo, group_, hp_);
  if (inter_env_->action_count() == 0 && topo.partition.domain_count() > 1) {
    throw std::invalid_argument("topology has no inter-domain edges");
  }
  agents_.push_back(std::make_unique<ActorCriticAgent>(
      "inter", input, std::max(1, inter_env_->action_count()), hp_,
      mix_seed(hp_.seed, 0), buffer_capacity));
  for (DomainId d = 1; d <= topo.partition.domain_count(); ++d) {
    intra_envs_.push_back(
        std::make_unique<IntradomainEnv>(topo, d, group_.src(), hp_));
    agents_.push_back(std::make_unique<ActorCriticAgent>(
        "intra-" + std::to_string(d), input, intra_envs_.back()->action_count(),
        hp_, mix_seed(hp_.seed, static_cast<std::uint64_t>(d)), buffer_capacity));
  }
  counters_.assign(agents_.size(), 0);
  // The threaded kernels only pay off with more than one core.
  set_parallel_kernels(kernels::openmp_threads() > 1);
}

void MultiAgentSystem::set_parallel_kernels(bool on) {
  for (auto& a : agents_) a->set_parallel(on);
}

namespace {

int choose(ActorCriticAgent& ag, const StateTensor& s,
           const std::vector<char>& valid, ActionMode mode) {
  switch (mode) {
    case ActionMode::kSample:
      return ag.sample(s);
    case ActionMode::kBehaviour:
      return ag.behaviour(valid);
    case ActionMode::kGreedy:
      return ag.greedy(s, valid);
  }
  return -1;
}

// Runs one environment to completion. Returns false if greedy selection
// found no valid action.
template <class Env>
bool drive(ActorCriticAgent& ag, Env& env, long& counter,
           const EpisodeOptions& opt, AgentStats& st) {
  while (!env.done()) {
    const StateTensor s = env.state();
    const int a = choose(ag, s, env.valid_mask(), opt.mode);
    if (a < 0) return false;
    StepResult r = env.step(a);
    st.reward += r.reward;
    ++st.steps;
    Transition t{s, a, r.reward, std::move(r.next), r.done};
    if (opt.store) ag.buffer().push(t);
    ++counter;
    if (opt.offline_period > 0 && counter % opt.offline_period == 0) {
      ag.offline_training(opt.offline_batches);
    }
    if (opt.online) ag.online_update(t);
  }
  return true;
}

}  // namespace

EpisodeResult run_episode(MultiAgentSystem& sys, const SnapshotView& view,
                          const EpisodeOptions& opt) {
  const Topology& topo = sys.topology();
  const int m = topo.partition.domain_count();
  EpisodeResult res;
  res.agents.assign(m + 1, AgentStats{});

  InterdomainEnv& ienv = sys.inter_env();
  ienv.reset(view);
  res.agents[0].active = true;
  bool ok = drive(sys.agent(0), ienv, sys.step_counter(0), opt, res.agents[0]);
  res.agents[0].success = ok && ienv.success();
  if (!res.agents[0].success) {
    res.failure = "inter-domain tree not completed";
  }

  std::vector<IntradomainTree> intra;
  if (res.agents[0].success) {
    const InterdomainTree inter = ienv.result();
    res.agents[0].cost = tree_weight(inter.edges, view.norm, sys.hyperparams().weights);
    const std::vector<DomainTask> tasks = domain_tasks(topo, sys.group(), inter);
    std::vector<std::exception_ptr> errors(tasks.size());
    std::vector<char> done(tasks.size(), 0);
    intra.resize(tasks.size());
    const int count = static_cast<int>(tasks.size());
#pragma omp parallel for schedule(dynamic) if (opt.parallel)
    for (int i = 0; i < count; ++i) {
      try {
        const DomainId d = tasks[i].domain;
        IntradomainEnv& env = sys.intra_env(d);
        env.reset(view, tasks[i]);
        AgentStats& st = res.agents[d];
        st.active = true;
        const bool fine = drive(sys.agent(d), env, sys.step_counter(d), opt, st);
        st.success = fine && env.success();
        if (st.success) {
          intra[i] = env.result();
          st.cost = tree_weight(intra[i].edges, view.norm, sys.hyperparams().weights);
          done[i] = 1;
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (!done[i] && res.failure.empty()) {
        res.failure = "intra-domain tree of domain " +
                      std::to_string(tasks[i].domain) + " not completed";
      }
    }
    if (res.failure.empty()) {
      try {
        CrossDomainTree t = compose(sys.group().src(), inter, intra, topo.partition);
        const auto violations = validate(t, sys.group(), topo.network, topo.partition);
        if (violations.empty()) {
          res.valid = true;
          res.tree_cost = tree_weight(t.edges, view.norm, sys.hyperparams().weights);
        } else {
          res.failure = std::string("invalid tree: ") +
                        violation_name(violations.front().kind);
        }
        res.tree = std::move(t);
      } catch (const TreeError& e) {
        res.failure = e.what();
      }
    }
  }
  for (const AgentStats& st : res.agents) {
    res.total_reward += st.reward;
    res.steps += st.steps;
  }
  return res;
}

EpisodeResult greedy_rollout(MultiAgentSystem& sys, const SnapshotView& view) {
  EpisodeOptions opt;
  opt.mode = ActionMode::kGreedy;
  opt.online = false;
  opt.store = false;
  return run_episode(sys, view, opt);
}

TrainResult train(MultiAgentSystem& sys, const TrafficModel& traffic,
                  const TrainOptions& opt, const EpisodeCallback& cb) {
  if (opt.episodes < 0) throw std::invalid_argument("episodes must be >= 0");
  const Hyperparams& hp = sys.hyperparams();
  const Topology& topo = sys.topology();
  TrainResult out;
  if (opt.episodes == 0) return out;

  if (opt.hybrid) {
    EpisodeOptions collect;
    collect.mode = ActionMode::kBehaviour;
    collect.online = false;
    collect.store = true;
    collect.parallel = opt.parallel;
    for (int e = 0; e < hp.e_off; ++e) {
      const SnapshotView view = make_view(
          topo, traffic.snapshot(TrainOptions::kCollectionBase + e), hp.weights);
      run_episode(sys, view, collect);
    }
    out.collection_episodes = hp.e_off;
    for (int i = 0; i < sys.agent_count(); ++i) {
      sys.agent(i).offline_training(opt.pretrain_batches);
    }
  }

  EpisodeOptions live;
  live.mode = ActionMode::kSample;
  live.online = true;
  live.store = opt.hybrid;
  live.offline_period = opt.hybrid ? opt.offline_period : 0;
  live.offline_batches = opt.offline_batches;
  live.parallel = opt.parallel;
  for (int e = 0; e < opt.episodes; ++e) {
    const SnapshotView view = make_view(topo, traffic.snapshot(e), hp.weights);
    const EpisodeResult r = run_episode(sys, view, live);
    EpisodeRecord rec{e, r.total_reward, r.steps, r.valid, r.tree_cost, r.agents};
    if (cb) cb(rec);
    out.curve.push_back(std::move(rec));
  }
  return out;
}

int convergence_episode(const std::vector<double>& rewards, int window) {
  if (rewards.empty()) return -1;
  const std::size_t n = rewards.size();
  const std::size_t tail = std::max<std::size_t>(1, n / 10);
  double final_mean = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) final_mean += rewards[i];
  final_mean /= static_cast<double>(tail);
  const double threshold = final_mean - 0.1 * std::abs(final_mean);
  // Only full windows count; a series shorter than the window is one window.
  const std::size_t w =
      window > 0 ? std::min<std::size_t>(window, n) : tail;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += rewards[i];
    if (i >= w) sum -= rewards[i - w];
    if (i + 1 >= w && sum / static_cast<double>(w) >= threshold) {
      return static_cast<int>(i);
    }
  }
  return static_cast<int>(n) - 1;
}

namespace {

void write_row(std::ostringstream& os, int episode, const std::string& id,
               double reward, int steps, bool valid, double cost) {
  os << episode << ',' << id << ',' << reward << ',' << steps << ','
     << (valid ? 1 : 0) << ',';
  if (valid) os << cost;
  os << '\n';
}

}  // namespace

std::string learning_curve_csv(const TrainResult& r) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "episode,agent_id,total_reward,steps,valid_tree,tree_cost\n";
  for (const auto& rec : r.curve) {
    write_row(os, rec.episode, "all", rec.total_reward, rec.steps, rec.valid,
              rec.tree_cost);
  }
  return os.str();
}

std::string agent_curves_csv(const TrainResult& r, const MultiAgentSystem& sys) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "episode,agent_id,total_reward,steps,valid_tree,tree_cost\n";
  for (const auto& rec : r.curve) {
    for (std::size_t i = 0; i < rec.agents.size(); ++i) {
      const AgentStats& st = rec.agents[i];
      if (!st.active) continue;
      write_row(os, rec.episode, sys.agent(static_cast<int>(i)).name(), st.reward,
                st.steps, st.success, st.cost);
    }
  }
  return os.str();
}

namespace {

constexpr char kMagic[8] = {'M', 'A', 'C', 'D', 'M', 'R', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint truncated");
  return v;
}

void put_mlp(std::ostream& os, const Mlp& net) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(net.shapes().size()));
  for (const LayerShape& s : net.shapes()) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(s.in));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(s.out));
  }
  put<std::uint64_t>(os, net.params().size());
  os.write(reinterpret_cast<const char*>(net.params().data()),
           static_cast<std::streamsize>(net.params().size() * sizeof(double)));
}

void get_mlp(std::istream& is, Mlp& net, const std::string& what) {
  const auto layers = get<std::uint32_t>(is);
  if (layers != net.shapes().size()) {
    throw std::runtime_error("checkpoint " + what + ": layer count mismatch");
  }
  for (const LayerShape& s : net.shapes()) {
    const auto in = get<std::uint32_t>(is);
    const auto out = get<std::uint32_t>(is);
    if (in != static_cast<std::uint32_t>(s.in) || out != static_cast<std::uint32_t>(s.out)) {
      throw std::runtime_error("checkpoint " + what + ": layer shape mismatch");
    }
  }
  const auto count = get<std::uint64_t>(is);
  if (count != net.params().size()) {
    throw std::runtime_error("checkpoint " + what + ": parameter count mismatch");
  }
  std::vector<double> p(count);
  is.read(reinterpret_cast<char*>(p.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!is) throw std::runtime_error("checkpoint truncated");
  net.set_params(std::move(p));
}

}  // namespace

void save_checkpoint(const MultiAgentSystem& sys, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(sys.agent_count()));
  for (int i = 0; i < sys.agent_count(); ++i) {
    const ActorCriticAgent& a = sys.agent(i);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(a.name().size()));
    os.write(a.name().data(), static_cast<std::streamsize>(a.name().size()));
    put_mlp(os, a.params().actor);
    put_mlp(os, a.params().critic);
  }
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

void load_checkpoint(MultiAgentSystem& sys, const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error(path.string() + " is not a checkpoint");
  }
  if (get<std::uint32_t>(is) != kVersion) {
    throw std::runtime_error("unsupported checkpoint version");
  }
  if (get<std::uint32_t>(is) != static_cast<std::uint32_t>(sys.agent_count())) {
    throw std::runtime_error("checkpoint agent count mismatch");
  }
  for (int i = 0; i < sys.agent_count(); ++i) {
    ActorCriticAgent& a = sys.agent(i);
    std::string name(get<std::uint32_t>(is), '\0');
    is.read(name.data(), static_cast<std::streamsize>(name.size()));
    if (!is || name != a.name()) {
      throw std::runtime_error("checkpoint agent '" + name + "' does not match '" +
                               a.name() + "'");
    }
    get_mlp(is, a.params().actor, name + " actor");
    get_mlp(is, a.params().critic, name + " critic");
  }
}

}  // namespace macdmr
