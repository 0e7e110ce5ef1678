#include "macdmr/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace macdmr {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be > 0");
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(t));
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t k,
                                                      Rng& rng) const {
  if (k > items_.size()) {
    throw std::invalid_argument("batch larger than the replay buffer");
  }
  std::vector<std::size_t> idx(items_.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

double td_residual(double r, double v_next, double v_now, double gamma,
                   bool terminal) {
  return r + (terminal ? 0.0 : gamma * v_next) - v_now;
}

ActorCriticParams make_params(int input, int actions, int hidden, Rng& rng) {
  return ActorCriticParams{Mlp({input, hidden, hidden, actions}, rng),
                           Mlp({input, hidden, hidden, 1}, rng)};
}

std::vector<double> actor_forward(Mlp& actor, const SparseVec& x) {
  auto p = softmax(actor.forward(x));
  for (double v : p) {
    if (!std::isfinite(v)) throw CorruptParams("actor produced a non-finite output");
  }
  return p;
}

double critic_forward(Mlp& critic, const SparseVec& x) {
  const double v = critic.forward(x)[0];
  if (!std::isfinite(v)) throw CorruptParams("critic produced a non-finite output");
  return v;
}

void critic_update(Mlp& critic, const SparseVec& s, double psi, double alpha2) {
  if (!std::isfinite(psi)) throw CorruptParams("non-finite TD residual");
  if (psi == 0.0) return;
  if (!critic.step(s, {1.0}, alpha2 * psi)) throw CorruptParams("critic parameters became non-finite");
}

void actor_update(Mlp& actor, const SparseVec& s, int a, double psi,
                  double alpha1) {
  if (!std::isfinite(psi)) throw CorruptParams("non-finite TD residual");
  if (a < 0 || a >= actor.output_size()) throw std::out_of_range("action index");
  if (psi == 0.0) return;
  std::vector<double> g = actor_forward(actor, s);
  for (double& v : g) v = -v;
  g[a] += 1.0;  // d log pi(a) / d logits
  if (!actor.apply(s, g, alpha1 * psi)) throw CorruptParams("actor parameters became non-finite");
}

UpdateInfo update_on(ActorCriticParams& p, const Transition& t,
                     const Hyperparams& hp) {
  const SparseVec s = t.s.sparse();
  const double v_next = t.done ? 0.0 : critic_forward(p.critic, t.s2.sparse());
  const double v_now = critic_forward(p.critic, s);
  UpdateInfo info;
  info.psi = td_residual(t.r, v_next, v_now, hp.gamma, t.done);
  info.critic_loss = 0.5 * info.psi * info.psi;
  if (!std::isfinite(info.psi)) throw CorruptParams("non-finite TD residual");
  if (info.psi != 0.0) {
    // Activations of V(s) are still cached.
    if (!p.critic.apply(s, {1.0}, hp.alpha_critic * info.psi)) throw CorruptParams("critic parameters became non-finite");
  }
  actor_update(p.actor, s, t.a, info.psi, hp.alpha_actor);
  return info;
}

void offline_training(const ReplayBuffer& buffer, ActorCriticParams& params,
                      const Hyperparams& hp, int batches, Rng& rng) {
  if (buffer.size() == 0) throw std::invalid_argument("offline training on an empty buffer");
  const std::size_t k = std::min<std::size_t>(hp.batch_size, buffer.size());
  for (int b = 0; b < batches; ++b) {
    for (std::size_t i : buffer.sample_indices(k, rng)) {
      update_on(params, buffer.at(i), hp);
    }
  }
}

ActorCriticAgent::ActorCriticAgent(std::string name, int input, int actions,
                                   const Hyperparams& hp, std::uint64_t seed,
                                   std::size_t buffer_capacity)
    : name_(std::move(name)), hp_(&hp), buffer_(buffer_capacity), rng_(seed) {
  Rng init(mix_seed(seed, 0xA11CE));
  params_ = make_params(input, actions, hp.hidden, init);
}

void ActorCriticAgent::set_parallel(bool on) {
  params_.actor.set_parallel(on);
  params_.critic.set_parallel(on);
}

std::vector<double> ActorCriticAgent::policy(const StateTensor& s) {
  return actor_forward(params_.actor, s.sparse());
}

double ActorCriticAgent::value(const StateTensor& s) {
  return critic_forward(params_.critic, s.sparse());
}

int ActorCriticAgent::sample(const StateTensor& s) {
  const auto p = policy(s);
  const double u = rng_.uniform();
  double acc = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    acc += p[a];
    if (u < acc) return static_cast<int>(a);
  }
  return static_cast<int>(p.size()) - 1;
}

int ActorCriticAgent::behaviour(const std::vector<char>& valid) {
  std::vector<int> ok;
  for (std::size_t a = 0; a < valid.size(); ++a) {
    if (valid[a]) ok.push_back(static_cast<int>(a));
  }
  if (!ok.empty() && rng_.bernoulli(0.8)) return ok[rng_.index(ok.size())];
  return rng_.index(valid.size());
}

int ActorCriticAgent::greedy(const StateTensor& s, const std::vector<char>& valid) {
  const auto p = policy(s);
  int best = -1;
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (!valid[a]) continue;
    if (best < 0 || p[a] > p[best]) best = static_cast<int>(a);
  }
  return best;
}

void ActorCriticAgent::online_update(const Transition& t) {
  for (int i = 0; i < hp_->n_update; ++i) update_on(params_, t, *hp_);
}

std::size_t ActorCriticAgent::offline_training(int batches) {
  if (batches <= 0 || buffer_.size() < static_cast<std::size_t>(hp_->batch_size)) {
    return 0;
  }
  macdmr::offline_training(buffer_, params_, *hp_, batches, rng_);
  return static_cast<std::size_t>(batches) * hp_->batch_size;
}

}  // namespace macdmr
