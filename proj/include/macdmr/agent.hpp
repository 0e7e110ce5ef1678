#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "macdmr/env.hpp"
#include "macdmr/nn.hpp"
#include "macdmr/random.hpp"
#include "macdmr/state.hpp"

namespace macdmr {

struct Transition {
  StateTensor s;
  int a = 0;
  double r = 0.0;
  StateTensor s2;
  bool done = false;
};

// Bounded FIFO; a batch never repeats an element.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 10000);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return items_.at(i); }
  void clear() { items_.clear(); }
  // k distinct indices. Throws std::invalid_argument if k > size().
  std::vector<std::size_t> sample_indices(std::size_t k, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
};

double td_residual(double r, double v_next, double v_now, double gamma,
                   bool terminal = false);

struct ActorCriticParams {
  Mlp actor;
  Mlp critic;
};

// Architecture: input -> hidden tanh -> hidden tanh -> head.
ActorCriticParams make_params(int input, int actions, int hidden, Rng& rng);

std::vector<double> actor_forward(Mlp& actor, const SparseVec& x);
double critic_forward(Mlp& critic, const SparseVec& x);

struct UpdateInfo {
  double psi = 0.0;
  double critic_loss = 0.0;  // 0.5 psi^2
};

// omega += alpha2 * psi * grad V(s)
void critic_update(Mlp& critic, const SparseVec& s, double psi, double alpha2);
// theta += alpha1 * psi * grad log pi(a|s)
void actor_update(Mlp& actor, const SparseVec& s, int a, double psi,
                  double alpha1);
// psi from the current critic, then one critic and one actor update.
UpdateInfo update_on(ActorCriticParams& p, const Transition& t,
                     const Hyperparams& hp);

class ActorCriticAgent {
 public:
  ActorCriticAgent(std::string name, int input, int actions,
                   const Hyperparams& hp, std::uint64_t seed,
                   std::size_t buffer_capacity = 10000);

  const std::string& name() const { return name_; }
  int action_count() const { return params_.actor.output_size(); }
  ActorCriticParams& params() { return params_; }
  const ActorCriticParams& params() const { return params_; }
  ReplayBuffer& buffer() { return buffer_; }
  Rng& rng() { return rng_; }
  void set_parallel(bool on);

  std::vector<double> policy(const StateTensor& s);
  double value(const StateTensor& s);

  int sample(const StateTensor& s);
  // 80% a uniform valid action, otherwise any action.
  int behaviour(const std::vector<char>& valid);
  // Highest-probability valid action, lowest index on ties.
  int greedy(const StateTensor& s, const std::vector<char>& valid);

  // n_update rounds of update_on on one transition.
  void online_update(const Transition& t);
  // `batches` batches of k transitions; no-op while the buffer holds < k.
  // Returns the number of transitions used.
  std::size_t offline_training(int batches);

 private:
  std::string name_;
  const Hyperparams* hp_;
  ActorCriticParams params_;
  ReplayBuffer buffer_;
  Rng rng_;
};

// Trains on a fixed buffer, sampling k transitions per batch (within a batch
// without replacement). Throws std::invalid_argument on an empty buffer.
void offline_training(const ReplayBuffer& buffer, ActorCriticParams& params,
                      const Hyperparams& hp, int batches, Rng& rng);

}  // namespace macdmr
