#pragma once

#include <stdexcept>
#include <vector>

#include "macdmr/kernels.hpp"
#include "macdmr/random.hpp"

namespace macdmr {

using kernels::SparseVec;

class CorruptParams : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LayerShape {
  int in = 0;
  int out = 0;
};

// Fully connected network: tanh on hidden layers, linear output. All
// parameters live in one flat vector, per layer W[in][out] then b[out].
class Mlp {
 public:
  Mlp() = default;
  // sizes = {input, hidden..., output}. Hidden layers draw U(-l, l) with
  // l = sqrt(3 / fan_in); the output layer starts at zero.
  Mlp(const std::vector<int>& sizes, Rng& rng);

  int input_size() const { return shapes_.front().in; }
  int output_size() const { return shapes_.back().out; }
  const std::vector<LayerShape>& shapes() const { return shapes_; }
  const std::vector<double>& params() const { return params_; }
  std::vector<double>& mutable_params() { return params_; }
  // Throws CorruptParams on a non-finite value.
  void set_params(std::vector<double> p);

  void set_parallel(bool on) { parallel_ = on; }
  bool parallel() const { return parallel_; }

  // Caches activations for a following backward pass.
  const std::vector<double>& forward(const SparseVec& x);

  // Gradient of dot(dout, output(x)) with respect to every parameter.
  std::vector<double> gradient(const SparseVec& x,
                               const std::vector<double>& dout);
  // params += scale * gradient(x, dout), in place without forming the
  // dense gradient.
  bool step(const SparseVec& x, const std::vector<double>& dout, double scale);
  // Same as step, reusing the activations of the preceding forward(x).
  // Returns false if any parameter it touched became non-finite; untouched
  // parameters keep their (finite) values.
  bool apply(const SparseVec& x, const std::vector<double>& dout, double scale);

  bool finite() const;

 private:
  std::size_t w_offset(int l) const { return offsets_[l]; }
  std::size_t b_offset(int l) const {
    return offsets_[l] + static_cast<std::size_t>(shapes_[l].in) * shapes_[l].out;
  }
  // Fills deltas_[l] (gradient at the pre-activation of layer l).
  void backward(const std::vector<double>& dout);

  std::vector<LayerShape> shapes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
  bool parallel_ = true;

  std::vector<std::vector<double>> acts_;    // acts_[l] = output of layer l
  std::vector<std::vector<double>> deltas_;  // per layer
  std::vector<double> scratch_;
};

// Numerically stable softmax.
std::vector<double> softmax(const std::vector<double>& logits);

}  // namespace macdmr
