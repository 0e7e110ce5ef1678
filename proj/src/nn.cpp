#include "macdmr/nn.hpp"

#include <algorithm>
#include <cmath>

namespace macdmr {

namespace k = kernels;

Mlp::Mlp(const std::vector<int>& sizes, Rng& rng) {
  if (sizes.size() < 2) throw std::invalid_argument("mlp needs >= 2 sizes");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    if (sizes[l] < 1 || sizes[l + 1] < 1) {
      throw std::invalid_argument("mlp layer sizes must be positive");
    }
    shapes_.push_back({sizes[l], sizes[l + 1]});
    offsets_.push_back(total);
    total += static_cast<std::size_t>(sizes[l]) * sizes[l + 1] + sizes[l + 1];
  }
  params_.assign(total, 0.0);
  for (std::size_t l = 0; l + 1 < shapes_.size(); ++l) {
    const double lim = std::sqrt(3.0 / shapes_[l].in);
    const std::size_t nw = static_cast<std::size_t>(shapes_[l].in) * shapes_[l].out;
    for (std::size_t i = 0; i < nw; ++i) {
      params_[offsets_[l] + i] = rng.uniform(-lim, lim);
    }
  }
  acts_.resize(shapes_.size());
  deltas_.resize(shapes_.size());
  for (std::size_t l = 0; l < shapes_.size(); ++l) {
    acts_[l].assign(shapes_[l].out, 0.0);
    deltas_[l].assign(shapes_[l].out, 0.0);
  }
}

void Mlp::set_params(std::vector<double> p) {
  if (p.size() != params_.size()) {
    throw std::invalid_argument("mlp parameter count mismatch");
  }
  for (double v : p) {
    if (!std::isfinite(v)) throw CorruptParams("non-finite parameter");
  }
  params_ = std::move(p);
}

const std::vector<double>& Mlp::forward(const SparseVec& x) {
  for (int i : x.idx) {
    if (i < 0 || i >= input_size()) throw std::out_of_range("mlp input index");
  }
  const std::size_t L = shapes_.size();
  for (std::size_t l = 0; l < L; ++l) {
    const LayerShape& s = shapes_[l];
    const double* W = params_.data() + w_offset(static_cast<int>(l));
    const double* b = params_.data() + b_offset(static_cast<int>(l));
    double* y = acts_[l].data();
    if (l == 0) {
      if (parallel_) {
        k::affine_sparse_omp(W, b, x, s.out, y);
      } else {
        k::affine_sparse_serial(W, b, x, s.out, y);
      }
    } else if (parallel_) {
      k::affine_dense_omp(W, b, acts_[l - 1].data(), s.in, s.out, y);
    } else {
      k::affine_dense_serial(W, b, acts_[l - 1].data(), s.in, s.out, y);
    }
    if (l + 1 < L) {
      for (int j = 0; j < s.out; ++j) y[j] = std::tanh(y[j]);
    }
  }
  return acts_.back();
}

void Mlp::backward(const std::vector<double>& dout) {
  const int L = static_cast<int>(shapes_.size());
  if (static_cast<int>(dout.size()) != output_size()) {
    throw std::invalid_argument("mlp output gradient size mismatch");
  }
  deltas_[L - 1] = dout;
  for (int l = L - 1; l > 0; --l) {
    const LayerShape& s = shapes_[l];
    const double* W = params_.data() + w_offset(l);
    std::vector<double>& g = deltas_[l - 1];
    if (parallel_) {
      k::backprop_input_omp(W, deltas_[l].data(), s.in, s.out, g.data());
    } else {
      k::backprop_input_serial(W, deltas_[l].data(), s.in, s.out, g.data());
    }
    const std::vector<double>& h = acts_[l - 1];
    for (int i = 0; i < s.in; ++i) g[i] *= 1.0 - h[i] * h[i];
  }
}

std::vector<double> Mlp::gradient(const SparseVec& x,
                                  const std::vector<double>& dout) {
  forward(x);
  backward(dout);
  std::vector<double> grad(params_.size(), 0.0);
  for (int l = 0; l < static_cast<int>(shapes_.size()); ++l) {
    const LayerShape& s = shapes_[l];
    double* W = grad.data() + w_offset(l);
    double* b = grad.data() + b_offset(l);
    if (l == 0) {
      k::outer_update_sparse_serial(W, b, x, deltas_[0].data(), 1.0, s.out);
    } else {
      k::outer_update_dense_serial(W, b, acts_[l - 1].data(), deltas_[l].data(),
                                   1.0, s.in, s.out);
    }
  }
  return grad;
}

bool Mlp::step(const SparseVec& x, const std::vector<double>& dout,
               double scale) {
  forward(x);
  return apply(x, dout, scale);
}

bool Mlp::apply(const SparseVec& x, const std::vector<double>& dout,
                double scale) {
  backward(dout);
  for (int l = 0; l < static_cast<int>(shapes_.size()); ++l) {
    const LayerShape& s = shapes_[l];
    double* W = params_.data() + w_offset(l);
    double* b = params_.data() + b_offset(l);
    if (l == 0) {
      if (parallel_) {
        k::outer_update_sparse_omp(W, b, x, deltas_[0].data(), scale, s.out);
      } else {
        k::outer_update_sparse_serial(W, b, x, deltas_[0].data(), scale, s.out);
      }
    } else if (parallel_) {
      k::outer_update_dense_omp(W, b, acts_[l - 1].data(), deltas_[l].data(),
                                scale, s.in, s.out);
    } else {
      k::outer_update_dense_serial(W, b, acts_[l - 1].data(), deltas_[l].data(),
                                   scale, s.in, s.out);
    }
  }
  auto ok = [](const double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(p[i])) return false;
    }
    return true;
  };
  const int out0 = shapes_[0].out;
  for (int i : x.idx) {
    if (!ok(params_.data() + w_offset(0) + static_cast<std::size_t>(i) * out0, out0)) {
      return false;
    }
  }
  const std::size_t rest = b_offset(0);
  return ok(params_.data() + rest, params_.size() - rest);
}

bool Mlp::finite() const {
  return std::all_of(params_.begin(), params_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::vector<double> softmax(const std::vector<double>& logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

}  // namespace macdmr
