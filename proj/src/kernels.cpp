#include "macdmr/kernels.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace macdmr::kernels {

namespace {

constexpr int kColBlock = 64;
// Below this many multiply-adds the OpenMP variants stay on one thread.
constexpr long kParallelWork = 1L << 15;

inline void affine_dense_cols(const double* W, const double* b, const double* x,
                              int in, int out, int j0, int j1, double* y) {
  for (int j = j0; j < j1; ++j) y[j] = b[j];
  for (int i = 0; i < in; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* row = W + static_cast<long>(i) * out;
    for (int j = j0; j < j1; ++j) y[j] += xi * row[j];
  }
}

inline void affine_sparse_cols(const double* W, const double* b,
                               const SparseVec& x, int out, int j0, int j1,
                               double* y) {
  for (int j = j0; j < j1; ++j) y[j] = b[j];
  const std::size_t nnz = x.nnz();
  for (std::size_t k = 0; k < nnz; ++k) {
    const double xi = x.val[k];
    const double* row = W + static_cast<long>(x.idx[k]) * out;
    for (int j = j0; j < j1; ++j) y[j] += xi * row[j];
  }
}

inline double row_dot(const double* row, const double* d, int out) {
  double s = 0.0;
  for (int j = 0; j < out; ++j) s += row[j] * d[j];
  return s;
}

inline void axpy_row(double* row, const double* d, double a, int out) {
  for (int j = 0; j < out; ++j) row[j] += a * d[j];
}

inline void bias_update(double* b, const double* d, double s, int out) {
  for (int j = 0; j < out; ++j) b[j] += s * d[j];
}

inline int col_blocks(int out) { return (out + kColBlock - 1) / kColBlock; }

}  // namespace

void affine_dense_serial(const double* W, const double* b, const double* x,
                         int in, int out, double* y) {
  affine_dense_cols(W, b, x, in, out, 0, out, y);
}

void affine_dense_omp(const double* W, const double* b, const double* x,
                      int in, int out, double* y) {
  const int nb = col_blocks(out);
  const bool par = static_cast<long>(in) * out >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (int blk = 0; blk < nb; ++blk) {
    const int j0 = blk * kColBlock;
    affine_dense_cols(W, b, x, in, out, j0, std::min(out, j0 + kColBlock), y);
  }
}

void affine_sparse_serial(const double* W, const double* b, const SparseVec& x,
                          int out, double* y) {
  affine_sparse_cols(W, b, x, out, 0, out, y);
}

void affine_sparse_omp(const double* W, const double* b, const SparseVec& x,
                       int out, double* y) {
  const int nb = col_blocks(out);
  const bool par = static_cast<long>(x.nnz()) * out >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (int blk = 0; blk < nb; ++blk) {
    const int j0 = blk * kColBlock;
    affine_sparse_cols(W, b, x, out, j0, std::min(out, j0 + kColBlock), y);
  }
}

void backprop_input_serial(const double* W, const double* d, int in, int out,
                           double* g) {
  for (int i = 0; i < in; ++i) g[i] = row_dot(W + static_cast<long>(i) * out, d, out);
}

void backprop_input_omp(const double* W, const double* d, int in, int out,
                        double* g) {
  const bool par = static_cast<long>(in) * out >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (int i = 0; i < in; ++i) g[i] = row_dot(W + static_cast<long>(i) * out, d, out);
}

void outer_update_dense_serial(double* W, double* b, const double* x,
                               const double* d, double s, int in, int out) {
  for (int i = 0; i < in; ++i) {
    if (x[i] == 0.0) continue;
    axpy_row(W + static_cast<long>(i) * out, d, s * x[i], out);
  }
  bias_update(b, d, s, out);
}

void outer_update_dense_omp(double* W, double* b, const double* x,
                            const double* d, double s, int in, int out) {
  const bool par = static_cast<long>(in) * out >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (int i = 0; i < in; ++i) {
    if (x[i] == 0.0) continue;
    axpy_row(W + static_cast<long>(i) * out, d, s * x[i], out);
  }
  bias_update(b, d, s, out);
}

void outer_update_sparse_serial(double* W, double* b, const SparseVec& x,
                                const double* d, double s, int out) {
  const std::size_t nnz = x.nnz();
  for (std::size_t k = 0; k < nnz; ++k) {
    axpy_row(W + static_cast<long>(x.idx[k]) * out, d, s * x.val[k], out);
  }
  bias_update(b, d, s, out);
}

void outer_update_sparse_omp(double* W, double* b, const SparseVec& x,
                             const double* d, double s, int out) {
  const long nnz = static_cast<long>(x.nnz());
  const bool par = nnz * out >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (long k = 0; k < nnz; ++k) {
    axpy_row(W + static_cast<long>(x.idx[k]) * out, d, s * x.val[k], out);
  }
  bias_update(b, d, s, out);
}

bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

int openmp_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace macdmr::kernels
