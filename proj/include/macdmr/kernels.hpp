#pragma once

#include <vector>

// Dense-layer kernels. Weights are stored [in][out] row-major so a sparse
// input touches contiguous rows. Each kernel has a serial reference and an
// OpenMP variant; the OpenMP variants split work by output column (or input
// row) and keep the per-element summation order, so both produce bitwise
// identical results.
namespace macdmr::kernels {

struct SparseVec {
  std::vector<int> idx;  // strictly increasing
  std::vector<double> val;

  std::size_t nnz() const { return idx.size(); }
};

// y[j] = b[j] + sum_i x[i] * W[i][j]
void affine_dense_serial(const double* W, const double* b, const double* x,
                         int in, int out, double* y);
void affine_dense_omp(const double* W, const double* b, const double* x,
                      int in, int out, double* y);
void affine_sparse_serial(const double* W, const double* b, const SparseVec& x,
                          int out, double* y);
void affine_sparse_omp(const double* W, const double* b, const SparseVec& x,
                       int out, double* y);

// g[i] = sum_j W[i][j] * d[j]
void backprop_input_serial(const double* W, const double* d, int in, int out,
                           double* g);
void backprop_input_omp(const double* W, const double* d, int in, int out,
                        double* g);

// W[i][j] += s * x[i] * d[j];  b[j] += s * d[j]
void outer_update_dense_serial(double* W, double* b, const double* x,
                               const double* d, double s, int in, int out);
void outer_update_dense_omp(double* W, double* b, const double* x,
                            const double* d, double s, int in, int out);
void outer_update_sparse_serial(double* W, double* b, const SparseVec& x,
                                const double* d, double s, int out);
void outer_update_sparse_omp(double* W, double* b, const SparseVec& x,
                             const double* d, double s, int out);

bool openmp_enabled();
int openmp_threads();

}  // namespace macdmr::kernels
