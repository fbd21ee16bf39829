#include <cmath>
#include <cstddef>

#include "dali/kernels.hpp"
#include "kernels_tables.hpp"

namespace dali::kernels::detail {

// Reference kernels. Loop order is part of the contract: the SIMD variants
// must replay the same per-element operation sequence.

namespace {

void matmul_scalar(const double* x, const double* w, double* y, int n, int k, int m,
                   bool accumulate) {
  for (int i = 0; i < n; ++i) {
    const double* xi = x + static_cast<std::size_t>(i) * k;
    double* yi = y + static_cast<std::size_t>(i) * m;
    if (!accumulate) {
      for (int j = 0; j < m; ++j) yi[j] = 0.0;
    }
    for (int kk = 0; kk < k; ++kk) {
      const double a = xi[kk];
      const double* wr = w + static_cast<std::size_t>(kk) * m;
      for (int j = 0; j < m; ++j) yi[j] += a * wr[j];
    }
  }
}

void add_row_vector_scalar(double* y, const double* b, int n, int m) {
  for (int i = 0; i < n; ++i) {
    double* yi = y + static_cast<std::size_t>(i) * m;
    for (int j = 0; j < m; ++j) yi[j] += b[j];
  }
}

void col_sum_acc_scalar(const double* g, double* acc, int n, int m) {
  for (int i = 0; i < n; ++i) {
    const double* gi = g + static_cast<std::size_t>(i) * m;
    for (int j = 0; j < m; ++j) acc[j] += gi[j];
  }
}

void axpy_scalar(double* y, double a, const double* x, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) y[i] += a * x[i];
}

void scale_scalar(double* y, double a, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) y[i] *= a;
}

void mul_acc_scalar(const double* a, const double* b, double* y, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) y[i] += a[i] * b[i];
}

void relu_fwd_scalar(const double* x, double* y, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void leaky_relu_fwd_scalar(const double* x, double* y, double alpha, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) y[i] = x[i] > 0.0 ? x[i] : alpha * x[i];
}

void relu_bwd_acc_scalar(const double* x, const double* dy, double* dx, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) {
    if (x[i] > 0.0) dx[i] += dy[i];
  }
}

void leaky_relu_bwd_acc_scalar(const double* x, const double* dy, double* dx, double alpha,
                               std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) dx[i] += x[i] > 0.0 ? dy[i] : alpha * dy[i];
}

void adam_update_scalar(double* p, double* m, double* v, const double* g, std::size_t len,
                        double beta1, double beta2, double bias1_inv, double bias2_inv,
                        double lr, double eps) {
  const double c1 = 1.0 - beta1;
  const double c2 = 1.0 - beta2;
  for (std::size_t i = 0; i < len; ++i) {
    const double gi = g[i];
    const double mi = beta1 * m[i] + c1 * gi;
    const double vi = beta2 * v[i] + c2 * (gi * gi);
    m[i] = mi;
    v[i] = vi;
    const double mhat = mi * bias1_inv;
    const double vhat = vi * bias2_inv;
    p[i] = p[i] - lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace

const KernelTable scalar_table = {
    &matmul_scalar,
    &add_row_vector_scalar,
    &col_sum_acc_scalar,
    &axpy_scalar,
    &scale_scalar,
    &mul_acc_scalar,
    &relu_fwd_scalar,
    &leaky_relu_fwd_scalar,
    &relu_bwd_acc_scalar,
    &leaky_relu_bwd_acc_scalar,
    &adam_update_scalar,
};

}  // namespace dali::kernels::detail
