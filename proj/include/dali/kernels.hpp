#pragma once

#include <cstddef>

namespace dali::kernels {

// Arithmetic inner loops behind the tape, the forward evaluators, and Adam.
// Every kernel has a scalar reference implementation and (on x86-64) an AVX2
// variant; the active table is picked once at startup via CPUID, overridable
// with the DALI_KERNELS environment variable ("scalar", "avx2", "auto").
//
// Contract: a SIMD variant must produce bit-identical output to the scalar
// reference. Per-element accumulation order is therefore fixed (k ascending
// in matmul, i ascending in column sums) and no FMA contraction is used on
// either path. The equivalence tests assert exact equality.

enum class Backend { scalar, avx2 };

bool avx2_supported();

/// Backend in effect for all kernel calls.
Backend active_backend();

/// Force a backend (tests, benchmarking). Throws ContractError if the
/// requested backend is not supported on this machine.
void set_backend(Backend b);

const char* backend_name(Backend b);

/// y[n x m] = x[n x k] * w[k x m]; adds into y when accumulate is set.
void matmul(const double* x, const double* w, double* y, int n, int k, int m,
            bool accumulate = false);

/// y[i, :] += b for every row of y[n x m].
void add_row_vector(double* y, const double* b, int n, int m);

/// acc[j] += sum_i g[i, j] over g[n x m].
void col_sum_acc(const double* g, double* acc, int n, int m);

/// y += a * x.
void axpy(double* y, double a, const double* x, std::size_t len);

/// y *= a.
void scale(double* y, double a, std::size_t len);

/// y += a ⊙ b (elementwise product).
void mul_acc(const double* a, const double* b, double* y, std::size_t len);

void relu_fwd(const double* x, double* y, std::size_t len);
void leaky_relu_fwd(const double* x, double* y, double alpha, std::size_t len);

/// dx += dy ⊙ relu'(x).
void relu_bwd_acc(const double* x, const double* dy, double* dx, std::size_t len);
void leaky_relu_bwd_acc(const double* x, const double* dy, double* dx, double alpha,
                        std::size_t len);

/// One fused Adam update over a flat parameter block:
///   m = beta1*m + (1-beta1)*g
///   v = beta2*v + (1-beta2)*g*g
///   p -= lr * (m*bias1_inv) / (sqrt(v*bias2_inv) + eps)
/// bias1_inv = 1/(1-beta1^t), bias2_inv = 1/(1-beta2^t).
void adam_update(double* p, double* m, double* v, const double* g, std::size_t len,
                 double beta1, double beta2, double bias1_inv, double bias2_inv,
                 double lr, double eps);

// Shared helpers with a single implementation (data movement / order-sensitive
// reductions stay scalar so results do not depend on the backend).

/// at[cols x rows] = transpose of a[rows x cols].
void transpose(const double* a, double* at, int rows, int cols);

/// Left-to-right sum.
double reduce_sum(const double* x, std::size_t len);

}  // namespace dali::kernels
