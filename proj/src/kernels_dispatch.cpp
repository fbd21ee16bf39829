#include "dali/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <string>

#include "dali/errors.hpp"
#include "kernels_tables.hpp"

namespace dali::kernels {

namespace {

using detail::KernelTable;

const KernelTable* table_for(Backend b) {
#if defined(DALI_HAVE_AVX2)
  if (b == Backend::avx2) return &detail::avx2_table;
#endif
  return &detail::scalar_table;
}

Backend pick_default() {
  if (const char* env = std::getenv("DALI_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0) {
      if (!avx2_supported())
        throw ContractError("DALI_KERNELS=avx2 but this CPU/build has no AVX2 support");
      return Backend::avx2;
    }
    // anything else, including "auto", falls through to detection
  }
  return avx2_supported() ? Backend::avx2 : Backend::scalar;
}

struct Dispatch {
  Backend backend;
  const KernelTable* table;
  Dispatch() : backend(pick_default()), table(table_for(backend)) {}
};

Dispatch& dispatch() {
  static Dispatch d;
  return d;
}

}  // namespace

bool avx2_supported() {
#if defined(DALI_HAVE_AVX2)
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

Backend active_backend() { return dispatch().backend; }

void set_backend(Backend b) {
  if (b == Backend::avx2 && !avx2_supported())
    throw ContractError("AVX2 backend requested but not supported on this machine");
  dispatch().backend = b;
  dispatch().table = table_for(b);
}

const char* backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

void matmul(const double* x, const double* w, double* y, int n, int k, int m, bool accumulate) {
  dispatch().table->matmul(x, w, y, n, k, m, accumulate);
}

void add_row_vector(double* y, const double* b, int n, int m) {
  dispatch().table->add_row_vector(y, b, n, m);
}

void col_sum_acc(const double* g, double* acc, int n, int m) {
  dispatch().table->col_sum_acc(g, acc, n, m);
}

void axpy(double* y, double a, const double* x, std::size_t len) {
  dispatch().table->axpy(y, a, x, len);
}

void scale(double* y, double a, std::size_t len) { dispatch().table->scale(y, a, len); }

void mul_acc(const double* a, const double* b, double* y, std::size_t len) {
  dispatch().table->mul_acc(a, b, y, len);
}

void relu_fwd(const double* x, double* y, std::size_t len) {
  dispatch().table->relu_fwd(x, y, len);
}

void leaky_relu_fwd(const double* x, double* y, double alpha, std::size_t len) {
  dispatch().table->leaky_relu_fwd(x, y, alpha, len);
}

void relu_bwd_acc(const double* x, const double* dy, double* dx, std::size_t len) {
  dispatch().table->relu_bwd_acc(x, dy, dx, len);
}

void leaky_relu_bwd_acc(const double* x, const double* dy, double* dx, double alpha,
                        std::size_t len) {
  dispatch().table->leaky_relu_bwd_acc(x, dy, dx, alpha, len);
}

void adam_update(double* p, double* m, double* v, const double* g, std::size_t len, double beta1,
                 double beta2, double bias1_inv, double bias2_inv, double lr, double eps) {
  dispatch().table->adam_update(p, m, v, g, len, beta1, beta2, bias1_inv, bias2_inv, lr, eps);
}

void transpose(const double* a, double* at, int rows, int cols) {
  for (int i = 0; i < rows; ++i) {
    const double* ai = a + static_cast<std::size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) at[static_cast<std::size_t>(j) * rows + i] = ai[j];
  }
}

double reduce_sum(const double* x, std::size_t len) {
  double s = 0.0;
  for (std::size_t i = 0; i < len; ++i) s += x[i];
  return s;
}

}  // namespace dali::kernels
