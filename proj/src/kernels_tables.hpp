#pragma once

#include <cstddef>

namespace dali::kernels::detail {

struct KernelTable {
  void (*matmul)(const double*, const double*, double*, int, int, int, bool);
  void (*add_row_vector)(double*, const double*, int, int);
  void (*col_sum_acc)(const double*, double*, int, int);
  void (*axpy)(double*, double, const double*, std::size_t);
  void (*scale)(double*, double, std::size_t);
  void (*mul_acc)(const double*, const double*, double*, std::size_t);
  void (*relu_fwd)(const double*, double*, std::size_t);
  void (*leaky_relu_fwd)(const double*, double*, double, std::size_t);
  void (*relu_bwd_acc)(const double*, const double*, double*, std::size_t);
  void (*leaky_relu_bwd_acc)(const double*, const double*, double*, double, std::size_t);
  void (*adam_update)(double*, double*, double*, const double*, std::size_t, double, double,
                      double, double, double, double);
};

extern const KernelTable scalar_table;

#if defined(DALI_HAVE_AVX2)
extern const KernelTable avx2_table;
#endif

}  // namespace dali::kernels::detail
