// AVX2 kernel variants. Compiled with -mavx2 (no -mfma): each lane performs
// the same mul/add sequence as the scalar reference so outputs are
// bit-identical. Tails fall back to the scalar ordering.

#if defined(DALI_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "kernels_tables.hpp"

namespace dali::kernels::detail {

namespace {

// 4-row by 8-column micro-kernel: each w load feeds four output rows, which
// cuts the L2 traffic that otherwise bounds this loop. Accumulation stays in
// ascending-k order per output element, so results remain bit-identical to
// the scalar reference.
void matmul_4x8(const double* x, const double* w, double* y, int i0, int j0, int k, int m,
                bool accumulate) {
  const std::size_t stride = static_cast<std::size_t>(m);
  const double* x0 = x + static_cast<std::size_t>(i0) * k;
  const double* x1 = x0 + k;
  const double* x2 = x1 + k;
  const double* x3 = x2 + k;
  double* y0 = y + static_cast<std::size_t>(i0) * stride + j0;
  double* y1 = y0 + stride;
  double* y2 = y1 + stride;
  double* y3 = y2 + stride;
  __m256d a00, a01, a10, a11, a20, a21, a30, a31;
  if (accumulate) {
    a00 = _mm256_loadu_pd(y0); a01 = _mm256_loadu_pd(y0 + 4);
    a10 = _mm256_loadu_pd(y1); a11 = _mm256_loadu_pd(y1 + 4);
    a20 = _mm256_loadu_pd(y2); a21 = _mm256_loadu_pd(y2 + 4);
    a30 = _mm256_loadu_pd(y3); a31 = _mm256_loadu_pd(y3 + 4);
  } else {
    a00 = a01 = a10 = a11 = a20 = a21 = a30 = a31 = _mm256_setzero_pd();
  }
  const double* wr = w + j0;
  for (int kk = 0; kk < k; ++kk, wr += stride) {
    const __m256d w0 = _mm256_loadu_pd(wr);
    const __m256d w1 = _mm256_loadu_pd(wr + 4);
    __m256d bx = _mm256_set1_pd(x0[kk]);
    a00 = _mm256_add_pd(a00, _mm256_mul_pd(bx, w0));
    a01 = _mm256_add_pd(a01, _mm256_mul_pd(bx, w1));
    bx = _mm256_set1_pd(x1[kk]);
    a10 = _mm256_add_pd(a10, _mm256_mul_pd(bx, w0));
    a11 = _mm256_add_pd(a11, _mm256_mul_pd(bx, w1));
    bx = _mm256_set1_pd(x2[kk]);
    a20 = _mm256_add_pd(a20, _mm256_mul_pd(bx, w0));
    a21 = _mm256_add_pd(a21, _mm256_mul_pd(bx, w1));
    bx = _mm256_set1_pd(x3[kk]);
    a30 = _mm256_add_pd(a30, _mm256_mul_pd(bx, w0));
    a31 = _mm256_add_pd(a31, _mm256_mul_pd(bx, w1));
  }
  _mm256_storeu_pd(y0, a00); _mm256_storeu_pd(y0 + 4, a01);
  _mm256_storeu_pd(y1, a10); _mm256_storeu_pd(y1 + 4, a11);
  _mm256_storeu_pd(y2, a20); _mm256_storeu_pd(y2 + 4, a21);
  _mm256_storeu_pd(y3, a30); _mm256_storeu_pd(y3 + 4, a31);
}

void matmul_avx2(const double* x, const double* w, double* y, int n, int k, int m,
                 bool accumulate) {
  int i_done = 0;
  if (m >= 8) {
    for (; i_done + 4 <= n; i_done += 4) {
      int j = 0;
      for (; j + 8 <= m; j += 8) matmul_4x8(x, w, y, i_done, j, k, m, accumulate);
      // column remainder of the 4-row band falls through to the generic rows
      if (j < m) {
        for (int i = i_done; i < i_done + 4; ++i) {
          double* yi = y + static_cast<std::size_t>(i) * m;
          const double* xi = x + static_cast<std::size_t>(i) * k;
          for (int jj = j; jj < m; ++jj) {
            double acc = accumulate ? yi[jj] : 0.0;
            for (int kk = 0; kk < k; ++kk)
              acc += xi[kk] * w[static_cast<std::size_t>(kk) * m + jj];
            yi[jj] = acc;
          }
        }
      }
    }
  }
  for (int i = i_done; i < n; ++i) {
    const double* xi = x + static_cast<std::size_t>(i) * k;
    double* yi = y + static_cast<std::size_t>(i) * m;
    int j = 0;
    // 16-column register block: four accumulators held across the k loop.
    for (; j + 16 <= m; j += 16) {
      __m256d a0, a1, a2, a3;
      if (accumulate) {
        a0 = _mm256_loadu_pd(yi + j);
        a1 = _mm256_loadu_pd(yi + j + 4);
        a2 = _mm256_loadu_pd(yi + j + 8);
        a3 = _mm256_loadu_pd(yi + j + 12);
      } else {
        a0 = a1 = a2 = a3 = _mm256_setzero_pd();
      }
      for (int kk = 0; kk < k; ++kk) {
        const __m256d bx = _mm256_set1_pd(xi[kk]);
        const double* wr = w + static_cast<std::size_t>(kk) * m + j;
        a0 = _mm256_add_pd(a0, _mm256_mul_pd(bx, _mm256_loadu_pd(wr)));
        a1 = _mm256_add_pd(a1, _mm256_mul_pd(bx, _mm256_loadu_pd(wr + 4)));
        a2 = _mm256_add_pd(a2, _mm256_mul_pd(bx, _mm256_loadu_pd(wr + 8)));
        a3 = _mm256_add_pd(a3, _mm256_mul_pd(bx, _mm256_loadu_pd(wr + 12)));
      }
      _mm256_storeu_pd(yi + j, a0);
      _mm256_storeu_pd(yi + j + 4, a1);
      _mm256_storeu_pd(yi + j + 8, a2);
      _mm256_storeu_pd(yi + j + 12, a3);
    }
    for (; j + 4 <= m; j += 4) {
      __m256d acc = accumulate ? _mm256_loadu_pd(yi + j) : _mm256_setzero_pd();
      for (int kk = 0; kk < k; ++kk) {
        const __m256d bx = _mm256_set1_pd(xi[kk]);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(bx, _mm256_loadu_pd(w + static_cast<std::size_t>(kk) * m + j)));
      }
      _mm256_storeu_pd(yi + j, acc);
    }
    for (; j < m; ++j) {
      double acc = accumulate ? yi[j] : 0.0;
      for (int kk = 0; kk < k; ++kk) acc += xi[kk] * w[static_cast<std::size_t>(kk) * m + j];
      yi[j] = acc;
    }
  }
}

void add_row_vector_avx2(double* y, const double* b, int n, int m) {
  for (int i = 0; i < n; ++i) {
    double* yi = y + static_cast<std::size_t>(i) * m;
    int j = 0;
    for (; j + 4 <= m; j += 4) {
      _mm256_storeu_pd(yi + j, _mm256_add_pd(_mm256_loadu_pd(yi + j), _mm256_loadu_pd(b + j)));
    }
    for (; j < m; ++j) yi[j] += b[j];
  }
}

void col_sum_acc_avx2(const double* g, double* acc, int n, int m) {
  for (int i = 0; i < n; ++i) {
    const double* gi = g + static_cast<std::size_t>(i) * m;
    int j = 0;
    for (; j + 4 <= m; j += 4) {
      _mm256_storeu_pd(acc + j, _mm256_add_pd(_mm256_loadu_pd(acc + j), _mm256_loadu_pd(gi + j)));
    }
    for (; j < m; ++j) acc[j] += gi[j];
  }
}

void axpy_avx2(double* y, double a, const double* x, std::size_t len) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    _mm256_storeu_pd(y + i,
                     _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, _mm256_loadu_pd(x + i))));
  }
  for (; i < len; ++i) y[i] += a * x[i];
}

void scale_avx2(double* y, double a, std::size_t len) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(y + i), va));
  }
  for (; i < len; ++i) y[i] *= a;
}

void mul_acc_avx2(const double* a, const double* b, double* y, std::size_t len) {
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < len; ++i) y[i] += a[i] * b[i];
}

void relu_fwd_avx2(const double* x, double* y, std::size_t len) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  }
  for (; i < len; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void leaky_relu_fwd_avx2(const double* x, double* y, double alpha, std::size_t len) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d mask = _mm256_cmp_pd(vx, zero, _CMP_GT_OQ);
    _mm256_storeu_pd(y + i, _mm256_blendv_pd(_mm256_mul_pd(va, vx), vx, mask));
  }
  for (; i < len; ++i) y[i] = x[i] > 0.0 ? x[i] : alpha * x[i];
}

void relu_bwd_acc_avx2(const double* x, const double* dy, double* dx, std::size_t len) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
    const __m256d gated = _mm256_and_pd(mask, _mm256_loadu_pd(dy + i));
    _mm256_storeu_pd(dx + i, _mm256_add_pd(_mm256_loadu_pd(dx + i), gated));
  }
  for (; i < len; ++i) {
    if (x[i] > 0.0) dx[i] += dy[i];
  }
}

void leaky_relu_bwd_acc_avx2(const double* x, const double* dy, double* dx, double alpha,
                             std::size_t len) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    const __m256d vdy = _mm256_loadu_pd(dy + i);
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
    const __m256d gated = _mm256_blendv_pd(_mm256_mul_pd(va, vdy), vdy, mask);
    _mm256_storeu_pd(dx + i, _mm256_add_pd(_mm256_loadu_pd(dx + i), gated));
  }
  for (; i < len; ++i) dx[i] += x[i] > 0.0 ? dy[i] : alpha * dy[i];
}

void adam_update_avx2(double* p, double* m, double* v, const double* g, std::size_t len,
                      double beta1, double beta2, double bias1_inv, double bias2_inv,
                      double lr, double eps) {
  const __m256d vb1 = _mm256_set1_pd(beta1);
  const __m256d vb2 = _mm256_set1_pd(beta2);
  const __m256d vc1 = _mm256_set1_pd(1.0 - beta1);
  const __m256d vc2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d vb1i = _mm256_set1_pd(bias1_inv);
  const __m256d vb2i = _mm256_set1_pd(bias2_inv);
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d veps = _mm256_set1_pd(eps);
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    const __m256d vg = _mm256_loadu_pd(g + i);
    const __m256d vm = _mm256_add_pd(_mm256_mul_pd(vb1, _mm256_loadu_pd(m + i)),
                                     _mm256_mul_pd(vc1, vg));
    const __m256d vv = _mm256_add_pd(_mm256_mul_pd(vb2, _mm256_loadu_pd(v + i)),
                                     _mm256_mul_pd(vc2, _mm256_mul_pd(vg, vg)));
    _mm256_storeu_pd(m + i, vm);
    _mm256_storeu_pd(v + i, vv);
    const __m256d mhat = _mm256_mul_pd(vm, vb1i);
    const __m256d vhat = _mm256_mul_pd(vv, vb2i);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
    const __m256d upd = _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom);
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), upd));
  }
  const double c1 = 1.0 - beta1;
  const double c2 = 1.0 - beta2;
  for (; i < len; ++i) {
    const double gi = g[i];
    const double mi = beta1 * m[i] + c1 * gi;
    const double vi = beta2 * v[i] + c2 * (gi * gi);
    m[i] = mi;
    v[i] = vi;
    p[i] = p[i] - lr * (mi * bias1_inv) / (std::sqrt(vi * bias2_inv) + eps);
  }
}

}  // namespace

const KernelTable avx2_table = {
    &matmul_avx2,
    &add_row_vector_avx2,
    &col_sum_acc_avx2,
    &axpy_avx2,
    &scale_avx2,
    &mul_acc_avx2,
    &relu_fwd_avx2,
    &leaky_relu_fwd_avx2,
    &relu_bwd_acc_avx2,
    &leaky_relu_bwd_acc_avx2,
    &adam_update_avx2,
};

}  // namespace dali::kernels::detail

#endif  // DALI_HAVE_AVX2
