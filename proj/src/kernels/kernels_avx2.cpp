// AVX2/FMA variants of the primitive kernels. Compiled with -mavx2 -mfma;
// only reached when isa_available(Isa::avx2) said yes at runtime.

#include "r2ccp/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace r2ccp::kern {

namespace {

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  acc0 = _mm256_add_pd(acc0, acc1);
  __m128d lo = _mm256_castpd256_pd128(acc0);
  __m128d hi = _mm256_extractf128_pd(acc0, 1);
  lo = _mm_add_pd(lo, hi);
  double acc = _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scal_avx2(double* x, double alpha, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

void adamw_avx2(double* param, const double* grad, double* m, double* v,
                std::size_t n, const AdamwParams& hp) {
  const __m256d vb1 = _mm256_set1_pd(hp.beta1);
  const __m256d vb2 = _mm256_set1_pd(hp.beta2);
  const __m256d vc1 = _mm256_set1_pd(1.0 - hp.beta1);
  const __m256d vc2 = _mm256_set1_pd(1.0 - hp.beta2);
  const __m256d vbias1 = _mm256_set1_pd(hp.bias1);
  const __m256d vbias2 = _mm256_set1_pd(hp.bias2);
  const __m256d veps = _mm256_set1_pd(hp.eps);
  const __m256d vlr = _mm256_set1_pd(hp.lr);
  const __m256d vwd = _mm256_set1_pd(hp.weight_decay);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    __m256d vm = _mm256_loadu_pd(m + i);
    __m256d vv = _mm256_loadu_pd(v + i);
    vm = _mm256_fmadd_pd(vc1, g, _mm256_mul_pd(vb1, vm));
    vv = _mm256_fmadd_pd(vc2, _mm256_mul_pd(g, g), _mm256_mul_pd(vb2, vv));
    _mm256_storeu_pd(m + i, vm);
    _mm256_storeu_pd(v + i, vv);
    const __m256d mhat = _mm256_mul_pd(vm, vbias1);
    const __m256d vhat = _mm256_mul_pd(vv, vbias2);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
    __m256d p = _mm256_loadu_pd(param + i);
    const __m256d update =
        _mm256_fmadd_pd(vwd, p, _mm256_div_pd(mhat, denom));
    p = _mm256_fnmadd_pd(vlr, update, p);
    _mm256_storeu_pd(param + i, p);
  }
  for (; i < n; ++i) {
    const double g = grad[i];
    m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g;
    v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g * g;
    const double mhat = m[i] * hp.bias1;
    const double vhat = v[i] * hp.bias2;
    param[i] -= hp.lr * (mhat / (std::sqrt(vhat) + hp.eps) + hp.weight_decay * param[i]);
  }
}

}  // namespace

extern const Ops kAvx2Ops;
const Ops kAvx2Ops{dot_avx2, axpy_avx2, scal_avx2, adamw_avx2};

}  // namespace r2ccp::kern
