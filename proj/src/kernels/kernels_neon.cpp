// NEON variants of the primitive kernels (aarch64, where 128-bit f64 vectors
// and FMA are baseline).

#include "r2ccp/kernels.hpp"

#include <arm_neon.h>

#include <cmath>

namespace r2ccp::kern {

namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  for (; i + 2 <= n; i += 2)
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scal_neon(double* x, double alpha, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

void adamw_neon(double* param, const double* grad, double* m, double* v,
                std::size_t n, const AdamwParams& hp) {
  const float64x2_t vb1 = vdupq_n_f64(hp.beta1);
  const float64x2_t vb2 = vdupq_n_f64(hp.beta2);
  const float64x2_t vc1 = vdupq_n_f64(1.0 - hp.beta1);
  const float64x2_t vc2 = vdupq_n_f64(1.0 - hp.beta2);
  const float64x2_t vbias1 = vdupq_n_f64(hp.bias1);
  const float64x2_t vbias2 = vdupq_n_f64(hp.bias2);
  const float64x2_t veps = vdupq_n_f64(hp.eps);
  const float64x2_t vlr = vdupq_n_f64(hp.lr);
  const float64x2_t vwd = vdupq_n_f64(hp.weight_decay);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t g = vld1q_f64(grad + i);
    float64x2_t vm = vfmaq_f64(vmulq_f64(vb1, vld1q_f64(m + i)), vc1, g);
    float64x2_t vv = vfmaq_f64(vmulq_f64(vb2, vld1q_f64(v + i)), vc2, vmulq_f64(g, g));
    vst1q_f64(m + i, vm);
    vst1q_f64(v + i, vv);
    const float64x2_t mhat = vmulq_f64(vm, vbias1);
    const float64x2_t vhat = vmulq_f64(vv, vbias2);
    const float64x2_t denom = vaddq_f64(vsqrtq_f64(vhat), veps);
    float64x2_t p = vld1q_f64(param + i);
    const float64x2_t update = vfmaq_f64(vdivq_f64(mhat, denom), vwd, p);
    p = vfmsq_f64(p, vlr, update);
    vst1q_f64(param + i, p);
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

extern const Ops kNeonOps;
const Ops kNeonOps{dot_neon, axpy_neon, scal_neon, adamw_neon};

}  // namespace r2ccp::kern
