#include "r2ccp/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

namespace r2ccp::kern {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scal_scalar(double* x, double alpha, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void adamw_scalar(double* param, const double* grad, double* m, double* v,
                  std::size_t n, const AdamwParams& hp) {
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g;
    v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g * g;
    const double mhat = m[i] * hp.bias1;
    const double vhat = v[i] * hp.bias2;
    param[i] -= hp.lr * (mhat / (std::sqrt(vhat) + hp.eps) + hp.weight_decay * param[i]);
  }
}

constexpr Ops kScalarOps{dot_scalar, axpy_scalar, scal_scalar, adamw_scalar};

}  // namespace

#if defined(R2CCP_HAVE_AVX2)
extern const Ops kAvx2Ops;  // defined in kernels_avx2.cpp
#endif
#if defined(R2CCP_HAVE_NEON)
extern const Ops kNeonOps;  // defined in kernels_neon.cpp
#endif

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "?";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(R2CCP_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(R2CCP_HAVE_NEON)
      return true;  // baseline on aarch64
#else
      return false;
#endif
  }
  return false;
}

const Ops& ops_for(Isa isa) {
  if (!isa_available(isa))
    throw std::invalid_argument(std::string("kernel ISA not available: ") + isa_name(isa));
  switch (isa) {
#if defined(R2CCP_HAVE_AVX2)
    case Isa::avx2: return kAvx2Ops;
#endif
#if defined(R2CCP_HAVE_NEON)
    case Isa::neon: return kNeonOps;
#endif
    default: return kScalarOps;
  }
}

namespace {

Isa detect_best() {
  if (isa_available(Isa::avx2)) return Isa::avx2;
  if (isa_available(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

Isa initial_isa() {
  const char* env = std::getenv("R2CCP_KERNELS");
  if (env == nullptr || std::strcmp(env, "auto") == 0) return detect_best();
  if (std::strcmp(env, "scalar") == 0) return Isa::scalar;
  if (std::strcmp(env, "avx2") == 0 && isa_available(Isa::avx2)) return Isa::avx2;
  if (std::strcmp(env, "neon") == 0 && isa_available(Isa::neon)) return Isa::neon;
  std::fprintf(stderr, "r2ccp: R2CCP_KERNELS=%s not usable here, falling back to %s\n", env,
               isa_name(detect_best()));
  return detect_best();
}

Isa g_active = initial_isa();

}  // namespace

const Ops& ops() { return ops_for(g_active); }

Isa active_isa() { return g_active; }

void select_isa(Isa isa) {
  if (!isa_available(isa))
    throw std::invalid_argument(std::string("kernel ISA not available: ") + isa_name(isa));
  g_active = isa;
}

void matvec(const double* w, const double* bias, const double* x, double* out,
            std::size_t rows, std::size_t cols) {
  const Ops& k = ops();
  for (std::size_t r = 0; r < rows; ++r)
    out[r] = k.dot(w + r * cols, x, cols) + (bias != nullptr ? bias[r] : 0.0);
}

void matvec_t(const double* w, const double* x, double* out, std::size_t rows, std::size_t cols) {
  const Ops& k = ops();
  for (std::size_t c = 0; c < cols; ++c) out[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) k.axpy(x[r], w + r * cols, out, cols);
}

void rank1_accum(double* w, const double* x, const double* y, std::size_t rows, std::size_t cols) {
  const Ops& k = ops();
  for (std::size_t r = 0; r < rows; ++r) k.axpy(x[r], y, w + r * cols, cols);
}

}  // namespace r2ccp::kern
