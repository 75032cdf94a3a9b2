#pragma once

#include <cstddef>
#include <string>

namespace r2ccp::kern {

enum class Isa { scalar, avx2, neon };

// Hyperparameters for one decoupled-weight-decay adaptive step.
// bias1/bias2 are the precomputed corrections 1/(1 - beta^t).
struct AdamwParams {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double weight_decay;
  double bias1;
  double bias2;
};

// Primitive kernel set. Every ISA provides the same table; results agree
// with the scalar reference up to floating-point reassociation.
struct Ops {
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);  // y += alpha*x
  void (*scal)(double* x, double alpha, std::size_t n);                   // x *= alpha
  void (*adamw)(double* param, const double* grad, double* m, double* v,
                std::size_t n, const AdamwParams& hp);
};

bool isa_available(Isa isa);
const Ops& ops_for(Isa isa);  // throws if the ISA is not available at runtime
const Ops& ops();             // active set, selected once at first use
Isa active_isa();
void select_isa(Isa isa);     // explicit override; single-threaded use only
const char* isa_name(Isa isa);

// Dense-layer helpers layered on the active primitives. Matrices are
// row-major with `rows` outputs and `cols` inputs.
void matvec(const double* w, const double* bias, const double* x, double* out,
            std::size_t rows, std::size_t cols);             // out = W x + bias
void matvec_t(const double* w, const double* x, double* out,
              std::size_t rows, std::size_t cols);           // out = W^T x
void rank1_accum(double* w, const double* x, const double* y,
                 std::size_t rows, std::size_t cols);        // W += x y^T

}  // namespace r2ccp::kern
