// ctxrnnt/numerics/ops.h
//
// Dense kernels. `matmul` and friends are OpenMP-parallel over output rows;
// `matmul_reference` is the plain triple loop used as a test oracle and
// benchmark baseline. All backward helpers *accumulate* into their outputs.

#ifndef CTXRNNT_NUMERICS_OPS_H_
#define CTXRNNT_NUMERICS_OPS_H_

#include <cmath>
#include <span>

#include "ctxrnnt/numerics/tensor.h"

namespace ctxrnnt {

// [m x k] * [k x n] -> [m x n]. Throws ShapeError on inner mismatch.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_reference(const Tensor& a, const Tensor& b);

// out += a^T * b, with a [k x m], b [k x n], out [m x n].
void add_matmul_tn(const Tensor& a, const Tensor& b, Tensor& out);
// out += a * b^T, with a [m x k], b [n x k], out [m x n].
void add_matmul_nt(const Tensor& a, const Tensor& b, Tensor& out);

// Given grad_out = dL/d(a*b), accumulates dL/da and dL/db (either may be null).
void matmul_backward(const Tensor& a, const Tensor& b, const Tensor& grad_out,
                     Tensor* grad_a, Tensor* grad_b);

// y += x * W for a single row x [k] and W [k x n].
void add_vec_mat(std::span<const Real> x, const Tensor& w, std::span<Real> y);
// dx += dy * W^T for W [k x n].
void add_vec_mat_t(std::span<const Real> dy, const Tensor& w,
                   std::span<Real> dx);
// dW += x^T dy (outer product).
void add_outer(std::span<const Real> x, std::span<const Real> dy, Tensor& dw);

// log(sum(exp(xs))), max-shifted. Throws ValidationError on empty input.
Real log_sum_exp(std::span<const Real> xs);
Real log_add(Real a, Real b);

// In-place row-wise log-softmax over the last axis.
void log_softmax_inplace(std::span<Real> row);

inline Real sigmoid(Real x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace ctxrnnt

#endif  // CTXRNNT_NUMERICS_OPS_H_
