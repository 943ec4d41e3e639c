#include "ctxrnnt/numerics/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ctxrnnt/error.h"

namespace ctxrnnt {

namespace {

// Below this many multiply-adds the thread fork costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(what) + " must be a matrix, got " +
                     t.shape_string());
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul lhs");
  require_matrix(b, "matmul rhs");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul inner dims differ: " + a.shape_string() + " * " +
                     b.shape_string());
  }
  Tensor out({m, n});
  const Real* pa = a.data();
  const Real* pb = b.data();
  Real* po = out.data();
  const long rows = static_cast<long>(m);
#pragma omp parallel for schedule(static) if (m * n * k > kParallelWork)
  for (long i = 0; i < rows; ++i) {
    Real* orow = po + i * n;
    const Real* arow = pa + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = arow[p];
      if (av == 0.0) continue;
      const Real* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Tensor matmul_reference(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul lhs");
  require_matrix(b, "matmul rhs");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul inner dims differ: " + a.shape_string() + " * " +
                     b.shape_string());
  }
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Real s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a.at(i, p) * b.at(p, j);
      out.at(i, j) = s;
    }
  }
  return out;
}

void add_matmul_tn(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  if (b.rows() != k || out.rows() != m || out.cols() != n) {
    throw ShapeError("add_matmul_tn: " + a.shape_string() + "^T * " +
                     b.shape_string() + " -> " + out.shape_string());
  }
  const Real* pa = a.data();
  const Real* pb = b.data();
  Real* po = out.data();
  const long mm = static_cast<long>(m);
#pragma omp parallel for schedule(static) if (m * n * k > kParallelWork)
  for (long i = 0; i < mm; ++i) {
    Real* orow = po + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = pa[p * m + i];
      if (av == 0.0) continue;
      const Real* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

void add_matmul_nt(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k || out.rows() != m || out.cols() != n) {
    throw ShapeError("add_matmul_nt: " + a.shape_string() + " * " +
                     b.shape_string() + "^T -> " + out.shape_string());
  }
  const Real* pa = a.data();
  const Real* pb = b.data();
  Real* po = out.data();
  const long mm = static_cast<long>(m);
#pragma omp parallel for schedule(static) if (m * n * k > kParallelWork)
  for (long i = 0; i < mm; ++i) {
    const Real* arow = pa + i * k;
    Real* orow = po + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const Real* brow = pb + j * k;
      Real s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      orow[j] += s;
    }
  }
}

void matmul_backward(const Tensor& a, const Tensor& b, const Tensor& grad_out,
                     Tensor* grad_a, Tensor* grad_b) {
  if (grad_a) add_matmul_nt(grad_out, b, *grad_a);
  if (grad_b) add_matmul_tn(a, grad_out, *grad_b);
}

void add_vec_mat(std::span<const Real> x, const Tensor& w, std::span<Real> y) {
  const std::size_t k = w.rows(), n = w.cols();
  if (x.size() != k || y.size() != n) {
    throw ShapeError("add_vec_mat: vector of " + std::to_string(x.size()) +
                     " against " + w.shape_string());
  }
  const Real* pw = w.data();
  for (std::size_t p = 0; p < k; ++p) {
    const Real xv = x[p];
    if (xv == 0.0) continue;
    const Real* wrow = pw + p * n;
    for (std::size_t j = 0; j < n; ++j) y[j] += xv * wrow[j];
  }
}

void add_vec_mat_t(std::span<const Real> dy, const Tensor& w,
                   std::span<Real> dx) {
  const std::size_t k = w.rows(), n = w.cols();
  if (dx.size() != k || dy.size() != n) {
    throw ShapeError("add_vec_mat_t: shape mismatch against " +
                     w.shape_string());
  }
  const Real* pw = w.data();
  for (std::size_t p = 0; p < k; ++p) {
    const Real* wrow = pw + p * n;
    Real s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += dy[j] * wrow[j];
    dx[p] += s;
  }
}

void add_outer(std::span<const Real> x, std::span<const Real> dy, Tensor& dw) {
  const std::size_t k = dw.rows(), n = dw.cols();
  if (x.size() != k || dy.size() != n) {
    throw ShapeError("add_outer: shape mismatch against " + dw.shape_string());
  }
  Real* pw = dw.data();
  for (std::size_t p = 0; p < k; ++p) {
    const Real xv = x[p];
    if (xv == 0.0) continue;
    Real* wrow = pw + p * n;
    for (std::size_t j = 0; j < n; ++j) wrow[j] += xv * dy[j];
  }
}

Real log_sum_exp(std::span<const Real> xs) {
  if (xs.empty()) throw ValidationError("log_sum_exp of an empty input");
  if (xs.size() == 1) return xs[0];
  const Real hi = *std::max_element(xs.begin(), xs.end());
  if (hi == -std::numeric_limits<Real>::infinity()) return hi;
  Real s = 0.0;
  for (Real x : xs) s += std::exp(x - hi);
  return hi + std::log(s);
}

Real log_add(Real a, Real b) {
  constexpr Real kNegInf = -std::numeric_limits<Real>::infinity();
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

void log_softmax_inplace(std::span<Real> row) {
  const Real z = log_sum_exp(row);
  for (Real& v : row) v -= z;
}

}  // namespace ctxrnnt
