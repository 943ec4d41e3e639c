// ctxrnnt/numerics/tensor.h

#ifndef CTXRNNT_NUMERICS_TENSOR_H_
#define CTXRNNT_NUMERICS_TENSOR_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ctxrnnt {

// All arithmetic runs in 64-bit so that finite differences stay meaningful.
using Real = double;

// Dense row-major array with a runtime shape. Rank 1 and 2 cover almost
// everything; higher ranks are used for the joint lattice.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, Real fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<Real> data);

  static Tensor Vector(std::initializer_list<Real> values);
  static Tensor Matrix(std::initializer_list<std::initializer_list<Real>> rows);
  static Tensor Identity(std::size_t n);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }

  // Matrix views; a rank-1 tensor is treated as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }
  std::span<Real> values() { return data_; }
  std::span<const Real> values() const { return data_; }

  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }
  Real& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  Real at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<Real> row(std::size_t r);
  std::span<const Real> row(std::size_t r) const;

  void fill(Real v);
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  // Throws NonFiniteError naming `what` if any element is NaN or Inf.
  void check_finite(std::string_view what) const;
  bool all_finite() const;

  std::string shape_string() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<Real> data_;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

}  // namespace ctxrnnt

#endif  // CTXRNNT_NUMERICS_TENSOR_H_
