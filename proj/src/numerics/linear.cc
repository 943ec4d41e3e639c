#include "ctxrnnt/numerics/linear.h"

#include <cmath>

#include "ctxrnnt/error.h"
#include "ctxrnnt/numerics/ops.h"

namespace ctxrnnt {

Linear::Linear(ParamStore& store, const std::string& prefix, std::size_t input,
               std::size_t output, bool bias, Rng& rng)
    : input_(input), output_(output), has_bias_(bias) {
  const double scale = std::sqrt(3.0 / static_cast<double>(input));
  Tensor w({input, output});
  for (Real& v : w.values()) v = rng.uniform(-scale, scale);
  w_ = store.add(prefix + ".w", std::move(w));
  if (bias) b_ = store.add(prefix + ".b", Tensor({output}));
}

Linear Linear::Bind(const ParamStore& store, const std::string& prefix) {
  Linear layer;
  layer.w_ = store.id(prefix + ".w");
  layer.input_ = store.value(layer.w_).rows();
  layer.output_ = store.value(layer.w_).cols();
  layer.has_bias_ = store.contains(prefix + ".b");
  if (layer.has_bias_) layer.b_ = store.id(prefix + ".b");
  return layer;
}

Tensor Linear::forward(const ParamStore& store, const Tensor& x) const {
  if (x.cols() != input_) {
    throw ShapeError("linear expects " + std::to_string(input_) +
                     " inputs, got " + x.shape_string());
  }
  Tensor y = matmul(x, store.value(w_));
  if (has_bias_) {
    const Tensor& b = store.value(b_);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      std::span<Real> row = y.row(r);
      for (std::size_t j = 0; j < output_; ++j) row[j] += b[j];
    }
  }
  return y;
}

Tensor Linear::backward(const ParamStore& store, const Tensor& x,
                        const Tensor& dy, GradBuffer& grads) const {
  add_matmul_tn(x, dy, grads[w_]);
  if (has_bias_) {
    Tensor& db = grads[b_];
    for (std::size_t r = 0; r < dy.rows(); ++r) {
      std::span<const Real> row = dy.row(r);
      for (std::size_t j = 0; j < output_; ++j) db[j] += row[j];
    }
  }
  Tensor dx({x.rows(), input_});
  add_matmul_nt(dy, store.value(w_), dx);
  return dx;
}

}  // namespace ctxrnnt
