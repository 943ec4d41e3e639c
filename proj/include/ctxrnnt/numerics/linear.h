// ctxrnnt/numerics/linear.h

#ifndef CTXRNNT_NUMERICS_LINEAR_H_
#define CTXRNNT_NUMERICS_LINEAR_H_

#include <string>

#include "ctxrnnt/numerics/param_store.h"
#include "ctxrnnt/numerics/rng.h"
#include "ctxrnnt/numerics/tensor.h"

namespace ctxrnnt {

// y = x W (+ b), W is [in x out]. Operates on row batches [N x in].
class Linear {
 public:
  Linear() = default;
  // Weight uniform in +-sqrt(3 / input), bias 0.
  Linear(ParamStore& store, const std::string& prefix, std::size_t input,
         std::size_t output, bool bias, Rng& rng);
  static Linear Bind(const ParamStore& store, const std::string& prefix);

  std::size_t input_dim() const { return input_; }
  std::size_t output_dim() const { return output_; }
  bool has_bias() const { return has_bias_; }
  ParamId weight_id() const { return w_; }
  ParamId bias_id() const { return b_; }

  Tensor forward(const ParamStore& store, const Tensor& x) const;
  // Accumulates dW/db; returns dL/dx.
  Tensor backward(const ParamStore& store, const Tensor& x, const Tensor& dy,
                  GradBuffer& grads) const;

  static std::size_t ParamCount(std::size_t input, std::size_t output,
                                bool bias) {
    return input * output + (bias ? output : 0);
  }

 private:
  ParamId w_ = 0, b_ = 0;
  std::size_t input_ = 0, output_ = 0;
  bool has_bias_ = false;
};

}  // namespace ctxrnnt

#endif  // CTXRNNT_NUMERICS_LINEAR_H_
