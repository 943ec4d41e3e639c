// ctxrnnt/numerics/lstm.h
//
// Unidirectional LSTM with gate order (input, forget, candidate, output):
//
//   pre = x Wx + h_prev Wh + b          (4H)
//   i = sigmoid(pre_i)  f = sigmoid(pre_f)  g = tanh(pre_g)  o = sigmoid(pre_o)
//   c = f * c_prev + i * g
//   h = o * tanh(c)
//
// Wx is [in x 4H], Wh is [H x 4H], b is [4H].

#ifndef CTXRNNT_NUMERICS_LSTM_H_
#define CTXRNNT_NUMERICS_LSTM_H_

#include <span>
#include <string>
#include <vector>

#include "ctxrnnt/numerics/param_store.h"
#include "ctxrnnt/numerics/rng.h"
#include "ctxrnnt/numerics/tensor.h"

namespace ctxrnnt {

struct LstmWeights {
  const Tensor& wx;
  const Tensor& wh;
  const Tensor& b;
};

struct LstmGrads {
  Tensor* wx;
  Tensor* wh;
  Tensor* b;
};

struct LstmState {
  std::vector<Real> h;
  std::vector<Real> c;

  static LstmState Zero(std::size_t hidden) {
    return {std::vector<Real>(hidden, 0.0), std::vector<Real>(hidden, 0.0)};
  }
};

// Activations saved by a forward step for its backward.
struct LstmStepCache {
  std::vector<Real> x, h_prev, c_prev;
  std::vector<Real> gates;  // post-activation i, f, g, o (4H)
  std::vector<Real> tanh_c;
};

LstmState lstm_step(std::span<const Real> x, const LstmState& state,
                    const LstmWeights& w, LstmStepCache* cache = nullptr);

// Backward through one step. dh and dc are gradients w.r.t. the step's output
// state. Weight grads and dx accumulate; dh_prev and dc_prev are overwritten.
void lstm_step_backward(const LstmStepCache& cache, const LstmWeights& w,
                        std::span<const Real> dh, std::span<const Real> dc,
                        const LstmGrads& grads, std::span<Real> dx,
                        std::span<Real> dh_prev, std::span<Real> dc_prev);

// One LSTM layer whose weights live in a ParamStore. Runs whole sequences
// starting from the zero state, with the input projection batched as a matmul.
class LstmLayer {
 public:
  LstmLayer() = default;
  // Weights uniform in +-sqrt(6 / input); forget-gate bias 1, other biases 0.
  LstmLayer(ParamStore& store, const std::string& prefix, std::size_t input,
            std::size_t hidden, Rng& rng);
  // Binds to parameters that already exist in `store`.
  static LstmLayer Bind(const ParamStore& store, const std::string& prefix);

  std::size_t input_dim() const { return input_; }
  std::size_t hidden_dim() const { return hidden_; }
  LstmWeights weights(const ParamStore& store) const;

  struct Cache {
    Tensor inputs;   // [T x in]
    Tensor gates;    // [T x 4H] post-activation
    Tensor cells;    // [T x H]
    Tensor tanh_c;   // [T x H]
    Tensor outputs;  // [T x H]
  };

  Tensor forward(const ParamStore& store, const Tensor& inputs,
                 Cache* cache) const;
  // Returns dL/dinputs; weight grads accumulate into `grads`.
  Tensor backward(const ParamStore& store, const Cache& cache,
                  const Tensor& grad_outputs, GradBuffer& grads) const;

  ParamId wx_id() const { return wx_; }
  ParamId wh_id() const { return wh_; }
  ParamId b_id() const { return b_; }

  // Number of trainable values: 4H(in + H + 1).
  static std::size_t ParamCount(std::size_t input, std::size_t hidden) {
    return 4 * hidden * (input + hidden + 1);
  }

 private:
  ParamId wx_ = 0, wh_ = 0, b_ = 0;
  std::size_t input_ = 0, hidden_ = 0;
};

}  // namespace ctxrnnt

#endif  // CTXRNNT_NUMERICS_LSTM_H_
