// ctxrnnt/model/rnnt_model.h
//
// RNN transducer with an optional per-utterance context vector appended to
// every encoder input frame:
//
//   h_enc[t]  = Proj(LSTM^L([x_t ; e]))             encoder
//   h_pred[u] = Proj(LSTM^L(Embed(y_{u-1})))        prediction, u = 0 is start
//   z[t,u]    = W2 tanh(W1 [h_enc[t] ; h_pred[u]] + b1) + b2   (joint_hidden > 0)
//             = W (h_enc[t] + h_pred[u])                        (joint_hidden = 0)
//   log P(. | t, u) = log_softmax(z[t,u])
//
// The model object only holds parameter ids; values live in a ParamStore so
// forward passes over one store can run concurrently.

#ifndef CTXRNNT_MODEL_RNNT_MODEL_H_
#define CTXRNNT_MODEL_RNNT_MODEL_H_

#include <cstdint>
#include <span>
#include <vector>

#include "ctxrnnt/model/config.h"
#include "ctxrnnt/numerics/linear.h"
#include "ctxrnnt/numerics/lstm.h"
#include "ctxrnnt/numerics/param_store.h"
#include "ctxrnnt/numerics/rng.h"

namespace ctxrnnt {

class RnntModel {
 public:
  RnntModel() = default;
  static RnntModel Create(ParamStore& store, const ModelConfig& cfg, Rng& rng);
  static RnntModel Bind(const ParamStore& store, const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  int blank_id() const { return 0; }
  int start_row() const { return static_cast<int>(cfg_.vocab_size); }

  struct StackCache {
    std::vector<LstmLayer::Cache> layers;
    std::vector<Tensor> masks;  // dropout masks (empty when inactive)
    Tensor top;                 // input to the projection
  };

  // x: [T x input_dim]; context: empty for baseline models. `dropout_rng`
  // enables dropout when the config asks for it.
  Tensor encode(const ParamStore& store, const Tensor& x, std::span<const Real> context,
                StackCache* cache = nullptr, Rng* dropout_rng = nullptr) const;
  // Returns nothing; accumulates weight grads and, if non-null, dL/dcontext.
  void encode_backward(const ParamStore& store, const StackCache& cache, const Tensor& grad,
                       GradBuffer& grads, std::vector<Real>* grad_context) const;

  // tokens: label prefix y_0..y_{U-1} -> [(U+1) x pred_out].
  Tensor predict(const ParamStore& store, std::span<const int> tokens,
                 StackCache* cache = nullptr, Rng* dropout_rng = nullptr) const;
  void predict_backward(const ParamStore& store, std::span<const int> tokens,
                        const StackCache& cache, const Tensor& grad, GradBuffer& grads) const;

  struct JointCache {
    Tensor enc, pred;
    Tensor hidden;     // [T*(U+1) x joint_hidden] tanh activations (full joint)
    Tensor log_probs;  // [T x (U+1) x V]
  };

  // Joint lattice of log-probabilities [T x (U+1) x V].
  Tensor joint(const ParamStore& store, const Tensor& enc, const Tensor& pred,
               JointCache* cache = nullptr) const;
  void joint_backward(const ParamStore& store, const JointCache& cache,
                      const Tensor& grad_log_probs, GradBuffer& grads, Tensor& grad_enc,
                      Tensor& grad_pred) const;

  // Incremental prediction network for decoding.
  struct PredState {
    std::vector<LstmState> layers;
    std::vector<Real> output;  // pred_out
  };
  PredState pred_start(const ParamStore& store) const;
  PredState pred_advance(const ParamStore& store, const PredState& state, int token) const;
  // log P(. | enc frame, pred output), length V.
  std::vector<Real> joint_step(const ParamStore& store, std::span<const Real> enc_row,
                               std::span<const Real> pred_output) const;

 private:
  Tensor run_stack(const ParamStore& store, const std::vector<LstmLayer>& layers,
                   const Linear& proj, Tensor inputs, StackCache* cache, Rng* rng) const;
  Tensor stack_backward(const ParamStore& store, const std::vector<LstmLayer>& layers,
                        const Linear& proj, const StackCache& cache, const Tensor& grad,
                        GradBuffer& grads) const;
  std::vector<Real> pred_embedding(const ParamStore& store, int row) const;

  ModelConfig cfg_;
  std::vector<LstmLayer> enc_layers_;
  Linear enc_proj_;
  ParamId pred_embed_ = 0;
  std::vector<LstmLayer> pred_layers_;
  Linear pred_proj_;
  Linear joint_hidden_;  // full joint only
  Linear joint_out_;
};

}  // namespace ctxrnnt

#endif  // CTXRNNT_MODEL_RNNT_MODEL_H_
