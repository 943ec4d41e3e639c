// ctxrnnt/decode/greedy.h
//
// Greedy transducer decoding. At frame t the scorer gives log P(. | t, state);
// a non-blank argmax is emitted, the prediction state advances and the same
// frame is scored again; blank (or the per-frame emission cap) moves to t+1.

#ifndef CTXRNNT_DECODE_GREEDY_H_
#define CTXRNNT_DECODE_GREEDY_H_

#include <span>
#include <string>
#include <vector>

#include "ctxrnnt/features/bpe.h"
#include "ctxrnnt/model/rnnt_model.h"
#include "ctxrnnt/numerics/tensor.h"

namespace ctxrnnt {

inline constexpr std::size_t kDefaultMaxSymbolsPerFrame = 10;

struct Hypothesis {
  std::vector<int> tokens;
  std::string text;
  std::vector<Real> log_probs;  // one per emitted token
};

class DecodeScorer {
 public:
  virtual ~DecodeScorer() = default;
  virtual std::size_t num_frames() const = 0;
  // Log-probabilities over the vocab at frame t for the current label state.
  virtual std::vector<Real> score(std::size_t t) = 0;
  virtual void advance(int token) = 0;
};

// Reads a fixed lattice [T x (U+1) x V]; the label state is the number of
// tokens emitted so far (clamped at U).
class LatticeScorer : public DecodeScorer {
 public:
  explicit LatticeScorer(const Tensor& log_probs);
  std::size_t num_frames() const override;
  std::vector<Real> score(std::size_t t) override;
  void advance(int token) override;

 private:
  const Tensor& lattice_;
  std::size_t emitted_ = 0;
};

class ModelScorer : public DecodeScorer {
 public:
  ModelScorer(const RnntModel& model, const ParamStore& store, Tensor encoded);
  std::size_t num_frames() const override { return encoded_.rows(); }
  std::vector<Real> score(std::size_t t) override;
  void advance(int token) override;

 private:
  const RnntModel& model_;
  const ParamStore& store_;
  Tensor encoded_;
  RnntModel::PredState state_;
};

// Token ids and per-token log-probs only; text is left empty.
Hypothesis greedy_decode(DecodeScorer& scorer, int blank = 0,
                         std::size_t max_symbols_per_frame = kDefaultMaxSymbolsPerFrame);

Hypothesis greedy_decode(const RnntModel& model, const ParamStore& store, const Tensor& features,
                         std::span<const Real> context, const BpeVocab& vocab,
                         std::size_t max_symbols_per_frame = kDefaultMaxSymbolsPerFrame);

}  // namespace ctxrnnt

#endif  // CTXRNNT_DECODE_GREEDY_H_
