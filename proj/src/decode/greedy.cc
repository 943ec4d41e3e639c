#include "ctxrnnt/decode/greedy.h"

#include <algorithm>

#include "ctxrnnt/error.h"

namespace ctxrnnt {

LatticeScorer::LatticeScorer(const Tensor& log_probs) : lattice_(log_probs) {
  if (log_probs.rank() != 3) throw ShapeError("lattice scorer needs [T x (U+1) x V]");
}

std::size_t LatticeScorer::num_frames() const { return lattice_.shape()[0]; }

std::vector<Real> LatticeScorer::score(std::size_t t) {
  const std::size_t labels = lattice_.shape()[1], vocab = lattice_.shape()[2];
  const std::size_t u = std::min(emitted_, labels - 1);
  const Real* p = lattice_.data() + (t * labels + u) * vocab;
  return {p, p + vocab};
}

void LatticeScorer::advance(int) { ++emitted_; }

ModelScorer::ModelScorer(const RnntModel& model, const ParamStore& store, Tensor encoded)
    : model_(model), store_(store), encoded_(std::move(encoded)), state_(model.pred_start(store)) {}

std::vector<Real> ModelScorer::score(std::size_t t) {
  return model_.joint_step(store_, encoded_.row(t), state_.output);
}

void ModelScorer::advance(int token) { state_ = model_.pred_advance(store_, state_, token); }

Hypothesis greedy_decode(DecodeScorer& scorer, int blank, std::size_t max_symbols_per_frame) {
  Hypothesis hyp;
  for (std::size_t t = 0; t < scorer.num_frames(); ++t) {
    for (std::size_t emitted = 0; emitted < max_symbols_per_frame; ++emitted) {
      const std::vector<Real> lp = scorer.score(t);
      const int best = static_cast<int>(std::max_element(lp.begin(), lp.end()) - lp.begin());
      if (best == blank) break;
      hyp.tokens.push_back(best);
      hyp.log_probs.push_back(lp[static_cast<std::size_t>(best)]);
      scorer.advance(best);
    }
  }
  return hyp;
}

Hypothesis greedy_decode(const RnntModel& model, const ParamStore& store, const Tensor& features,
                         std::span<const Real> context, const BpeVocab& vocab,
                         std::size_t max_symbols_per_frame) {
  ModelScorer scorer(model, store, model.encode(store, features, context));
  Hypothesis hyp = greedy_decode(scorer, model.blank_id(), max_symbols_per_frame);
  hyp.text = vocab.decode(hyp.tokens);
  return hyp;
}

}  // namespace ctxrnnt
