// ctxrnnt/training/objective.h
//
// Per-utterance transducer loss with its full backward pass (joint,
// prediction network, encoder, context encoder), and batch gradients.
// Each utterance runs at its exact length, so no padding enters the loss.

#ifndef CTXRNNT_TRAINING_OBJECTIVE_H_
#define CTXRNNT_TRAINING_OBJECTIVE_H_

#include <cstdint>
#include <span>

#include "ctxrnnt/context/encoders.h"
#include "ctxrnnt/data/example.h"
#include "ctxrnnt/features/spec_augment.h"
#include "ctxrnnt/model/rnnt_model.h"
#include "ctxrnnt/numerics/param_store.h"
#include "ctxrnnt/numerics/rng.h"

namespace ctxrnnt {

struct Objective {
  const RnntModel& model;
  const ContextEncoder& encoder;
  SpecAugmentPolicy augment = SpecAugmentPolicy::Disabled();
};

// Returns the utterance NLL. When `grads` is non-null the parameter gradients
// of that NLL are accumulated into it. `rng` drives SpecAugment and dropout;
// null means neither is applied. Throws NonFiniteError naming the first
// non-finite tensor.
Real utterance_loss(const Objective& obj, const ParamStore& store, const Example& ex,
                    GradBuffer* grads, Rng* rng = nullptr);

struct BatchGradients {
  Real loss_sum = 0.0;
  GradBuffer grads;  // sum over the batch
};

// Every utterance gets its own gradient buffer and its own random stream
// seeded from derive_seed(seed, step, index); buffers are then summed in
// batch order. The result is identical for any thread count.
BatchGradients batch_gradients(const Objective& obj, const ParamStore& store,
                               std::span<const Example* const> batch,
                               std::span<const std::size_t> indices, std::uint64_t seed,
                               std::uint64_t step, bool stochastic);

// Serial reference: one shared buffer, utterances in order.
BatchGradients batch_gradients_reference(const Objective& obj, const ParamStore& store,
                                         std::span<const Example* const> batch,
                                         std::span<const std::size_t> indices,
                                         std::uint64_t seed, std::uint64_t step, bool stochastic);

}  // namespace ctxrnnt

#endif  // CTXRNNT_TRAINING_OBJECTIVE_H_
