#include "ctxrnnt/training/objective.h"

#include <exception>
#include <optional>
#include <string>

#include "ctxrnnt/error.h"
#include "ctxrnnt/loss/rnnt_loss.h"

namespace ctxrnnt {

Real utterance_loss(const Objective& obj, const ParamStore& store, const Example& ex,
                    GradBuffer* grads, Rng* rng) {
  const RnntModel& model = obj.model;
  const bool use_context = model.config().context_dim > 0;

  const Tensor* x = &ex.features;
  Tensor augmented;
  if (rng && obj.augment.enabled()) {
    augmented = spec_augment(ex.features, obj.augment, *rng);
    x = &augmented;
  }
  x->check_finite("features of " + ex.id);

  std::vector<Real> ctx;
  if (use_context) {
    ctx = obj.encoder.encode(store, ex.context);
    for (Real v : ctx) {
      if (!std::isfinite(v)) throw NonFiniteError("non-finite values in context vector of " + ex.id);
    }
  }

  RnntModel::StackCache enc_cache, pred_cache;
  RnntModel::JointCache joint_cache;
  const bool want = grads != nullptr;
  const Tensor enc = model.encode(store, *x, ctx, want ? &enc_cache : nullptr, rng);
  enc.check_finite("encoder output of " + ex.id);
  const Tensor pred = model.predict(store, ex.tokens, want ? &pred_cache : nullptr, rng);
  pred.check_finite("prediction output of " + ex.id);
  const Tensor lattice = model.joint(store, enc, pred, want ? &joint_cache : nullptr);
  lattice.check_finite("joint log-probs of " + ex.id);

  const LossResult loss = rnnt_loss(lattice, ex.tokens, model.blank_id(), want);
  if (!want) return loss.nll;

  Tensor grad_enc, grad_pred;
  model.joint_backward(store, joint_cache, loss.grad, *grads, grad_enc, grad_pred);
  std::vector<Real> grad_ctx;
  model.encode_backward(store, enc_cache, grad_enc, *grads, use_context ? &grad_ctx : nullptr);
  model.predict_backward(store, ex.tokens, pred_cache, grad_pred, *grads);
  if (use_context) obj.encoder.backward(store, ex.context, grad_ctx, *grads);
  return loss.nll;
}

namespace {

std::optional<Rng> stream_for(bool stochastic, std::uint64_t seed, std::uint64_t step,
                              std::size_t index) {
  if (!stochastic) return std::nullopt;
  return Rng(derive_seed(seed, step, index));
}

}  // namespace

BatchGradients batch_gradients(const Objective& obj, const ParamStore& store,
                               std::span<const Example* const> batch,
                               std::span<const std::size_t> indices, std::uint64_t seed,
                               std::uint64_t step, bool stochastic) {
  const std::size_t n = batch.size();
  std::vector<GradBuffer> partial(n);
  std::vector<Real> losses(n, 0.0);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < static_cast<long>(n); ++i) {
    const std::size_t k = static_cast<std::size_t>(i);
    try {
      partial[k] = store.make_grad_buffer();
      std::optional<Rng> rng = stream_for(stochastic, seed, step, indices[k]);
      losses[k] = utterance_loss(obj, store, *batch[k], &partial[k], rng ? &*rng : nullptr);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  BatchGradients out;
  out.grads = store.make_grad_buffer();
  for (std::size_t k = 0; k < n; ++k) {
    out.loss_sum += losses[k];
    out.grads.add(partial[k]);
  }
  return out;
}

BatchGradients batch_gradients_reference(const Objective& obj, const ParamStore& store,
                                         std::span<const Example* const> batch,
                                         std::span<const std::size_t> indices,
                                         std::uint64_t seed, std::uint64_t step, bool stochastic) {
  BatchGradients out;
  out.grads = store.make_grad_buffer();
  for (std::size_t k = 0; k < batch.size(); ++k) {
    std::optional<Rng> rng = stream_for(stochastic, seed, step, indices[k]);
    out.loss_sum += utterance_loss(obj, store, *batch[k], &out.grads, rng ? &*rng : nullptr);
  }
  return out;
}

}  // namespace ctxrnnt
