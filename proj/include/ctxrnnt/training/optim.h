// ctxrnnt/training/optim.h
//
// Learning-rate schedule with linear warm-up, constant hold and exponential
// decay, plus Adam with bias correction and global gradient-norm clipping.
//
//   lr(s) = peak * (1 + s * (W - 1) / W) / W        s <= W   (lr(0) = peak/W)
//   lr(s) = peak                                    W < s <= W + H
//   lr(s) = max(floor, peak * rate^(s - W - H))     s > W + H

#ifndef CTXRNNT_TRAINING_OPTIM_H_
#define CTXRNNT_TRAINING_OPTIM_H_

#include <cstdint>
#include <vector>

#include "ctxrnnt/numerics/param_store.h"

namespace ctxrnnt {

struct LrSchedule {
  double peak_lr = 3e-3;
  std::size_t warmup_steps = 50;
  std::size_t hold_steps = 300;
  double decay_rate = 0.998;  // per step
  double floor_lr = 1e-5;

  void validate() const;
};

double lr_at(std::size_t step, const LrSchedule& s);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<Tensor> m, v;
  std::uint64_t step = 0;

  static AdamState For(const ParamStore& store);
};

// One update from the gradients held in `store`:
//   m = b1 m + (1-b1) g;  v = b2 v + (1-b2) g^2
//   p -= lr * (m / (1-b1^k)) / (sqrt(v / (1-b2^k)) + eps)
void adam_step(ParamStore& store, AdamState& state, double lr, const AdamOptions& opts = {});

double global_grad_norm(const ParamStore& store);
// Rescales all grads so their global L2 norm is at most max_norm. Returns the
// norm before clipping.
double clip_grad_norm(ParamStore& store, double max_norm);

}  // namespace ctxrnnt

#endif  // CTXRNNT_TRAINING_OPTIM_H_
