#include "ctxrnnt/training/optim.h"

#include <cmath>

#include "ctxrnnt/error.h"

namespace ctxrnnt {

void LrSchedule::validate() const {
  if (!(peak_lr > 0.0)) throw ValidationError("peak_lr must be > 0");
  if (!(decay_rate > 0.0 && decay_rate <= 1.0)) throw ValidationError("decay_rate must lie in (0, 1]");
  if (!(floor_lr >= 0.0 && floor_lr <= peak_lr)) {
    throw ValidationError("floor_lr must lie in [0, peak_lr]");
  }
}

double lr_at(std::size_t step, const LrSchedule& s) {
  if (s.warmup_steps > 0 && step <= s.warmup_steps) {
    const double w = static_cast<double>(s.warmup_steps);
    return s.peak_lr * (1.0 + static_cast<double>(step) * (w - 1.0) / w) / w;
  }
  if (step <= s.warmup_steps + s.hold_steps) return s.peak_lr;
  const double n = static_cast<double>(step - s.warmup_steps - s.hold_steps);
  return std::max(s.floor_lr, s.peak_lr * std::pow(s.decay_rate, n));
}

AdamState AdamState::For(const ParamStore& store) {
  AdamState st;
  for (ParamId id = 0; id < store.size(); ++id) {
    st.m.emplace_back(store.value(id).shape());
    st.v.emplace_back(store.value(id).shape());
  }
  return st;
}

void adam_step(ParamStore& store, AdamState& st, double lr, const AdamOptions& o) {
  if (st.m.size() != store.size()) throw ShapeError("Adam state does not match the parameter store");
  ++st.step;
  const double k = static_cast<double>(st.step);
  const double c1 = 1.0 - std::pow(o.beta1, k);
  const double c2 = 1.0 - std::pow(o.beta2, k);
  for (ParamId id = 0; id < store.size(); ++id) {
    Tensor& p = store.value(id);
    const Tensor& g = store.grad(id);
    Tensor& m = st.m[id];
    Tensor& v = st.v[id];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + o.epsilon);
    }
  }
}

double global_grad_norm(const ParamStore& store) {
  double sq = 0.0;
  for (ParamId id = 0; id < store.size(); ++id) {
    for (Real g : store.grad(id).values()) sq += g * g;
  }
  return std::sqrt(sq);
}

double clip_grad_norm(ParamStore& store, double max_norm) {
  const double norm = global_grad_norm(store);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (ParamId id = 0; id < store.size(); ++id) {
      for (Real& g : store.grad(id).values()) g *= scale;
    }
  }
  return norm;
}

}  // namespace ctxrnnt
