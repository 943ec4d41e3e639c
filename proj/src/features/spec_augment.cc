#include "ctxrnnt/features/spec_augment.h"

#include <algorithm>
#include <cmath>

#include "ctxrnnt/error.h"

namespace ctxrnnt {

void SpecAugmentPolicy::validate() const {
  if (!(max_time_ratio >= 0.0 && max_time_ratio <= 1.0)) {
    throw ValidationError("spec augment max_time_ratio must lie in [0, 1]");
  }
}

Tensor spec_augment(const Tensor& frames, const SpecAugmentPolicy& policy,
                    Rng& rng, std::vector<AppliedMask>* applied) {
  policy.validate();
  Tensor out = frames;
  if (!policy.enabled() || frames.empty()) return out;
  const std::size_t steps = frames.rows();
  const std::size_t dim = frames.cols();

  Real mean = 0.0;
  for (Real v : frames.values()) mean += v;
  mean /= static_cast<Real>(frames.size());

  for (std::size_t m = 0; m < policy.num_freq_masks; ++m) {
    const std::size_t cap = std::min(policy.max_freq_width, dim);
    const std::size_t width = static_cast<std::size_t>(rng.between(0, static_cast<long>(cap)));
    const std::size_t start = static_cast<std::size_t>(rng.between(0, static_cast<long>(dim - width)));
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t f = start; f < start + width; ++f) out.at(t, f) = mean;
    }
    if (applied) applied->push_back({true, start, width});
  }

  const auto ratio_cap = static_cast<std::size_t>(
      std::floor(policy.max_time_ratio * static_cast<double>(steps)));
  for (std::size_t m = 0; m < policy.num_time_masks; ++m) {
    const std::size_t cap = std::min(policy.max_time_width, ratio_cap);
    const std::size_t width = static_cast<std::size_t>(rng.between(0, static_cast<long>(cap)));
    const std::size_t start = static_cast<std::size_t>(rng.between(0, static_cast<long>(steps - width)));
    for (std::size_t t = start; t < start + width; ++t) {
      std::span<Real> row = out.row(t);
      std::fill(row.begin(), row.end(), mean);
    }
    if (applied) applied->push_back({false, start, width});
  }
  return out;
}

}  // namespace ctxrnnt
