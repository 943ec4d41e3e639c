// ctxrnnt/features/spec_augment.h

#ifndef CTXRNNT_FEATURES_SPEC_AUGMENT_H_
#define CTXRNNT_FEATURES_SPEC_AUGMENT_H_

#include <vector>

#include "ctxrnnt/numerics/rng.h"
#include "ctxrnnt/numerics/tensor.h"

namespace ctxrnnt {

struct SpecAugmentPolicy {
  std::size_t num_freq_masks = 2;
  std::size_t max_freq_width = 8;
  std::size_t num_time_masks = 2;
  std::size_t max_time_width = 10;
  double max_time_ratio = 0.2;  // time mask width is also capped at p * T

  static SpecAugmentPolicy Disabled() { return {0, 0, 0, 0, 0.0}; }
  bool enabled() const { return num_freq_masks + num_time_masks > 0; }
  void validate() const;
};

struct AppliedMask {
  bool frequency;  // false: time mask
  std::size_t start;
  std::size_t width;
};

// Masks bands of a [T x F] feature matrix, filling masked cells with the
// mean over the whole input. Unmasked cells are copied untouched.
Tensor spec_augment(const Tensor& frames, const SpecAugmentPolicy& policy,
                    Rng& rng, std::vector<AppliedMask>* applied = nullptr);

}  // namespace ctxrnnt

#endif  // CTXRNNT_FEATURES_SPEC_AUGMENT_H_
