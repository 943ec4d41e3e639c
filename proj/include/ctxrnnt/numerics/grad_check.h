// ctxrnnt/numerics/grad_check.h

#ifndef CTXRNNT_NUMERICS_GRAD_CHECK_H_
#define CTXRNNT_NUMERICS_GRAD_CHECK_H_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ctxrnnt/numerics/param_store.h"

namespace ctxrnnt {

// Scalar loss of the parameters. When `grads` is non-null the function must
// also accumulate its analytic gradient there.
using LossFunction = std::function<Real(const ParamStore&, GradBuffer*)>;

struct GradCheckOptions {
  Real epsilon = 1e-5;
  Real tolerance = 1e-4;
  // 0 checks every element; otherwise a seeded random subset per parameter.
  std::size_t max_elements_per_param = 0;
  std::uint64_t seed = 0;
};

struct GradCheckFailure {
  std::string param;
  std::size_t index;
  Real analytic;
  Real numeric;
  Real error;
};

struct GradCheckReport {
  std::size_t checked = 0;
  Real max_error = 0.0;
  std::map<std::string, Real> max_error_by_param;
  std::vector<GradCheckFailure> failures;

  bool ok() const { return failures.empty(); }
};

// Compares analytic gradients against central differences. The error for
// each element is |analytic - numeric| / max(1, |numeric|). Parameters are
// perturbed in place and restored exactly.
GradCheckReport grad_check(const LossFunction& loss, ParamStore& params,
                           const GradCheckOptions& options = {});

}  // namespace ctxrnnt

#endif  // CTXRNNT_NUMERICS_GRAD_CHECK_H_
