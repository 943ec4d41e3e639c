#include "ctxrnnt/numerics/grad_check.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ctxrnnt/numerics/rng.h"

namespace ctxrnnt {

GradCheckReport grad_check(const LossFunction& loss, ParamStore& params,
                           const GradCheckOptions& options) {
  GradBuffer analytic = params.make_grad_buffer();
  loss(params, &analytic);

  GradCheckReport report;
  Rng rng(options.seed);
  for (ParamId id = 0; id < params.size(); ++id) {
    Tensor& value = params.value(id);
    std::vector<std::size_t> indices(value.size());
    std::iota(indices.begin(), indices.end(), 0);
    if (options.max_elements_per_param &&
        indices.size() > options.max_elements_per_param) {
      // Partial Fisher-Yates: the first k entries become a random subset.
      for (std::size_t i = 0; i < options.max_elements_per_param; ++i) {
        const std::size_t j = i + rng.below(indices.size() - i);
        std::swap(indices[i], indices[j]);
      }
      indices.resize(options.max_elements_per_param);
      std::sort(indices.begin(), indices.end());
    }
    Real worst = 0.0;
    for (std::size_t idx : indices) {
      const Real saved = value[idx];
      value[idx] = saved + options.epsilon;
      const Real up = loss(params, nullptr);
      value[idx] = saved - options.epsilon;
      const Real down = loss(params, nullptr);
      value[idx] = saved;
      const Real numeric = (up - down) / (2.0 * options.epsilon);
      const Real a = analytic[id][idx];
      const Real err = std::abs(a - numeric) / std::max<Real>(1.0, std::abs(numeric));
      worst = std::max(worst, err);
      if (!(err <= options.tolerance)) {
        report.failures.push_back({params.name(id), idx, a, numeric, err});
      }
      ++report.checked;
    }
    report.max_error_by_param[params.name(id)] = worst;
    report.max_error = std::max(report.max_error, worst);
  }
  return report;
}

}  // namespace ctxrnnt
