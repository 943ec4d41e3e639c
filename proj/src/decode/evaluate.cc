#include "ctxrnnt/decode/evaluate.h"

#include <exception>

#include "ctxrnnt/error.h"

namespace ctxrnnt {

EvalOutput evaluate(const RnntModel& model, const ContextEncoder& encoder, const ParamStore& store,
                    const std::vector<Example>& examples, const BpeVocab& vocab,
                    const std::string& name, std::size_t max_symbols_per_frame) {
  const std::size_t n = examples.size();
  EvalOutput out;
  out.hypotheses.resize(n);
  std::vector<EditCounts> counts(n);
  std::vector<std::string> errors(n);
  const bool use_context = model.config().context_dim > 0;
#pragma omp parallel for schedule(dynamic, 4)
  for (long i = 0; i < static_cast<long>(n); ++i) {
    const std::size_t k = static_cast<std::size_t>(i);
    const Example& ex = examples[k];
    try {
      std::vector<Real> ctx;
      if (use_context) ctx = encoder.encode(store, ex.context);
      out.hypotheses[k] = greedy_decode(model, store, ex.features, ctx, vocab, max_symbols_per_frame);
      counts[k] = word_errors(ex.transcript, out.hypotheses[k].text);
    } catch (const std::exception& e) {
      errors[k] = ex.id + ": " + e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw ValidationError("evaluation failed for " + e);
  }
  out.report.name = name;
  const int none_id = static_cast<int>(kGeoRows) - 1;
  for (std::size_t k = 0; k < n; ++k) {
    const Example& ex = examples[k];
    out.report.add(counts[k], ex.domain, ex.context.time.month, ex.context.cluster_id, none_id);
  }
  return out;
}

}  // namespace ctxrnnt
