// ctxrnnt/decode/evaluate.h

#ifndef CTXRNNT_DECODE_EVALUATE_H_
#define CTXRNNT_DECODE_EVALUATE_H_

#include <string>
#include <vector>

#include "ctxrnnt/context/encoders.h"
#include "ctxrnnt/data/example.h"
#include "ctxrnnt/decode/greedy.h"
#include "ctxrnnt/decode/report.h"

namespace ctxrnnt {

struct EvalOutput {
  EvalReport report;
  std::vector<Hypothesis> hypotheses;  // aligned with the input examples
};

// Greedy-decodes every example (in parallel) and scores word errors against
// its transcript.
EvalOutput evaluate(const RnntModel& model, const ContextEncoder& encoder, const ParamStore& store,
                    const std::vector<Example>& examples, const BpeVocab& vocab,
                    const std::string& name,
                    std::size_t max_symbols_per_frame = kDefaultMaxSymbolsPerFrame);

}  // namespace ctxrnnt

#endif  // CTXRNNT_DECODE_EVALUATE_H_
