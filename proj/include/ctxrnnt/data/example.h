// ctxrnnt/data/example.h
//
// Model-ready utterances: stacked features, token ids and resolved context.

#ifndef CTXRNNT_DATA_EXAMPLE_H_
#define CTXRNNT_DATA_EXAMPLE_H_

#include <string>
#include <vector>

#include "ctxrnnt/context/encoders.h"
#include "ctxrnnt/context/geo_cluster.h"
#include "ctxrnnt/data/manifest.h"
#include "ctxrnnt/features/bpe.h"
#include "ctxrnnt/features/frontend.h"
#include "ctxrnnt/numerics/tensor.h"

namespace ctxrnnt {

struct Example {
  std::string id;
  Tensor features;  // [T x stacked_dim]
  std::vector<int> tokens;
  std::string transcript;
  std::string domain;
  UtteranceContext context;
};

// Raw filterbank frames [T x num_filters] are stacked and downsampled;
// already-stacked [T x stacked_dim] features pass through unchanged; .wav audio
// goes through the full frontend.
Tensor load_features(const std::filesystem::path& path, const FeatureConfig& cfg);

// Pass already-stacked or raw frames through the same width rule.
Tensor prepare_features(Tensor frames, const FeatureConfig& cfg, const std::string& what);

Example make_example(const ManifestRecord& record, Tensor features, const BpeVocab& vocab,
                     const ClusterModel* clusters);

// Loads every validated record of `manifest`. Parallel over records.
std::vector<Example> load_examples(const Manifest& manifest, const FeatureConfig& cfg,
                                   const BpeVocab& vocab, const ClusterModel* clusters);

}  // namespace ctxrnnt

#endif  // CTXRNNT_DATA_EXAMPLE_H_
