#include "ctxrnnt/data/example.h"

#include <exception>

#include "ctxrnnt/error.h"
#include "ctxrnnt/numerics/checkpoint.h"

namespace ctxrnnt {

Tensor prepare_features(Tensor frames, const FeatureConfig& cfg, const std::string& what) {
  if (frames.rank() != 2 || frames.rows() == 0) {
    throw ShapeError(what + ": features must be a non-empty [T x D] matrix, got " +
                     frames.shape_string());
  }
  if (frames.cols() == cfg.num_filters) return stack_downsample(frames, cfg);
  if (frames.cols() == cfg.stacked_dim()) return frames;
  throw ShapeError(what + ": feature width " + std::to_string(frames.cols()) + " is neither " +
                   std::to_string(cfg.num_filters) + " nor " + std::to_string(cfg.stacked_dim()));
}

Tensor load_features(const std::filesystem::path& path, const FeatureConfig& cfg) {
  if (path.extension() == ".wav") {
    const WavData wav = read_wav(path.string());
    if (static_cast<double>(wav.sample_rate) != cfg.sample_rate) {
      throw ValidationError(path.string() + ": sample rate " + std::to_string(wav.sample_rate) +
                            " does not match the frontend's " + std::to_string(cfg.sample_rate));
    }
    return stack_downsample(log_filterbank(wav.samples, cfg), cfg);
  }
  return prepare_features(read_feature_file(path), cfg, path.string());
}

Example make_example(const ManifestRecord& record, Tensor features, const BpeVocab& vocab,
                     const ClusterModel* clusters) {
  Example ex;
  ex.id = record.id;
  ex.features = std::move(features);
  ex.tokens = vocab.encode(record.transcript);
  ex.transcript = record.transcript;
  ex.domain = record.domain;
  ex.context.time = record.time;
  ex.context.cluster_id = clusters ? assign_cluster(record.coord, *clusters)
                                   : static_cast<int>(kGeoRows) - 1;
  return ex;
}

std::vector<Example> load_examples(const Manifest& manifest, const FeatureConfig& cfg,
                                   const BpeVocab& vocab, const ClusterModel* clusters) {
  const std::size_t n = manifest.records.size();
  std::vector<Example> out(n);
  std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < static_cast<long>(n); ++i) {
    const ManifestRecord& r = manifest.records[static_cast<std::size_t>(i)];
    try {
      out[static_cast<std::size_t>(i)] =
          make_example(r, load_features(manifest.resolve(r), cfg), vocab, clusters);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = "line " + std::to_string(r.line) + " ('" + r.id +
                                            "'): " + e.what();
    }
  }
  std::string joined;
  std::size_t failures = 0;
  for (const auto& e : errors) {
    if (e.empty()) continue;
    ++failures;
    joined += "\n" + e;
  }
  if (failures) {
    throw ValidationError(std::to_string(failures) + " record(s) could not be loaded" + joined);
  }
  return out;
}

}  // namespace ctxrnnt
