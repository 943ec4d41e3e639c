// ctxrnnt/model/config.h

#ifndef CTXRNNT_MODEL_CONFIG_H_
#define CTXRNNT_MODEL_CONFIG_H_

#include <cstddef>
#include <map>
#include <string>

#include "ctxrnnt/context/encoders.h"

namespace ctxrnnt {

struct ModelConfig {
  std::size_t input_dim = 192;  // stacked filterbank frame
  std::size_t enc_layers = 2;
  std::size_t enc_hidden = 32;
  std::size_t enc_out = 16;
  std::size_t pred_embed = 16;
  std::size_t pred_layers = 1;
  std::size_t pred_hidden = 32;
  std::size_t pred_out = 16;
  std::size_t joint_hidden = 16;  // 0: additive joint (enc + pred -> linear)
  std::size_t vocab_size = 30;    // including the blank
  ContextKind context_kind = ContextKind::kNone;
  std::size_t context_dim = 0;  // must equal the encoder output width, 0 for baseline
  std::size_t geo_rows = kGeoRows;
  double dropout = 0.0;

  // Sets context_kind and the matching context_dim.
  ModelConfig& with_context(ContextKind kind);
  void validate() const;

  std::map<std::string, std::string> to_metadata() const;
  static ModelConfig FromMetadata(const std::map<std::string, std::string>& meta);

  // 5 x 1024 encoder -> 512; pred embed 512, 2 x 1024 -> 512;
  // concat joint FFN 512 -> 4001.
  static ModelConfig FullResource(ContextKind kind = ContextKind::kNone);
  // 760-unit encoder and prediction LSTMs, outputs summed, no joint FFN.
  static ModelConfig LowResource(ContextKind kind = ContextKind::kNone);
  // 2 x 32 encoder -> 16; pred embed 16, 1 x 32 -> 16; joint 16.
  static ModelConfig DeskScale(std::size_t vocab_size, ContextKind kind = ContextKind::kNone);
};

// Trainable parameters of the RNN-T plus its context encoder tables,
// computed from the layer shapes without allocating anything.
std::size_t parameter_count(const ModelConfig& cfg);

}  // namespace ctxrnnt

#endif  // CTXRNNT_MODEL_CONFIG_H_
