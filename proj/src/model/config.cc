#include "ctxrnnt/model/config.h"

#include "ctxrnnt/error.h"
#include "ctxrnnt/numerics/linear.h"
#include "ctxrnnt/numerics/lstm.h"

namespace ctxrnnt {

namespace {

std::size_t get_size(const std::map<std::string, std::string>& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) throw ValidationError("model header lacks '" + key + "'");
  try {
    return std::stoul(it->second);
  } catch (const std::exception&) {
    throw ValidationError("model header field '" + key + "' is not an integer");
  }
}

}  // namespace

ModelConfig& ModelConfig::with_context(ContextKind kind) {
  context_kind = kind;
  context_dim = ContextEncoder::OutputDim(kind, geo_rows);
  return *this;
}

void ModelConfig::validate() const {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ValidationError("model config: " + msg);
  };
  need(input_dim > 0, "input_dim must be positive");
  need(enc_layers > 0 && enc_hidden > 0 && enc_out > 0, "encoder sizes must be positive");
  need(pred_embed > 0 && pred_layers > 0 && pred_hidden > 0 && pred_out > 0,
       "prediction network sizes must be positive");
  need(vocab_size >= 2, "vocab_size must be >= 2 (blank plus one label)");
  need(joint_hidden > 0 || enc_out == pred_out,
       "additive joint (joint_hidden = 0) needs enc_out == pred_out");
  need(context_dim == ContextEncoder::OutputDim(context_kind, geo_rows),
       "context_dim " + std::to_string(context_dim) + " does not match encoder " +
           context_kind_name(context_kind));
  need(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
}

std::map<std::string, std::string> ModelConfig::to_metadata() const {
  return {
      {"model.input_dim", std::to_string(input_dim)},
      {"model.enc_layers", std::to_string(enc_layers)},
      {"model.enc_hidden", std::to_string(enc_hidden)},
      {"model.enc_out", std::to_string(enc_out)},
      {"model.pred_embed", std::to_string(pred_embed)},
      {"model.pred_layers", std::to_string(pred_layers)},
      {"model.pred_hidden", std::to_string(pred_hidden)},
      {"model.pred_out", std::to_string(pred_out)},
      {"model.joint_hidden", std::to_string(joint_hidden)},
      {"model.vocab_size", std::to_string(vocab_size)},
      {"model.context_kind", context_kind_name(context_kind)},
      {"model.context_dim", std::to_string(context_dim)},
      {"model.geo_rows", std::to_string(geo_rows)},
      {"model.dropout", std::to_string(dropout)},
  };
}

ModelConfig ModelConfig::FromMetadata(const std::map<std::string, std::string>& meta) {
  ModelConfig c;
  c.input_dim = get_size(meta, "model.input_dim");
  c.enc_layers = get_size(meta, "model.enc_layers");
  c.enc_hidden = get_size(meta, "model.enc_hidden");
  c.enc_out = get_size(meta, "model.enc_out");
  c.pred_embed = get_size(meta, "model.pred_embed");
  c.pred_layers = get_size(meta, "model.pred_layers");
  c.pred_hidden = get_size(meta, "model.pred_hidden");
  c.pred_out = get_size(meta, "model.pred_out");
  c.joint_hidden = get_size(meta, "model.joint_hidden");
  c.vocab_size = get_size(meta, "model.vocab_size");
  c.geo_rows = get_size(meta, "model.geo_rows");
  auto kind = meta.find("model.context_kind");
  if (kind == meta.end()) throw ValidationError("model header lacks 'model.context_kind'");
  c.context_kind = parse_context_kind(kind->second);
  c.context_dim = get_size(meta, "model.context_dim");
  auto drop = meta.find("model.dropout");
  c.dropout = drop == meta.end() ? 0.0 : std::stod(drop->second);
  c.validate();
  return c;
}

ModelConfig ModelConfig::FullResource(ContextKind kind) {
  ModelConfig c;
  c.input_dim = 192;
  c.enc_layers = 5;
  c.enc_hidden = 1024;
  c.enc_out = 512;
  c.pred_embed = 512;
  c.pred_layers = 2;
  c.pred_hidden = 1024;
  c.pred_out = 512;
  c.joint_hidden = 512;
  c.vocab_size = 4001;
  return c.with_context(kind);
}

ModelConfig ModelConfig::LowResource(ContextKind kind) {
  ModelConfig c = FullResource(ContextKind::kNone);
  c.enc_hidden = 760;
  c.pred_hidden = 760;
  c.joint_hidden = 0;
  return c.with_context(kind);
}

ModelConfig ModelConfig::DeskScale(std::size_t vocab_size, ContextKind kind) {
  ModelConfig c;
  c.vocab_size = vocab_size;
  return c.with_context(kind);
}

std::size_t parameter_count(const ModelConfig& cfg) {
  std::size_t n = 0;
  std::size_t in = cfg.input_dim + cfg.context_dim;
  for (std::size_t l = 0; l < cfg.enc_layers; ++l) {
    n += LstmLayer::ParamCount(in, cfg.enc_hidden);
    in = cfg.enc_hidden;
  }
  n += Linear::ParamCount(cfg.enc_hidden, cfg.enc_out, true);

  n += (cfg.vocab_size + 1) * cfg.pred_embed;  // + start row
  in = cfg.pred_embed;
  for (std::size_t l = 0; l < cfg.pred_layers; ++l) {
    n += LstmLayer::ParamCount(in, cfg.pred_hidden);
    in = cfg.pred_hidden;
  }
  n += Linear::ParamCount(cfg.pred_hidden, cfg.pred_out, true);

  if (cfg.joint_hidden > 0) {
    n += Linear::ParamCount(cfg.enc_out + cfg.pred_out, cfg.joint_hidden, true);
    n += Linear::ParamCount(cfg.joint_hidden, cfg.vocab_size, true);
  } else {
    n += Linear::ParamCount(cfg.enc_out, cfg.vocab_size, false);
  }
  return n + ContextEncoder::ParamCount(cfg.context_kind, cfg.geo_rows);
}

}  // namespace ctxrnnt
