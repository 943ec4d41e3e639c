#include "ctxrnnt/training/trainer.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "ctxrnnt/error.h"
#include "ctxrnnt/numerics/checkpoint.h"
#include "ctxrnnt/numerics/rng.h"
#include "ctxrnnt/training/objective.h"

namespace ctxrnnt {

namespace {

constexpr std::uint64_t kInitTag = 0x696e6974;
constexpr std::uint64_t kShuffleTag = 0x73687566;
constexpr std::uint64_t kStepTag = 0x73746570;

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t size_of(const KvConfig& cfg, const std::string& key, std::size_t fallback) {
  const long v = cfg.get_int(key, static_cast<long>(fallback));
  if (v < 0) throw ValidationError(key + " must be non-negative");
  return static_cast<std::size_t>(v);
}

}  // namespace

TrainOptions TrainOptions::FromConfig(const KvConfig& cfg) {
  static const std::set<std::string> kKnown = {
      "model.preset",      "model.enc_layers",  "model.enc_hidden",   "model.enc_out",
      "model.pred_embed",  "model.pred_layers", "model.pred_hidden",  "model.pred_out",
      "model.joint_hidden", "model.context",    "model.dropout",      "train.seed",
      "train.epochs",      "train.max_steps",   "train.batch_size",   "train.peak_lr",
      "train.warmup_steps", "train.hold_steps", "train.decay_rate",   "train.floor_lr",
      "train.clip_norm",   "train.adam_beta1",  "train.adam_beta2",   "train.adam_epsilon",
      "train.checkpoint_every", "train.spec_augment", "train.freq_masks", "train.freq_width",
      "train.time_masks",  "train.time_width",  "train.time_ratio"};
  std::vector<std::string> unknown;
  for (const auto& [k, v] : cfg.values()) {
    if ((k.rfind("model.", 0) == 0 || k.rfind("train.", 0) == 0) && !kKnown.count(k)) {
      unknown.push_back(k);
    }
  }
  if (!unknown.empty()) {
    std::string msg = "unknown training option(s):";
    for (const auto& k : unknown) msg += " " + k;
    throw ValidationError(msg);
  }

  TrainOptions o;
  const ContextKind kind = parse_context_kind(cfg.get_string("model.context", "none"));
  const std::string preset = cfg.get_string("model.preset", "desk");
  if (preset == "desk") {
    o.model = ModelConfig::DeskScale(2, kind);
  } else if (preset == "full") {
    o.model = ModelConfig::FullResource(kind);
  } else if (preset == "low") {
    o.model = ModelConfig::LowResource(kind);
  } else {
    throw ValidationError("model.preset must be desk, full or low, got '" + preset + "'");
  }
  ModelConfig& m = o.model;
  m.enc_layers = size_of(cfg, "model.enc_layers", m.enc_layers);
  m.enc_hidden = size_of(cfg, "model.enc_hidden", m.enc_hidden);
  m.enc_out = size_of(cfg, "model.enc_out", m.enc_out);
  m.pred_embed = size_of(cfg, "model.pred_embed", m.pred_embed);
  m.pred_layers = size_of(cfg, "model.pred_layers", m.pred_layers);
  m.pred_hidden = size_of(cfg, "model.pred_hidden", m.pred_hidden);
  m.pred_out = size_of(cfg, "model.pred_out", m.pred_out);
  m.joint_hidden = size_of(cfg, "model.joint_hidden", m.joint_hidden);
  m.dropout = cfg.get_double("model.dropout", m.dropout);

  o.seed = static_cast<std::uint64_t>(cfg.get_int("train.seed", static_cast<long>(o.seed)));
  o.epochs = size_of(cfg, "train.epochs", o.epochs);
  o.max_steps = size_of(cfg, "train.max_steps", o.max_steps);
  o.batch_size = size_of(cfg, "train.batch_size", o.batch_size);
  o.schedule.peak_lr = cfg.get_double("train.peak_lr", o.schedule.peak_lr);
  o.schedule.warmup_steps = size_of(cfg, "train.warmup_steps", o.schedule.warmup_steps);
  o.schedule.hold_steps = size_of(cfg, "train.hold_steps", o.schedule.hold_steps);
  o.schedule.decay_rate = cfg.get_double("train.decay_rate", o.schedule.decay_rate);
  o.schedule.floor_lr = cfg.get_double("train.floor_lr", o.schedule.floor_lr);
  o.clip_norm = cfg.get_double("train.clip_norm", o.clip_norm);
  o.adam.beta1 = cfg.get_double("train.adam_beta1", o.adam.beta1);
  o.adam.beta2 = cfg.get_double("train.adam_beta2", o.adam.beta2);
  o.adam.epsilon = cfg.get_double("train.adam_epsilon", o.adam.epsilon);
  o.checkpoint_every = size_of(cfg, "train.checkpoint_every", o.checkpoint_every);
  if (!cfg.get_bool("train.spec_augment", true)) o.augment = SpecAugmentPolicy::Disabled();
  o.augment.num_freq_masks = size_of(cfg, "train.freq_masks", o.augment.num_freq_masks);
  o.augment.max_freq_width = size_of(cfg, "train.freq_width", o.augment.max_freq_width);
  o.augment.num_time_masks = size_of(cfg, "train.time_masks", o.augment.num_time_masks);
  o.augment.max_time_width = size_of(cfg, "train.time_width", o.augment.max_time_width);
  o.augment.max_time_ratio = cfg.get_double("train.time_ratio", o.augment.max_time_ratio);
  return o;
}

KvConfig TrainOptions::to_config() const {
  KvConfig c;
  c.set("model.enc_layers", std::to_string(model.enc_layers));
  c.set("model.enc_hidden", std::to_string(model.enc_hidden));
  c.set("model.enc_out", std::to_string(model.enc_out));
  c.set("model.pred_embed", std::to_string(model.pred_embed));
  c.set("model.pred_layers", std::to_string(model.pred_layers));
  c.set("model.pred_hidden", std::to_string(model.pred_hidden));
  c.set("model.pred_out", std::to_string(model.pred_out));
  c.set("model.joint_hidden", std::to_string(model.joint_hidden));
  c.set("model.context", context_kind_name(model.context_kind));
  c.set("model.dropout", num(model.dropout));
  c.set("train.seed", std::to_string(seed));
  c.set("train.epochs", std::to_string(epochs));
  c.set("train.max_steps", std::to_string(max_steps));
  c.set("train.batch_size", std::to_string(batch_size));
  c.set("train.peak_lr", num(schedule.peak_lr));
  c.set("train.warmup_steps", std::to_string(schedule.warmup_steps));
  c.set("train.hold_steps", std::to_string(schedule.hold_steps));
  c.set("train.decay_rate", num(schedule.decay_rate));
  c.set("train.floor_lr", num(schedule.floor_lr));
  c.set("train.clip_norm", num(clip_norm));
  c.set("train.adam_beta1", num(adam.beta1));
  c.set("train.adam_beta2", num(adam.beta2));
  c.set("train.adam_epsilon", num(adam.epsilon));
  c.set("train.checkpoint_every", std::to_string(checkpoint_every));
  c.set("train.spec_augment", augment.enabled() ? "true" : "false");
  c.set("train.freq_masks", std::to_string(augment.num_freq_masks));
  c.set("train.freq_width", std::to_string(augment.max_freq_width));
  c.set("train.time_masks", std::to_string(augment.num_time_masks));
  c.set("train.time_width", std::to_string(augment.max_time_width));
  c.set("train.time_ratio", num(augment.max_time_ratio));
  return c;
}

void TrainOptions::validate() const {
  if (batch_size == 0) throw ValidationError("train.batch_size must be > 0");
  if (epochs == 0 && max_steps == 0) throw ValidationError("need train.epochs or train.max_steps > 0");
  if (!(clip_norm > 0.0)) throw ValidationError("train.clip_norm must be > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ValidationError("Adam betas must lie in [0, 1)");
  }
  if (!(adam.epsilon > 0.0)) throw ValidationError("train.adam_epsilon must be > 0");
  schedule.validate();
  augment.validate();
}

TrainableModel TrainableModel::Create(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  TrainableModel tm;
  tm.config = cfg;
  Rng rng(derive_seed(seed, kInitTag));
  tm.model = RnntModel::Create(tm.store, cfg, rng);
  tm.encoder = ContextEncoder::Create(tm.store, cfg.context_kind, rng, cfg.geo_rows);
  return tm;
}

TrainStats train_model(TrainableModel& tm, const std::vector<Example>& data, const TrainOptions& opts,
                 const StepCallback& on_step) {
  opts.validate();
  if (data.empty()) throw ValidationError("training set is empty");
  for (const auto& ex : data) {
    if (ex.features.cols() != tm.config.input_dim) {
      throw ShapeError(ex.id + ": feature width " + std::to_string(ex.features.cols()) +
                       " does not match model input " + std::to_string(tm.config.input_dim));
    }
  }
  const std::size_t n = data.size();
  const std::size_t per_epoch = (n + opts.batch_size - 1) / opts.batch_size;
  const std::size_t total = opts.max_steps ? opts.max_steps : opts.epochs * per_epoch;

  Objective obj{tm.model, tm.encoder, opts.augment};
  AdamState adam = AdamState::For(tm.store);
  TrainStats stats;
  std::vector<std::size_t> order(n);
  std::vector<const Example*> batch;
  std::vector<std::size_t> indices;
  const bool stochastic = opts.augment.enabled() || tm.config.dropout > 0.0;
  const std::uint64_t step_seed = derive_seed(opts.seed, kStepTag);

  for (std::size_t step = 0; step < total; ++step) {
    const std::size_t epoch = step / per_epoch, pos = step % per_epoch;
    if (pos == 0) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng shuffle(derive_seed(opts.seed, kShuffleTag, epoch));
      for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
    }
    batch.clear();
    indices.clear();
    for (std::size_t i = pos * opts.batch_size; i < std::min(n, (pos + 1) * opts.batch_size); ++i) {
      batch.push_back(&data[order[i]]);
      indices.push_back(order[i]);
    }

    BatchGradients bg;
    try {
      bg = batch_gradients(obj, tm.store, batch, indices, step_seed, step, stochastic);
    } catch (const NonFiniteError& e) {
      throw NonFiniteError("step " + std::to_string(step + 1) + ": " + e.what());
    }
    const Real scale = 1.0 / static_cast<Real>(batch.size());
    const Real loss = bg.loss_sum * scale;
    if (!std::isfinite(loss)) {
      throw NonFiniteError("step " + std::to_string(step + 1) + ": loss is " + std::to_string(loss));
    }
    tm.store.zero_grads();
    tm.store.accumulate(bg.grads, scale);
    for (ParamId id = 0; id < tm.store.size(); ++id) {
      tm.store.grad(id).check_finite("step " + std::to_string(step + 1) + ": gradient of " +
                                     tm.store.name(id));
    }
    stats.grad_norms.push_back(clip_grad_norm(tm.store, opts.clip_norm));
    adam_step(tm.store, adam, lr_at(step, opts.schedule), opts.adam);
    for (ParamId id = 0; id < tm.store.size(); ++id) {
      tm.store.value(id).check_finite("step " + std::to_string(step + 1) + ": parameter " +
                                      tm.store.name(id));
    }
    stats.losses.push_back(loss);
    stats.steps = step + 1;
    if (on_step) on_step(step + 1, loss, tm);
  }
  return stats;
}

void save_checkpoint(const std::filesystem::path& path, const TrainableModel& tm,
                     const BpeVocab& vocab, const ClusterModel* clusters,
                     const std::map<std::string, std::string>& extra) {
  Container c;
  c.metadata = extra;
  for (const auto& [k, v] : tm.config.to_metadata()) c.metadata[k] = v;
  c.metadata["kind"] = "model";
  c.metadata["vocab.text"] = vocab.serialize();
  c.metadata["vocab.hash"] = std::to_string(vocab.hash());
  if (clusters) c.metadata["clusters.text"] = clusters->serialize();
  append_params(tm.store, c);
  write_container(path, c);
}

ModelBundle load_checkpoint(const std::filesystem::path& path) {
  const Container c = read_container(path);
  auto kind = c.metadata.find("kind");
  if (kind == c.metadata.end() || kind->second != "model") {
    throw ValidationError(path.string() + " is not a model checkpoint");
  }
  ModelBundle b;
  b.metadata = c.metadata;
  const ModelConfig cfg = ModelConfig::FromMetadata(c.metadata);
  b.model = TrainableModel::Create(cfg, 0);
  load_params(c, b.model.store);
  auto vocab_text = c.metadata.find("vocab.text");
  if (vocab_text == c.metadata.end()) throw ValidationError(path.string() + " has no vocab");
  b.vocab = BpeVocab::Parse(vocab_text->second);
  if (std::to_string(b.vocab.hash()) != c.metadata.at("vocab.hash")) {
    throw ValidationError(path.string() + ": vocab hash mismatch");
  }
  if (b.vocab.size() != cfg.vocab_size) {
    throw ValidationError(path.string() + ": vocab size " + std::to_string(b.vocab.size()) +
                          " does not match the model's " + std::to_string(cfg.vocab_size));
  }
  if (auto it = c.metadata.find("clusters.text"); it != c.metadata.end()) {
    b.clusters = ClusterModel::Parse(it->second);
  }
  return b;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<Real>& losses) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "step,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) out << (i + 1) << "," << num(losses[i]) << "\n";
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace ctxrnnt
