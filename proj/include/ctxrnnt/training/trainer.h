// ctxrnnt/training/trainer.h
//
// Mini-batch training loop and model checkpoints. A step featurizes (with
// optional SpecAugment), encodes context, runs forward and backward for every
// utterance of the batch, averages gradients, clips the global norm and takes
// one Adam step. Everything random derives from one seed.

#ifndef CTXRNNT_TRAINING_TRAINER_H_
#define CTXRNNT_TRAINING_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctxrnnt/context/encoders.h"
#include "ctxrnnt/context/geo_cluster.h"
#include "ctxrnnt/data/example.h"
#include "ctxrnnt/features/bpe.h"
#include "ctxrnnt/features/spec_augment.h"
#include "ctxrnnt/model/rnnt_model.h"
#include "ctxrnnt/training/optim.h"
#include "ctxrnnt/util/kv_config.h"

namespace ctxrnnt {

struct TrainOptions {
  ModelConfig model;  // vocab_size is taken from the vocab at train time
  std::uint64_t seed = 1;
  std::size_t epochs = 10;
  std::size_t max_steps = 0;  // 0: epochs * ceil(N / batch_size)
  std::size_t batch_size = 16;
  LrSchedule schedule;
  AdamOptions adam;
  double clip_norm = 5.0;
  SpecAugmentPolicy augment;
  std::size_t checkpoint_every = 0;  // 0: only the final checkpoint

  // Reads train.* and model.* keys; unknown keys in those namespaces are
  // errors. Other keys are left to the caller.
  static TrainOptions FromConfig(const KvConfig& cfg);
  KvConfig to_config() const;
  void validate() const;
};

struct TrainableModel {
  ModelConfig config;
  ParamStore store;
  RnntModel model;
  ContextEncoder encoder;

  // Registers model then context parameters, initialized from `seed`.
  static TrainableModel Create(const ModelConfig& cfg, std::uint64_t seed);
};

struct TrainStats {
  std::vector<Real> losses;  // mean utterance NLL per step
  std::vector<double> grad_norms;  // pre-clip
  std::size_t steps = 0;
};

// Called after every step; `step` counts from 1.
using StepCallback = std::function<void(std::size_t step, Real loss, const TrainableModel&)>;

TrainStats train_model(TrainableModel& tm, const std::vector<Example>& data, const TrainOptions& opts,
                 const StepCallback& on_step = {});

// Checkpoint = parameter records plus a header holding the model config,
// the vocab (text and hash) and, when present, the cluster model.
struct ModelBundle {
  TrainableModel model;
  BpeVocab vocab;
  std::optional<ClusterModel> clusters;
  std::map<std::string, std::string> metadata;
};

void save_checkpoint(const std::filesystem::path& path, const TrainableModel& tm,
                     const BpeVocab& vocab, const ClusterModel* clusters,
                     const std::map<std::string, std::string>& extra = {});
ModelBundle load_checkpoint(const std::filesystem::path& path);

void write_loss_csv(const std::filesystem::path& path, const std::vector<Real>& losses);

}  // namespace ctxrnnt

#endif  // CTXRNNT_TRAINING_TRAINER_H_
