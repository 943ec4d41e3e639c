#include <gtest/gtest.h>
#include <omp.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "ctxrnnt/data/synthetic.h"
#include "ctxrnnt/error.h"
#include "ctxrnnt/training/objective.h"
#include "ctxrnnt/training/optim.h"
#include "ctxrnnt/training/trainer.h"
#include "test_util.h"

using namespace ctxrnnt;

namespace {

struct SmallCorpus {
  SyntheticCorpus corpus;
  ClusterModel clusters;
  std::vector<Example> train;
};

SmallCorpus small_corpus(const std::string& preset, std::size_t n, std::uint64_t seed) {
  SyntheticSpec spec = SyntheticSpec::Preset(preset);
  spec.seed = seed;
  spec.num_train = n;
  spec.num_dev = 4;
  spec.num_eval = 4;
  SmallCorpus s{generate_synthetic(spec), {}, {}};
  const bool fit = n >= 9;
  if (fit) s.clusters = fit_geo_clusters(coordinates_of(s.corpus.train), 3, seed);
  s.train = synthetic_examples(s.corpus.train, FeatureConfig{}, s.corpus.vocab, fit ? &s.clusters : nullptr);
  return s;
}

ModelConfig small_model(std::size_t vocab, ContextKind kind) {
  ModelConfig c = ModelConfig::DeskScale(vocab);
  c.geo_rows = 4;
  c.enc_hidden = 16;
  c.pred_hidden = 16;
  c.enc_out = c.pred_out = c.pred_embed = 8;
  c.joint_hidden = 8;
  return c.with_context(kind);
}

std::vector<Real> flat_values(const ParamStore& store) {
  std::vector<Real> out;
  for (ParamId id = 0; id < store.size(); ++id) {
    const auto v = store.value(id).values();
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

}  // namespace

TEST(LrSchedule, Boundaries) {
  const LrSchedule s;  // peak 3e-3, warm-up 50, hold 300, rate 0.998, floor 1e-5
  EXPECT_DOUBLE_EQ(lr_at(0, s), 3e-3 / 50);
  EXPECT_DOUBLE_EQ(lr_at(25, s), 3e-3 * (1 + 25.0 * 49 / 50) / 50);
  EXPECT_DOUBLE_EQ(lr_at(50, s), 3e-3);
  EXPECT_DOUBLE_EQ(lr_at(51, s), 3e-3);
  EXPECT_DOUBLE_EQ(lr_at(350, s), 3e-3);
  EXPECT_DOUBLE_EQ(lr_at(351, s), 3e-3 * 0.998);
  EXPECT_NEAR(lr_at(850, s), 3e-3 * std::pow(0.998, 500), 1e-15);
  EXPECT_DOUBLE_EQ(lr_at(100000, s), 1e-5);
  for (std::size_t k = 1; k < 5000; ++k) {
    if (k <= 50) {
      EXPECT_GT(lr_at(k, s), lr_at(k - 1, s));
    } else {
      EXPECT_LE(lr_at(k, s), lr_at(k - 1, s));
    }
  }
}

TEST(LrSchedule, Validation) {
  LrSchedule s;
  s.floor_lr = 1.0;
  EXPECT_THROW(s.validate(), ValidationError);
  s = LrSchedule{};
  s.decay_rate = 1.5;
  EXPECT_THROW(s.validate(), ValidationError);
  s = LrSchedule{};
  s.peak_lr = -1;
  EXPECT_THROW(s.validate(), ValidationError);
}

TEST(Adam, MatchesHandRecurrence) {
  ParamStore store;
  const ParamId id = store.add("p", Tensor::Vector({0.5, -1.0, 2.0}));
  AdamState st = AdamState::For(store);
  const AdamOptions o;
  std::vector<double> p{0.5, -1.0, 2.0}, m(3, 0.0), v(3, 0.0);
  const double lr = 0.01;
  for (int k = 1; k <= 25; ++k) {
    for (std::size_t i = 0; i < 3; ++i) {
      const double g = std::sin(0.3 * k + static_cast<double>(i)) + 0.1 * p[i];
      store.grad(id)[i] = g;
      m[i] = 0.9 * m[i] + 0.1 * g;
      v[i] = 0.999 * v[i] + 0.001 * g * g;
      const double mh = m[i] / (1 - std::pow(0.9, k));
      const double vh = v[i] / (1 - std::pow(0.999, k));
      p[i] -= lr * mh / (std::sqrt(vh) + 1e-8);
    }
    adam_step(store, st, lr, o);
    for (std::size_t i = 0; i < 3; ++i) ASSERT_NEAR(store.value(id)[i], p[i], 1e-12) << "step " << k;
  }
  EXPECT_EQ(st.step, 25u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ParamStore store;
  const ParamId id = store.add("p", Tensor::Vector({1.0, 1.0}));
  store.grad(id)[0] = 3.0;
  store.grad(id)[1] = -0.01;
  AdamState st = AdamState::For(store);
  adam_step(store, st, 0.1);
  EXPECT_NEAR(store.value(id)[0], 0.9, 1e-8);
  EXPECT_NEAR(store.value(id)[1], 1.1, 1e-6);
}

TEST(Clip, RescalesToMaxNorm) {
  ParamStore store;
  const ParamId a = store.add("a", Tensor::Vector({3.0, 0.0}));
  const ParamId b = store.add("b", Tensor::Vector({0.0, 0.0}));
  store.grad(a)[0] = 6.0;
  store.grad(b)[1] = 8.0;
  EXPECT_DOUBLE_EQ(global_grad_norm(store), 10.0);
  EXPECT_DOUBLE_EQ(clip_grad_norm(store, 5.0), 10.0);
  EXPECT_NEAR(store.grad(a)[0], 3.0, 1e-15);
  EXPECT_NEAR(store.grad(b)[1], 4.0, 1e-15);
  EXPECT_NEAR(global_grad_norm(store), 5.0, 1e-14);
  EXPECT_NEAR(clip_grad_norm(store, 5.0), 5.0, 1e-14);
  EXPECT_NEAR(store.grad(a)[0], 3.0, 1e-14);
}

TEST(BatchGradients, ParallelMatchesReference) {
  const SmallCorpus s = small_corpus("combined", 12, 3);
  const ModelConfig cfg = small_model(s.corpus.vocab.size(), ContextKind::kCombinedTimeGeo);
  const TrainableModel tm = TrainableModel::Create(cfg, 4);
  std::vector<const Example*> batch;
  for (const auto& ex : s.train) batch.push_back(&ex);
  std::vector<std::size_t> idx(batch.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (bool stochastic : {false, true}) {
    const Objective obj{tm.model, tm.encoder,
                        stochastic ? SpecAugmentPolicy{} : SpecAugmentPolicy::Disabled()};
    const BatchGradients par = batch_gradients(obj, tm.store, batch, idx, 9, 2, stochastic);
    const BatchGradients ref = batch_gradients_reference(obj, tm.store, batch, idx, 9, 2, stochastic);
    EXPECT_NEAR(par.loss_sum, ref.loss_sum, 1e-10 * std::abs(ref.loss_sum));
    ASSERT_EQ(par.grads.size(), ref.grads.size());
    for (std::size_t p = 0; p < ref.grads.size(); ++p) {
      for (std::size_t i = 0; i < ref.grads[p].size(); ++i) {
        ASSERT_NEAR(par.grads[p][i], ref.grads[p][i], 1e-10 * (1 + std::abs(ref.grads[p][i])))
            << tm.store.name(p);
      }
    }
  }
}

TEST(BatchGradients, ThreadCountInvariant) {
  const SmallCorpus s = small_corpus("month", 10, 5);
  const ModelConfig cfg = small_model(s.corpus.vocab.size(), ContextKind::kTimeEmbeddingLookUp);
  const TrainableModel tm = TrainableModel::Create(cfg, 6);
  std::vector<const Example*> batch;
  for (const auto& ex : s.train) batch.push_back(&ex);
  std::vector<std::size_t> idx(batch.size());
  std::iota(idx.begin(), idx.end(), 0);
  const Objective obj{tm.model, tm.encoder, SpecAugmentPolicy{}};
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const BatchGradients one = batch_gradients(obj, tm.store, batch, idx, 1, 1, true);
  omp_set_num_threads(4);
  const BatchGradients four = batch_gradients(obj, tm.store, batch, idx, 1, 1, true);
  omp_set_num_threads(saved);
  EXPECT_EQ(one.loss_sum, four.loss_sum);
  for (std::size_t p = 0; p < one.grads.size(); ++p) {
    for (std::size_t i = 0; i < one.grads[p].size(); ++i) ASSERT_EQ(one.grads[p][i], four.grads[p][i]);
  }
}

TEST(Training, OverfitsTwentyUtterances) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const SmallCorpus s = small_corpus("control", 20, seed);
    TrainOptions o;
    o.model = ModelConfig::DeskScale(s.corpus.vocab.size());
    o.seed = seed;
    o.batch_size = 20;
    o.max_steps = 300;
    o.augment = SpecAugmentPolicy::Disabled();
    TrainableModel tm = TrainableModel::Create(o.model, seed);
    const TrainStats st = train_model(tm, s.train, o);
    ASSERT_EQ(st.losses.size(), 300u);
    EXPECT_LT(st.losses.back(), 0.5 * st.losses.front()) << "seed " << seed;
    for (Real l : st.losses) ASSERT_TRUE(std::isfinite(l));
  }
}

TEST(Training, BitIdenticalAcrossRunsAndThreads) {
  const SmallCorpus s = small_corpus("geo", 16, 7);
  TrainOptions o;
  o.model = small_model(s.corpus.vocab.size(), ContextKind::kGeoEmbeddingLookUp);
  o.seed = 8;
  o.batch_size = 5;
  o.max_steps = 12;
  auto run = [&](int threads) {
    const int saved = omp_get_max_threads();
    omp_set_num_threads(threads);
    TrainableModel tm = TrainableModel::Create(o.model, o.seed);
    const TrainStats st = train_model(tm, s.train, o);
    omp_set_num_threads(saved);
    return std::make_pair(st.losses, flat_values(tm.store));
  };
  const auto a = run(1);
  const auto b = run(1);
  const auto c = run(4);
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  EXPECT_EQ(a.first, c.first);
  EXPECT_EQ(a.second, c.second);
}

TEST(Training, StepCallbackAndStats) {
  const SmallCorpus s = small_corpus("control", 9, 2);
  TrainOptions o;
  o.model = small_model(s.corpus.vocab.size(), ContextKind::kNone);
  o.batch_size = 4;
  o.epochs = 2;
  std::vector<std::size_t> steps;
  TrainableModel tm = TrainableModel::Create(o.model, 1);
  const TrainStats st =
      train_model(tm, s.train, o, [&](std::size_t step, Real, const TrainableModel&) { steps.push_back(step); });
  EXPECT_EQ(st.steps, 6u);
  EXPECT_EQ(steps, (std::vector<std::size_t>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(st.grad_norms.size(), 6u);
}

TEST(TrainOptions, ConfigRoundTripAndErrors) {
  TrainOptions o;
  o.seed = 42;
  o.batch_size = 7;
  o.schedule.peak_lr = 1e-3;
  o.model.context_kind = ContextKind::kGeoOneHot;
  o.model.context_dim = 21;
  const TrainOptions back = TrainOptions::FromConfig(o.to_config());
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.batch_size, 7u);
  EXPECT_DOUBLE_EQ(back.schedule.peak_lr, 1e-3);
  EXPECT_EQ(back.model.context_kind, ContextKind::kGeoOneHot);

  KvConfig bad = o.to_config();
  bad.set("train.bogus", "1");
  EXPECT_THROW(TrainOptions::FromConfig(bad), ValidationError);
  KvConfig neg = o.to_config();
  neg.set("train.batch_size", "0");
  EXPECT_THROW(TrainOptions::FromConfig(neg).validate(), ValidationError);
}

TEST(Checkpoint, RoundTripPreservesPredictions) {
  const SmallCorpus s = small_corpus("geo", 12, 4);
  const ModelConfig cfg = small_model(s.corpus.vocab.size(), ContextKind::kGeoOneHot);
  const TrainableModel tm = TrainableModel::Create(cfg, 3);
  const auto dir = ctxrnnt::testing::scratch_dir("ckpt");
  save_checkpoint(dir / "m.ckpt", tm, s.corpus.vocab, &s.clusters, {{"train.seed", "3"}});
  const ModelBundle b = load_checkpoint(dir / "m.ckpt");
  EXPECT_EQ(b.vocab.hash(), s.corpus.vocab.hash());
  ASSERT_TRUE(b.clusters.has_value());
  EXPECT_EQ(b.clusters->centroids, s.clusters.centroids);
  EXPECT_EQ(b.metadata.at("train.seed"), "3");
  EXPECT_EQ(flat_values(b.model.store), flat_values(tm.store));
  const Objective o1{tm.model, tm.encoder}, o2{b.model.model, b.model.encoder};
  EXPECT_EQ(utterance_loss(o1, tm.store, s.train[0], nullptr),
            utterance_loss(o2, b.model.store, s.train[0], nullptr));
}

TEST(Objective, NonFiniteIsReported) {
  const SmallCorpus s = small_corpus("control", 3, 1);
  const ModelConfig cfg = small_model(s.corpus.vocab.size(), ContextKind::kNone);
  TrainableModel tm = TrainableModel::Create(cfg, 1);
  tm.store.value(tm.store.id("enc.proj.w"))[0] = std::numeric_limits<Real>::quiet_NaN();
  const Objective obj{tm.model, tm.encoder};
  EXPECT_THROW(utterance_loss(obj, tm.store, s.train[0], nullptr), NonFiniteError);
}
