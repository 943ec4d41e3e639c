// ctxrnnt/data/synthetic.h
//
// Context-conditioned synthetic corpora. Each word is rendered as a fixed
// sequence of phone prototypes (64-dim, frames_per_phone frames each) plus
// per-frame Gaussian noise, with a silence phone between words. The two
// spellings of a homophone group share one pronunciation, so only the
// utterance context can tell them apart: variant A is preferred with
// probability p_preferred when the context falls inside the group's
// condition, variant B otherwise.

#ifndef CTXRNNT_DATA_SYNTHETIC_H_
#define CTXRNNT_DATA_SYNTHETIC_H_

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ctxrnnt/data/example.h"
#include "ctxrnnt/data/manifest.h"
#include "ctxrnnt/features/bpe.h"
#include "ctxrnnt/util/kv_config.h"

namespace ctxrnnt {

enum class ConditionAxis { kMonth, kRegion };

struct HomophoneGroup {
  std::string variant_a;
  std::string variant_b;
  ConditionAxis axis = ConditionAxis::kMonth;
  std::set<int> condition;  // months 1..12 or region ids preferring variant_a
};

struct SyntheticSpec {
  std::uint64_t seed = 1;
  std::size_t num_train = 2000;
  std::size_t num_dev = 200;
  std::size_t num_eval = 400;

  std::vector<std::string> fillers;
  std::vector<HomophoneGroup> groups;
  std::vector<std::string> domains;
  double p_preferred = 0.9;
  std::size_t min_fillers = 2;
  std::size_t max_fillers = 3;

  std::size_t num_filters = 64;
  std::size_t num_phones = 24;
  std::size_t phones_per_word = 2;
  std::size_t frames_per_phone = 3;
  double noise = 0.3;

  std::size_t num_regions = 20;
  double region_spread_deg = 0.3;
  double geo_missing = 0.1;
  int first_year = 2020;
  int last_year = 2021;

  std::size_t bpe_target = 200;

  // "control" (no groups), "month", "geo", "combined".
  static SyntheticSpec Preset(const std::string& name);
  // Starts from the preset named by the "preset" key (default "combined").
  static SyntheticSpec FromConfig(const KvConfig& cfg);
  KvConfig to_config() const;
  void validate() const;

  std::vector<GeoPoint> region_centers() const;
};

struct SlotDraw {
  std::size_t group = 0;
  bool in_condition = false;
  bool context_known = true;  // false for region groups without a coordinate
  bool chose_a = false;
};

struct SyntheticRecord {
  ManifestRecord record;
  Tensor frames;    // raw [T x num_filters]
  int region = -1;  // -1 when no coordinate
  std::vector<SlotDraw> slots;
};

struct SyntheticCorpus {
  SyntheticSpec spec;
  std::vector<SyntheticRecord> train, dev, eval;
  BpeVocab vocab;
};

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

// train.tsv, dev.tsv, eval.tsv, feats/<id>.feat, vocab.bpe, synthetic.conf.
void write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

std::vector<Example> synthetic_examples(const std::vector<SyntheticRecord>& records,
                                        const FeatureConfig& cfg, const BpeVocab& vocab,
                                        const ClusterModel* clusters);

std::vector<GeoPoint> coordinates_of(const std::vector<SyntheticRecord>& records);

// Empirical mutual information (nats) between two discrete variables.
double mutual_information(std::span<const std::pair<int, int>> samples);

}  // namespace ctxrnnt

#endif  // CTXRNNT_DATA_SYNTHETIC_H_
