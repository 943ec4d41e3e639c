#include "ctxrnnt/data/synthetic.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <unordered_map>

#include "ctxrnnt/error.h"
#include "ctxrnnt/numerics/checkpoint.h"
#include "ctxrnnt/numerics/rng.h"

namespace ctxrnnt {

namespace {

constexpr std::uint64_t kPhoneTag = 0x70686f6e;
constexpr std::uint64_t kLexiconTag = 0x6c657869;

const std::vector<std::string> kFillers = {"play", "show", "set",   "find", "call", "open",
                                           "turn", "read", "start", "stop", "check", "send",
                                           "add",  "get",  "tell",  "list"};
const std::vector<std::string> kDomains = {"Music", "Weather", "Shopping", "Knowledge"};

HomophoneGroup month_group(std::size_t i) {
  static const std::pair<const char*, const char*> kPairs[] = {{"sleigh", "slay"},
                                                               {"holly", "holy"}};
  if (i >= std::size(kPairs)) throw ValidationError("at most 2 month groups are available");
  return {kPairs[i].first, kPairs[i].second, ConditionAxis::kMonth, {11, 12, 1, 2, 3, 4}};
}

HomophoneGroup region_group(std::size_t i) {
  static const std::pair<const char*, const char*> kPairs[] = {{"bazaar", "bizarre"},
                                                               {"cellar", "seller"}};
  if (i >= std::size(kPairs)) throw ValidationError("at most 2 region groups are available");
  return {kPairs[i].first, kPairs[i].second, ConditionAxis::kRegion, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}};
}

std::size_t count_axis(const std::vector<HomophoneGroup>& groups, ConditionAxis axis) {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.axis == axis;
  return n;
}

const HomophoneGroup* first_of_axis(const std::vector<HomophoneGroup>& groups, ConditionAxis axis) {
  for (const auto& g : groups) {
    if (g.axis == axis) return &g;
  }
  return nullptr;
}

struct Lexicon {
  std::vector<Tensor> phones;  // [num_filters] prototypes; index 0 is silence
  std::unordered_map<std::string, std::vector<int>> pronunciation;
};

Lexicon build_lexicon(const SyntheticSpec& spec) {
  Lexicon lex;
  Rng prng(derive_seed(spec.seed, kPhoneTag));
  for (std::size_t p = 0; p < spec.num_phones; ++p) {
    Tensor proto({spec.num_filters});
    for (Real& v : proto.values()) v = prng.normal();
    lex.phones.push_back(std::move(proto));
  }
  Rng wrng(derive_seed(spec.seed, kLexiconTag));
  std::set<std::vector<int>> used;
  auto fresh = [&]() {
    while (true) {
      std::vector<int> seq(spec.phones_per_word);
      for (int& p : seq) p = 1 + static_cast<int>(wrng.below(spec.num_phones - 1));
      if (used.insert(seq).second) return seq;
    }
  };
  for (const auto& w : spec.fillers) lex.pronunciation[w] = fresh();
  for (const auto& g : spec.groups) {
    const std::vector<int> seq = fresh();
    lex.pronunciation[g.variant_a] = seq;
    lex.pronunciation[g.variant_b] = seq;
  }
  return lex;
}

std::string format_timestamp(int year, int month, int day, int hour, int minute) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d", year, month, day, hour, minute);
  return buf;
}

int pick_from(const std::set<int>& values, bool inside, int lo, int hi, Rng& rng) {
  std::vector<int> pool;
  for (int v = lo; v <= hi; ++v) {
    if (values.count(v) == static_cast<std::size_t>(inside)) pool.push_back(v);
  }
  return pool[rng.below(pool.size())];
}

SyntheticRecord make_record(const SyntheticSpec& spec, const Lexicon& lex,
                            const std::vector<GeoPoint>& centers, const std::string& split,
                            std::size_t split_index, std::size_t i, bool balance) {
  Rng rng(derive_seed(spec.seed, split_index + 1, i));
  SyntheticRecord out;

  const HomophoneGroup* mg = first_of_axis(spec.groups, ConditionAxis::kMonth);
  const int year = static_cast<int>(rng.between(spec.first_year, spec.last_year));
  int month;
  if (balance && mg) {
    month = pick_from(mg->condition, i % 2 == 0, 1, 12, rng);
  } else {
    month = static_cast<int>(rng.between(1, 12));
  }
  using namespace std::chrono;
  const unsigned last_day =
      static_cast<unsigned>(year_month_day_last(std::chrono::year(year),
                                                month_day_last(std::chrono::month(month))).day());
  const int day = static_cast<int>(rng.between(1, last_day));
  const int hour = static_cast<int>(rng.between(0, 23));
  const int minute = static_cast<int>(rng.between(0, 59));

  const HomophoneGroup* rg = first_of_axis(spec.groups, ConditionAxis::kRegion);
  std::optional<GeoPoint> coord;
  if (!rng.bernoulli(spec.geo_missing)) {
    const int nregions = static_cast<int>(spec.num_regions);
    if (balance && rg) {
      out.region = pick_from(rg->condition, (i / 2) % 2 == 0, 0, nregions - 1, rng);
    } else {
      out.region = static_cast<int>(rng.below(spec.num_regions));
    }
    const GeoPoint& c = centers[static_cast<std::size_t>(out.region)];
    coord = GeoPoint{c.lat + spec.region_spread_deg * rng.normal(),
                     c.lon + spec.region_spread_deg * rng.normal()};
  }

  std::vector<std::string> words;
  const std::size_t nfill =
      static_cast<std::size_t>(rng.between(static_cast<long>(spec.min_fillers),
                                           static_cast<long>(spec.max_fillers)));
  for (std::size_t k = 0; k < nfill; ++k) words.push_back(spec.fillers[rng.below(spec.fillers.size())]);
  for (std::size_t g = 0; g < spec.groups.size(); ++g) {
    const HomophoneGroup& grp = spec.groups[g];
    SlotDraw slot;
    slot.group = g;
    double p_a;
    if (grp.axis == ConditionAxis::kMonth) {
      slot.in_condition = grp.condition.count(month) > 0;
      p_a = slot.in_condition ? spec.p_preferred : 1.0 - spec.p_preferred;
    } else if (out.region < 0) {
      slot.context_known = false;
      p_a = 0.5;
    } else {
      slot.in_condition = grp.condition.count(out.region) > 0;
      p_a = slot.in_condition ? spec.p_preferred : 1.0 - spec.p_preferred;
    }
    slot.chose_a = rng.bernoulli(p_a);
    const std::size_t pos = rng.below(words.size() + 1);
    words.insert(words.begin() + static_cast<long>(pos), slot.chose_a ? grp.variant_a : grp.variant_b);
    out.slots.push_back(slot);
  }

  std::vector<int> phones{0};
  std::string transcript;
  for (const auto& w : words) {
    const auto& seq = lex.pronunciation.at(w);
    phones.insert(phones.end(), seq.begin(), seq.end());
    phones.push_back(0);
    if (!transcript.empty()) transcript += ' ';
    transcript += w;
  }
  const std::size_t fpp = spec.frames_per_phone;
  Tensor frames({phones.size() * fpp, spec.num_filters});
  for (std::size_t p = 0; p < phones.size(); ++p) {
    const Tensor& proto = lex.phones[static_cast<std::size_t>(phones[p])];
    for (std::size_t f = 0; f < fpp; ++f) {
      std::span<Real> row = frames.row(p * fpp + f);
      for (std::size_t j = 0; j < spec.num_filters; ++j) row[j] = proto[j] + spec.noise * rng.normal();
    }
  }

  char id[64];
  std::snprintf(id, sizeof id, "%s-%05zu", split.c_str(), i);
  ManifestRecord& r = out.record;
  r.id = id;
  r.feature_path = "feats/" + r.id + ".feat";
  r.transcript = std::move(transcript);
  r.timestamp = format_timestamp(year, month, day, hour, minute);
  r.time = parse_datetime(r.timestamp);
  r.coord = coord;
  r.domain = spec.domains[rng.below(spec.domains.size())];
  r.line = i + 1;
  out.frames = std::move(frames);
  return out;
}

std::vector<SyntheticRecord> make_split(const SyntheticSpec& spec, const Lexicon& lex,
                                        const std::vector<GeoPoint>& centers,
                                        const std::string& split, std::size_t split_index,
                                        std::size_t n, bool balance) {
  std::vector<SyntheticRecord> out(n);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(n); ++i) {
    out[static_cast<std::size_t>(i)] =
        make_record(spec, lex, centers, split, split_index, static_cast<std::size_t>(i), balance);
  }
  return out;
}

}  // namespace

SyntheticSpec SyntheticSpec::Preset(const std::string& name) {
  SyntheticSpec s;
  s.fillers = kFillers;
  s.domains = kDomains;
  if (name == "control") {
  } else if (name == "month") {
    s.groups.push_back(month_group(0));
  } else if (name == "geo") {
    s.groups.push_back(region_group(0));
  } else if (name == "combined") {
    s.groups.push_back(month_group(0));
    s.groups.push_back(region_group(0));
  } else {
    throw ValidationError("unknown synthetic preset '" + name +
                          "' (expected control, month, geo or combined)");
  }
  return s;
}

SyntheticSpec SyntheticSpec::FromConfig(const KvConfig& cfg) {
  cfg.check_known({"preset", "seed", "num_train", "num_dev", "num_eval", "month_groups",
                   "region_groups", "p_preferred", "min_fillers", "max_fillers", "num_phones",
                   "phones_per_word", "frames_per_phone", "noise", "region_spread_deg",
                   "geo_missing", "first_year", "last_year", "bpe_target"});
  SyntheticSpec s = Preset(cfg.get_string("preset", "combined"));
  if (cfg.has("month_groups") || cfg.has("region_groups")) {
    s.groups.clear();
    const long months = cfg.get_int("month_groups", 0);
    const long regions = cfg.get_int("region_groups", 0);
    if (months < 0 || regions < 0) throw ValidationError("group counts must be non-negative");
    for (long i = 0; i < months; ++i) s.groups.push_back(month_group(static_cast<std::size_t>(i)));
    for (long i = 0; i < regions; ++i) s.groups.push_back(region_group(static_cast<std::size_t>(i)));
  }
  auto size_key = [&](const char* key, std::size_t fallback) {
    const long v = cfg.get_int(key, static_cast<long>(fallback));
    if (v < 0) throw ValidationError(std::string(key) + " must be non-negative");
    return static_cast<std::size_t>(v);
  };
  s.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<long>(s.seed)));
  s.num_train = size_key("num_train", s.num_train);
  s.num_dev = size_key("num_dev", s.num_dev);
  s.num_eval = size_key("num_eval", s.num_eval);
  s.p_preferred = cfg.get_double("p_preferred", s.p_preferred);
  s.min_fillers = size_key("min_fillers", s.min_fillers);
  s.max_fillers = size_key("max_fillers", s.max_fillers);
  s.num_phones = size_key("num_phones", s.num_phones);
  s.phones_per_word = size_key("phones_per_word", s.phones_per_word);
  s.frames_per_phone = size_key("frames_per_phone", s.frames_per_phone);
  s.noise = cfg.get_double("noise", s.noise);
  s.region_spread_deg = cfg.get_double("region_spread_deg", s.region_spread_deg);
  s.geo_missing = cfg.get_double("geo_missing", s.geo_missing);
  s.first_year = static_cast<int>(cfg.get_int("first_year", s.first_year));
  s.last_year = static_cast<int>(cfg.get_int("last_year", s.last_year));
  s.bpe_target = size_key("bpe_target", s.bpe_target);
  s.validate();
  return s;
}

KvConfig SyntheticSpec::to_config() const {
  KvConfig c;
  c.set("seed", std::to_string(seed));
  c.set("num_train", std::to_string(num_train));
  c.set("num_dev", std::to_string(num_dev));
  c.set("num_eval", std::to_string(num_eval));
  c.set("month_groups", std::to_string(count_axis(groups, ConditionAxis::kMonth)));
  c.set("region_groups", std::to_string(count_axis(groups, ConditionAxis::kRegion)));
  c.set("p_preferred", std::to_string(p_preferred));
  c.set("min_fillers", std::to_string(min_fillers));
  c.set("max_fillers", std::to_string(max_fillers));
  c.set("num_phones", std::to_string(num_phones));
  c.set("phones_per_word", std::to_string(phones_per_word));
  c.set("frames_per_phone", std::to_string(frames_per_phone));
  c.set("noise", std::to_string(noise));
  c.set("region_spread_deg", std::to_string(region_spread_deg));
  c.set("geo_missing", std::to_string(geo_missing));
  c.set("first_year", std::to_string(first_year));
  c.set("last_year", std::to_string(last_year));
  c.set("bpe_target", std::to_string(bpe_target));
  return c;
}

void SyntheticSpec::validate() const {
  if (fillers.empty()) throw ValidationError("synthetic spec needs at least one filler word");
  if (domains.empty()) throw ValidationError("synthetic spec needs at least one domain");
  if (num_train == 0 || num_eval == 0) throw ValidationError("num_train and num_eval must be > 0");
  if (min_fillers > max_fillers || max_fillers == 0) {
    throw ValidationError("need 0 <= min_fillers <= max_fillers and max_fillers > 0");
  }
  if (!(p_preferred >= 0.5 && p_preferred <= 1.0)) {
    throw ValidationError("p_preferred must lie in [0.5, 1]");
  }
  if (!(geo_missing >= 0.0 && geo_missing < 1.0)) throw ValidationError("geo_missing must lie in [0, 1)");
  if (noise < 0.0 || region_spread_deg < 0.0) throw ValidationError("noise and spread must be >= 0");
  if (num_phones < 3 || phones_per_word == 0 || frames_per_phone == 0 || num_filters == 0) {
    throw ValidationError("phone inventory too small");
  }
  if (first_year > last_year) throw ValidationError("first_year must not exceed last_year");
  if (num_regions == 0 || num_regions > 20) throw ValidationError("num_regions must lie in [1, 20]");
  const double words = static_cast<double>(fillers.size() + groups.size());
  if (std::pow(static_cast<double>(num_phones - 1), static_cast<double>(phones_per_word)) < words) {
    throw ValidationError("phone inventory cannot give every word a distinct pronunciation");
  }
  std::set<std::string> seen(fillers.begin(), fillers.end());
  if (seen.size() != fillers.size()) throw ValidationError("duplicate filler words");
  for (const auto& g : groups) {
    if (g.condition.empty()) {
      throw ValidationError("homophone group " + g.variant_a + "/" + g.variant_b +
                            " has an empty condition");
    }
    if (g.variant_a.empty() || g.variant_b.empty() || g.variant_a == g.variant_b) {
      throw ValidationError("homophone group needs two distinct spellings");
    }
    if (!seen.insert(g.variant_a).second || !seen.insert(g.variant_b).second) {
      throw ValidationError("word " + g.variant_a + "/" + g.variant_b + " appears twice");
    }
    const int lo = g.axis == ConditionAxis::kMonth ? 1 : 0;
    const int hi = g.axis == ConditionAxis::kMonth ? 12 : static_cast<int>(num_regions) - 1;
    for (int v : g.condition) {
      if (v < lo || v > hi) throw ValidationError("condition value " + std::to_string(v) + " out of range");
    }
    if (static_cast<int>(g.condition.size()) == hi - lo + 1) {
      throw ValidationError("condition of " + g.variant_a + "/" + g.variant_b + " covers every value");
    }
  }
  for (const auto& w : seen) {
    for (char ch : w) {
      if (ch < 'a' || ch > 'z') throw ValidationError("word '" + w + "' must be lowercase a-z");
    }
  }
}

std::vector<GeoPoint> SyntheticSpec::region_centers() const {
  std::vector<GeoPoint> centers;
  for (std::size_t r = 0; r < num_regions; ++r) {
    centers.push_back({30.0 + 5.0 * static_cast<double>(r / 5),
                       -120.0 + 10.0 * static_cast<double>(r % 5)});
  }
  return centers;
}

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const Lexicon lex = build_lexicon(spec);
  const std::vector<GeoPoint> centers = spec.region_centers();
  SyntheticCorpus c;
  c.spec = spec;
  c.train = make_split(spec, lex, centers, "train", 0, spec.num_train, false);
  c.dev = make_split(spec, lex, centers, "dev", 1, spec.num_dev, true);
  c.eval = make_split(spec, lex, centers, "eval", 2, spec.num_eval, true);
  std::vector<std::string> text;
  for (const auto& r : c.train) text.push_back(r.record.transcript);
  c.vocab = bpe_train(text, spec.bpe_target);
  return c;
}

void write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "feats");
  const std::pair<const char*, const std::vector<SyntheticRecord>*> splits[] = {
      {"train", &corpus.train}, {"dev", &corpus.dev}, {"eval", &corpus.eval}};
  for (const auto& [name, records] : splits) {
    std::vector<ManifestRecord> rows;
    for (const auto& r : *records) {
      write_feature_file(dir / r.record.feature_path, r.frames);
      rows.push_back(r.record);
    }
    write_manifest(dir / (std::string(name) + ".tsv"), rows);
  }
  corpus.vocab.save(dir / "vocab.bpe");
  corpus.spec.to_config().write(dir / "synthetic.conf");
}

std::vector<Example> synthetic_examples(const std::vector<SyntheticRecord>& records,
                                        const FeatureConfig& cfg, const BpeVocab& vocab,
                                        const ClusterModel* clusters) {
  std::vector<Example> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    out.push_back(make_example(r.record, prepare_features(r.frames, cfg, r.record.id), vocab, clusters));
  }
  return out;
}

std::vector<GeoPoint> coordinates_of(const std::vector<SyntheticRecord>& records) {
  std::vector<GeoPoint> out;
  for (const auto& r : records) {
    if (r.record.coord) out.push_back(*r.record.coord);
  }
  return out;
}

double mutual_information(std::span<const std::pair<int, int>> samples) {
  if (samples.empty()) return 0.0;
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> px, py;
  for (const auto& s : samples) {
    joint[s] += 1.0;
    px[s.first] += 1.0;
    py[s.second] += 1.0;
  }
  const double n = static_cast<double>(samples.size());
  double mi = 0.0;
  for (const auto& [xy, c] : joint) {
    mi += c / n * std::log(c * n / (px[xy.first] * py[xy.second]));
  }
  return mi;
}

}  // namespace ctxrnnt
