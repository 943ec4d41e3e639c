// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance 1 4 7      run a subset

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ctxrnnt/context/encoders.h"
#include "ctxrnnt/context/geo_cluster.h"
#include "ctxrnnt/data/synthetic.h"
#include "ctxrnnt/decode/evaluate.h"
#include "ctxrnnt/decode/report.h"
#include "ctxrnnt/decode/wer.h"
#include "ctxrnnt/loss/rnnt_loss.h"
#include "ctxrnnt/model/config.h"
#include "ctxrnnt/numerics/grad_check.h"
#include "ctxrnnt/training/objective.h"
#include "ctxrnnt/training/trainer.h"
#include "test_util.h"

using namespace ctxrnnt;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances and limits.
constexpr double kLossTol = 1e-6;
constexpr double kLossSeconds = 10.0;
constexpr double kGradEpsilon = 1e-5;
constexpr double kGradTol = 1e-4;
constexpr std::size_t kGradElementsPerParam = 64;
constexpr double kGradSeconds = 300.0;
constexpr double kPairTol = 1e-12;
constexpr double kMinWerr = 0.20;
constexpr double kControlMaxAbsWerr = 0.02;
constexpr double kExperimentSeconds = 1800.0;
constexpr double kCombinedSlack = 0.02;
constexpr double kParamTol = 0.02;
constexpr double kFullResourceTarget = 58.4e6;
constexpr double kLowResourceTarget = 38.0e6;
constexpr std::uint64_t kSeeds[] = {1, 2, 3};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// --- 1 -----------------------------------------------------------------

Real enumerate_nll(const Tensor& lp, const std::vector<int>& y) {
  const std::size_t T = lp.dim(0), U = y.size(), V = lp.dim(2);
  auto at = [&](std::size_t t, std::size_t u, std::size_t k) { return lp[(t * (U + 1) + u) * V + k]; };
  Real total = 0;
  std::function<void(std::size_t, std::size_t, Real)> walk = [&](std::size_t t, std::size_t u, Real p) {
    if (t == T - 1 && u == U) {
      total += p * std::exp(at(t, u, 0));
      return;
    }
    if (u < U) walk(t, u + 1, p * std::exp(at(t, u, static_cast<std::size_t>(y[u]))));
    if (t < T - 1) walk(t + 1, u, p * std::exp(at(t, u, 0)));
  };
  walk(0, 0, 1.0);
  return -std::log(total);
}

void criterion_loss_oracle() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0, worst_enum = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t T = 1 + rng.below(4), U = rng.below(4), V = 2 + rng.below(4);
    const Tensor lp = testing::random_lattice(T, U, V, rng);
    const auto y = testing::random_labels(U, V, rng);
    const Real fast = rnnt_loss(lp, y).nll;
    const Real brute = brute_force_nll(lp, y);
    worst = std::max(worst, std::abs(fast - brute));
    worst_enum = std::max(worst_enum, std::abs(fast - enumerate_nll(lp, y)));
  }
  const double secs = seconds_since(t0);
  report(worst < kLossTol && worst_enum < kLossTol && secs < kLossSeconds, "1 loss-oracle",
         "100 lattices, max |rnnt - brute| " + fmt("%.3g", worst) + ", max |rnnt - enumeration| " +
             fmt("%.3g", worst_enum) + " (tol 1e-6), " + fmt("%.2f", secs) + " s (limit 10 s)");
}

// --- 2 -----------------------------------------------------------------

void criterion_gradients() {
  const auto t0 = Clock::now();
  const ContextKind kinds[] = {ContextKind::kNone,
                               ContextKind::kTimeEmbeddingLookUp,
                               ContextKind::kTimePositionalEncoding,
                               ContextKind::kGeoEmbeddingLookUp,
                               ContextKind::kGeoOneHot,
                               ContextKind::kCombinedTimeGeo};
  bool ok = true;
  double worst = 0;
  std::size_t checked = 0, groups = 0;
  std::string detail;
  for (ContextKind kind : kinds) {
    const ModelConfig cfg = ModelConfig::DeskScale(30, kind);
    TrainableModel tm = TrainableModel::Create(cfg, 21);
    Rng rng(22);
    Example ex;
    ex.features = testing::random_tensor({6, cfg.input_dim}, rng);
    ex.tokens = testing::random_labels(3, cfg.vocab_size, rng);
    ex.context.time = {19, 4, 33, 8};
    ex.context.cluster_id = 6;
    const Objective obj{tm.model, tm.encoder};
    auto loss = [&](const ParamStore& s, GradBuffer* g) { return utterance_loss(obj, s, ex, g); };
    GradCheckOptions opts;
    opts.epsilon = kGradEpsilon;
    opts.tolerance = kGradTol;
    opts.max_elements_per_param = kGradElementsPerParam;
    opts.seed = 23;
    const GradCheckReport r = grad_check(loss, tm.store, opts);
    ok &= r.ok() && r.max_error_by_param.size() == tm.store.size();
    worst = std::max(worst, r.max_error);
    checked += r.checked;
    groups += r.max_error_by_param.size();
    detail += " " + context_kind_name(kind) + "=" + fmt("%.2g", r.max_error);
  }
  const double secs = seconds_since(t0);
  report(ok && secs < kGradSeconds, "2 gradient-integrity",
         std::to_string(groups) + " parameter groups, " + std::to_string(checked) +
             " elements, max rel-err " + fmt("%.3g", worst) + " (tol 1e-4);" + detail + ", " +
             fmt("%.1f", secs) + " s (limit 300 s)");
}

// --- 3 -----------------------------------------------------------------

void criterion_context_suite() {
  bool ok = true;
  std::vector<std::string> notes;

  // Mean of the four selected rows.
  Rng rng(31);
  const Tensor h = testing::random_tensor({24, 64}, rng), wd = testing::random_tensor({7, 64}, rng);
  const Tensor wk = testing::random_tensor({53, 64}, rng), m = testing::random_tensor({12, 64}, rng);
  double mean_err = 0;
  for (int i = 0; i < 200; ++i) {
    const DateTimeContext c{static_cast<int>(rng.below(24)), static_cast<int>(rng.below(7)),
                            1 + static_cast<int>(rng.below(53)), 1 + static_cast<int>(rng.below(12))};
    const auto e = time_embedding_lookup(c, {h, wd, wk, m});
    for (std::size_t j = 0; j < 64; ++j) {
      const double want = (h.at(c.hour, j) + wd.at(c.weekday, j) + wk.at(c.week_no - 1, j) +
                           m.at(c.month - 1, j)) / 4.0;
      mean_err = std::max(mean_err, std::abs(e[j] - want));
    }
  }
  ok &= mean_err <= 1e-15;
  notes.push_back("mean max err " + fmt("%.2g", mean_err));

  // sin^2 + cos^2 = 1 for every field value; hour 6 -> (1, 0).
  double pair_err = 0;
  for (int hour = 0; hour < 24; ++hour) {
    for (int d = 0; d < 7; ++d) {
      for (int w = 1; w <= 53; ++w) {
        for (int mo = 1; mo <= 12; ++mo) {
          const auto pe = time_positional_encoding({hour, d, w, mo});
          for (int p = 0; p < 4; ++p) {
            pair_err = std::max(pair_err, std::abs(pe[2 * p] * pe[2 * p] + pe[2 * p + 1] * pe[2 * p + 1] - 1.0));
          }
        }
      }
    }
  }
  const auto h6 = time_positional_encoding({6, 0, 1, 1});
  const bool h6_ok = std::abs(h6[0] - 1.0) <= kPairTol && std::abs(h6[1]) <= kPairTol;
  ok &= pair_err <= kPairTol && h6_ok;
  notes.push_back("sin^2+cos^2 max err " + fmt("%.2g", pair_err) + ", hour 6 -> (" + fmt("%.3g", h6[0]) +
                  ", " + fmt("%.3g", h6[1]) + ")");

  // One-hot: 21 dims, None at 20.
  const auto none = geo_one_hot(static_cast<int>(kGeoRows) - 1);
  bool onehot_ok = none.size() == 21 && none[20] == 1.0 &&
                   std::count(none.begin(), none.end(), 0.0) == 20;
  ClusterModel cm;
  for (int i = 0; i < 20; ++i) cm.centroids.push_back({static_cast<double>(i), 0.0});
  onehot_ok &= assign_cluster(std::nullopt, cm) == 20;
  ok &= onehot_ok;
  notes.push_back(std::string("one-hot 21-dim, None -> 20 ") + (onehot_ok ? "ok" : "wrong"));

  // k-means objective never increases.
  bool mono = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng prng(40 + seed);
    std::vector<GeoPoint> pts;
    for (int i = 0; i < 1000; ++i) pts.push_back({25 + 24 * prng.uniform(), -124 + 57 * prng.uniform()});
    const ClusterModel fit = fit_geo_clusters(pts, 20, seed);
    for (std::size_t i = 1; i < fit.objective_history.size(); ++i) {
      mono &= fit.objective_history[i] <= fit.objective_history[i - 1];
    }
  }
  ok &= mono;
  notes.push_back(std::string("k-means objective ") + (mono ? "monotone" : "increased"));

  std::string detail;
  for (const auto& n : notes) detail += (detail.empty() ? "" : "; ") + n;
  report(ok, "3 context-encoder-suite", detail);
}

// --- 4 and 5 -------------------------------------------------------------

// Desk-scale experiment recipe.
TrainOptions experiment_options(std::size_t vocab, ContextKind kind, std::uint64_t seed) {
  TrainOptions o;
  o.model = ModelConfig::DeskScale(vocab);
  o.model.enc_hidden = o.model.pred_hidden = 48;
  o.model.enc_out = o.model.pred_out = o.model.pred_embed = 24;
  o.model.joint_hidden = 0;
  o.model.with_context(kind);
  o.seed = seed;
  o.batch_size = 8;
  o.epochs = 8;
  o.schedule.peak_lr = 1e-3;
  o.augment = SpecAugmentPolicy::Disabled();
  return o;
}

struct Experiments {
  std::map<std::pair<std::string, std::uint64_t>, SyntheticCorpus> corpora;
  std::map<std::tuple<std::string, ContextKind, std::uint64_t>, double> wers;
  double seconds = 0;

  double wer(const std::string& preset, ContextKind kind, std::uint64_t seed) {
    const auto key = std::make_tuple(preset, kind, seed);
    if (auto it = wers.find(key); it != wers.end()) return it->second;
    const auto t0 = Clock::now();
    auto cit = corpora.find({preset, seed});
    if (cit == corpora.end()) {
      SyntheticSpec spec = SyntheticSpec::Preset(preset);
      spec.seed = seed;
      cit = corpora.emplace(std::make_pair(preset, seed), generate_synthetic(spec)).first;
    }
    const SyntheticCorpus& c = cit->second;
    const ClusterModel clusters = fit_geo_clusters(coordinates_of(c.train), kDefaultGeoClusters, seed);
    const FeatureConfig fc;
    const auto train = synthetic_examples(c.train, fc, c.vocab, &clusters);
    const auto eval = synthetic_examples(c.eval, fc, c.vocab, &clusters);
    const TrainOptions o = experiment_options(c.vocab.size(), kind, seed);
    TrainableModel tm = TrainableModel::Create(o.model, seed);
    train_model(tm, train, o);
    const EvalOutput out = evaluate(tm.model, tm.encoder, tm.store, eval, c.vocab, context_kind_name(kind));
    const double w = *out.report.corpus.wer();
    const double secs = seconds_since(t0);
    seconds += secs;
    std::printf("  run %-8s %-22s seed %llu  WER %.4f  (%zu train / %zu eval, %.1f s)\n", preset.c_str(),
                context_kind_name(kind).c_str(), static_cast<unsigned long long>(seed), w, c.train.size(),
                c.eval.size(), secs);
    std::fflush(stdout);
    wers[key] = w;
    return w;
  }

  double mean_wer(const std::string& preset, ContextKind kind) {
    double s = 0;
    for (std::uint64_t seed : kSeeds) s += wer(preset, kind, seed);
    return s / static_cast<double>(std::size(kSeeds));
  }
};

Experiments experiments;

void criterion_disambiguation() {
  const double before = experiments.seconds;
  bool ok = true;
  std::string detail;
  const std::pair<const char*, ContextKind> axes[] = {{"month", ContextKind::kTimeEmbeddingLookUp},
                                                      {"geo", ContextKind::kGeoOneHot}};
  for (const auto& [preset, kind] : axes) {
    const double base = experiments.mean_wer(preset, ContextKind::kNone);
    const double ctx = experiments.mean_wer(preset, kind);
    const auto w = werr(base, ctx);
    ok &= w.has_value() && *w >= kMinWerr;
    detail += std::string(preset) + " " + context_kind_name(kind) + " WER " + fmt("%.4f", ctx) + " vs " +
              fmt("%.4f", base) + " WERR " + (w ? fmt("%.1f%%", 100 * *w) : "undefined") + " (min 20%); ";
  }
  // Control corpus: the contextual model must match the baseline.
  const double base = experiments.mean_wer("control", ContextKind::kNone);
  const double ctx = experiments.mean_wer("control", ContextKind::kTimeEmbeddingLookUp);
  const auto w = werr(base, ctx);
  const bool control_ok = w ? std::abs(*w) < kControlMaxAbsWerr : ctx == base;
  ok &= control_ok;
  detail += "control TimeEmbeddingLookUp WER " + fmt("%.4f", ctx) + " vs " + fmt("%.4f", base) + " WERR " +
            (w ? fmt("%.1f%%", 100 * *w) : std::string("undefined (both zero)")) + " (|WERR| < 2%); ";
  const double secs = experiments.seconds - before;
  ok &= secs < kExperimentSeconds;
  detail += fmt("%.0f", secs) + " s (limit 1800 s)";
  report(ok, "4 synthetic-disambiguation", detail);
}

void criterion_combined() {
  const double base = experiments.mean_wer("combined", ContextKind::kNone);
  const double time = experiments.mean_wer("combined", ContextKind::kTimeEmbeddingLookUp);
  const double geo = experiments.mean_wer("combined", ContextKind::kGeoOneHot);
  const double comb = experiments.mean_wer("combined", ContextKind::kCombinedTimeGeo);
  const auto wt = werr(base, time), wg = werr(base, geo), wc = werr(base, comb);
  const bool ok = wt && wg && wc && *wc >= std::max(*wt, *wg) - kCombinedSlack;
  auto pct = [](const std::optional<double>& v) { return v ? fmt("%.1f%%", 100 * *v) : std::string("undefined"); };
  report(ok, "5 combined-context",
         "baseline WER " + fmt("%.4f", base) + "; WERR TimeEmbeddingLookUp " + pct(wt) + ", GeoOneHot " +
             pct(wg) + ", CombinedTimeGeo " + pct(wc) + " (needs >= max - 2 points)");
}

// --- 6 -----------------------------------------------------------------

void criterion_parameter_counts() {
  const double full = static_cast<double>(parameter_count(ModelConfig::FullResource()));
  const double low = static_cast<double>(parameter_count(ModelConfig::LowResource()));
  const double full_dev = std::abs(full - kFullResourceTarget) / kFullResourceTarget;
  const double low_dev = std::abs(low - kLowResourceTarget) / kLowResourceTarget;
  report(full_dev <= kParamTol && low_dev <= kParamTol, "6 parameter-count",
         "FullResource " + fmt("%.0f", full) + " (" + fmt("%.2f%%", 100 * full_dev) +
             " from 58.4M), LowResource " + fmt("%.0f", low) + " (" + fmt("%.2f%%", 100 * low_dev) +
             " from 38M), tol 2%");
}

// --- 7 -----------------------------------------------------------------

std::size_t oracle_distance(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j - 1] + (a[i - 1] != b[j - 1]), d[i - 1][j] + 1, d[i][j - 1] + 1});
    }
  }
  return d[a.size()][b.size()];
}

void criterion_evaluation() {
  Rng rng(71);
  std::size_t mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<int> ref(1 + rng.below(10)), hyp(rng.below(11));
    for (int& v : ref) v = static_cast<int>(rng.below(5));
    for (int& v : hyp) v = static_cast<int>(rng.below(5));
    const EditCounts c = align<int>(ref, hyp);
    mismatches += c.errors() != oracle_distance(ref, hyp);
  }
  const bool hand = std::abs(*werr(0.20, 0.15) - 0.25) < 1e-12 && std::abs(*werr(0.10, 0.12) + 0.20) < 1e-12 &&
                    !werr(0.0, 0.1).has_value();
  EvalReport r;
  r.name = "self";
  for (int i = 0; i < 30; ++i) {
    EditCounts c;
    c.ref_words = 3 + rng.below(5);
    c.substitutions = rng.below(2);
    c.deletions = rng.below(2);
    r.add(c, i % 2 ? "Music" : "Weather", 1 + i % 12, i % 21, 20);
  }
  bool self_zero = true;
  for (const auto& row : compare_reports(r, r)) {
    if (row.base_wer && *row.base_wer > 0) self_zero &= row.werr && *row.werr == 0.0;
  }
  report(mismatches == 0 && hand && self_zero, "7 evaluation-correctness",
         std::to_string(mismatches) + "/1000 edit-distance mismatches vs oracle; WERR hand values " +
             (hand ? "ok" : "wrong") + "; self-comparison " + (self_zero ? "all zero" : "non-zero"));
}

// --- 8 -----------------------------------------------------------------

void criterion_reproducibility() {
  SyntheticSpec spec = SyntheticSpec::Preset("combined");
  spec.num_train = 64;
  spec.num_eval = 32;
  const SyntheticCorpus c = generate_synthetic(spec);
  const ClusterModel clusters = fit_geo_clusters(coordinates_of(c.train), kDefaultGeoClusters, 5);
  const FeatureConfig fc;
  const auto train = synthetic_examples(c.train, fc, c.vocab, &clusters);
  const auto eval = synthetic_examples(c.eval, fc, c.vocab, &clusters);
  const auto dir = testing::scratch_dir("acceptance_repro");
  auto run = [&](const std::string& tag, int threads) {
    omp_set_num_threads(threads);
    TrainOptions o = experiment_options(c.vocab.size(), ContextKind::kCombinedTimeGeo, 9);
    o.augment = SpecAugmentPolicy{};
    o.epochs = 2;
    TrainableModel tm = TrainableModel::Create(o.model, o.seed);
    train_model(tm, train, o);
    save_checkpoint(dir / (tag + ".ckpt"), tm, c.vocab, &clusters);
    const EvalOutput out = evaluate(tm.model, tm.encoder, tm.store, eval, c.vocab, "repro");
    out.report.save(dir / (tag + ".report"));
  };
  const int saved = omp_get_max_threads();
  const int threads = std::max(saved, 4);
  run("a", threads);
  run("b", threads);
  run("c", 1);
  omp_set_num_threads(saved);
  const bool same_ckpt = testing::read_file(dir / "a.ckpt") == testing::read_file(dir / "b.ckpt");
  const bool same_report = testing::read_file(dir / "a.report") == testing::read_file(dir / "b.report");
  const bool same_serial = testing::read_file(dir / "a.ckpt") == testing::read_file(dir / "c.ckpt") &&
                           testing::read_file(dir / "a.report") == testing::read_file(dir / "c.report");
  report(same_ckpt && same_report && same_serial, "8 reproducibility",
         std::string("checkpoints ") + (same_ckpt ? "identical" : "differ") + ", reports " +
             (same_report ? "identical" : "differ") + ", " + std::to_string(threads) +
             " threads vs 1 thread " + (same_serial ? "identical" : "differ"));
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  auto want = [&](int k) { return wanted.empty() || wanted.count(k) > 0; };
  if (want(1)) criterion_loss_oracle();
  if (want(2)) criterion_gradients();
  if (want(3)) criterion_context_suite();
  if (want(4)) criterion_disambiguation();
  if (want(5)) criterion_combined();
  if (want(6)) criterion_parameter_counts();
  if (want(7)) criterion_evaluation();
  if (want(8)) criterion_reproducibility();
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
