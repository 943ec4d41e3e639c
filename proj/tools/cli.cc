#include "cli.h"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ctxrnnt/context/export.h"
#include "ctxrnnt/context/geo_cluster.h"
#include "ctxrnnt/data/example.h"
#include "ctxrnnt/data/manifest.h"
#include "ctxrnnt/data/synthetic.h"
#include "ctxrnnt/decode/evaluate.h"
#include "ctxrnnt/decode/report.h"
#include "ctxrnnt/error.h"
#include "ctxrnnt/features/bpe.h"
#include "ctxrnnt/training/trainer.h"
#include "ctxrnnt/util/kv_config.h"

namespace ctxrnnt::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

LogLevel log_level_from_env() {
  const char* v = std::getenv("CTXT_LOG");
  if (!v || !*v) return LogLevel::kInfo;
  const std::string s(v);
  if (s == "error" || s == "0") return LogLevel::kError;
  if (s == "warn" || s == "1") return LogLevel::kWarn;
  if (s == "info" || s == "2") return LogLevel::kInfo;
  if (s == "debug" || s == "3") return LogLevel::kDebug;
  throw ValidationError("CTXT_LOG must be error, warn, info or debug, got '" + s + "'");
}

class Log {
 public:
  Log(std::ostream& err, LogLevel level) : err_(err), level_(level) {}
  void info(const std::string& msg) const { emit(LogLevel::kInfo, "info", msg); }
  void debug(const std::string& msg) const { emit(LogLevel::kDebug, "debug", msg); }
  void warn(const std::string& msg) const { emit(LogLevel::kWarn, "warn", msg); }

 private:
  void emit(LogLevel level, const char* tag, const std::string& msg) const {
    if (level <= level_) err_ << "ctxrnnt: " << tag << ": " << msg << '\n';
  }
  std::ostream& err_;
  LogLevel level_;
};

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<long> seed;
  long seed_value = 0;
  int threads = 0;
  std::string out_dir;
};

// Namespaces a config file may carry; each command validates all of them.
const std::set<std::string> kNamespaces = {"synthetic", "clusters", "bpe", "data",
                                           "model",     "train",    "eval"};

std::string ns_of(const std::string& key) {
  const auto dot = key.find('.');
  return dot == std::string::npos ? std::string() : key.substr(0, dot);
}

KvConfig sub_config(const KvConfig& cfg, const std::string& ns) {
  KvConfig out;
  const std::string prefix = ns + ".";
  for (const auto& [k, v] : cfg.values()) {
    if (k.rfind(prefix, 0) == 0) out.set(k.substr(prefix.size()), v);
  }
  return out;
}

void merge_prefixed(KvConfig& into, const KvConfig& from, const std::string& ns) {
  for (const auto& [k, v] : from.values()) into.set(ns + "." + k, v);
}

KvConfig resolve_config(const Common& c) {
  KvConfig cfg = c.config_path.empty() ? KvConfig() : KvConfig::Load(c.config_path);
  cfg.apply_overrides(c.overrides);
  std::vector<std::string> bad;
  for (const auto& [k, v] : cfg.values()) {
    if (!kNamespaces.count(ns_of(k))) bad.push_back(k);
  }
  if (!bad.empty()) {
    std::string msg = "config keys outside the known namespaces:";
    for (const auto& k : bad) msg += " " + k;
    throw ValidationError(msg);
  }
  return cfg;
}

struct ClusterOptions {
  std::size_t k = kDefaultGeoClusters;
  std::uint64_t seed = 0;
  KMeansOptions kmeans;
};

ClusterOptions cluster_options(const KvConfig& cfg) {
  const KvConfig c = sub_config(cfg, "clusters");
  c.check_known({"k", "seed", "max_iterations"});
  ClusterOptions o;
  const long k = c.get_int("k", static_cast<long>(o.k));
  const long iters = c.get_int("max_iterations", static_cast<long>(o.kmeans.max_iterations));
  if (k <= 0) throw ValidationError("clusters.k must be > 0");
  if (iters <= 0) throw ValidationError("clusters.max_iterations must be > 0");
  o.k = static_cast<std::size_t>(k);
  o.kmeans.max_iterations = static_cast<std::size_t>(iters);
  o.seed = static_cast<std::uint64_t>(c.get_int("seed", 0));
  return o;
}

std::size_t bpe_size(const KvConfig& cfg) {
  const KvConfig c = sub_config(cfg, "bpe");
  c.check_known({"size"});
  const long n = c.get_int("size", 200);
  if (n <= 0) throw ValidationError("bpe.size must be > 0");
  return static_cast<std::size_t>(n);
}

struct EvalOptions {
  std::string name = "eval";
  std::size_t max_symbols = kDefaultMaxSymbolsPerFrame;
};

EvalOptions eval_options(const KvConfig& cfg) {
  const KvConfig c = sub_config(cfg, "eval");
  c.check_known({"name", "max_symbols"});
  EvalOptions o;
  o.name = c.get_string("name", o.name);
  const long m = c.get_int("max_symbols", static_cast<long>(o.max_symbols));
  if (m <= 0) throw ValidationError("eval.max_symbols must be > 0");
  if (o.name.empty() || o.name.find_first_of("/\\") != std::string::npos) {
    throw ValidationError("eval.name must be a plain file stem, got '" + o.name + "'");
  }
  o.max_symbols = static_cast<std::size_t>(m);
  return o;
}

// Parses every namespace so a typo anywhere fails before any output is written.
void validate_all(const KvConfig& cfg) {
  const KvConfig syn = sub_config(cfg, "synthetic");
  if (!syn.values().empty()) SyntheticSpec::FromConfig(syn).validate();
  cluster_options(cfg);
  bpe_size(cfg);
  eval_options(cfg);
  sub_config(cfg, "data").check_known({"train", "vocab", "clusters", "manifest"});
  TrainOptions::FromConfig(cfg).validate();
}

fs::path prepare_out_dir(const Common& c) {
  if (c.out_dir.empty()) throw UsageError("--out-dir is required");
  fs::path dir(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

void write_resolved(const fs::path& dir, const std::string& command, const KvConfig& cfg) {
  std::ofstream out(dir / "resolved_config.conf", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "resolved_config.conf").string());
  out << "# ctxrnnt " << command << "\n" << cfg.to_string();
}

std::string require_path(const KvConfig& cfg, const std::string& key, const std::string& flag) {
  auto v = cfg.find(key);
  if (!v || v->empty()) throw UsageError("missing " + flag + " (or config key " + key + ")");
  return *v;
}

Manifest load_valid_manifest(const fs::path& path) {
  Manifest m = load_manifest(path);
  m.require_valid(path.string());
  return m;
}

// --- commands ------------------------------------------------------------

int cmd_gen_synthetic(const Common& c, const std::string& preset, std::ostream& out,
                      const Log& log) {
  KvConfig cfg = resolve_config(c);
  if (!preset.empty()) cfg.set("synthetic.preset", preset);
  if (c.seed) cfg.set("synthetic.seed", std::to_string(*c.seed));
  validate_all(cfg);
  const SyntheticSpec spec = SyntheticSpec::FromConfig(sub_config(cfg, "synthetic"));
  spec.validate();
  const fs::path dir = prepare_out_dir(c);

  log.info("generating synthetic corpus (seed " + std::to_string(spec.seed) + ")");
  const SyntheticCorpus corpus = generate_synthetic(spec);
  write_synthetic(corpus, dir);
  KvConfig resolved = cfg;
  merge_prefixed(resolved, spec.to_config(), "synthetic");
  resolved.set("synthetic.preset", cfg.get_string("synthetic.preset", "combined"));
  write_resolved(dir, "gen-synthetic", resolved);
  out << "wrote " << corpus.train.size() << " train, " << corpus.dev.size() << " dev, "
      << corpus.eval.size() << " eval records and a " << corpus.vocab.size()
      << "-token vocab to " << dir.string() << "\n";
  return kOk;
}

int cmd_fit_clusters(const Common& c, const std::string& manifest_flag, std::ostream& out,
                     const Log& log) {
  KvConfig cfg = resolve_config(c);
  if (!manifest_flag.empty()) cfg.set("data.manifest", manifest_flag);
  if (c.seed) cfg.set("clusters.seed", std::to_string(*c.seed));
  validate_all(cfg);
  const ClusterOptions opts = cluster_options(cfg);
  const fs::path manifest_path = require_path(cfg, "data.manifest", "--manifest");
  const Manifest m = load_valid_manifest(manifest_path);
  std::vector<GeoPoint> points;
  for (const auto& r : m.records) {
    if (r.coord) points.push_back(*r.coord);
  }
  const ClusterModel model = fit_geo_clusters(points, opts.k, opts.seed, opts.kmeans);
  const fs::path dir = prepare_out_dir(c);
  model.save(dir / "clusters.txt");
  KvConfig resolved = cfg;
  resolved.set("clusters.k", std::to_string(opts.k));
  resolved.set("clusters.seed", std::to_string(opts.seed));
  resolved.set("clusters.max_iterations", std::to_string(opts.kmeans.max_iterations));
  write_resolved(dir, "fit-clusters", resolved);
  log.info("k-means finished after " + std::to_string(model.iterations) + " iterations");
  out << "fit " << model.k() << " clusters on " << points.size() << " coordinates; wrote "
      << (dir / "clusters.txt").string() << "\n";
  return kOk;
}

int cmd_train_bpe(const Common& c, const std::string& manifest_flag, std::ostream& out,
                  const Log& log) {
  KvConfig cfg = resolve_config(c);
  if (!manifest_flag.empty()) cfg.set("data.manifest", manifest_flag);
  validate_all(cfg);
  const std::size_t size = bpe_size(cfg);
  const fs::path manifest_path = require_path(cfg, "data.manifest", "--manifest");
  const Manifest m = load_valid_manifest(manifest_path);
  std::vector<std::string> corpus;
  corpus.reserve(m.records.size());
  for (const auto& r : m.records) corpus.push_back(r.transcript);
  const BpeVocab vocab = bpe_train(corpus, size);
  const fs::path dir = prepare_out_dir(c);
  vocab.save(dir / "vocab.bpe");
  KvConfig resolved = cfg;
  resolved.set("bpe.size", std::to_string(size));
  write_resolved(dir, "train-bpe", resolved);
  log.debug("vocab hash " + std::to_string(vocab.hash()));
  out << "trained " << vocab.size() << "-token vocab (" << vocab.merges().size()
      << " merges); wrote " << (dir / "vocab.bpe").string() << "\n";
  return kOk;
}

int cmd_train(const Common& c, const std::string& manifest_flag, const std::string& vocab_flag,
              const std::string& clusters_flag, std::ostream& out, const Log& log) {
  KvConfig cfg = resolve_config(c);
  if (!manifest_flag.empty()) cfg.set("data.train", manifest_flag);
  if (!vocab_flag.empty()) cfg.set("data.vocab", vocab_flag);
  if (!clusters_flag.empty()) cfg.set("data.clusters", clusters_flag);
  if (c.seed) cfg.set("train.seed", std::to_string(*c.seed));
  validate_all(cfg);
  TrainOptions opts = TrainOptions::FromConfig(cfg);
  const fs::path manifest_path = require_path(cfg, "data.train", "--manifest");
  const fs::path vocab_path = require_path(cfg, "data.vocab", "--vocab");

  const BpeVocab vocab = BpeVocab::Load(vocab_path);
  opts.model.vocab_size = vocab.size();
  opts.validate();
  std::optional<ClusterModel> clusters;
  if (auto p = cfg.find("data.clusters"); p && !p->empty()) {
    clusters = ClusterModel::Load(*p);
    if (clusters->none_id() + 1 != static_cast<int>(opts.model.geo_rows)) {
      throw ValidationError("cluster model has " + std::to_string(clusters->k()) +
                            " clusters but the model expects " +
                            std::to_string(opts.model.geo_rows - 1));
    }
  } else if (uses_geo(opts.model.context_kind)) {
    throw ValidationError("model.context " + context_kind_name(opts.model.context_kind) +
                          " needs data.clusters (--clusters)");
  }
  const Manifest m = load_valid_manifest(manifest_path);
  const FeatureConfig features;
  const std::vector<Example> data =
      load_examples(m, features, vocab, clusters ? &*clusters : nullptr);
  if (data.empty()) throw ValidationError(manifest_path.string() + " has no records");
  const fs::path dir = prepare_out_dir(c);

  KvConfig resolved = cfg;
  const KvConfig effective = opts.to_config();
  for (const auto& [k, v] : effective.values()) resolved.set(k, v);
  write_resolved(dir, "train", resolved);

  TrainableModel tm = TrainableModel::Create(opts.model, opts.seed);
  log.info("training " + context_kind_name(opts.model.context_kind) + " model, " +
           std::to_string(tm.store.num_elements()) + " parameters, " +
           std::to_string(data.size()) + " utterances");
  const ClusterModel* cm = clusters ? &*clusters : nullptr;
  const std::map<std::string, std::string> extra = {{"train.seed", std::to_string(opts.seed)}};
  const TrainStats stats = train_model(tm, data, opts, [&](std::size_t step, Real loss,
                                                            const TrainableModel& model) {
    if (step % 50 == 0) log.info("step " + std::to_string(step) + " loss " + std::to_string(loss));
    if (opts.checkpoint_every > 0 && step % opts.checkpoint_every == 0) {
      save_checkpoint(dir / ("model-step" + std::to_string(step) + ".ckpt"), model, vocab, cm,
                      extra);
    }
  });
  save_checkpoint(dir / "model.ckpt", tm, vocab, cm, extra);
  write_loss_csv(dir / "loss.csv", stats.losses);
  out << "trained " << stats.steps << " steps; final loss "
      << (stats.losses.empty() ? 0.0 : stats.losses.back()) << "; wrote "
      << (dir / "model.ckpt").string() << "\n";
  return kOk;
}

int cmd_evaluate(const Common& c, const std::string& checkpoint_flag,
                 const std::string& manifest_flag, const std::string& name_flag,
                 std::ostream& out, const Log& log) {
  KvConfig cfg = resolve_config(c);
  if (!manifest_flag.empty()) cfg.set("data.manifest", manifest_flag);
  if (!name_flag.empty()) cfg.set("eval.name", name_flag);
  validate_all(cfg);
  if (checkpoint_flag.empty()) throw UsageError("missing --checkpoint");
  const EvalOptions opts = eval_options(cfg);
  const fs::path manifest_path = require_path(cfg, "data.manifest", "--manifest");

  const ModelBundle bundle = load_checkpoint(checkpoint_flag);
  if (uses_geo(bundle.model.config.context_kind) && !bundle.clusters) {
    throw ValidationError(checkpoint_flag + " uses geo context but carries no cluster model");
  }
  const Manifest m = load_valid_manifest(manifest_path);
  const FeatureConfig features;
  const ClusterModel* cm = bundle.clusters ? &*bundle.clusters : nullptr;
  const std::vector<Example> data = load_examples(m, features, bundle.vocab, cm);
  const fs::path dir = prepare_out_dir(c);
  KvConfig resolved = cfg;
  resolved.set("eval.name", opts.name);
  resolved.set("eval.max_symbols", std::to_string(opts.max_symbols));
  resolved.set("eval.checkpoint", fs::absolute(checkpoint_flag).string());
  write_resolved(dir, "evaluate", resolved);

  log.info("decoding " + std::to_string(data.size()) + " utterances");
  const TrainableModel& tm = bundle.model;
  const EvalOutput result =
      evaluate(tm.model, tm.encoder, tm.store, data, bundle.vocab, opts.name, opts.max_symbols);
  result.report.save(dir / (opts.name + ".report"));
  std::ofstream hyp(dir / (opts.name + ".hyp.tsv"), std::ios::trunc);
  if (!hyp) throw IoError("cannot write hypotheses file");
  hyp << "id\treference\thypothesis\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    hyp << data[i].id << '\t' << data[i].transcript << '\t' << result.hypotheses[i].text << '\n';
  }
  out << result.report.table();
  return kOk;
}

int cmd_compare(const Common& c, const std::string& base_path, const std::string& ctx_path,
                std::ostream& out) {
  KvConfig cfg = resolve_config(c);
  validate_all(cfg);
  if (base_path.empty() || ctx_path.empty()) throw UsageError("compare needs --base and --ctx");
  const EvalReport base = EvalReport::Load(base_path);
  const EvalReport ctx = EvalReport::Load(ctx_path);
  const std::vector<WerrRow> rows = compare_reports(base, ctx);
  const std::string table = format_werr_table(rows, base.name, ctx.name);
  if (!c.out_dir.empty()) {
    const fs::path dir = prepare_out_dir(c);
    KvConfig resolved = cfg;
    resolved.set("eval.base_report", fs::absolute(base_path).string());
    resolved.set("eval.ctx_report", fs::absolute(ctx_path).string());
    write_resolved(dir, "compare", resolved);
    std::ofstream t(dir / "werr.txt", std::ios::trunc);
    std::ofstream tab(dir / "werr_table.txt", std::ios::trunc);
    if (!t || !tab) throw IoError("cannot write WERR files under " + dir.string());
    t << format_werr_text(rows);
    tab << table;
  }
  out << table;
  return kOk;
}

int cmd_export_embeddings(const Common& c, const std::string& checkpoint_flag,
                          std::ostream& out) {
  KvConfig cfg = resolve_config(c);
  validate_all(cfg);
  if (checkpoint_flag.empty()) throw UsageError("missing --checkpoint");
  const ModelBundle bundle = load_checkpoint(checkpoint_flag);
  const fs::path dir = prepare_out_dir(c);
  KvConfig resolved = cfg;
  resolved.set("eval.checkpoint", fs::absolute(checkpoint_flag).string());
  write_resolved(dir, "export-embeddings", resolved);
  const auto files = export_embeddings(bundle.model.store,
                                       bundle.clusters ? &*bundle.clusters : nullptr, dir);
  for (const auto& f : files) out << f.string() << "\n";
  if (files.empty()) out << "no learned context tables in " << checkpoint_flag << "\n";
  return kOk;
}

int fail(std::ostream& err, int code, const char* kind, const std::string& msg) {
  std::string line = msg;
  std::replace(line.begin(), line.end(), '\n', ' ');
  err << "ctxrnnt: error: code=" << code << " kind=" << kind << " msg=" << line << '\n';
  return code;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "key=value config file")->check(CLI::ExistingFile);
  sub->add_option("--set", c.overrides, "override a config key (key=value), repeatable");
  sub->add_option("--seed", c.seed_value, "seed (overrides the command's seed key)");
  sub->add_option("--threads", c.threads, "OpenMP threads (0: runtime default)")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--out-dir", c.out_dir, "directory receiving every output");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contextual RNN-T toolkit", "ctxrnnt"};
  app.require_subcommand(1);
  Common common;
  std::string preset, manifest, vocab, clusters, checkpoint, name, base, ctx;

  auto* gen = app.add_subcommand("gen-synthetic", "generate a context-conditioned corpus");
  add_common(gen, common);
  gen->add_option("--preset", preset, "control, month, geo or combined");

  auto* fit = app.add_subcommand("fit-clusters", "k-means over manifest coordinates");
  add_common(fit, common);
  fit->add_option("--manifest", manifest, "manifest with coordinates");

  auto* bpe = app.add_subcommand("train-bpe", "train a BPE vocab on manifest transcripts");
  add_common(bpe, common);
  bpe->add_option("--manifest", manifest, "manifest with transcripts");

  auto* tr = app.add_subcommand("train", "train an RNN-T model");
  add_common(tr, common);
  tr->add_option("--manifest", manifest, "training manifest (data.train)");
  tr->add_option("--vocab", vocab, "BPE vocab (data.vocab)");
  tr->add_option("--clusters", clusters, "cluster model (data.clusters)");

  auto* ev = app.add_subcommand("evaluate", "greedy-decode a manifest and score it");
  add_common(ev, common);
  ev->add_option("--checkpoint", checkpoint, "model checkpoint");
  ev->add_option("--manifest", manifest, "evaluation manifest (data.manifest)");
  ev->add_option("--name", name, "report name and file stem (eval.name)");

  auto* cmp = app.add_subcommand("compare", "WERR of a contextual report against a baseline");
  add_common(cmp, common);
  cmp->add_option("--base", base, "baseline report");
  cmp->add_option("--ctx", ctx, "contextual report");

  auto* exp = app.add_subcommand("export-embeddings", "write learned context tables as TSV");
  add_common(exp, common);
  exp->add_option("--checkpoint", checkpoint, "model checkpoint");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    const CLI::App* failed = &app;
    for (const CLI::App* s : app.get_subcommands()) failed = s;
    err << failed->help();
    return fail(err, kUsage, "usage", e.what());
  }

  for (const CLI::App* s : app.get_subcommands()) {
    if (s->count("--seed") > 0) common.seed = common.seed_value;
  }
  try {
    const Log log(err, log_level_from_env());
    if (common.threads > 0) omp_set_num_threads(common.threads);
    if (gen->parsed()) return cmd_gen_synthetic(common, preset, out, log);
    if (fit->parsed()) return cmd_fit_clusters(common, manifest, out, log);
    if (bpe->parsed()) return cmd_train_bpe(common, manifest, out, log);
    if (tr->parsed()) return cmd_train(common, manifest, vocab, clusters, out, log);
    if (ev->parsed()) return cmd_evaluate(common, checkpoint, manifest, name, out, log);
    if (cmp->parsed()) return cmd_compare(common, base, ctx, out);
    if (exp->parsed()) return cmd_export_embeddings(common, checkpoint, out);
    return fail(err, kUsage, "usage", "no subcommand");
  } catch (const UsageError& e) {
    return fail(err, kUsage, "usage", e.what());
  } catch (const ValidationError& e) {
    return fail(err, kInvalid, "validation", e.what());
  } catch (const ShapeError& e) {
    return fail(err, kInvalid, "validation", e.what());
  } catch (const std::exception& e) {
    return fail(err, kRuntime, "runtime", e.what());
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace ctxrnnt::cli
