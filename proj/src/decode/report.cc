#include "ctxrnnt/decode/report.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "ctxrnnt/context/datetime.h"
#include "ctxrnnt/error.h"

namespace ctxrnnt {

namespace {

const char* const kFields[] = {"utterances", "ref_words", "sub", "ins", "del"};

std::size_t* field_ptr(SliceStats& s, std::string_view field) {
  if (field == "utterances") return &s.utterances;
  if (field == "ref_words") return &s.ref_words;
  if (field == "sub") return &s.substitutions;
  if (field == "ins") return &s.insertions;
  if (field == "del") return &s.deletions;
  return nullptr;
}

std::size_t field_value(const SliceStats& s, std::string_view field) {
  return *field_ptr(const_cast<SliceStats&>(s), field);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string percent(const std::optional<double>& v) {
  return v ? fixed(100.0 * *v, 2) + "%" : std::string("n/a");
}

void write_stats(std::ostringstream& os, const std::string& prefix, const SliceStats& s) {
  for (const char* f : kFields) os << prefix << "." << f << "=" << field_value(s, f) << "\n";
  const auto w = s.wer();
  os << prefix << ".wer=" << (w ? fixed(*w, 6) : "absent") << "\n";
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string lpad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

void SliceStats::add(const EditCounts& c) {
  ++utterances;
  ref_words += c.ref_words;
  substitutions += c.substitutions;
  insertions += c.insertions;
  deletions += c.deletions;
}

void SliceStats::merge(const SliceStats& o) {
  utterances += o.utterances;
  ref_words += o.ref_words;
  substitutions += o.substitutions;
  insertions += o.insertions;
  deletions += o.deletions;
}

std::optional<double> SliceStats::wer() const {
  if (ref_words == 0) return std::nullopt;
  return static_cast<double>(errors()) / static_cast<double>(ref_words);
}

std::string EvalReport::DomainKey(const std::string& domain) {
  return "domain/" + (domain.empty() ? std::string("Unknown") : domain);
}

std::string EvalReport::MonthKey(int month) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "month/%02d-%s", month, month_name(month));
  return buf;
}

std::string EvalReport::ClusterKey(int cluster_id, int none_id) {
  if (cluster_id == none_id) return "cluster/None";
  char buf[32];
  std::snprintf(buf, sizeof buf, "cluster/%02d", cluster_id);
  return buf;
}

void EvalReport::add(const EditCounts& counts, const std::string& domain, int month,
                     int cluster_id, int none_id) {
  corpus.add(counts);
  slices[DomainKey(domain)].add(counts);
  slices[MonthKey(month)].add(counts);
  slices[ClusterKey(cluster_id, none_id)].add(counts);
}

void EvalReport::merge(const EvalReport& other) {
  corpus.merge(other.corpus);
  for (const auto& [key, s] : other.slices) slices[key].merge(s);
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os << "name=" << name << "\n";
  write_stats(os, "corpus", corpus);
  for (const auto& [key, s] : slices) write_stats(os, "slice." + key, s);
  return os.str();
}

EvalReport EvalReport::Parse(const std::string& text) {
  EvalReport r;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("report line " + std::to_string(lineno) + " has no '='");
    }
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "name") {
      r.name = value;
      continue;
    }
    const std::size_t dot = key.rfind('.');
    if (dot == std::string::npos) {
      throw ValidationError("report line " + std::to_string(lineno) + ": unknown key " + key);
    }
    const std::string owner = key.substr(0, dot), field = key.substr(dot + 1);
    if (field == "wer") continue;
    SliceStats* s;
    if (owner == "corpus") {
      s = &r.corpus;
    } else if (owner.rfind("slice.", 0) == 0) {
      s = &r.slices[owner.substr(6)];
    } else {
      throw ValidationError("report line " + std::to_string(lineno) + ": unknown key " + key);
    }
    std::size_t* dst = field_ptr(*s, field);
    if (!dst) throw ValidationError("report line " + std::to_string(lineno) + ": unknown field " + field);
    const char* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, *dst);
    if (ec != std::errc() || ptr != end) {
      throw ValidationError("report line " + std::to_string(lineno) + ": bad count '" + value + "'");
    }
  }
  return r;
}

void EvalReport::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report " + path.string());
  out << to_text();
  if (!out) throw IoError("write failed for " + path.string());
}

EvalReport EvalReport::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read report " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return Parse(buf.str());
}

std::string EvalReport::table() const {
  std::ostringstream os;
  os << "report " << name << "\n";
  os << pad("slice", 24) << lpad("utts", 7) << lpad("words", 8) << lpad("sub", 6) << lpad("ins", 6)
     << lpad("del", 6) << lpad("WER", 10) << "\n";
  auto row = [&](const std::string& key, const SliceStats& s) {
    os << pad(key, 24) << lpad(std::to_string(s.utterances), 7)
       << lpad(std::to_string(s.ref_words), 8) << lpad(std::to_string(s.substitutions), 6)
       << lpad(std::to_string(s.insertions), 6) << lpad(std::to_string(s.deletions), 6)
       << lpad(percent(s.wer()), 10) << "\n";
  };
  row("corpus", corpus);
  for (const auto& [key, s] : slices) row(key, s);
  return os.str();
}

std::optional<double> werr(std::optional<double> base_wer, std::optional<double> ctx_wer) {
  if (!base_wer || !ctx_wer || *base_wer == 0.0) return std::nullopt;
  return (*base_wer - *ctx_wer) / *base_wer;
}

std::vector<WerrRow> compare_reports(const EvalReport& base, const EvalReport& ctx) {
  std::vector<WerrRow> rows;
  rows.push_back({"corpus", base.corpus.wer(), ctx.corpus.wer(),
                  werr(base.corpus.wer(), ctx.corpus.wer())});
  std::set<std::string> keys;
  for (const auto& [k, s] : base.slices) keys.insert(k);
  for (const auto& [k, s] : ctx.slices) keys.insert(k);
  for (const auto& k : keys) {
    std::optional<double> b, c;
    if (auto it = base.slices.find(k); it != base.slices.end()) b = it->second.wer();
    if (auto it = ctx.slices.find(k); it != ctx.slices.end()) c = it->second.wer();
    rows.push_back({k, b, c, werr(b, c)});
  }
  return rows;
}

std::string format_werr_table(const std::vector<WerrRow>& rows, const std::string& base_name,
                              const std::string& ctx_name) {
  std::ostringstream os;
  os << "relative WERR of " << ctx_name << " w.r.t. " << base_name << "\n";
  os << pad("slice", 24) << lpad("base WER", 11) << lpad("ctx WER", 11) << lpad("WERR", 11) << "\n";
  for (const auto& r : rows) {
    os << pad(r.slice, 24) << lpad(percent(r.base_wer), 11) << lpad(percent(r.ctx_wer), 11)
       << lpad(percent(r.werr), 11) << "\n";
  }
  return os.str();
}

std::string format_werr_text(const std::vector<WerrRow>& rows) {
  std::ostringstream os;
  for (const auto& r : rows) os << r.slice << ".werr=" << (r.werr ? fixed(*r.werr, 6) : "absent") << "\n";
  return os.str();
}

}  // namespace ctxrnnt
