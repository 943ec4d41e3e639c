// ctxrnnt/decode/report.h
//
// Corpus and sliced WER reports, their key=value text form, and relative WER
// reduction against a baseline report.

#ifndef CTXRNNT_DECODE_REPORT_H_
#define CTXRNNT_DECODE_REPORT_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctxrnnt/decode/wer.h"

namespace ctxrnnt {

struct SliceStats {
  std::size_t utterances = 0;
  std::size_t ref_words = 0;
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;

  void add(const EditCounts& c);
  void merge(const SliceStats& other);
  std::size_t errors() const { return substitutions + insertions + deletions; }
  // Absent when the slice has no reference words.
  std::optional<double> wer() const;

  bool operator==(const SliceStats&) const = default;
};

struct EvalReport {
  std::string name;
  SliceStats corpus;
  // Keys "domain/<label>", "month/<MM-Mon>", "cluster/<NN>" or "cluster/None".
  std::map<std::string, SliceStats> slices;

  static std::string DomainKey(const std::string& domain);
  static std::string MonthKey(int month);
  static std::string ClusterKey(int cluster_id, int none_id);

  void add(const EditCounts& counts, const std::string& domain, int month, int cluster_id,
           int none_id);
  // Associative and commutative over the counts; the name of *this is kept.
  void merge(const EvalReport& other);

  // One "key=value" line per field; WERs are derived values written for
  // readability and recomputed from counts on parse.
  std::string to_text() const;
  static EvalReport Parse(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static EvalReport Load(const std::filesystem::path& path);

  // Human-readable table.
  std::string table() const;

  bool operator==(const EvalReport&) const = default;
};

// (base - ctx) / base; absent when base is absent or zero, or ctx is absent.
std::optional<double> werr(std::optional<double> base_wer, std::optional<double> ctx_wer);

struct WerrRow {
  std::string slice;  // "corpus" or a slice key
  std::optional<double> base_wer;
  std::optional<double> ctx_wer;
  std::optional<double> werr;
};

// Corpus row first, then the union of slice keys in order.
std::vector<WerrRow> compare_reports(const EvalReport& base, const EvalReport& ctx);
std::string format_werr_table(const std::vector<WerrRow>& rows, const std::string& base_name,
                              const std::string& ctx_name);
std::string format_werr_text(const std::vector<WerrRow>& rows);

}  // namespace ctxrnnt

#endif  // CTXRNNT_DECODE_REPORT_H_
