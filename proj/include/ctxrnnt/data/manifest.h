// ctxrnnt/data/manifest.h
//
// Corpus manifest: UTF-8 text, one record per line, seven tab-separated
// fields in fixed order:
//
//   id  feature_path  transcript  timestamp  lat|-  lon|-  domain
//
// feature_path is either a feature container (.feat) or 16-bit PCM audio
// (.wav); relative paths resolve against the manifest's directory. Blank
// lines and lines starting with '#' are skipped.

#ifndef CTXRNNT_DATA_MANIFEST_H_
#define CTXRNNT_DATA_MANIFEST_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ctxrnnt/context/datetime.h"
#include "ctxrnnt/context/geo_cluster.h"

namespace ctxrnnt {

struct ManifestRecord {
  std::string id;
  std::string feature_path;
  std::string transcript;
  std::string timestamp;
  std::optional<GeoPoint> coord;
  std::string domain;
  DateTimeContext time;  // parsed from timestamp
  std::size_t line = 0;  // 1-based source line
};

struct ManifestIssue {
  std::size_t line = 0;
  std::string message;
};

struct Manifest {
  std::filesystem::path base_dir;
  std::vector<ManifestRecord> records;  // only records that validated
  std::vector<ManifestIssue> issues;

  bool ok() const { return issues.empty(); }
  // One "origin:line: message" line per issue.
  std::string issues_text(const std::string& origin = "manifest") const;
  // Throws ValidationError carrying issues_text() when there are issues.
  void require_valid(const std::string& origin = "manifest") const;

  std::filesystem::path resolve(const ManifestRecord& record) const;
};

// Parses without touching feature files. Every malformed record becomes an
// issue; parsing continues with the next line. A duplicate id is reported
// with the line of its first occurrence.
Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir = {});
// Throws IoError when the file cannot be read.
Manifest load_manifest(const std::filesystem::path& path);

std::string format_manifest_line(const ManifestRecord& record);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records);

}  // namespace ctxrnnt

#endif  // CTXRNNT_DATA_MANIFEST_H_
