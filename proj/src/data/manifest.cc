#include "ctxrnnt/data/manifest.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "ctxrnnt/error.h"

namespace ctxrnnt {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::optional<double> parse_degrees(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format_degrees(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

bool has_text(const std::string& s) {
  return s.find_first_not_of(" \t\r") != std::string::npos;
}

}  // namespace

std::string Manifest::issues_text(const std::string& origin) const {
  std::string out;
  for (const auto& issue : issues) {
    out += origin + ":" + std::to_string(issue.line) + ": " + issue.message + "\n";
  }
  return out;
}

void Manifest::require_valid(const std::string& origin) const {
  if (!ok()) {
    throw ValidationError(std::to_string(issues.size()) + " invalid manifest record(s)\n" +
                          issues_text(origin));
  }
}

std::filesystem::path Manifest::resolve(const ManifestRecord& record) const {
  std::filesystem::path p(record.feature_path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir) {
  Manifest m;
  m.base_dir = base_dir;
  std::unordered_map<std::string, std::size_t> first_line;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!has_text(line) || line[0] == '#') continue;
    auto issue = [&](std::string msg) { m.issues.push_back({lineno, std::move(msg)}); };

    const std::vector<std::string> f = split_tabs(line);
    if (f.size() != 7) {
      issue("expected 7 tab-separated fields, found " + std::to_string(f.size()));
      continue;
    }
    ManifestRecord r;
    r.id = f[0];
    r.feature_path = f[1];
    r.transcript = f[2];
    r.timestamp = f[3];
    r.domain = has_text(f[6]) ? f[6] : "Unknown";
    r.line = lineno;
    bool valid = true;
    if (!has_text(r.id)) {
      issue("empty utterance id");
      valid = false;
    }
    if (!has_text(r.feature_path)) {
      issue("empty feature path for '" + r.id + "'");
      valid = false;
    }
    if (!has_text(r.transcript)) {
      issue("empty transcript for '" + r.id + "'");
      valid = false;
    }
    try {
      r.time = parse_datetime(r.timestamp);
    } catch (const Error& e) {
      issue("bad timestamp for '" + r.id + "': " + e.what());
      valid = false;
    }
    const bool no_lat = f[4] == "-", no_lon = f[5] == "-";
    if (no_lat != no_lon) {
      issue("lat and lon must both be present or both be '-' for '" + r.id + "'");
      valid = false;
    } else if (!no_lat) {
      const auto lat = parse_degrees(f[4]);
      const auto lon = parse_degrees(f[5]);
      if (!lat || !lon || std::abs(*lat) > 90.0 || std::abs(*lon) > 180.0) {
        issue("bad coordinate '" + f[4] + "," + f[5] + "' for '" + r.id + "'");
        valid = false;
      } else {
        r.coord = GeoPoint{*lat, *lon};
      }
    }
    if (valid) {
      auto [it, inserted] = first_line.emplace(r.id, lineno);
      if (!inserted) {
        issue("duplicate id '" + r.id + "' (lines " + std::to_string(it->second) + " and " +
              std::to_string(lineno) + ")");
        continue;
      }
      m.records.push_back(std::move(r));
    }
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read manifest " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), path.parent_path());
}

std::string format_manifest_line(const ManifestRecord& r) {
  std::string out = r.id + "\t" + r.feature_path + "\t" + r.transcript + "\t" + r.timestamp + "\t";
  if (r.coord) {
    out += format_degrees(r.coord->lat) + "\t" + format_degrees(r.coord->lon);
  } else {
    out += "-\t-";
  }
  return out + "\t" + r.domain;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + path.string());
  for (const auto& r : records) out << format_manifest_line(r) << "\n";
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace ctxrnnt
