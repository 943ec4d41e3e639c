#include "ctxrnnt/context/export.h"

#include <cstdio>
#include <fstream>
#include <functional>
#include <string>

#include "ctxrnnt/context/datetime.h"
#include "ctxrnnt/error.h"

namespace ctxrnnt {

namespace {

std::string label_for(const std::string& table, std::size_t row, const ClusterModel* clusters) {
  char buf[96];
  if (table == "hour") {
    std::snprintf(buf, sizeof buf, "%02zu:00", row);
    return buf;
  }
  if (table == "weekday") return weekday_name(static_cast<int>(row));
  if (table == "week") return "week " + std::to_string(row + 1);
  if (table == "month") return month_name(static_cast<int>(row) + 1);
  // geo
  if (clusters && row < clusters->k()) {
    std::snprintf(buf, sizeof buf, "cluster_%zu (%.3f, %.3f)", row, clusters->centroids[row].lat,
                  clusters->centroids[row].lon);
    return buf;
  }
  if (clusters ? row == clusters->k() : false) return "None";
  return "cluster_" + std::to_string(row);
}

}  // namespace

std::vector<std::filesystem::path> export_embeddings(const ParamStore& store,
                                                     const ClusterModel* clusters,
                                                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (const std::string table : {"hour", "weekday", "week", "month", "geo"}) {
    const std::string name = "ctx." + table;
    if (!store.contains(name)) continue;
    const Tensor& t = store.value(store.id(name));
    const auto vec_path = dir / (table + "_vectors.tsv");
    const auto meta_path = dir / (table + "_metadata.tsv");
    std::ofstream vec(vec_path, std::ios::trunc);
    std::ofstream meta(meta_path, std::ios::trunc);
    if (!vec || !meta) throw IoError("cannot write embedding export under '" + dir.string() + "'");
    vec.precision(9);
    for (std::size_t r = 0; r < t.rows(); ++r) {
      std::span<const Real> row = t.row(r);
      for (std::size_t j = 0; j < row.size(); ++j) vec << (j ? "\t" : "") << row[j];
      vec << '\n';
      std::string label = label_for(table, r, clusters);
      if (table == "geo" && !clusters && r + 1 == t.rows()) label = "None";
      meta << label << '\n';
    }
    if (!vec || !meta) throw IoError("write failed under '" + dir.string() + "'");
    written.push_back(vec_path);
    written.push_back(meta_path);
  }
  if (written.empty()) throw ValidationError("model has no learned context tables to export");
  return written;
}

}  // namespace ctxrnnt
