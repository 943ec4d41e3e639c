// ctxrnnt/context/geo_cluster.h
//
// k-means over raw (lat, lon) degrees with Euclidean distance. Utterances
// without a coordinate map to the extra "None" cluster whose id is k.

#ifndef CTXRNNT_CONTEXT_GEO_CLUSTER_H_
#define CTXRNNT_CONTEXT_GEO_CLUSTER_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ctxrnnt {

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  bool operator==(const GeoPoint&) const = default;
};

inline constexpr std::size_t kDefaultGeoClusters = 20;

struct ClusterModel {
  std::vector<GeoPoint> centroids;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  // Sum of squared distances after initialization and after each iteration.
  std::vector<double> objective_history;

  std::size_t k() const { return centroids.size(); }
  int none_id() const { return static_cast<int>(centroids.size()); }

  std::string serialize() const;
  static ClusterModel Parse(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static ClusterModel Load(const std::filesystem::path& path);
};

struct KMeansOptions {
  std::size_t max_iterations = 100;
  double tolerance_deg = 1e-6;  // stop when every centroid moves less than this
};

// Lloyd's algorithm with k-means++ seeding. Deterministic given `seed`.
// Throws ValidationError when there are fewer than k distinct points.
ClusterModel fit_geo_clusters(std::span<const GeoPoint> points,
                              std::size_t k = kDefaultGeoClusters,
                              std::uint64_t seed = 0,
                              const KMeansOptions& options = {});

// Nearest centroid (ties to the lowest index); a missing coordinate maps to
// model.none_id().
int assign_cluster(const std::optional<GeoPoint>& coord, const ClusterModel& model);

// Assignment step over many points. Parallel over points; `assign_cluster`
// is the serial reference.
std::vector<int> assign_all(std::span<const GeoPoint> points, const ClusterModel& model);

double kmeans_objective(std::span<const GeoPoint> points, const ClusterModel& model);

}  // namespace ctxrnnt

#endif  // CTXRNNT_CONTEXT_GEO_CLUSTER_H_
