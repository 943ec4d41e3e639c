#include "ctxrnnt/context/geo_cluster.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "ctxrnnt/error.h"
#include "ctxrnnt/numerics/rng.h"

namespace ctxrnnt {

namespace {

double sq_dist(const GeoPoint& a, const GeoPoint& b) {
  const double dl = a.lat - b.lat;
  const double dn = a.lon - b.lon;
  return dl * dl + dn * dn;
}

int nearest(const GeoPoint& p, const std::vector<GeoPoint>& centroids) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = sq_dist(p, centroids[c]);
    if (d < best_d) {  // strict: ties keep the lower index
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

}  // namespace

std::string ClusterModel::serialize() const {
  std::ostringstream os;
  os.precision(17);
  os << "k=" << centroids.size() << " seed=" << seed << " iterations=" << iterations << "\n";
  for (const auto& c : centroids) os << c.lat << ' ' << c.lon << "\n";
  return os.str();
}

ClusterModel ClusterModel::Parse(const std::string& text) {
  std::istringstream in(text);
  std::string header;
  if (!std::getline(in, header)) throw ValidationError("empty cluster model");
  ClusterModel m;
  std::size_t k = 0;
  {
    std::istringstream hs(header);
    std::string kv;
    bool have_k = false;
    while (hs >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ValidationError("bad cluster header field '" + kv + "'");
      const std::string key = kv.substr(0, eq);
      const std::string val = kv.substr(eq + 1);
      if (key == "k") {
        k = std::stoul(val);
        have_k = true;
      } else if (key == "seed") {
        m.seed = std::stoull(val);
      } else if (key == "iterations") {
        m.iterations = std::stoul(val);
      }
    }
    if (!have_k || k == 0) throw ValidationError("cluster header lacks k");
  }
  for (std::size_t i = 0; i < k; ++i) {
    GeoPoint p;
    if (!(in >> p.lat >> p.lon)) throw ValidationError("cluster model truncated");
    m.centroids.push_back(p);
  }
  return m;
}

void ClusterModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write cluster model '" + path.string() + "'");
  out << serialize();
}

ClusterModel ClusterModel::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read cluster model '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str());
}

int assign_cluster(const std::optional<GeoPoint>& coord, const ClusterModel& model) {
  if (!coord) return model.none_id();
  if (model.centroids.empty()) throw ValidationError("cluster model has no centroids");
  return nearest(*coord, model.centroids);
}

std::vector<int> assign_all(std::span<const GeoPoint> points, const ClusterModel& model) {
  std::vector<int> out(points.size());
  const long n = static_cast<long>(points.size());
#pragma omp parallel for schedule(static) if (n > 4096)
  for (long i = 0; i < n; ++i) out[i] = nearest(points[i], model.centroids);
  return out;
}

double kmeans_objective(std::span<const GeoPoint> points, const ClusterModel& model) {
  double total = 0.0;
  for (const auto& p : points) total += sq_dist(p, model.centroids[nearest(p, model.centroids)]);
  return total;
}

ClusterModel fit_geo_clusters(std::span<const GeoPoint> points, std::size_t k,
                              std::uint64_t seed, const KMeansOptions& options) {
  if (k == 0) throw ValidationError("k must be positive");
  {
    std::vector<GeoPoint> uniq(points.begin(), points.end());
    std::sort(uniq.begin(), uniq.end(), [](const GeoPoint& a, const GeoPoint& b) {
      return a.lat != b.lat ? a.lat < b.lat : a.lon < b.lon;
    });
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (uniq.size() < k) {
      throw ValidationError("need at least " + std::to_string(k) + " distinct points, got " +
                            std::to_string(uniq.size()));
    }
  }

  Rng rng(seed);
  ClusterModel model;
  model.seed = seed;
  // k-means++ seeding.
  model.centroids.push_back(points[rng.below(points.size())]);
  std::vector<double> d2(points.size());
  while (model.centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      d2[i] = sq_dist(points[i], model.centroids[nearest(points[i], model.centroids)]);
      total += d2[i];
    }
    double target = rng.uniform() * total;
    std::size_t pick = 0;
    for (; pick + 1 < points.size(); ++pick) {
      if (d2[pick] > 0 && target < d2[pick]) break;
      target -= d2[pick];
    }
    // Guard against landing on an already-chosen point through rounding.
    while (d2[pick] == 0.0) pick = (pick + 1) % points.size();
    model.centroids.push_back(points[pick]);
  }

  model.objective_history.push_back(kmeans_objective(points, model));
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    const std::vector<int> labels = assign_all(points, model);
    std::vector<GeoPoint> sums(k);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      sums[labels[i]].lat += points[i].lat;
      sums[labels[i]].lon += points[i].lon;
      ++counts[labels[i]];
    }
    double max_shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      const GeoPoint next{sums[c].lat / static_cast<double>(counts[c]),
                          sums[c].lon / static_cast<double>(counts[c])};
      max_shift = std::max(max_shift, std::sqrt(sq_dist(next, model.centroids[c])));
      model.centroids[c] = next;
    }
    model.iterations = iter + 1;
    model.objective_history.push_back(kmeans_objective(points, model));
    if (max_shift < options.tolerance_deg) break;
  }
  return model;
}

}  // namespace ctxrnnt
