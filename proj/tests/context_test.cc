#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <set>

#include "ctxrnnt/context/datetime.h"
#include "ctxrnnt/context/encoders.h"
#include "ctxrnnt/context/export.h"
#include "ctxrnnt/context/geo_cluster.h"
#include "ctxrnnt/error.h"
#include "ctxrnnt/numerics/grad_check.h"
#include "test_util.h"

using namespace ctxrnnt;
using ctxrnnt::testing::random_tensor;

namespace {

// ISO weekday (Monday = 0) and week from the C library calendar.
DateTimeContext libc_calendar(int year, int month, int day, int hour) {
  std::tm tm{};
  tm.tm_year = year - 1900;
  tm.tm_mon = month - 1;
  tm.tm_mday = day;
  tm.tm_hour = hour;
  const std::time_t t = timegm(&tm);
  std::tm out{};
  gmtime_r(&t, &out);
  char buf[16];
  std::strftime(buf, sizeof buf, "%u %V", &out);
  int wd = 0, wk = 0;
  std::sscanf(buf, "%d %d", &wd, &wk);
  return {hour, wd - 1, wk, month};
}

Tensor one_hot_rows(std::size_t rows, std::size_t dim, std::size_t hot) {
  Tensor t({rows, dim});
  for (std::size_t r = 0; r < rows; ++r) t.at(r, hot) = 1.0;
  return t;
}

}  // namespace

TEST(DateTime, ListingExample) {
  const DateTimeContext c = parse_datetime("2020-01-01T13:21");
  EXPECT_EQ(c.hour, 13);
  EXPECT_EQ(c.weekday, 2);
  EXPECT_STREQ(weekday_name(c.weekday), "Wednesday");
  EXPECT_EQ(c.week_no, 1);
  EXPECT_EQ(c.month, 1);
  EXPECT_EQ(parse_datetime("2020-01-01 T 13:21"), c);
}

TEST(DateTime, MondayOfFirstIsoWeek) {
  const DateTimeContext c = parse_datetime("2021-01-04T00:00");
  EXPECT_EQ(c, (DateTimeContext{0, 0, 1, 1}));
}

TEST(DateTime, YearEndBoundary) {
  const DateTimeContext c = parse_datetime("2020-12-31T23:59");
  EXPECT_EQ(c.hour, 23);
  EXPECT_EQ(c.month, 12);
  EXPECT_EQ(c.week_no, 53);
}

TEST(DateTime, MatchesLibcCalendar) {
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    const int year = static_cast<int>(rng.between(1990, 2040));
    const int month = static_cast<int>(rng.between(1, 12));
    const int day = static_cast<int>(rng.between(1, 28));
    const int hour = static_cast<int>(rng.between(0, 23));
    char iso[32];
    std::snprintf(iso, sizeof iso, "%04d-%02d-%02dT%02d:%02d:%02d", year, month, day, hour, 7, 9);
    EXPECT_EQ(parse_datetime(iso), libc_calendar(year, month, day, hour)) << iso;
  }
}

TEST(DateTime, MalformedInputThrows) {
  for (const char* bad : {"", "2020-13-01T00:00", "2021-02-29T10:00", "2020-01-01", "2020-01-01T24:00",
                          "2020/01/01T10:00", "2020-01-01T10:60", "20-01-01T10:00"}) {
    EXPECT_THROW(parse_datetime(bad), ValidationError) << bad;
  }
  EXPECT_NO_THROW(parse_datetime("2020-02-29T10:00"));
}

TEST(TimeEmbedding, IdenticalRowsGiveThatRow) {
  Rng rng(2);
  const Tensor v = random_tensor({4}, rng);
  auto fill = [&](std::size_t rows) {
    Tensor t({rows, 4});
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < 4; ++j) t.at(r, j) = v[j];
    }
    return t;
  };
  const Tensor h = fill(24), wd = fill(7), wk = fill(53), m = fill(12);
  const auto out = time_embedding_lookup({5, 3, 20, 6}, {h, wd, wk, m});
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(out[j], v[j], 1e-15);
}

TEST(TimeEmbedding, MeanOfFourOneHots) {
  const Tensor h = one_hot_rows(24, 4, 0), wd = one_hot_rows(7, 4, 1);
  const Tensor wk = one_hot_rows(53, 4, 2), m = one_hot_rows(12, 4, 3);
  const auto out = time_embedding_lookup({23, 6, 53, 12}, {h, wd, wk, m});
  for (Real v : out) EXPECT_EQ(v, 0.25);
}

TEST(TimeEmbedding, PermutationEquivariant) {
  Rng rng(3);
  const Tensor a = random_tensor({24, 5}, rng), b = random_tensor({7, 5}, rng);
  const Tensor c = random_tensor({53, 5}, rng), d = random_tensor({12, 5}, rng);
  const DateTimeContext ctx{10, 4, 30, 7};
  const auto x = time_embedding_lookup(ctx, {a, b, c, d});
  for (std::size_t j = 0; j < 5; ++j) {
    const Real want = (a.at(10, j) + b.at(4, j) + c.at(29, j) + d.at(6, j)) / 4.0;
    EXPECT_NEAR(x[j], want, 1e-15);
  }
  // Swapping which table plays which role leaves the mean unchanged when
  // the selected rows are permuted along with them.
  Tensor b2({7, 5}), a2({24, 5});
  for (std::size_t j = 0; j < 5; ++j) {
    b2.at(4, j) = a.at(10, j);
    a2.at(10, j) = b.at(4, j);
  }
  const auto y = time_embedding_lookup(ctx, {a2, b2, c, d});
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(x[j], y[j], 1e-15);
}

TEST(TimeEmbedding, OutOfRangeThrows) {
  ParamStore store;
  Rng rng(4);
  const ContextEncoder enc = ContextEncoder::Create(store, ContextKind::kTimeEmbeddingLookUp, rng);
  UtteranceContext ctx;
  ctx.time = {24, 0, 1, 1};
  EXPECT_THROW(enc.encode(store, ctx), ValidationError);
  ctx.time = {0, 0, 54, 1};
  EXPECT_THROW(enc.encode(store, ctx), ValidationError);
  ctx.time = {0, 0, 1, 0};
  EXPECT_THROW(enc.encode(store, ctx), ValidationError);
}

TEST(TimeEmbedding, EachSelectedRowReceivesQuarterGradient) {
  ParamStore store;
  Rng rng(5);
  const ContextEncoder enc = ContextEncoder::Create(store, ContextKind::kTimeEmbeddingLookUp, rng);
  UtteranceContext ctx;
  ctx.time = {13, 2, 1, 1};
  const Tensor g = random_tensor({64}, rng);
  GradBuffer grads = store.make_grad_buffer();
  enc.backward(store, ctx, g.values(), grads);
  const std::pair<const char*, std::size_t> rows[] = {
      {"ctx.hour", 13}, {"ctx.weekday", 2}, {"ctx.week", 0}, {"ctx.month", 0}};
  for (const auto& [name, row] : rows) {
    const Tensor& t = grads[store.id(name)];
    for (std::size_t r = 0; r < t.rows(); ++r) {
      for (std::size_t j = 0; j < 64; ++j) {
        EXPECT_EQ(t.at(r, j), r == row ? g[j] / 4.0 : 0.0) << name << " row " << r;
      }
    }
  }
}

TEST(PositionalEncoding, AnalyticValues) {
  const auto h6 = time_positional_encoding({6, 0, 1, 1});
  EXPECT_NEAR(h6[0], 1.0, 1e-15);
  EXPECT_NEAR(h6[1], 0.0, 1e-15);
  const auto m3 = time_positional_encoding({0, 0, 1, 3});
  EXPECT_NEAR(m3[6], 1.0, 1e-15);
  EXPECT_NEAR(m3[7], 0.0, 1e-15);
  // Raw month 12 closes the cycle at phase 0.
  const auto m12 = time_positional_encoding({0, 0, 1, 12});
  EXPECT_NEAR(m12[6], 0.0, 1e-12);
  EXPECT_NEAR(m12[7], 1.0, 1e-12);
}

TEST(PositionalEncoding, HourCycleCloses) {
  const auto h0 = time_positional_encoding({0, 0, 1, 1});
  const auto h24 = time_positional_encoding({24, 0, 1, 1});
  EXPECT_NEAR(h0[0], h24[0], 1e-12);
  EXPECT_NEAR(h0[1], h24[1], 1e-12);
}

TEST(PositionalEncoding, UnitPairsAndRange) {
  for (int hour = 0; hour < 24; ++hour) {
    for (int wd = 0; wd < 7; ++wd) {
      for (int wk : {1, 17, 52, 53}) {
        for (int m = 1; m <= 12; ++m) {
          const auto pe = time_positional_encoding({hour, wd, wk, m});
          for (int p = 0; p < 4; ++p) {
            EXPECT_NEAR(pe[2 * p] * pe[2 * p] + pe[2 * p + 1] * pe[2 * p + 1], 1.0, 1e-12);
          }
          for (Real v : pe) {
            EXPECT_LE(std::abs(v), 1.0);
          }
        }
      }
    }
  }
}

TEST(PositionalEncoding, DistinctFieldValuesGiveDistinctPairs) {
  auto pair_of = [](const DateTimeContext& c, int p) {
    const auto pe = time_positional_encoding(c);
    return std::make_pair(std::round(pe[2 * p] * 1e9), std::round(pe[2 * p + 1] * 1e9));
  };
  std::set<std::pair<double, double>> hours, weekdays, weeks, months;
  for (int h = 0; h < 24; ++h) hours.insert(pair_of({h, 0, 1, 1}, 0));
  for (int d = 0; d < 7; ++d) weekdays.insert(pair_of({0, d, 1, 1}, 1));
  for (int w = 1; w <= 52; ++w) weeks.insert(pair_of({0, 0, w, 1}, 2));
  for (int m = 1; m <= 12; ++m) months.insert(pair_of({0, 0, 1, m}, 3));
  EXPECT_EQ(hours.size(), 24u);
  EXPECT_EQ(weekdays.size(), 7u);
  EXPECT_EQ(weeks.size(), 52u);
  EXPECT_EQ(months.size(), 12u);
}

TEST(GeoOneHot, DimensionAndNoneIndex) {
  const auto e0 = geo_one_hot(0);
  const auto none = geo_one_hot(20);
  ASSERT_EQ(e0.size(), 21u);
  EXPECT_EQ(e0[0], 1.0);
  EXPECT_EQ(none[20], 1.0);
  for (int id = 0; id <= 20; ++id) {
    const auto v = geo_one_hot(id);
    Real s = 0;
    for (Real x : v) s += x;
    EXPECT_EQ(s, 1.0);
    EXPECT_EQ(v[static_cast<std::size_t>(id)], 1.0);
  }
  EXPECT_THROW(geo_one_hot(21), ValidationError);
  EXPECT_THROW(geo_one_hot(-1), ValidationError);
}

TEST(GeoOneHot, HasNoTrainableParameters) {
  ParamStore store;
  Rng rng(6);
  const ContextEncoder enc = ContextEncoder::Create(store, ContextKind::kGeoOneHot, rng);
  EXPECT_EQ(store.size(), 0u);
  EXPECT_EQ(enc.output_dim(), 21u);
  EXPECT_EQ(ContextEncoder::ParamCount(ContextKind::kGeoOneHot), 0u);
}

TEST(GeoEmbedding, LookupSelectsRow) {
  Tensor table({21, 21});
  for (std::size_t r = 0; r < 21; ++r) table.at(r, r) = 1.0;
  const auto v = geo_embedding_lookup(7, table);
  for (std::size_t j = 0; j < 21; ++j) EXPECT_EQ(v[j], j == 7 ? 1.0 : 0.0);
  const auto none = geo_embedding_lookup(20, table);
  EXPECT_EQ(none[20], 1.0);
}

TEST(GeoEmbedding, GradientHitsExactlyOneRow) {
  ParamStore store;
  Rng rng(7);
  const ContextEncoder enc = ContextEncoder::Create(store, ContextKind::kGeoEmbeddingLookUp, rng);
  UtteranceContext ctx;
  ctx.cluster_id = 20;
  const Tensor w = random_tensor({64}, rng);
  auto loss = [&](const ParamStore& s, GradBuffer* g) {
    const auto e = enc.encode(s, ctx);
    Real total = 0;
    for (std::size_t j = 0; j < 64; ++j) total += w[j] * e[j];
    if (g) enc.backward(s, ctx, w.values(), *g);
    return total;
  };
  EXPECT_TRUE(grad_check(loss, store).ok());
  GradBuffer g = store.make_grad_buffer();
  loss(store, &g);
  const Tensor& t = g[store.id("ctx.geo")];
  std::size_t touched = 0;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    bool any = false;
    for (std::size_t j = 0; j < t.cols(); ++j) any |= t.at(r, j) != 0.0;
    touched += any;
  }
  EXPECT_EQ(touched, 1u);
}

TEST(CombinedTimeGeo, IdentityHalfProjectionSelectsTime) {
  Rng rng(8);
  const Tensor h = random_tensor({24, 64}, rng), wd = random_tensor({7, 64}, rng);
  const Tensor wk = random_tensor({53, 64}, rng), m = random_tensor({12, 64}, rng);
  const Tensor geo = random_tensor({21, 64}, rng);
  Tensor proj({64, 128});
  for (std::size_t i = 0; i < 64; ++i) proj.at(i, i) = 1.0;
  const DateTimeContext ctx{9, 1, 12, 3};
  const auto want = time_embedding_lookup(ctx, {h, wd, wk, m});
  const auto got = combined_time_geo(ctx, 4, {h, wd, wk, m}, geo, proj);
  for (std::size_t j = 0; j < 64; ++j) EXPECT_NEAR(got[j], want[j], 1e-15);
  const auto zero = combined_time_geo(ctx, 4, {h, wd, wk, m}, geo, Tensor({64, 128}));
  for (Real v : zero) EXPECT_EQ(v, 0.0);
}

TEST(CombinedTimeGeo, FullPathGradientCheck) {
  ParamStore store;
  Rng rng(9);
  const ContextEncoder enc = ContextEncoder::Create(store, ContextKind::kCombinedTimeGeo, rng);
  UtteranceContext ctx;
  ctx.time = {22, 5, 40, 10};
  ctx.cluster_id = 3;
  const Tensor w = random_tensor({64}, rng);
  auto loss = [&](const ParamStore& s, GradBuffer* g) {
    const auto e = enc.encode(s, ctx);
    Real total = 0;
    for (std::size_t j = 0; j < 64; ++j) total += w[j] * std::tanh(e[j]);
    if (g) {
      std::vector<Real> de(64);
      for (std::size_t j = 0; j < 64; ++j) de[j] = w[j] * (1 - std::tanh(e[j]) * std::tanh(e[j]));
      enc.backward(s, ctx, de, *g);
    }
    return total;
  };
  const GradCheckReport r = grad_check(loss, store);
  EXPECT_TRUE(r.ok()) << r.max_error;
}

TEST(ContextEncoder, OutputDimensions) {
  EXPECT_EQ(ContextEncoder::OutputDim(ContextKind::kNone), 0u);
  EXPECT_EQ(ContextEncoder::OutputDim(ContextKind::kTimeEmbeddingLookUp), 64u);
  EXPECT_EQ(ContextEncoder::OutputDim(ContextKind::kTimePositionalEncoding), 8u);
  EXPECT_EQ(ContextEncoder::OutputDim(ContextKind::kGeoEmbeddingLookUp), 64u);
  EXPECT_EQ(ContextEncoder::OutputDim(ContextKind::kGeoOneHot), 21u);
  EXPECT_EQ(ContextEncoder::OutputDim(ContextKind::kCombinedTimeGeo), 64u);
  EXPECT_EQ(ContextEncoder::ParamCount(ContextKind::kTimeEmbeddingLookUp), (24u + 7 + 53 + 12) * 64);
  EXPECT_EQ(ContextEncoder::ParamCount(ContextKind::kCombinedTimeGeo),
            (24u + 7 + 53 + 12 + 21) * 64 + 64 * 128);
}

TEST(ContextEncoder, KindNamesRoundTrip) {
  for (ContextKind k : {ContextKind::kNone, ContextKind::kTimeEmbeddingLookUp,
                        ContextKind::kTimePositionalEncoding, ContextKind::kGeoEmbeddingLookUp,
                        ContextKind::kGeoOneHot, ContextKind::kCombinedTimeGeo}) {
    EXPECT_EQ(parse_context_kind(context_kind_name(k)), k);
  }
  EXPECT_EQ(parse_context_kind("TimeEmbeddingLookUp"), ContextKind::kTimeEmbeddingLookUp);
  EXPECT_THROW(parse_context_kind("bogus"), ValidationError);
}

TEST(ContextEncoder, TablesStartSmallAndUniform) {
  ParamStore store;
  Rng rng(10);
  ContextEncoder::Create(store, ContextKind::kCombinedTimeGeo, rng);
  for (const char* name : {"ctx.hour", "ctx.weekday", "ctx.week", "ctx.month", "ctx.geo"}) {
    for (Real v : store.value(store.id(name)).values()) {
      EXPECT_LE(std::abs(v), 0.05);
    }
  }
}

TEST(KMeans, SingleClusterIsMean) {
  Rng rng(11);
  std::vector<GeoPoint> pts;
  double lat = 0, lon = 0;
  for (int i = 0; i < 50; ++i) {
    pts.push_back({40 + rng.normal(), -100 + rng.normal()});
    lat += pts.back().lat;
    lon += pts.back().lon;
  }
  const ClusterModel m = fit_geo_clusters(pts, 1, 3);
  ASSERT_EQ(m.k(), 1u);
  EXPECT_NEAR(m.centroids[0].lat, lat / 50, 1e-9);
  EXPECT_NEAR(m.centroids[0].lon, lon / 50, 1e-9);
}

TEST(KMeans, TwoSeparatedBlobs) {
  Rng rng(12);
  std::vector<GeoPoint> pts;
  for (int i = 0; i < 200; ++i) {
    const bool west = i % 2 == 0;
    pts.push_back({(west ? 30.0 : 45.0) + 0.2 * rng.normal(), (west ? -120.0 : -75.0) + 0.2 * rng.normal()});
  }
  const ClusterModel m = fit_geo_clusters(pts, 2, 5);
  std::vector<GeoPoint> c = m.centroids;
  std::sort(c.begin(), c.end(), [](const GeoPoint& a, const GeoPoint& b) { return a.lat < b.lat; });
  EXPECT_NEAR(c[0].lat, 30.0, 0.1);
  EXPECT_NEAR(c[0].lon, -120.0, 0.1);
  EXPECT_NEAR(c[1].lat, 45.0, 0.1);
  EXPECT_NEAR(c[1].lon, -75.0, 0.1);
}

TEST(KMeans, ObjectiveNeverIncreases) {
  Rng rng(13);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::vector<GeoPoint> pts;
    for (int i = 0; i < 400; ++i) pts.push_back({25 + 25 * rng.uniform(), -125 + 55 * rng.uniform()});
    const ClusterModel m = fit_geo_clusters(pts, 20, seed);
    ASSERT_GE(m.objective_history.size(), 2u);
    for (std::size_t i = 1; i < m.objective_history.size(); ++i) {
      EXPECT_LE(m.objective_history[i], m.objective_history[i - 1] + 1e-9);
    }
    EXPECT_NEAR(kmeans_objective(pts, m), m.objective_history.back(), 1e-6);
  }
}

TEST(KMeans, DeterministicGivenSeed) {
  Rng rng(14);
  std::vector<GeoPoint> pts;
  for (int i = 0; i < 300; ++i) pts.push_back({30 + 10 * rng.uniform(), -100 + 20 * rng.uniform()});
  EXPECT_EQ(fit_geo_clusters(pts, 20, 4).centroids, fit_geo_clusters(pts, 20, 4).centroids);
}

TEST(KMeans, TooFewDistinctPointsThrows) {
  std::vector<GeoPoint> pts(30, GeoPoint{1, 2});
  pts.push_back({3, 4});
  EXPECT_THROW(fit_geo_clusters(pts, 3, 0), ValidationError);
}

TEST(AssignCluster, NearestTiesAndNone) {
  ClusterModel m;
  for (int i = 0; i < 20; ++i) m.centroids.push_back({static_cast<double>(i), 0.0});
  EXPECT_EQ(assign_cluster(GeoPoint{7.0, 0.0}, m), 7);
  EXPECT_EQ(assign_cluster(std::nullopt, m), 20);
  m.centroids[2] = {0.0, 1.0};
  m.centroids[5] = {0.0, -1.0};
  m.centroids[0] = {50.0, 50.0};
  m.centroids[1] = {50.0, 50.0};
  EXPECT_EQ(assign_cluster(GeoPoint{0.0, 0.0}, m), 2);
  const int first = assign_cluster(GeoPoint{3.3, 0.2}, m);
  EXPECT_EQ(assign_cluster(GeoPoint{3.3, 0.2}, m), first);
}

TEST(AssignCluster, ParallelMatchesSerial) {
  Rng rng(15);
  std::vector<GeoPoint> pts;
  for (int i = 0; i < 5000; ++i) pts.push_back({20 + 30 * rng.uniform(), -130 + 60 * rng.uniform()});
  const ClusterModel m = fit_geo_clusters(pts, 20, 1);
  const auto all = assign_all(pts, m);
  ASSERT_EQ(all.size(), pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) ASSERT_EQ(all[i], assign_cluster(pts[i], m));
}

TEST(ClusterModel, SerializationRoundTrip) {
  Rng rng(16);
  std::vector<GeoPoint> pts;
  for (int i = 0; i < 100; ++i) pts.push_back({rng.normal(), rng.normal()});
  const ClusterModel m = fit_geo_clusters(pts, 5, 2);
  const ClusterModel back = ClusterModel::Parse(m.serialize());
  EXPECT_EQ(back.centroids, m.centroids);
  EXPECT_EQ(back.seed, m.seed);
  EXPECT_EQ(back.iterations, m.iterations);
  EXPECT_THROW(ClusterModel::Parse("nonsense"), ValidationError);
}

TEST(Export, WritesVectorsAndLabels) {
  ParamStore store;
  Rng rng(17);
  ContextEncoder::Create(store, ContextKind::kCombinedTimeGeo, rng);
  ClusterModel clusters;
  for (int i = 0; i < 20; ++i) clusters.centroids.push_back({30.0 + i, -100.0});
  const auto dir = ctxrnnt::testing::scratch_dir("export");
  const auto files = export_embeddings(store, &clusters, dir);
  EXPECT_EQ(files.size(), 10u);
  const std::string months = ctxrnnt::testing::read_file(dir / "month_metadata.tsv");
  EXPECT_EQ(months.substr(0, 8), "January\n");
  const std::string geo = ctxrnnt::testing::read_file(dir / "geo_metadata.tsv");
  EXPECT_NE(geo.find("None\n"), std::string::npos);
  const std::string vecs = ctxrnnt::testing::read_file(dir / "geo_vectors.tsv");
  EXPECT_EQ(std::count(vecs.begin(), vecs.end(), '\n'), 21);
  const std::string first = vecs.substr(0, vecs.find('\n'));
  EXPECT_EQ(std::count(first.begin(), first.end(), '\t'), 63);
}
