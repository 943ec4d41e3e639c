#include "ctxrnnt/context/encoders.h"

#include <cmath>

#include "ctxrnnt/error.h"

namespace ctxrnnt {

namespace {

void check_row(int row, std::size_t rows, const char* what) {
  if (row < 0 || static_cast<std::size_t>(row) >= rows) {
    throw ValidationError(std::string(what) + " index " + std::to_string(row) +
                          " out of range [0, " + std::to_string(rows) + ")");
  }
}

Tensor uniform_table(std::size_t rows, std::size_t cols, double scale, Rng& rng) {
  Tensor t({rows, cols});
  for (Real& v : t.values()) v = rng.uniform(-scale, scale);
  return t;
}

void add_row(std::span<Real> dst, std::span<const Real> src, Real scale) {
  for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += scale * src[j];
}

}  // namespace

ContextKind parse_context_kind(const std::string& name) {
  if (name == "none" || name == "baseline") return ContextKind::kNone;
  if (name == "TimeEmbeddingLookUp" || name == "time_embedding") return ContextKind::kTimeEmbeddingLookUp;
  if (name == "TimePositionalEncoding" || name == "time_positional") return ContextKind::kTimePositionalEncoding;
  if (name == "GeoEmbeddingLookUp" || name == "geo_embedding") return ContextKind::kGeoEmbeddingLookUp;
  if (name == "GeoOneHot" || name == "geo_onehot") return ContextKind::kGeoOneHot;
  if (name == "CombinedTimeGeo" || name == "combined") return ContextKind::kCombinedTimeGeo;
  throw ValidationError("unknown context encoder '" + name + "'");
}

std::string context_kind_name(ContextKind kind) {
  switch (kind) {
    case ContextKind::kNone: return "none";
    case ContextKind::kTimeEmbeddingLookUp: return "TimeEmbeddingLookUp";
    case ContextKind::kTimePositionalEncoding: return "TimePositionalEncoding";
    case ContextKind::kGeoEmbeddingLookUp: return "GeoEmbeddingLookUp";
    case ContextKind::kGeoOneHot: return "GeoOneHot";
    case ContextKind::kCombinedTimeGeo: return "CombinedTimeGeo";
  }
  return "none";
}

bool uses_time(ContextKind kind) {
  return kind == ContextKind::kTimeEmbeddingLookUp ||
         kind == ContextKind::kTimePositionalEncoding ||
         kind == ContextKind::kCombinedTimeGeo;
}

bool uses_geo(ContextKind kind) {
  return kind == ContextKind::kGeoEmbeddingLookUp || kind == ContextKind::kGeoOneHot ||
         kind == ContextKind::kCombinedTimeGeo;
}

std::vector<Real> time_embedding_lookup(const DateTimeContext& ctx, const TimeTables& tables) {
  check_row(ctx.hour, tables.hour.rows(), "hour");
  check_row(ctx.weekday, tables.weekday.rows(), "weekday");
  check_row(ctx.week_no - 1, tables.week.rows(), "week");
  check_row(ctx.month - 1, tables.month.rows(), "month");
  const std::size_t dim = tables.hour.cols();
  if (tables.weekday.cols() != dim || tables.week.cols() != dim || tables.month.cols() != dim) {
    throw ShapeError("time embedding tables have different widths");
  }
  std::vector<Real> out(dim, 0.0);
  add_row(out, tables.hour.row(static_cast<std::size_t>(ctx.hour)), 0.25);
  add_row(out, tables.weekday.row(static_cast<std::size_t>(ctx.weekday)), 0.25);
  add_row(out, tables.week.row(static_cast<std::size_t>(ctx.week_no - 1)), 0.25);
  add_row(out, tables.month.row(static_cast<std::size_t>(ctx.month - 1)), 0.25);
  return out;
}

std::array<Real, kPositionalDim> time_positional_encoding(const DateTimeContext& ctx) {
  const Real two_pi = 2.0 * M_PI;
  const Real phases[4] = {two_pi * ctx.hour / 24.0, two_pi * ctx.weekday / 7.0,
                          two_pi * ctx.week_no / 53.0, two_pi * ctx.month / 12.0};
  std::array<Real, kPositionalDim> out{};
  for (int i = 0; i < 4; ++i) {
    out[2 * i] = std::sin(phases[i]);
    out[2 * i + 1] = std::cos(phases[i]);
  }
  return out;
}

std::vector<Real> geo_one_hot(int cluster_id, std::size_t rows) {
  check_row(cluster_id, rows, "geo cluster");
  std::vector<Real> out(rows, 0.0);
  out[static_cast<std::size_t>(cluster_id)] = 1.0;
  return out;
}

std::vector<Real> geo_embedding_lookup(int cluster_id, const Tensor& table) {
  check_row(cluster_id, table.rows(), "geo cluster");
  std::span<const Real> row = table.row(static_cast<std::size_t>(cluster_id));
  return {row.begin(), row.end()};
}

std::vector<Real> combined_time_geo(const DateTimeContext& ctx, int cluster_id,
                                    const TimeTables& tables, const Tensor& geo_table,
                                    const Tensor& projection) {
  std::vector<Real> joined = time_embedding_lookup(ctx, tables);
  const std::vector<Real> geo = geo_embedding_lookup(cluster_id, geo_table);
  joined.insert(joined.end(), geo.begin(), geo.end());
  if (projection.rank() != 2 || projection.cols() != joined.size()) {
    throw ShapeError("combined projection " + projection.shape_string() +
                     " does not accept " + std::to_string(joined.size()) + " inputs");
  }
  std::vector<Real> out(projection.rows(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::span<const Real> w = projection.row(i);
    Real s = 0.0;
    for (std::size_t j = 0; j < joined.size(); ++j) s += w[j] * joined[j];
    out[i] = s;
  }
  return out;
}

ContextEncoder ContextEncoder::Create(ParamStore& store, ContextKind kind, Rng& rng,
                                      std::size_t geo_rows) {
  ContextEncoder enc;
  enc.kind_ = kind;
  enc.geo_rows_ = geo_rows;
  constexpr double kInit = 0.05;
  const std::size_t dim = kContextEmbeddingDim;
  if (kind == ContextKind::kTimeEmbeddingLookUp || kind == ContextKind::kCombinedTimeGeo) {
    enc.hour_ = store.add("ctx.hour", uniform_table(kHourRows, dim, kInit, rng));
    enc.weekday_ = store.add("ctx.weekday", uniform_table(kWeekdayRows, dim, kInit, rng));
    enc.week_ = store.add("ctx.week", uniform_table(kWeekRows, dim, kInit, rng));
    enc.month_ = store.add("ctx.month", uniform_table(kMonthRows, dim, kInit, rng));
  }
  if (kind == ContextKind::kGeoEmbeddingLookUp || kind == ContextKind::kCombinedTimeGeo) {
    enc.geo_ = store.add("ctx.geo", uniform_table(geo_rows, dim, kInit, rng));
  }
  if (kind == ContextKind::kCombinedTimeGeo) {
    enc.proj_ = store.add("ctx.proj", uniform_table(dim, 2 * dim, 1.0 / std::sqrt(2.0 * dim), rng));
  }
  return enc;
}

ContextEncoder ContextEncoder::Bind(const ParamStore& store, ContextKind kind) {
  ContextEncoder enc;
  enc.kind_ = kind;
  if (kind == ContextKind::kTimeEmbeddingLookUp || kind == ContextKind::kCombinedTimeGeo) {
    enc.hour_ = store.id("ctx.hour");
    enc.weekday_ = store.id("ctx.weekday");
    enc.week_ = store.id("ctx.week");
    enc.month_ = store.id("ctx.month");
  }
  if (kind == ContextKind::kGeoEmbeddingLookUp || kind == ContextKind::kCombinedTimeGeo) {
    enc.geo_ = store.id("ctx.geo");
    enc.geo_rows_ = store.value(enc.geo_).rows();
  }
  if (kind == ContextKind::kCombinedTimeGeo) enc.proj_ = store.id("ctx.proj");
  return enc;
}

std::size_t ContextEncoder::OutputDim(ContextKind kind, std::size_t geo_rows) {
  switch (kind) {
    case ContextKind::kNone: return 0;
    case ContextKind::kTimePositionalEncoding: return kPositionalDim;
    case ContextKind::kGeoOneHot: return geo_rows;
    default: return kContextEmbeddingDim;
  }
}

std::size_t ContextEncoder::output_dim() const { return OutputDim(kind_, geo_rows_); }

std::size_t ContextEncoder::ParamCount(ContextKind kind, std::size_t geo_rows) {
  const std::size_t dim = kContextEmbeddingDim;
  const std::size_t time = (kHourRows + kWeekdayRows + kWeekRows + kMonthRows) * dim;
  switch (kind) {
    case ContextKind::kTimeEmbeddingLookUp: return time;
    case ContextKind::kGeoEmbeddingLookUp: return geo_rows * dim;
    case ContextKind::kCombinedTimeGeo: return time + geo_rows * dim + dim * 2 * dim;
    default: return 0;
  }
}

TimeTables ContextEncoder::time_tables(const ParamStore& store) const {
  return {store.value(hour_), store.value(weekday_), store.value(week_), store.value(month_)};
}

void ContextEncoder::check(const UtteranceContext& ctx) const {
  if (uses_time(kind_)) {
    check_row(ctx.time.hour, kHourRows, "hour");
    check_row(ctx.time.weekday, kWeekdayRows, "weekday");
    check_row(ctx.time.week_no - 1, kWeekRows, "week");
    check_row(ctx.time.month - 1, kMonthRows, "month");
  }
  if (uses_geo(kind_)) check_row(ctx.cluster_id, geo_rows_, "geo cluster");
}

std::vector<Real> ContextEncoder::encode(const ParamStore& store,
                                         const UtteranceContext& ctx) const {
  check(ctx);
  switch (kind_) {
    case ContextKind::kNone: return {};
    case ContextKind::kTimeEmbeddingLookUp: return time_embedding_lookup(ctx.time, time_tables(store));
    case ContextKind::kTimePositionalEncoding: {
      const auto pe = time_positional_encoding(ctx.time);
      return {pe.begin(), pe.end()};
    }
    case ContextKind::kGeoEmbeddingLookUp: return geo_embedding_lookup(ctx.cluster_id, store.value(geo_));
    case ContextKind::kGeoOneHot: return geo_one_hot(ctx.cluster_id, geo_rows_);
    case ContextKind::kCombinedTimeGeo:
      return combined_time_geo(ctx.time, ctx.cluster_id, time_tables(store), store.value(geo_),
                               store.value(proj_));
  }
  return {};
}

void ContextEncoder::backward(const ParamStore& store, const UtteranceContext& ctx,
                              std::span<const Real> grad, GradBuffer& grads) const {
  if (grad.size() != output_dim()) throw ShapeError("context grad has the wrong width");
  auto time_backward = [&](std::span<const Real> g) {
    add_row(grads[hour_].row(static_cast<std::size_t>(ctx.time.hour)), g, 0.25);
    add_row(grads[weekday_].row(static_cast<std::size_t>(ctx.time.weekday)), g, 0.25);
    add_row(grads[week_].row(static_cast<std::size_t>(ctx.time.week_no - 1)), g, 0.25);
    add_row(grads[month_].row(static_cast<std::size_t>(ctx.time.month - 1)), g, 0.25);
  };
  switch (kind_) {
    case ContextKind::kNone:
    case ContextKind::kTimePositionalEncoding:
    case ContextKind::kGeoOneHot:
      return;  // constant inputs
    case ContextKind::kTimeEmbeddingLookUp:
      time_backward(grad);
      return;
    case ContextKind::kGeoEmbeddingLookUp:
      add_row(grads[geo_].row(static_cast<std::size_t>(ctx.cluster_id)), grad, 1.0);
      return;
    case ContextKind::kCombinedTimeGeo: {
      const Tensor& w = store.value(proj_);
      std::vector<Real> joined = time_embedding_lookup(ctx.time, time_tables(store));
      const std::vector<Real> geo = geo_embedding_lookup(ctx.cluster_id, store.value(geo_));
      joined.insert(joined.end(), geo.begin(), geo.end());
      Tensor& dw = grads[proj_];
      std::vector<Real> djoined(joined.size(), 0.0);
      for (std::size_t i = 0; i < w.rows(); ++i) {
        std::span<const Real> wrow = w.row(i);
        std::span<Real> dwrow = dw.row(i);
        for (std::size_t j = 0; j < joined.size(); ++j) {
          dwrow[j] += grad[i] * joined[j];
          djoined[j] += grad[i] * wrow[j];
        }
      }
      const std::size_t dim = kContextEmbeddingDim;
      time_backward(std::span<const Real>(djoined).first(dim));
      add_row(grads[geo_].row(static_cast<std::size_t>(ctx.cluster_id)),
              std::span<const Real>(djoined).subspan(dim, dim), 1.0);
      return;
    }
  }
}

}  // namespace ctxrnnt
