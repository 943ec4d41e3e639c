// ctxrnnt/context/encoders.h
//
// Per-utterance context vectors appended to every encoder input frame.
//
//   TimeEmbeddingLookUp     mean of hour/weekday/week/month embedding rows (64)
//   TimePositionalEncoding  sin/cos of hour/24, weekday/7, week/53, month/12 (8)
//   GeoEmbeddingLookUp      row of a 21 x 64 geo table (64)
//   GeoOneHot               21-way indicator of the geo cluster (21)
//   CombinedTimeGeo         W_c [64 x 128] applied to concat(time emb, geo emb)

#ifndef CTXRNNT_CONTEXT_ENCODERS_H_
#define CTXRNNT_CONTEXT_ENCODERS_H_

#include <array>
#include <span>
#include <string>
#include <vector>

#include "ctxrnnt/context/datetime.h"
#include "ctxrnnt/numerics/param_store.h"
#include "ctxrnnt/numerics/rng.h"
#include "ctxrnnt/numerics/tensor.h"

namespace ctxrnnt {

enum class ContextKind {
  kNone,
  kTimeEmbeddingLookUp,
  kTimePositionalEncoding,
  kGeoEmbeddingLookUp,
  kGeoOneHot,
  kCombinedTimeGeo,
};

inline constexpr std::size_t kContextEmbeddingDim = 64;
inline constexpr std::size_t kPositionalDim = 8;
inline constexpr std::size_t kGeoRows = 21;  // 20 clusters + None
inline constexpr std::size_t kHourRows = 24, kWeekdayRows = 7, kWeekRows = 53, kMonthRows = 12;

ContextKind parse_context_kind(const std::string& name);
std::string context_kind_name(ContextKind kind);
bool uses_time(ContextKind kind);
bool uses_geo(ContextKind kind);

struct UtteranceContext {
  DateTimeContext time;
  int cluster_id = static_cast<int>(kGeoRows) - 1;
};

// --- stateless building blocks ------------------------------------------

struct TimeTables {
  const Tensor& hour;
  const Tensor& weekday;
  const Tensor& week;
  const Tensor& month;
};

// Row indices: hour, weekday, week_no - 1, month - 1.
std::vector<Real> time_embedding_lookup(const DateTimeContext& ctx, const TimeTables& tables);
std::array<Real, kPositionalDim> time_positional_encoding(const DateTimeContext& ctx);
std::vector<Real> geo_one_hot(int cluster_id, std::size_t rows = kGeoRows);
std::vector<Real> geo_embedding_lookup(int cluster_id, const Tensor& table);
// concat(time embedding, geo embedding) projected by w [out x (2 * dim)].
std::vector<Real> combined_time_geo(const DateTimeContext& ctx, int cluster_id,
                                    const TimeTables& tables, const Tensor& geo_table,
                                    const Tensor& projection);

// --- trainable encoder ----------------------------------------------------

class ContextEncoder {
 public:
  ContextEncoder() = default;
  // Registers the tables this kind needs. Tables start uniform in
  // [-0.05, 0.05]; the combined projection starts uniform in +-1/sqrt(128).
  static ContextEncoder Create(ParamStore& store, ContextKind kind, Rng& rng,
                               std::size_t geo_rows = kGeoRows);
  static ContextEncoder Bind(const ParamStore& store, ContextKind kind);

  ContextKind kind() const { return kind_; }
  std::size_t output_dim() const;
  std::size_t geo_rows() const { return geo_rows_; }

  // Throws ValidationError for out-of-range fields.
  std::vector<Real> encode(const ParamStore& store, const UtteranceContext& ctx) const;
  // Accumulates parameter gradients given dL/d(encode output).
  void backward(const ParamStore& store, const UtteranceContext& ctx,
                std::span<const Real> grad, GradBuffer& grads) const;

  // Trainable parameter count for a kind (arithmetic only).
  static std::size_t ParamCount(ContextKind kind, std::size_t geo_rows = kGeoRows);
  static std::size_t OutputDim(ContextKind kind, std::size_t geo_rows = kGeoRows);

 private:
  void check(const UtteranceContext& ctx) const;
  TimeTables time_tables(const ParamStore& store) const;

  ContextKind kind_ = ContextKind::kNone;
  std::size_t geo_rows_ = kGeoRows;
  ParamId hour_ = 0, weekday_ = 0, week_ = 0, month_ = 0, geo_ = 0, proj_ = 0;
};

}  // namespace ctxrnnt

#endif  // CTXRNNT_CONTEXT_ENCODERS_H_
