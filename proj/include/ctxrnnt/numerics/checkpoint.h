// ctxrnnt/numerics/checkpoint.h
//
// Flat binary container of named tensors. Layout (all integers and reals
// little-endian):
//
//   "CTXRNNT\0"                       8-byte magic
//   u32 version                       currently 1
//   u32 n_meta, then n_meta x (u32 len, key bytes, u32 len, value bytes)
//   u64 n_records, then per record:
//     u32 len, name bytes, u32 rank, rank x u64 dims, prod(dims) x f64
//
// Model checkpoints and feature files both use this container; they differ
// only in the metadata keys and record names they carry.

#ifndef CTXRNNT_NUMERICS_CHECKPOINT_H_
#define CTXRNNT_NUMERICS_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ctxrnnt/numerics/param_store.h"
#include "ctxrnnt/numerics/tensor.h"

namespace ctxrnnt {

inline constexpr std::uint32_t kContainerVersion = 1;

struct TensorRecord {
  std::string name;
  Tensor value;
};

struct Container {
  std::map<std::string, std::string> metadata;
  std::vector<TensorRecord> records;

  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const;
};

std::string serialize_container(const Container& c);
Container parse_container(const std::string& bytes);

void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path);

// Appends every parameter value of `store` as a record.
void append_params(const ParamStore& store, Container& c);
// Overwrites values in `store` from matching records; every parameter must
// be present with an identical shape.
void load_params(const Container& c, ParamStore& store);

// Single-tensor feature file ("features" record).
void write_feature_file(const std::filesystem::path& path,
                        const Tensor& features);
Tensor read_feature_file(const std::filesystem::path& path);

}  // namespace ctxrnnt

#endif  // CTXRNNT_NUMERICS_CHECKPOINT_H_
