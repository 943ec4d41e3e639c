// ctxrnnt/context/export.h

#ifndef CTXRNNT_CONTEXT_EXPORT_H_
#define CTXRNNT_CONTEXT_EXPORT_H_

#include <filesystem>
#include <vector>

#include "ctxrnnt/context/encoders.h"
#include "ctxrnnt/context/geo_cluster.h"
#include "ctxrnnt/numerics/param_store.h"

namespace ctxrnnt {

// Writes <table>_vectors.tsv (one tab-separated row per entity) and
// <table>_metadata.tsv (one label per line, same order) for every learned
// context table in `store`, in the layout the TensorFlow embedding
// projector loads. Returns the files written.
std::vector<std::filesystem::path> export_embeddings(const ParamStore& store,
                                                     const ClusterModel* clusters,
                                                     const std::filesystem::path& dir);

}  // namespace ctxrnnt

#endif  // CTXRNNT_CONTEXT_EXPORT_H_
