// ctxrnnt/numerics/param_store.h

#ifndef CTXRNNT_NUMERICS_PARAM_STORE_H_
#define CTXRNNT_NUMERICS_PARAM_STORE_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ctxrnnt/numerics/tensor.h"

namespace ctxrnnt {

using ParamId = std::size_t;

// Gradient tensors shaped like the parameters of one ParamStore, indexed by
// ParamId. Workers each fill their own buffer; the owner merges them.
class GradBuffer {
 public:
  GradBuffer() = default;
  explicit GradBuffer(std::vector<Tensor> grads) : grads_(std::move(grads)) {}

  Tensor& operator[](ParamId id) { return grads_[id]; }
  const Tensor& operator[](ParamId id) const { return grads_[id]; }
  std::size_t size() const { return grads_.size(); }

  void zero();
  void add(const GradBuffer& other, Real scale = 1.0);
  void scale(Real s);
  Real squared_norm() const;

 private:
  std::vector<Tensor> grads_;
};

// Named trainable arrays, each with an accumulated gradient of the same
// shape. Insertion order is stable and is the checkpoint order.
class ParamStore {
 public:
  ParamId add(std::string name, Tensor value);

  bool contains(std::string_view name) const;
  ParamId id(std::string_view name) const;
  const std::string& name(ParamId id) const { return entries_[id].name; }

  Tensor& value(ParamId id) { return entries_[id].value; }
  const Tensor& value(ParamId id) const { return entries_[id].value; }
  Tensor& grad(ParamId id) { return entries_[id].grad; }
  const Tensor& grad(ParamId id) const { return entries_[id].grad; }

  std::size_t size() const { return entries_.size(); }
  std::size_t num_elements() const;

  void zero_grads();
  GradBuffer make_grad_buffer() const;
  void accumulate(const GradBuffer& grads, Real scale = 1.0);
  // Copies grads out of the store into a buffer.
  GradBuffer grads() const;

 private:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor grad;
  };
  std::vector<Entry> entries_;
  std::unordered_map<std::string, ParamId> index_;
};

}  // namespace ctxrnnt

#endif  // CTXRNNT_NUMERICS_PARAM_STORE_H_
