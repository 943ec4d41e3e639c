#include "ctxrnnt/numerics/param_store.h"

#include "ctxrnnt/error.h"

namespace ctxrnnt {

void GradBuffer::zero() {
  for (Tensor& g : grads_) g.fill(0.0);
}

void GradBuffer::add(const GradBuffer& other, Real scale) {
  if (other.size() != size()) throw ShapeError("grad buffer size mismatch");
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    Real* dst = grads_[i].data();
    const Real* src = other.grads_[i].data();
    const std::size_t n = grads_[i].size();
    for (std::size_t j = 0; j < n; ++j) dst[j] += scale * src[j];
  }
}

void GradBuffer::scale(Real s) {
  for (Tensor& g : grads_) {
    for (Real& v : g.values()) v *= s;
  }
}

Real GradBuffer::squared_norm() const {
  Real s = 0.0;
  for (const Tensor& g : grads_) {
    for (Real v : g.values()) s += v * v;
  }
  return s;
}

ParamId ParamStore::add(std::string name, Tensor value) {
  if (index_.count(name)) {
    throw ValidationError("duplicate parameter name '" + name + "'");
  }
  const ParamId id = entries_.size();
  index_.emplace(name, id);
  Tensor grad(value.shape());
  entries_.push_back({std::move(name), std::move(value), std::move(grad)});
  return id;
}

bool ParamStore::contains(std::string_view name) const {
  return index_.count(std::string(name)) != 0;
}

ParamId ParamStore::id(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) {
    throw ValidationError("unknown parameter '" + std::string(name) + "'");
  }
  return it->second;
}

std::size_t ParamStore::num_elements() const {
  std::size_t n = 0;
  for (const Entry& e : entries_) n += e.value.size();
  return n;
}

void ParamStore::zero_grads() {
  for (Entry& e : entries_) e.grad.fill(0.0);
}

GradBuffer ParamStore::make_grad_buffer() const {
  std::vector<Tensor> grads;
  grads.reserve(entries_.size());
  for (const Entry& e : entries_) grads.emplace_back(e.value.shape());
  return GradBuffer(std::move(grads));
}

void ParamStore::accumulate(const GradBuffer& grads, Real scale) {
  if (grads.size() != entries_.size()) {
    throw ShapeError("grad buffer does not match parameter store");
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    Real* dst = entries_[i].grad.data();
    const Real* src = grads[i].data();
    const std::size_t n = entries_[i].grad.size();
    for (std::size_t j = 0; j < n; ++j) dst[j] += scale * src[j];
  }
}

GradBuffer ParamStore::grads() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const Entry& e : entries_) out.push_back(e.grad);
  return GradBuffer(std::move(out));
}

}  // namespace ctxrnnt
