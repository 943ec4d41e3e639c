#include "ctxrnnt/numerics/lstm.h"

#include <cmath>

#include "ctxrnnt/error.h"
#include "ctxrnnt/numerics/ops.h"

namespace ctxrnnt {

namespace {

// Turns pre-activations into gates and the new (c, tanh c, h). Shared by the
// single-step and the sequence paths so both compute identical values.
void apply_gates(std::span<Real> pre, std::span<const Real> c_prev,
                 std::span<Real> c, std::span<Real> tanh_c, std::span<Real> h) {
  const std::size_t hidden = c.size();
  Real* gi = pre.data();
  Real* gf = gi + hidden;
  Real* gg = gf + hidden;
  Real* go = gg + hidden;
  for (std::size_t j = 0; j < hidden; ++j) {
    gi[j] = sigmoid(gi[j]);
    gf[j] = sigmoid(gf[j]);
    gg[j] = std::tanh(gg[j]);
    go[j] = sigmoid(go[j]);
    c[j] = gf[j] * c_prev[j] + gi[j] * gg[j];
    tanh_c[j] = std::tanh(c[j]);
    h[j] = go[j] * tanh_c[j];
  }
}

// dh, dc -> dpre (4H) and dc_prev.
void gate_backward(std::span<const Real> gates, std::span<const Real> c_prev,
                   std::span<const Real> tanh_c, std::span<const Real> dh,
                   std::span<const Real> dc, std::span<Real> dpre,
                   std::span<Real> dc_prev) {
  const std::size_t hidden = tanh_c.size();
  const Real* gi = gates.data();
  const Real* gf = gi + hidden;
  const Real* gg = gf + hidden;
  const Real* go = gg + hidden;
  Real* di = dpre.data();
  Real* df = di + hidden;
  Real* dg = df + hidden;
  Real* dout = dg + hidden;
  for (std::size_t j = 0; j < hidden; ++j) {
    const Real dct = dc[j] + dh[j] * go[j] * (1.0 - tanh_c[j] * tanh_c[j]);
    dout[j] = dh[j] * tanh_c[j] * go[j] * (1.0 - go[j]);
    di[j] = dct * gg[j] * gi[j] * (1.0 - gi[j]);
    df[j] = dct * c_prev[j] * gf[j] * (1.0 - gf[j]);
    dg[j] = dct * gi[j] * (1.0 - gg[j] * gg[j]);
    dc_prev[j] = dct * gf[j];
  }
}

void check_weights(const LstmWeights& w, std::size_t input,
                   std::size_t hidden) {
  if (w.wx.rows() != input || w.wx.cols() != 4 * hidden ||
      w.wh.rows() != hidden || w.wh.cols() != 4 * hidden ||
      w.b.size() != 4 * hidden) {
    throw ShapeError("lstm weights " + w.wx.shape_string() + ", " +
                     w.wh.shape_string() + ", " + w.b.shape_string() +
                     " do not fit input " + std::to_string(input) +
                     " / hidden " + std::to_string(hidden));
  }
}

}  // namespace

LstmState lstm_step(std::span<const Real> x, const LstmState& state,
                    const LstmWeights& w, LstmStepCache* cache) {
  const std::size_t hidden = state.h.size();
  if (state.c.size() != hidden) throw ShapeError("lstm state h/c mismatch");
  check_weights(w, x.size(), hidden);

  std::vector<Real> pre(4 * hidden, 0.0);
  add_vec_mat(x, w.wx, pre);
  add_vec_mat(state.h, w.wh, pre);
  for (std::size_t j = 0; j < pre.size(); ++j) pre[j] += w.b[j];

  LstmState next = LstmState::Zero(hidden);
  std::vector<Real> tanh_c(hidden);
  apply_gates(pre, state.c, next.c, tanh_c, next.h);
  if (cache) {
    cache->x.assign(x.begin(), x.end());
    cache->h_prev = state.h;
    cache->c_prev = state.c;
    cache->gates = std::move(pre);
    cache->tanh_c = std::move(tanh_c);
  }
  return next;
}

void lstm_step_backward(const LstmStepCache& cache, const LstmWeights& w,
                        std::span<const Real> dh, std::span<const Real> dc,
                        const LstmGrads& grads, std::span<Real> dx,
                        std::span<Real> dh_prev, std::span<Real> dc_prev) {
  const std::size_t hidden = cache.tanh_c.size();
  std::vector<Real> dpre(4 * hidden);
  gate_backward(cache.gates, cache.c_prev, cache.tanh_c, dh, dc, dpre,
                dc_prev);
  if (grads.wx) add_outer(cache.x, dpre, *grads.wx);
  if (grads.wh) add_outer(cache.h_prev, dpre, *grads.wh);
  if (grads.b) {
    for (std::size_t j = 0; j < dpre.size(); ++j) (*grads.b)[j] += dpre[j];
  }
  add_vec_mat_t(dpre, w.wx, dx);
  std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
  add_vec_mat_t(dpre, w.wh, dh_prev);
}

LstmLayer::LstmLayer(ParamStore& store, const std::string& prefix,
                     std::size_t input, std::size_t hidden, Rng& rng)
    : input_(input), hidden_(hidden) {
  const double scale = std::sqrt(6.0 / static_cast<double>(input));
  Tensor wx({input, 4 * hidden});
  Tensor wh({hidden, 4 * hidden});
  Tensor b({4 * hidden});
  for (Real& v : wx.values()) v = rng.uniform(-scale, scale);
  for (Real& v : wh.values()) v = rng.uniform(-scale, scale);
  // Forget-gate bias 1.
  for (std::size_t j = hidden; j < 2 * hidden; ++j) b[j] = 1.0;
  wx_ = store.add(prefix + ".wx", std::move(wx));
  wh_ = store.add(prefix + ".wh", std::move(wh));
  b_ = store.add(prefix + ".b", std::move(b));
}

LstmLayer LstmLayer::Bind(const ParamStore& store, const std::string& prefix) {
  LstmLayer layer;
  layer.wx_ = store.id(prefix + ".wx");
  layer.wh_ = store.id(prefix + ".wh");
  layer.b_ = store.id(prefix + ".b");
  layer.input_ = store.value(layer.wx_).rows();
  layer.hidden_ = store.value(layer.wh_).rows();
  return layer;
}

LstmWeights LstmLayer::weights(const ParamStore& store) const {
  return {store.value(wx_), store.value(wh_), store.value(b_)};
}

Tensor LstmLayer::forward(const ParamStore& store, const Tensor& inputs,
                          Cache* cache) const {
  const LstmWeights w = weights(store);
  if (inputs.cols() != input_) {
    throw ShapeError("lstm input has " + std::to_string(inputs.cols()) +
                     " features, layer expects " + std::to_string(input_));
  }
  const std::size_t steps = inputs.rows();
  const std::size_t h4 = 4 * hidden_;
  Tensor gates = matmul(inputs, w.wx);
  Tensor cells({steps, hidden_});
  Tensor tanh_c({steps, hidden_});
  Tensor outputs({steps, hidden_});
  std::vector<Real> zero(hidden_, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    std::span<Real> pre = gates.row(t);
    std::span<const Real> h_prev = t ? outputs.row(t - 1) : std::span<const Real>(zero);
    std::span<const Real> c_prev = t ? cells.row(t - 1) : std::span<const Real>(zero);
    add_vec_mat(h_prev, w.wh, pre);
    for (std::size_t j = 0; j < h4; ++j) pre[j] += w.b[j];
    apply_gates(pre, c_prev, cells.row(t), tanh_c.row(t), outputs.row(t));
  }
  if (cache) {
    cache->inputs = inputs;
    cache->gates = std::move(gates);
    cache->cells = std::move(cells);
    cache->tanh_c = std::move(tanh_c);
    cache->outputs = outputs;
  }
  return outputs;
}

Tensor LstmLayer::backward(const ParamStore& store, const Cache& cache,
                           const Tensor& grad_outputs,
                           GradBuffer& grads) const {
  const LstmWeights w = weights(store);
  const std::size_t steps = cache.outputs.rows();
  if (grad_outputs.rows() != steps || grad_outputs.cols() != hidden_) {
    throw ShapeError("lstm backward: grad " + grad_outputs.shape_string() +
                     " vs outputs " + cache.outputs.shape_string());
  }
  Tensor dpre({steps, 4 * hidden_});
  std::vector<Real> dh(hidden_, 0.0), dc(hidden_, 0.0), dc_prev(hidden_);
  std::vector<Real> zero(hidden_, 0.0);
  for (std::size_t t = steps; t-- > 0;) {
    std::span<const Real> g = grad_outputs.row(t);
    for (std::size_t j = 0; j < hidden_; ++j) dh[j] += g[j];
    std::span<const Real> c_prev = t ? cache.cells.row(t - 1) : std::span<const Real>(zero);
    gate_backward(cache.gates.row(t), c_prev, cache.tanh_c.row(t), dh, dc,
                  dpre.row(t), dc_prev);
    std::fill(dh.begin(), dh.end(), 0.0);
    add_vec_mat_t(dpre.row(t), w.wh, dh);
    dc.swap(dc_prev);
  }
  add_matmul_tn(cache.inputs, dpre, grads[wx_]);
  if (steps > 1) {
    // h_prev for step t is outputs[t-1]; step 0 has a zero h_prev.
    Tensor h_prev({steps, hidden_});
    for (std::size_t t = 1; t < steps; ++t) {
      std::span<const Real> src = cache.outputs.row(t - 1);
      std::copy(src.begin(), src.end(), h_prev.row(t).begin());
    }
    add_matmul_tn(h_prev, dpre, grads[wh_]);
  }
  Tensor& db = grads[b_];
  for (std::size_t t = 0; t < steps; ++t) {
    std::span<const Real> row = dpre.row(t);
    for (std::size_t j = 0; j < row.size(); ++j) db[j] += row[j];
  }
  Tensor dinputs({steps, input_});
  add_matmul_nt(dpre, w.wx, dinputs);
  return dinputs;
}

}  // namespace ctxrnnt
