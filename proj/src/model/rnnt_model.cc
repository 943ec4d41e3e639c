#include "ctxrnnt/model/rnnt_model.h"

#include <algorithm>
#include <cmath>

#include "ctxrnnt/error.h"
#include "ctxrnnt/numerics/ops.h"

namespace ctxrnnt {

namespace {

// rows [offset, offset + x.cols()) of w, i.e. x * w[offset:, :]
Tensor matmul_row_block(const Tensor& x, const Tensor& w, std::size_t offset) {
  const std::size_t n = x.rows(), k = x.cols(), m = w.cols();
  Tensor out({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    std::span<const Real> xi = x.row(i);
    std::span<Real> oi = out.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const Real xv = xi[p];
      if (xv == 0.0) continue;
      std::span<const Real> wr = w.row(offset + p);
      for (std::size_t j = 0; j < m; ++j) oi[j] += xv * wr[j];
    }
  }
  return out;
}

// dw[offset + p, :] += sum_i x[i, p] * dy[i, :]; dx = dy * w[offset:, :]^T
void row_block_backward(const Tensor& x, const Tensor& w, std::size_t offset, const Tensor& dy,
                        Tensor& dw, Tensor& dx) {
  const std::size_t n = x.rows(), k = x.cols(), m = w.cols();
  for (std::size_t i = 0; i < n; ++i) {
    std::span<const Real> xi = x.row(i);
    std::span<const Real> gi = dy.row(i);
    std::span<Real> dxi = dx.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      std::span<const Real> wr = w.row(offset + p);
      std::span<Real> dwr = dw.row(offset + p);
      Real s = 0.0;
      const Real xv = xi[p];
      for (std::size_t j = 0; j < m; ++j) {
        dwr[j] += xv * gi[j];
        s += gi[j] * wr[j];
      }
      dxi[p] += s;
    }
  }
}

}  // namespace

RnntModel RnntModel::Create(ParamStore& store, const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  RnntModel m;
  m.cfg_ = cfg;
  std::size_t in = cfg.input_dim + cfg.context_dim;
  for (std::size_t l = 0; l < cfg.enc_layers; ++l) {
    m.enc_layers_.emplace_back(store, "enc.lstm" + std::to_string(l), in, cfg.enc_hidden, rng);
    in = cfg.enc_hidden;
  }
  m.enc_proj_ = Linear(store, "enc.proj", cfg.enc_hidden, cfg.enc_out, true, rng);

  Tensor embed({cfg.vocab_size + 1, cfg.pred_embed});
  for (Real& v : embed.values()) v = rng.uniform(-0.05, 0.05);
  m.pred_embed_ = store.add("pred.embed", std::move(embed));
  in = cfg.pred_embed;
  for (std::size_t l = 0; l < cfg.pred_layers; ++l) {
    m.pred_layers_.emplace_back(store, "pred.lstm" + std::to_string(l), in, cfg.pred_hidden, rng);
    in = cfg.pred_hidden;
  }
  m.pred_proj_ = Linear(store, "pred.proj", cfg.pred_hidden, cfg.pred_out, true, rng);

  if (cfg.joint_hidden > 0) {
    m.joint_hidden_ = Linear(store, "joint.hidden", cfg.enc_out + cfg.pred_out, cfg.joint_hidden,
                             true, rng);
    m.joint_out_ = Linear(store, "joint.out", cfg.joint_hidden, cfg.vocab_size, true, rng);
  } else {
    m.joint_out_ = Linear(store, "joint.out", cfg.enc_out, cfg.vocab_size, false, rng);
  }
  return m;
}

RnntModel RnntModel::Bind(const ParamStore& store, const ModelConfig& cfg) {
  cfg.validate();
  RnntModel m;
  m.cfg_ = cfg;
  for (std::size_t l = 0; l < cfg.enc_layers; ++l) {
    m.enc_layers_.push_back(LstmLayer::Bind(store, "enc.lstm" + std::to_string(l)));
  }
  m.enc_proj_ = Linear::Bind(store, "enc.proj");
  m.pred_embed_ = store.id("pred.embed");
  for (std::size_t l = 0; l < cfg.pred_layers; ++l) {
    m.pred_layers_.push_back(LstmLayer::Bind(store, "pred.lstm" + std::to_string(l)));
  }
  m.pred_proj_ = Linear::Bind(store, "pred.proj");
  if (cfg.joint_hidden > 0) m.joint_hidden_ = Linear::Bind(store, "joint.hidden");
  m.joint_out_ = Linear::Bind(store, "joint.out");
  if (m.enc_layers_.front().input_dim() != cfg.input_dim + cfg.context_dim ||
      store.value(m.joint_out_.weight_id()).cols() != cfg.vocab_size) {
    throw ValidationError("parameter shapes do not match the model config");
  }
  return m;
}

Tensor RnntModel::run_stack(const ParamStore& store, const std::vector<LstmLayer>& layers,
                            const Linear& proj, Tensor inputs, StackCache* cache,
                            Rng* rng) const {
  const bool drop = rng && cfg_.dropout > 0.0;
  const Real keep = 1.0 - cfg_.dropout;
  if (cache) {
    cache->layers.assign(layers.size(), {});
    cache->masks.clear();
  }
  Tensor h = std::move(inputs);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    h = layers[l].forward(store, h, cache ? &cache->layers[l] : nullptr);
    if (drop) {
      Tensor mask(h.shape());
      for (Real& v : mask.values()) v = rng->uniform() < keep ? 1.0 / keep : 0.0;
      for (std::size_t i = 0; i < h.size(); ++i) h[i] *= mask[i];
      if (cache) cache->masks.push_back(std::move(mask));
    }
  }
  Tensor out = proj.forward(store, h);
  if (cache) cache->top = std::move(h);
  return out;
}

Tensor RnntModel::stack_backward(const ParamStore& store, const std::vector<LstmLayer>& layers,
                                 const Linear& proj, const StackCache& cache, const Tensor& grad,
                                 GradBuffer& grads) const {
  Tensor g = proj.backward(store, cache.top, grad, grads);
  for (std::size_t l = layers.size(); l-- > 0;) {
    if (!cache.masks.empty()) {
      const Tensor& mask = cache.masks[l];
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= mask[i];
    }
    g = layers[l].backward(store, cache.layers[l], g, grads);
  }
  return g;
}

Tensor RnntModel::encode(const ParamStore& store, const Tensor& x, std::span<const Real> context,
                         StackCache* cache, Rng* dropout_rng) const {
  if (x.rank() != 2 || x.cols() != cfg_.input_dim || x.rows() == 0) {
    throw ShapeError("encoder expects [T x " + std::to_string(cfg_.input_dim) + "] features, got " +
                     x.shape_string());
  }
  if (context.size() != cfg_.context_dim) {
    throw ShapeError("context vector has " + std::to_string(context.size()) +
                     " values, model expects " + std::to_string(cfg_.context_dim));
  }
  const std::size_t steps = x.rows();
  const std::size_t width = cfg_.input_dim + cfg_.context_dim;
  Tensor inputs({steps, width});
  for (std::size_t t = 0; t < steps; ++t) {
    std::span<Real> dst = inputs.row(t);
    std::span<const Real> src = x.row(t);
    std::copy(src.begin(), src.end(), dst.begin());
    std::copy(context.begin(), context.end(), dst.begin() + static_cast<long>(cfg_.input_dim));
  }
  return run_stack(store, enc_layers_, enc_proj_, std::move(inputs), cache, dropout_rng);
}

void RnntModel::encode_backward(const ParamStore& store, const StackCache& cache,
                                const Tensor& grad, GradBuffer& grads,
                                std::vector<Real>* grad_context) const {
  const Tensor dinputs = stack_backward(store, enc_layers_, enc_proj_, cache, grad, grads);
  if (grad_context) {
    grad_context->assign(cfg_.context_dim, 0.0);
    for (std::size_t t = 0; t < dinputs.rows(); ++t) {
      std::span<const Real> row = dinputs.row(t);
      for (std::size_t j = 0; j < cfg_.context_dim; ++j) (*grad_context)[j] += row[cfg_.input_dim + j];
    }
  }
}

std::vector<Real> RnntModel::pred_embedding(const ParamStore& store, int row) const {
  std::span<const Real> r = store.value(pred_embed_).row(static_cast<std::size_t>(row));
  return {r.begin(), r.end()};
}

Tensor RnntModel::predict(const ParamStore& store, std::span<const int> tokens, StackCache* cache,
                          Rng* dropout_rng) const {
  const Tensor& embed = store.value(pred_embed_);
  Tensor inputs({tokens.size() + 1, cfg_.pred_embed});
  for (std::size_t u = 0; u <= tokens.size(); ++u) {
    int row = start_row();
    if (u > 0) {
      row = tokens[u - 1];
      if (row < 0 || static_cast<std::size_t>(row) >= cfg_.vocab_size) {
        throw ValidationError("token " + std::to_string(row) + " outside vocab of " +
                              std::to_string(cfg_.vocab_size));
      }
    }
    std::span<const Real> src = embed.row(static_cast<std::size_t>(row));
    std::copy(src.begin(), src.end(), inputs.row(u).begin());
  }
  return run_stack(store, pred_layers_, pred_proj_, std::move(inputs), cache, dropout_rng);
}

void RnntModel::predict_backward(const ParamStore& store, std::span<const int> tokens,
                                 const StackCache& cache, const Tensor& grad,
                                 GradBuffer& grads) const {
  const Tensor dinputs = stack_backward(store, pred_layers_, pred_proj_, cache, grad, grads);
  Tensor& dembed = grads[pred_embed_];
  for (std::size_t u = 0; u <= tokens.size(); ++u) {
    const int row = u == 0 ? start_row() : tokens[u - 1];
    std::span<Real> dst = dembed.row(static_cast<std::size_t>(row));
    std::span<const Real> src = dinputs.row(u);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
}

Tensor RnntModel::joint(const ParamStore& store, const Tensor& enc, const Tensor& pred,
                        JointCache* cache) const {
  if (enc.cols() != cfg_.enc_out || pred.cols() != cfg_.pred_out) {
    throw ShapeError("joint inputs " + enc.shape_string() + " / " + pred.shape_string() +
                     " do not match enc_out / pred_out");
  }
  const std::size_t steps = enc.rows();
  const std::size_t labels = pred.rows();
  const std::size_t vocab = cfg_.vocab_size;
  Tensor log_probs({steps, labels, vocab});
  Tensor hidden;

  if (cfg_.joint_hidden > 0) {
    const std::size_t hid = cfg_.joint_hidden;
    const Tensor& w1 = store.value(joint_hidden_.weight_id());
    const Tensor& b1 = store.value(joint_hidden_.bias_id());
    const Tensor& w2 = store.value(joint_out_.weight_id());
    const Tensor& b2 = store.value(joint_out_.bias_id());
    const Tensor a = matmul_row_block(enc, w1, 0);
    const Tensor b = matmul_row_block(pred, w1, cfg_.enc_out);
    hidden = Tensor({steps * labels, hid});
    const long nt = static_cast<long>(steps);
#pragma omp parallel for schedule(static) if (steps * labels * vocab * hid > (1u << 16))
    for (long t = 0; t < nt; ++t) {
      std::span<const Real> at = a.row(static_cast<std::size_t>(t));
      for (std::size_t u = 0; u < labels; ++u) {
        const std::size_t cell = static_cast<std::size_t>(t) * labels + u;
        std::span<Real> z = hidden.row(cell);
        std::span<const Real> bu = b.row(u);
        for (std::size_t j = 0; j < hid; ++j) z[j] = std::tanh(at[j] + bu[j] + b1[j]);
        std::span<Real> out(log_probs.data() + cell * vocab, vocab);
        std::copy(b2.values().begin(), b2.values().end(), out.begin());
        add_vec_mat(z, w2, out);
        log_softmax_inplace(out);
      }
    }
  } else {
    const Tensor& w = store.value(joint_out_.weight_id());
    const Tensor a = matmul(enc, w);
    const Tensor b = matmul(pred, w);
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t u = 0; u < labels; ++u) {
        const std::size_t cell = t * labels + u;
        std::span<Real> out(log_probs.data() + cell * vocab, vocab);
        std::span<const Real> at = a.row(t), bu = b.row(u);
        for (std::size_t v = 0; v < vocab; ++v) out[v] = at[v] + bu[v];
        log_softmax_inplace(out);
      }
    }
  }
  if (cache) {
    cache->enc = enc;
    cache->pred = pred;
    cache->hidden = std::move(hidden);
    cache->log_probs = log_probs;
  }
  return log_probs;
}

void RnntModel::joint_backward(const ParamStore& store, const JointCache& cache,
                               const Tensor& grad_log_probs, GradBuffer& grads, Tensor& grad_enc,
                               Tensor& grad_pred) const {
  const std::size_t steps = cache.enc.rows();
  const std::size_t labels = cache.pred.rows();
  const std::size_t vocab = cfg_.vocab_size;
  if (!grad_log_probs.same_shape(cache.log_probs)) {
    throw ShapeError("joint backward: gradient shape " + grad_log_probs.shape_string());
  }
  // Chain through log-softmax: dz = g - softmax * sum(g).
  Tensor dlogits({steps * labels, vocab});
  for (std::size_t cell = 0; cell < steps * labels; ++cell) {
    const Real* g = grad_log_probs.data() + cell * vocab;
    const Real* lp = cache.log_probs.data() + cell * vocab;
    Real total = 0.0;
    for (std::size_t v = 0; v < vocab; ++v) total += g[v];
    std::span<Real> d = dlogits.row(cell);
    for (std::size_t v = 0; v < vocab; ++v) d[v] = g[v] - std::exp(lp[v]) * total;
  }
  grad_enc = Tensor({steps, cfg_.enc_out});
  grad_pred = Tensor({labels, cfg_.pred_out});

  if (cfg_.joint_hidden > 0) {
    const std::size_t hid = cfg_.joint_hidden;
    const Tensor& w1 = store.value(joint_hidden_.weight_id());
    const Tensor& w2 = store.value(joint_out_.weight_id());
    add_matmul_tn(cache.hidden, dlogits, grads[joint_out_.weight_id()]);
    Tensor& db2 = grads[joint_out_.bias_id()];
    Tensor dpre({steps * labels, hid});
    add_matmul_nt(dlogits, w2, dpre);
    for (std::size_t cell = 0; cell < steps * labels; ++cell) {
      std::span<const Real> d = dlogits.row(cell);
      for (std::size_t v = 0; v < vocab; ++v) db2[v] += d[v];
      std::span<const Real> z = cache.hidden.row(cell);
      std::span<Real> dp = dpre.row(cell);
      for (std::size_t j = 0; j < hid; ++j) dp[j] *= 1.0 - z[j] * z[j];
    }
    Tensor da({steps, hid}), dbu({labels, hid});
    Tensor& db1 = grads[joint_hidden_.bias_id()];
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t u = 0; u < labels; ++u) {
        std::span<const Real> dp = dpre.row(t * labels + u);
        std::span<Real> dat = da.row(t), dbr = dbu.row(u);
        for (std::size_t j = 0; j < hid; ++j) {
          dat[j] += dp[j];
          dbr[j] += dp[j];
          db1[j] += dp[j];
        }
      }
    }
    Tensor& dw1 = grads[joint_hidden_.weight_id()];
    row_block_backward(cache.enc, w1, 0, da, dw1, grad_enc);
    row_block_backward(cache.pred, w1, cfg_.enc_out, dbu, dw1, grad_pred);
  } else {
    const Tensor& w = store.value(joint_out_.weight_id());
    Tensor da({steps, vocab}), dbu({labels, vocab});
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t u = 0; u < labels; ++u) {
        std::span<const Real> d = dlogits.row(t * labels + u);
        std::span<Real> dat = da.row(t), dbr = dbu.row(u);
        for (std::size_t v = 0; v < vocab; ++v) {
          dat[v] += d[v];
          dbr[v] += d[v];
        }
      }
    }
    Tensor& dw = grads[joint_out_.weight_id()];
    add_matmul_tn(cache.enc, da, dw);
    add_matmul_tn(cache.pred, dbu, dw);
    add_matmul_nt(da, w, grad_enc);
    add_matmul_nt(dbu, w, grad_pred);
  }
}

RnntModel::PredState RnntModel::pred_start(const ParamStore& store) const {
  PredState s;
  for (const auto& layer : pred_layers_) s.layers.push_back(LstmState::Zero(layer.hidden_dim()));
  std::vector<Real> x = pred_embedding(store, start_row());
  for (std::size_t l = 0; l < pred_layers_.size(); ++l) {
    s.layers[l] = lstm_step(x, s.layers[l], pred_layers_[l].weights(store));
    x = s.layers[l].h;
  }
  s.output.assign(cfg_.pred_out, 0.0);
  const Tensor& b = store.value(pred_proj_.bias_id());
  std::copy(b.values().begin(), b.values().end(), s.output.begin());
  add_vec_mat(x, store.value(pred_proj_.weight_id()), s.output);
  return s;
}

RnntModel::PredState RnntModel::pred_advance(const ParamStore& store, const PredState& state,
                                             int token) const {
  if (token <= 0 || static_cast<std::size_t>(token) >= cfg_.vocab_size) {
    throw ValidationError("cannot advance the prediction network with token " +
                          std::to_string(token));
  }
  PredState s = state;
  std::vector<Real> x = pred_embedding(store, token);
  for (std::size_t l = 0; l < pred_layers_.size(); ++l) {
    s.layers[l] = lstm_step(x, state.layers[l], pred_layers_[l].weights(store));
    x = s.layers[l].h;
  }
  const Tensor& b = store.value(pred_proj_.bias_id());
  std::copy(b.values().begin(), b.values().end(), s.output.begin());
  add_vec_mat(x, store.value(pred_proj_.weight_id()), s.output);
  return s;
}

std::vector<Real> RnntModel::joint_step(const ParamStore& store, std::span<const Real> enc_row,
                                        std::span<const Real> pred_output) const {
  std::vector<Real> out(cfg_.vocab_size, 0.0);
  if (cfg_.joint_hidden > 0) {
    const Tensor& w1 = store.value(joint_hidden_.weight_id());
    const Tensor& b1 = store.value(joint_hidden_.bias_id());
    std::vector<Real> joined(enc_row.begin(), enc_row.end());
    joined.insert(joined.end(), pred_output.begin(), pred_output.end());
    std::vector<Real> z(b1.values().begin(), b1.values().end());
    add_vec_mat(joined, w1, z);
    for (Real& v : z) v = std::tanh(v);
    const Tensor& b2 = store.value(joint_out_.bias_id());
    std::copy(b2.values().begin(), b2.values().end(), out.begin());
    add_vec_mat(z, store.value(joint_out_.weight_id()), out);
  } else {
    std::vector<Real> sum(enc_row.begin(), enc_row.end());
    for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += pred_output[j];
    add_vec_mat(sum, store.value(joint_out_.weight_id()), out);
  }
  log_softmax_inplace(out);
  return out;
}

}  // namespace ctxrnnt
