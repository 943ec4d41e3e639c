#include "ctxrnnt/loss/rnnt_loss.h"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ctxrnnt/error.h"
#include "ctxrnnt/numerics/ops.h"

namespace ctxrnnt {

namespace {

constexpr Real kNegInf = -std::numeric_limits<Real>::infinity();

struct Dims {
  std::size_t steps, labels, vocab;
};

Dims dims_of(const Tensor& lp) {
  return {lp.shape()[0], lp.shape()[1], lp.shape()[2]};
}

inline Real cell(const Tensor& lp, const Dims& d, std::size_t t, std::size_t u, int k) {
  return lp[(t * d.labels + u) * d.vocab + static_cast<std::size_t>(k)];
}

}  // namespace

void validate_lattice(const Tensor& log_probs, std::span<const int> labels, int blank,
                      Real normalization_tol) {
  if (log_probs.rank() != 3) {
    throw ShapeError("lattice must be [T x (U+1) x V], got " + log_probs.shape_string());
  }
  const Dims d = dims_of(log_probs);
  if (d.steps == 0) throw ShapeError("lattice has no frames");
  if (d.labels != labels.size() + 1) {
    throw ShapeError("lattice has " + std::to_string(d.labels) + " label positions for " +
                     std::to_string(labels.size()) + " labels");
  }
  if (blank < 0 || static_cast<std::size_t>(blank) >= d.vocab) {
    throw ValidationError("blank id " + std::to_string(blank) + " outside vocab");
  }
  for (std::size_t u = 0; u < labels.size(); ++u) {
    const int y = labels[u];
    if (y < 0 || static_cast<std::size_t>(y) >= d.vocab || y == blank) {
      throw ValidationError("label " + std::to_string(y) + " at position " + std::to_string(u) +
                            " is not a valid non-blank token");
    }
  }
  log_probs.check_finite("lattice log-probs");
  if (normalization_tol < 0) return;
  for (std::size_t c = 0; c < d.steps * d.labels; ++c) {
    const Real z = log_sum_exp(std::span<const Real>(log_probs.data() + c * d.vocab, d.vocab));
    if (std::abs(z) > normalization_tol) {
      throw ValidationError("lattice cell " + std::to_string(c) + " is not normalized (logsumexp " +
                            std::to_string(z) + ")");
    }
  }
}

AlphaBeta rnnt_alpha_beta(const Tensor& log_probs, std::span<const int> labels, int blank) {
  const Dims d = dims_of(log_probs);
  const std::size_t steps = d.steps, positions = d.labels;
  AlphaBeta ab;
  ab.alpha = Tensor({steps, positions}, kNegInf);
  ab.beta = Tensor({steps, positions}, kNegInf);
  Tensor& a = ab.alpha;
  Tensor& b = ab.beta;

  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t u = 0; u < positions; ++u) {
      Real v;
      if (t == 0 && u == 0) {
        v = 0.0;
      } else {
        v = kNegInf;
        if (t > 0) v = a.at(t - 1, u) + cell(log_probs, d, t - 1, u, blank);
        if (u > 0) v = log_add(v, a.at(t, u - 1) + cell(log_probs, d, t, u - 1, labels[u - 1]));
      }
      a.at(t, u) = v;
    }
  }
  for (std::size_t t = steps; t-- > 0;) {
    for (std::size_t u = positions; u-- > 0;) {
      Real v;
      if (t == steps - 1 && u == positions - 1) {
        v = cell(log_probs, d, t, u, blank);
      } else {
        v = kNegInf;
        if (t + 1 < steps) v = cell(log_probs, d, t, u, blank) + b.at(t + 1, u);
        if (u + 1 < positions) v = log_add(v, cell(log_probs, d, t, u, labels[u]) + b.at(t, u + 1));
      }
      b.at(t, u) = v;
    }
  }
  ab.forward_log_likelihood =
      a.at(steps - 1, positions - 1) + cell(log_probs, d, steps - 1, positions - 1, blank);
  ab.backward_log_likelihood = b.at(0, 0);
  return ab;
}

LossResult rnnt_loss(const Tensor& log_probs, std::span<const int> labels, int blank,
                     bool compute_grad) {
  validate_lattice(log_probs, labels, blank, -1.0);
  const Dims d = dims_of(log_probs);
  LossResult result;
  result.lattice = rnnt_alpha_beta(log_probs, labels, blank);
  const Real ll = result.lattice.forward_log_likelihood;
  if (!std::isfinite(ll)) {
    throw NonFiniteError("transducer log-likelihood is not finite (" + std::to_string(ll) + ")");
  }
  result.nll = -ll;
  if (!compute_grad) return result;

  const Tensor& a = result.lattice.alpha;
  const Tensor& b = result.lattice.beta;
  result.grad = Tensor(log_probs.shape());
  for (std::size_t t = 0; t < d.steps; ++t) {
    for (std::size_t u = 0; u < d.labels; ++u) {
      Real* g = result.grad.data() + (t * d.labels + u) * d.vocab;
      const Real base = a.at(t, u) - ll;
      const bool last_t = t + 1 == d.steps;
      const bool last_u = u + 1 == d.labels;
      if (!last_t) {
        g[blank] = -std::exp(base + cell(log_probs, d, t, u, blank) + b.at(t + 1, u));
      } else if (last_u) {
        g[blank] = -std::exp(base + cell(log_probs, d, t, u, blank));
      }
      if (!last_u) {
        const int y = labels[u];
        g[y] = -std::exp(base + cell(log_probs, d, t, u, y) + b.at(t, u + 1));
      }
    }
  }
  return result;
}

namespace {

void enumerate_paths(const Tensor& lp, const Dims& d, std::span<const int> labels, int blank,
                     std::size_t t, std::size_t u, Real acc, std::vector<Real>& out) {
  if (u < labels.size()) {
    enumerate_paths(lp, d, labels, blank, t, u + 1, acc + cell(lp, d, t, u, labels[u]), out);
  }
  const Real with_blank = acc + cell(lp, d, t, u, blank);
  if (t + 1 < d.steps) {
    enumerate_paths(lp, d, labels, blank, t + 1, u, with_blank, out);
  } else if (u == labels.size()) {
    out.push_back(with_blank);
  }
}

}  // namespace

Real brute_force_nll(const Tensor& log_probs, std::span<const int> labels, int blank) {
  validate_lattice(log_probs, labels, blank, -1.0);
  const Dims d = dims_of(log_probs);
  if (d.steps * d.labels > kBruteForceMaxCells) {
    throw ValidationError("lattice of " + std::to_string(d.steps * d.labels) +
                          " cells is too large for path enumeration");
  }
  std::vector<Real> paths;
  enumerate_paths(log_probs, d, labels, blank, 0, 0, 0.0, paths);
  return -log_sum_exp(paths);
}

}  // namespace ctxrnnt
