// ctxrnnt/loss/rnnt_loss.h
//
// Transducer negative log-likelihood over a [T x (U+1) x V] lattice of
// log-probabilities. A path starts at (0, 0), emits label y[u] at (t, u) to
// reach (t, u+1), emits blank at (t, u) to reach (t+1, u), and must end with a
// blank from (T-1, U).
//
//   alpha(t,u) = logadd(alpha(t-1,u) + blank(t-1,u), alpha(t,u-1) + y(t,u-1))
//   beta(t,u)  = logadd(blank(t,u) + beta(t+1,u), y(t,u) + beta(t,u+1))
//   nll = -(alpha(T-1,U) + blank(T-1,U)) = -beta(0,0)

#ifndef CTXRNNT_LOSS_RNNT_LOSS_H_
#define CTXRNNT_LOSS_RNNT_LOSS_H_

#include <span>

#include "ctxrnnt/numerics/tensor.h"

namespace ctxrnnt {

struct AlphaBeta {
  Tensor alpha;  // [T x (U+1)]
  Tensor beta;   // [T x (U+1)]
  Real forward_log_likelihood = 0.0;
  Real backward_log_likelihood = 0.0;
};

struct LossResult {
  Real nll = 0.0;
  Tensor grad;  // dL/dlog_probs, same shape as the lattice; empty if not requested
  AlphaBeta lattice;
};

// Throws ShapeError / ValidationError on a malformed lattice: wrong rank,
// labels out of range or equal to blank, or a cell whose log-sum-exp differs
// from 0 by more than `normalization_tol` (negative disables the check).
void validate_lattice(const Tensor& log_probs, std::span<const int> labels, int blank,
                      Real normalization_tol = 1e-8);

AlphaBeta rnnt_alpha_beta(const Tensor& log_probs, std::span<const int> labels, int blank = 0);

LossResult rnnt_loss(const Tensor& log_probs, std::span<const int> labels, int blank = 0,
                     bool compute_grad = true);

// Sums the probability of every alignment path explicitly. Limited to
// T * (U+1) <= kBruteForceMaxCells.
inline constexpr std::size_t kBruteForceMaxCells = 20;
Real brute_force_nll(const Tensor& log_probs, std::span<const int> labels, int blank = 0);

}  // namespace ctxrnnt

#endif  // CTXRNNT_LOSS_RNNT_LOSS_H_
