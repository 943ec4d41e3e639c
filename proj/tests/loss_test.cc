#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "ctxrnnt/error.h"
#include "ctxrnnt/loss/rnnt_loss.h"
#include "test_util.h"

using namespace ctxrnnt;
using ctxrnnt::testing::random_labels;
using ctxrnnt::testing::random_lattice;

namespace {

Real cell(const Tensor& lp, std::size_t t, std::size_t u, std::size_t k) {
  return lp[(t * lp.dim(1) + u) * lp.dim(2) + k];
}

// Enumerates every monotone path and sums probabilities in linear space.
Real enumerate_nll(const Tensor& lp, const std::vector<int>& y) {
  const std::size_t T = lp.dim(0), U = y.size();
  Real total = 0;
  std::function<void(std::size_t, std::size_t, Real)> walk = [&](std::size_t t, std::size_t u, Real p) {
    if (t == T - 1 && u == U) {
      total += p * std::exp(cell(lp, t, u, 0));
      return;
    }
    if (u < U) walk(t, u + 1, p * std::exp(cell(lp, t, u, static_cast<std::size_t>(y[u]))));
    if (t < T - 1) walk(t + 1, u, p * std::exp(cell(lp, t, u, 0)));
  };
  walk(0, 0, 1.0);
  return -std::log(total);
}

Tensor uniform_lattice(std::size_t T, std::size_t U, std::size_t V) {
  return Tensor({T, U + 1, V}, -std::log(static_cast<Real>(V)));
}

}  // namespace

TEST(RnntLoss, SingleFrameNoLabels) {
  Rng rng(1);
  const Tensor lp = random_lattice(1, 0, 4, rng);
  const LossResult r = rnnt_loss(lp, {});
  EXPECT_NEAR(r.nll, -lp[0], 1e-14);
  EXPECT_NEAR(r.grad[0], -1.0, 1e-14);
  for (std::size_t k = 1; k < 4; ++k) EXPECT_EQ(r.grad[k], 0.0);
}

TEST(RnntLoss, UniformTwoByOne) {
  // T = 2, U = 1, V = 2: two paths of three emissions each at 1/2.
  const Tensor lp = uniform_lattice(2, 1, 2);
  const std::vector<int> y{1};
  EXPECT_NEAR(rnnt_loss(lp, y).nll, 3 * std::log(2.0) - std::log(2.0), 1e-13);
}

TEST(RnntLoss, UniformClosedForm) {
  // Every path has T + U emissions, and there are C(T - 1 + U, U) of them.
  for (std::size_t T = 1; T <= 6; ++T) {
    for (std::size_t U = 0; U <= 5; ++U) {
      const std::size_t V = 7;
      const Tensor lp = uniform_lattice(T, U, V);
      std::vector<int> y(U, 3);
      const Real paths = std::round(std::exp(std::lgamma(T + U) - std::lgamma(T) - std::lgamma(U + 1)));
      const Real want = (T + U) * std::log(static_cast<Real>(V)) - std::log(paths);
      EXPECT_NEAR(rnnt_loss(lp, y, 0, false).nll, want, 1e-10) << T << "x" << U;
    }
  }
}

TEST(RnntLoss, MatchesPathEnumeration) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t T = 1 + rng.below(5);
    const std::size_t U = rng.below(4);
    if (T * (U + 1) > 20) continue;
    const std::size_t V = 2 + rng.below(5);
    const Tensor lp = random_lattice(T, U, V, rng);
    const auto y = random_labels(U, V, rng);
    const Real oracle = enumerate_nll(lp, y);
    EXPECT_NEAR(rnnt_loss(lp, y).nll, oracle, 1e-10 * std::max<Real>(1, oracle));
    EXPECT_NEAR(brute_force_nll(lp, y), oracle, 1e-10 * std::max<Real>(1, oracle));
  }
}

TEST(RnntLoss, ForwardEqualsBackward) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t T = 1 + rng.below(40), U = rng.below(15), V = 2 + rng.below(10);
    const Tensor lp = random_lattice(T, U, V, rng, 3.0);
    const auto y = random_labels(U, V, rng);
    const AlphaBeta ab = rnnt_alpha_beta(lp, y);
    EXPECT_NEAR(ab.forward_log_likelihood, ab.backward_log_likelihood,
                1e-10 * std::max<Real>(1, std::abs(ab.forward_log_likelihood)));
    EXPECT_NEAR(ab.forward_log_likelihood, ab.beta[0], 1e-10 * std::max<Real>(1, std::abs(ab.beta[0])));
    EXPECT_EQ(ab.alpha[0], 0.0);
  }
}

TEST(RnntLoss, GradientMatchesFiniteDifferences) {
  // Perturbations of individual log-probabilities; the lattice need not stay
  // normalized for the loss to be a smooth function of it.
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t T = 2 + rng.below(4), U = 1 + rng.below(3), V = 3 + rng.below(3);
    Tensor lp = random_lattice(T, U, V, rng);
    const auto y = random_labels(U, V, rng);
    const LossResult r = rnnt_loss(lp, y);
    const Real eps = 1e-6;
    for (std::size_t i = 0; i < lp.size(); ++i) {
      const Real saved = lp[i];
      lp[i] = saved + eps;
      const Real up = rnnt_loss(lp, y, 0, false).nll;
      lp[i] = saved - eps;
      const Real down = rnnt_loss(lp, y, 0, false).nll;
      lp[i] = saved;
      EXPECT_NEAR(r.grad[i], (up - down) / (2 * eps), 1e-5) << "element " << i;
    }
  }
}

TEST(RnntLoss, GradientIsOccupancy) {
  // Gradients are minus transition posteriors. Every path takes T blanks
  // and U labels, so the posteriors sum to those counts.
  Rng rng(5);
  const std::size_t T = 6, U = 3, V = 5;
  const Tensor lp = random_lattice(T, U, V, rng);
  const auto y = random_labels(U, V, rng);
  const LossResult r = rnnt_loss(lp, y);
  Real blank_mass = 0, label_mass = 0;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t u = 0; u <= U; ++u) {
      for (std::size_t k = 0; k < V; ++k) {
        const Real g = r.grad[(t * (U + 1) + u) * V + k];
        EXPECT_LE(g, 1e-15);
        if (k == 0) {
          blank_mass -= g;
        } else {
          label_mass -= g;
        }
      }
    }
  }
  EXPECT_NEAR(blank_mass, static_cast<Real>(T), 1e-10);
  EXPECT_NEAR(label_mass, static_cast<Real>(U), 1e-10);
}

TEST(RnntLoss, LongSequencesStayFinite) {
  Rng rng(6);
  const Tensor lp = random_lattice(500, 60, 30, rng, 6.0);
  const auto y = random_labels(60, 30, rng);
  const LossResult r = rnnt_loss(lp, y);
  EXPECT_TRUE(std::isfinite(r.nll));
  EXPECT_GT(r.nll, 0.0);
  EXPECT_TRUE(r.grad.all_finite());
}

TEST(RnntLoss, RejectsMalformedInput) {
  Rng rng(7);
  const Tensor lp = random_lattice(3, 2, 4, rng);
  EXPECT_THROW(rnnt_loss(lp, std::vector<int>{1}), ShapeError);
  EXPECT_THROW(rnnt_loss(lp, std::vector<int>{1, 0}), ValidationError);
  EXPECT_THROW(rnnt_loss(lp, std::vector<int>{1, 4}), ValidationError);
  EXPECT_THROW(rnnt_loss(Tensor({3, 4}), std::vector<int>{}), ShapeError);
  Tensor unnorm = lp;
  unnorm[5] += 0.5;
  EXPECT_THROW(validate_lattice(unnorm, std::vector<int>{1, 2}, 0), ValidationError);
  EXPECT_NO_THROW(validate_lattice(unnorm, std::vector<int>{1, 2}, 0, -1.0));
}

TEST(RnntLoss, BruteForceRefusesLargeLattices) {
  Rng rng(8);
  const Tensor lp = random_lattice(7, 2, 3, rng);
  EXPECT_THROW(brute_force_nll(lp, random_labels(2, 3, rng)), ValidationError);
}
