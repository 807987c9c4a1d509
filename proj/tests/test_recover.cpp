#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace mcsbd;
using namespace testing_support;

TEST(Reconstruct, IdentityEverything) {
  const std::size_t n = 8;
  const auto ys = sample_bg_signals(n, 3, 0.5, 1);
  std::vector<SignalVec> nonzero;
  for (const auto& y : ys) nonzero.push_back(y + SignalVec::delta({n}));
  const auto pre = raw_set(nonzero);
  const auto rec = reconstruct(pre, SignalVec::delta({n}));
  EXPECT_LT(max_abs_diff(rec.a_star, SignalVec::delta({n})), 1e-15);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_LT(max_abs_diff(rec.x_star[i], nonzero[i]), 1e-14);
}

TEST(Reconstruct, ShiftedTargetGivesShiftedKernel) {
  const auto truth = synthesize<1>({32}, 30, 0.25, 2);
  const auto obs = forward(truth);
  const auto pre = compute_preconditioner(obs, 0.25);
  for (std::size_t l : {0u, 3u, 17u}) {
    const auto q = target_solution(truth.kernel, pre, l);
    const auto rec = reconstruct(pre, q);
    const auto a = normalized(rec.a_star);
    const auto want = cyclic_shift(truth.kernel, -static_cast<std::int64_t>(l));
    const double sgn = dot(a, want) < 0 ? -1.0 : 1.0;
    EXPECT_LT(max_abs_diff(a * sgn, want), 1e-10) << l;
    EXPECT_LT(signed_shift_dist(rec.a_star, truth.kernel), 1e-10);
    // x* is a shifted, scaled copy of the true input.
    for (std::size_t i = 0; i < 3; ++i) {
      const auto& x = truth.signals[i];
      if (norm(x) == 0.0) continue;
      const auto xs = cyclic_shift(x, static_cast<std::int64_t>(l));
      const double c = dot(rec.x_star[i], xs) / dot(xs, xs);
      EXPECT_LT(norm(rec.x_star[i] - xs * c), 1e-9 * norm(rec.x_star[i]));
    }
  }
}

TEST(Reconstruct, RoundTripForAnyInvertibleEstimate) {
  const auto truth = synthesize<1>({32}, 5, 0.3, 3);
  const auto obs = forward(truth);
  const auto pre = compute_preconditioner(obs, 0.3);
  const auto q = init_random(32, 3);
  const auto rec = reconstruct(pre, q);
  for (std::size_t i = 0; i < obs.p(); ++i) {
    const auto& y = obs.channels[i];
    EXPECT_LE(norm(circ_conv(rec.a_star, rec.x_star[i]) - y) / norm(y), 1e-6);
    EXPECT_LT(max_abs_diff(rec.x_star[i], circ_conv(pre.channels_bar[i], q, ConvPath::naive)), 1e-10);
  }
}

TEST(Reconstruct, SingularEstimateThrows) {
  const auto pre = raw_set({SignalVec{1.0, 0.0, 0.0, 0.0}});
  EXPECT_THROW(reconstruct(pre, SignalVec{0.5, 0.5, 0.5, 0.5}), NonInvertibleError);
}

TEST(RhoAcc, Examples) {
  const std::size_t n = 9;
  const auto pre = raw_set({SignalVec::delta({n})});
  const auto kernel = SignalVec::delta({n});
  EXPECT_DOUBLE_EQ(rho_acc(kernel, pre, SignalVec::basis({n}, 4)), 1.0);
  SignalVec ones(Shape<1>{n});
  for (double& v : ones) v = 1.0 / 3.0;
  EXPECT_NEAR(rho_acc(kernel, pre, ones), 1.0 / 3.0, 1e-15);
  EXPECT_THROW(rho_acc(kernel, pre, SignalVec(Shape<1>{n})), DegenerateInputError);
}

TEST(RhoAcc, ThresholdGating) {
  const auto truth = synthesize<1>({20}, 10, 0.25, 4);
  const auto pre = compute_preconditioner(forward(truth), 0.25);
  const auto q = target_solution(truth.kernel, pre, 2);
  auto s = score_recovery(truth, pre, q);
  EXPECT_NEAR(s.rho_acc, 1.0, 1e-12);
  EXPECT_TRUE(s.success);
  EXPECT_LT(s.shift_dist, 1e-8);
  // Blend until rho drops just below the default threshold.
  const auto other = target_solution(truth.kernel, pre, 7);
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (rho_acc(truth, pre, q + other * mid) >= 0.95 ? lo : hi) = mid;
  }
  EXPECT_TRUE(score_recovery(truth, pre, q + other * lo).success);
  EXPECT_FALSE(score_recovery(truth, pre, q + other * hi).success);
  EXPECT_EQ(kSuccessThreshold, 0.95);
}

TEST(SignedShiftDist, Examples) {
  std::mt19937_64 rng(5);
  const auto a = unit_random(12, rng);
  EXPECT_NEAR(signed_shift_dist(a, a), 0.0, 1e-15);
  EXPECT_NEAR(signed_shift_dist(cyclic_shift(a, 3) * -2.5, a), 0.0, 1e-14);
  EXPECT_NEAR(signed_shift_dist(SignalVec{1.0, -1.0, 1.0, -1.0}, SignalVec{1.0, 1.0, 1.0, 1.0}), std::sqrt(2.0), 1e-15);
  EXPECT_THROW(signed_shift_dist(SignalVec(Shape<1>{12}), a), DegenerateInputError);
  EXPECT_THROW(signed_shift_dist(SignalVec{1.0, 0.0}, a), DimensionError);
}

TEST(SignedShiftDist, MatchesNaiveOracle) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + static_cast<std::size_t>(t) % 30;
    const auto a = random_vec(n, rng), b = random_vec(n, rng);
    const double fast = signed_shift_dist(a, b);
    EXPECT_NEAR(fast, signed_shift_dist_naive(a, b), 1e-12);
    EXPECT_NEAR(fast, signed_shift_dist(a, b, ConvPath::naive), 1e-12);
    EXPECT_GE(fast, 0.0);
    EXPECT_LE(fast, 2.0);
  }
}

TEST(SignedShiftDist, GridShiftQuotient) {
  std::mt19937_64 rng(7);
  const auto a = random_grid(5, 6, rng);
  EXPECT_NEAR(signed_shift_dist<2>(cyclic_shift<2>(a, {2, -3}) * -1.0, a), 0.0, 1e-14);
  const auto b = random_grid(5, 6, rng);
  EXPECT_NEAR(signed_shift_dist<2>(a, b), signed_shift_dist_naive<2>(a, b), 1e-12);
}

TEST(Metrics, QuotientInvariances) {
  const auto truth = synthesize<1>({24}, 20, 0.25, 8);
  const auto pre = compute_preconditioner(forward(truth), 0.25);
  const auto q = init_random(24, 8);
  const double rho = rho_acc(truth.kernel, pre, q);
  EXPECT_NEAR(rho_acc(truth.kernel, pre, q * -1.0), rho, 1e-15);
  for (std::int64_t l : {1, 9}) {
    EXPECT_NEAR(rho_acc(cyclic_shift(truth.kernel, -l), pre, cyclic_shift(q, l)), rho, 1e-12);
    EXPECT_NEAR(rotated_distance(cyclic_shift(truth.kernel, -l), pre, cyclic_shift(q, l)),
                rotated_distance(truth.kernel, pre, q), 1e-12);
  }
  const auto a_hat = reconstruct(pre, q).a_star;
  EXPECT_NEAR(signed_shift_dist(a_hat * -1.0, truth.kernel), signed_shift_dist(a_hat, truth.kernel), 1e-14);
  EXPECT_NEAR(signed_shift_dist(a_hat, cyclic_shift(truth.kernel, 4)), signed_shift_dist(a_hat, truth.kernel), 1e-12);
}

TEST(Metrics, RhoOneIffKernelDistanceZero) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto truth = synthesize<1>({30}, 20, 0.25, 20 + seed);
    const auto pre = compute_preconditioner(forward(truth), 0.25);
    const auto exact = target_solution(truth.kernel, pre, seed);
    const auto s = score_recovery(truth, pre, exact);
    EXPECT_NEAR(s.rho_acc, 1.0, 1e-12);
    EXPECT_LE(s.shift_dist, 1e-8);
    EXPECT_NEAR(rotated_distance(truth.kernel, pre, exact), 0.0, 1e-12);
    const auto off = score_recovery(truth, pre, init_random(30, seed));
    EXPECT_LT(off.rho_acc, 1.0 - 1e-3);
    EXPECT_GT(off.shift_dist, 1e-3);
  }
}

TEST(Metrics, RotatedDistanceAccuracy) {
  SignalVec w(Shape<1>{5});
  w[2] = -1.0;
  w[0] = 1e-9;
  EXPECT_NEAR(distance_to_signed_basis(w), 1e-9, 1e-20);
}
