#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "support.hpp"

using namespace mcsbd;
using namespace testing_support;

TEST(Precondition2d, DeltaGridGivesDelta) {
  const GridObservations obs({SignalGrid::delta({4, 6})});
  const auto pre = precondition2d(obs, 1.0 / 24.0);
  EXPECT_LT(max_abs_diff(pre.filter_v, SignalGrid::delta({4, 6})), 1e-14);
}

TEST(Precondition2d, PermutationInvariant) {
  const auto truth = synthesize2d(gaussian_psf(8, 8, 4, 0.7), 12, 0.1, 1);
  const auto obs = forward(truth);
  auto frames = obs.channels;
  std::reverse(frames.begin(), frames.end());
  EXPECT_EQ(precondition2d(obs, 0.1).filter_v, precondition2d(GridObservations(frames), 0.1).filter_v);
}

TEST(Precondition2d, ZeroBinThrows) {
  SignalGrid flat(Shape<2>{3, 4});
  for (double& v : flat) v = 1.0;
  EXPECT_THROW(precondition2d(GridObservations({flat}), 0.5), DegenerateInputError);
}

TEST(GaussianPsf, InvertibleAndValidated) {
  for (std::size_t patch : {3u, 4u, 8u}) {
    const auto a = gaussian_psf(32, 32, patch, 1.0);
    EXPECT_NEAR(norm(a), 1.0, 1e-14);
    EXPECT_TRUE(diagnose_kernel(a).invertible);
    EXPECT_EQ(argmax_abs(a), 0u);
  }
  EXPECT_THROW(gaussian_psf(8, 8, 9, 1.0), ConfigError);
  EXPECT_THROW(gaussian_psf(8, 8, 0, 1.0), ConfigError);
  EXPECT_THROW(gaussian_psf(8, 8, 4, 0.0), ConfigError);
}

TEST(Rgd2d, ZeroGradientFixedPoint) {
  const auto pre = precondition_with_filter(GridObservations({SignalGrid::delta({3, 3})}), SignalGrid::delta({3, 3}));
  GridSolverConfig cfg;
  cfg.loss = LossSpec::l1();
  cfg.init = InitExplicit<2>{SignalGrid::basis({3, 3}, 4)};
  const auto st = rgd2d_solve(pre, cfg);
  EXPECT_EQ(st.stop, StopReason::tol_grad);
  EXPECT_EQ(st.q, SignalGrid::basis({3, 3}, 4));
}

TEST(Rgd2d, FrobeniusSphereInvariant) {
  const auto truth = synthesize2d(gaussian_psf(12, 10, 4, 0.8), 20, 0.1, 2);
  const auto pre = precondition2d(forward(truth), 0.1);
  GridSolverConfig cfg;
  cfg.max_iters = 30;
  cfg.init = InitRandom<2>{2};
  double worst = 0.0;
  const auto st = rgd2d_solve(pre, cfg, [&](const SignalGrid& z) {
    worst = std::max(worst, std::abs(norm(z) - 1.0));
    return 0.0;
  });
  EXPECT_LE(worst, 1e-12);
  EXPECT_GT(st.iter, 0u);
}

TEST(Rgd2d, ColumnEmbeddingMatches1d) {
  const auto truth = synthesize<1>({40}, 20, 0.25, 3);
  const auto obs = forward(truth);
  const auto pre1 = compute_preconditioner(obs, 0.25);
  const auto pre2 = precondition2d(embed_columns(obs), 0.25);
  EXPECT_LT(max_abs_diff(extract_column(pre2.filter_v), pre1.filter_v), 1e-10);

  const auto q0 = init_random(40, 3);
  RgdConfig<1> c1;
  c1.max_iters = 60;
  c1.init = InitExplicit<1>{q0};
  GridSolverConfig c2;
  c2.max_iters = 60;
  c2.init = InitExplicit<2>{embed_column(q0)};
  const auto s1 = rgd_solve(pre1, c1);
  const auto s2 = rgd2d_solve(pre2, c2);
  // Budget ends before the line search reaches roundoff-level stalls.
  EXPECT_EQ(s1.stop, StopReason::max_iters);
  EXPECT_EQ(s2.stop, StopReason::max_iters);
  ASSERT_EQ(s1.trace.size(), s2.trace.size());
  for (std::size_t k = 0; k < s1.trace.size(); ++k) {
    EXPECT_NEAR(s1.trace[k].loss, s2.trace[k].loss, 1e-10);
    EXPECT_NEAR(s1.trace[k].grad_norm, s2.trace[k].grad_norm, 1e-10);
  }
  EXPECT_LT(max_abs_diff(extract_column(s2.q), s1.q), 1e-10);

  const auto r1 = lp_round(pre1, s1.q, RoundingConfig{});
  const auto r2 = lp_round2d(pre2, s2.q, RoundingConfig{});
  EXPECT_LT(max_abs_diff(extract_column(r2), r1.q), 1e-10);
}

TEST(Rgd2d, SeparableKernelMatches1dRecovery) {
  // A = a (x) delta: columns of every frame are independent 1D problems.
  const std::size_t n1 = 32, n2 = 4, frames = 40;
  const double theta = 0.15;
  const auto a = sample_kernel(n1, 4);
  SignalGrid big(Shape<2>{n1, n2});
  for (std::size_t i = 0; i < n1; ++i) big(i, 0) = a[i];
  GroundTruth<2> t2;
  t2.kernel = big;
  t2.signals = sample_bg_signals<2>({n1, n2}, frames, theta, 4);
  const auto obs2 = forward(t2);

  std::vector<SignalVec> cols;
  for (const auto& y : obs2.channels)
    for (std::size_t c = 0; c < n2; ++c) {
      SignalVec col(Shape<1>{n1});
      for (std::size_t i = 0; i < n1; ++i) col[i] = y(i, c);
      cols.push_back(col);
    }
  const auto pre1 = compute_preconditioner(ObservationSet<1>(cols), theta);
  const auto pre2 = precondition2d(obs2, theta);

  RgdConfig<1> c1;
  c1.init = InitRandom<1>{4};
  GridSolverConfig c2;
  c2.init = InitRandom<2>{4};
  const auto q1 = lp_round(pre1, rgd_solve(pre1, c1).q, RoundingConfig{}).q;
  const auto q2 = lp_round2d(pre2, rgd2d_solve(pre2, c2).q, RoundingConfig{});
  const auto a1 = reconstruct(pre1, q1).a_star;
  const auto a2 = reconstruct2d(pre2, q2).a_star;

  SignalGrid lifted(Shape<2>{n1, n2});
  for (std::size_t i = 0; i < n1; ++i) lifted(i, 0) = a1[i];
  EXPECT_LE(signed_shift_dist(a1, a), 1e-6);
  EXPECT_LE(signed_shift_dist<2>(a2, lifted), 1e-6);
}

TEST(Reconstruct2d, DeltaKernelAndRoundTrip) {
  GroundTruth<2> t;
  t.kernel = SignalGrid::delta({6, 6});
  t.signals = sample_bg_signals<2>({6, 6}, 30, 0.2, 5);
  const auto obs = forward(t);
  const auto pre = precondition2d(obs, 0.2);
  const auto exact = target_solution(t.kernel, pre, 0);
  const auto rec = reconstruct2d(pre, exact);
  EXPECT_LT(max_abs_diff(normalized(rec.a_star), SignalGrid::delta({6, 6})), 1e-12);

  const auto truth = synthesize2d(gaussian_psf(10, 8, 4, 0.7), 10, 0.1, 6);
  const auto obs2 = forward(truth);
  const auto pre2 = precondition2d(obs2, 0.1);
  const auto q = target_solution(truth.kernel, pre2, 13);
  const auto rec2 = reconstruct2d(pre2, q);
  for (std::size_t i = 0; i < obs2.p(); ++i) {
    const auto& y = obs2.channels[i];
    EXPECT_LE(norm(conv2d(rec2.a_star, rec2.x_star[i]) - y) / norm(y), 1e-6);
  }
  EXPECT_LE(signed_shift_dist<2>(rec2.a_star, truth.kernel), 1e-10);
  EXPECT_NEAR(rho_acc(truth, pre2, q), 1.0, 1e-12);
}

TEST(Embedding, ColumnRoundTrip) {
  const SignalVec v{1.0, 2.0, 3.0};
  const auto g = embed_column(v);
  EXPECT_EQ(g.extent(0), 3u);
  EXPECT_EQ(g.extent(1), 1u);
  EXPECT_EQ(extract_column(g), v);
  EXPECT_THROW(extract_column(SignalGrid(Shape<2>{2, 2})), DimensionError);
}
