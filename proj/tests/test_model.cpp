#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace mcsbd;
using namespace testing_support;

TEST(SampleKernel, DeterministicAndUnitNorm) {
  const auto a = sample_kernel(3, 42);
  EXPECT_EQ(a, sample_kernel(3, 42));
  EXPECT_NE(a, sample_kernel(3, 43));
  for (std::uint64_t s = 0; s < 200; ++s) EXPECT_LE(std::abs(norm(sample_kernel(2 + s % 50, s)) - 1.0), 1e-12);
  EXPECT_THROW(sample_kernel(1, 0), ConfigError);
}

TEST(SampleKernel, EmpiricalMeanNearZero) {
  std::vector<double> mean(3, 0.0);
  const int draws = 10000;
  for (int s = 0; s < draws; ++s) {
    const auto a = sample_kernel(3, static_cast<std::uint64_t>(s));
    for (std::size_t j = 0; j < 3; ++j) mean[j] += a[j] / draws;
  }
  for (double m : mean) EXPECT_LT(std::abs(m), 0.05);
}

TEST(SampleSignals, ThetaExtremes) {
  for (const auto& x : sample_bg_signals(50, 4, 0.0, 1)) EXPECT_EQ(norm_inf(x), 0.0);
  std::size_t zeros = 0;
  for (const auto& x : sample_bg_signals(100, 100, 1.0, 2))
    for (double v : x) zeros += (v == 0.0);
  EXPECT_EQ(zeros, 0u);
  EXPECT_THROW(sample_bg_signals(10, 2, -0.1, 0), ConfigError);
  EXPECT_THROW(sample_bg_signals(10, 2, 1.1, 0), ConfigError);
}

TEST(SampleSignals, SparsityFraction) {
  const auto xs = sample_bg_signals(1000, 100, 0.25, 3);
  std::size_t nonzero = 0;
  for (const auto& x : xs)
    for (double v : x) nonzero += (v != 0.0);
  EXPECT_NEAR(static_cast<double>(nonzero) / 1e5, 0.25, 0.01);
}

TEST(SampleSignals, ChannelsAreIndependentStreams) {
  const auto few = sample_bg_signals(20, 3, 0.3, 9);
  const auto many = sample_bg_signals(20, 8, 0.3, 9);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(few[i], many[i]);
}

TEST(Synthesize, Reproducible) {
  const auto t1 = synthesize<1>({32}, 5, 0.25, 11);
  const auto t2 = synthesize<1>({32}, 5, 0.25, 11);
  EXPECT_EQ(t1.kernel, t2.kernel);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(t1.signals[i], t2.signals[i]);
  const auto y1 = forward(t1), y2 = forward(t2);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(y1.channels[i], y2.channels[i]);
}

TEST(Forward, DeltaAndShiftedDelta) {
  GroundTruth<1> t;
  t.kernel = SignalVec::delta({6});
  t.signals = sample_bg_signals(6, 3, 0.5, 4);
  auto y = forward(t);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_LT(max_abs_diff(y.channels[i], t.signals[i]), 1e-14);
  t.kernel = cyclic_shift(SignalVec::delta({6}), 2);
  y = forward(t);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_LT(max_abs_diff(y.channels[i], cyclic_shift(t.signals[i], 2)), 1e-14);
}

TEST(Forward, MatchesDenseCirculant) {
  std::mt19937_64 rng(5);
  GroundTruth<1> t;
  t.kernel = unit_random(8, rng);
  t.signals = {random_vec(8, rng), random_vec(8, rng)};
  const auto y = forward(t);
  const auto c = circulant(t.kernel);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_LT(max_abs_diff(y.channels[i], matvec(c, t.signals[i])), 1e-12);
  t.signals.push_back(SignalVec(Shape<1>{7}));
  EXPECT_THROW(forward(t), DimensionError);
}

TEST(DiagnoseKernel, Examples) {
  const auto d = diagnose_kernel(SignalVec::delta({5}));
  EXPECT_TRUE(d.invertible);
  EXPECT_NEAR(d.kappa, 1.0, 1e-14);

  const double s = 1.0 / std::sqrt(2.0);
  EXPECT_FALSE(diagnose_kernel(SignalVec{s, s}).invertible);

  SignalVec a(Shape<1>{8});
  a[0] = 2.0;
  a[1] = 1.0;
  a = normalized(a);
  const auto spec = dft(a);
  double lo = 1e300, hi = 0.0;
  for (const auto& c : spec) {
    lo = std::min(lo, std::abs(c));
    hi = std::max(hi, std::abs(c));
  }
  const auto da = diagnose_kernel(a);
  EXPECT_TRUE(da.invertible);
  EXPECT_NEAR(da.kappa, hi / lo, 1e-12);
  EXPECT_NEAR(da.kappa, 3.0, 1e-12);
  EXPECT_GE(da.kappa, 1.0);

  EXPECT_THROW(diagnose_kernel(SignalVec(Shape<1>{4})), DegenerateInputError);
}

TEST(InverseKernel, Examples) {
  const auto d = SignalVec::delta({6});
  EXPECT_LT(max_abs_diff(inverse_kernel(d), d), 1e-15);
  EXPECT_LT(max_abs_diff(inverse_kernel(cyclic_shift(d, 2)), cyclic_shift(d, -2)), 1e-15);
  std::mt19937_64 rng(6);
  const auto a = unit_random(16, rng);
  EXPECT_LT(max_abs_diff(circ_conv(a, inverse_kernel(a)), SignalVec::delta({16})), 1e-8);
  const double s = 1.0 / std::sqrt(2.0);
  EXPECT_THROW(inverse_kernel(SignalVec{s, s}), NonInvertibleError);
}

TEST(InverseKernel, RecoversSignalsForModerateConditioning) {
  int checked = 0;
  for (std::uint64_t seed = 0; checked < 20; ++seed) {
    const auto truth = synthesize<1>({64}, 4, 0.25, seed);
    if (diagnose_kernel(truth.kernel).kappa > 100.0) continue;
    ++checked;
    const auto y = forward(truth);
    const auto h = inverse_kernel(truth.kernel);
    for (std::size_t i = 0; i < 4; ++i) {
      const double scale = std::max(norm(truth.signals[i]), 1e-300);
      EXPECT_LE(norm(circ_conv(h, y.channels[i]) - truth.signals[i]) / scale, 1e-6);
    }
  }
}

TEST(ObservationSet, Validation) {
  EXPECT_THROW(ObservationSet<1>(std::vector<SignalVec>{}), DimensionError);
  EXPECT_THROW(ObservationSet<1>({SignalVec{1.0, 2.0}, SignalVec{1.0}}), DimensionError);
}
