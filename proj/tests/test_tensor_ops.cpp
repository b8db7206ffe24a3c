#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "speechfcn/ops.hpp"
#include "speechfcn/tensor.hpp"

using namespace speechfcn;

namespace {

template <class T>
TensorT<T> random_tensor(std::vector<long> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  TensorT<T> t(std::move(shape));
  for (long i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

}  // namespace

TEST(Conv2d, IdentityKernel) {
  Rng rng(1);
  const auto x = random_tensor<float>({1, 5, 6}, rng);
  Tensor k({1, 1, 1, 1});
  k[0] = 1.0f;
  const Tensor y = conv2d(x, k, 1, Padding::same);
  ASSERT_EQ(y.shape(), x.shape());
  for (long i = 0; i < x.size(); ++i) EXPECT_EQ(y[i], x[i]);
}

TEST(Conv2d, ZeroInputGivesZeroOutput) {
  Rng rng(2);
  const Tensor x({2, 4, 4});
  const auto k = random_tensor<float>({3, 2, 3, 3}, rng);
  const Tensor y = conv2d(x, k, 1, Padding::same);
  for (long i = 0; i < y.size(); ++i) EXPECT_EQ(y[i], 0.0f);
}

TEST(Conv2d, MatchesBruteForceLoops) {
  Rng rng(3);
  {
    const auto x = random_tensor<float>({1, 5, 5}, rng);
    const auto k = random_tensor<float>({1, 1, 3, 3}, rng);
    const Tensor y = conv2d(x, k, 1, Padding::same);
    const Tensor ref = oracles::brute_conv2d(x, k, 1, true);
    ASSERT_EQ(y.shape(), ref.shape());
    for (long i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-6f);
  }
  for (const long stride : {1L, 2L}) {
    for (const bool same : {true, false}) {
      const auto x = random_tensor<float>({3, 7, 9}, rng);
      const auto k = random_tensor<float>({4, 3, 3, 3}, rng);
      const Tensor y = conv2d(x, k, stride, same ? Padding::same : Padding::valid);
      const Tensor ref = oracles::brute_conv2d(x, k, stride, same);
      ASSERT_EQ(y.shape(), ref.shape()) << "stride " << stride << " same " << same;
      for (long i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-5f);
    }
  }
}

TEST(Conv2d, SamePaddingStride1PreservesExtents) {
  Rng rng(4);
  for (int trial = 0; trial < 6; ++trial) {
    const long h = rng.uniform_int(1, 12), w = rng.uniform_int(1, 12);
    const auto x = random_tensor<float>({2, h, w}, rng);
    const auto k = random_tensor<float>({3, 2, 3, 3}, rng);
    const Tensor y = conv2d(x, k, 1, Padding::same);
    EXPECT_EQ(y.extent(1), h);
    EXPECT_EQ(y.extent(2), w);
  }
}

TEST(Conv2d, SamePaddingCeilExtents) {
  Rng rng(5);
  const auto x = random_tensor<float>({1, 7, 11}, rng);
  const auto k = random_tensor<float>({1, 1, 3, 3}, rng);
  const Tensor y = conv2d(x, k, 2, Padding::same);
  EXPECT_EQ(y.extent(1), 4);  // ceil(7/2)
  EXPECT_EQ(y.extent(2), 6);  // ceil(11/2)
}

TEST(Conv2d, ChannelMismatchThrowsShapeError) {
  Rng rng(6);
  const auto x = random_tensor<float>({2, 4, 4}, rng);
  const auto k = random_tensor<float>({1, 3, 3, 3}, rng);
  try {
    conv2d(x, k, 1, Padding::same);
    FAIL() << "expected shape error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::shape);
  }
}

TEST(DepthwiseConv2d, SingleChannelReducesToConv2d) {
  Rng rng(7);
  const auto x = random_tensor<float>({1, 6, 6}, rng);
  const auto kd = random_tensor<float>({1, 3, 3}, rng);
  Tensor k2({1, 1, 3, 3}, kd.storage());
  const Tensor a = depthwise_conv2d(x, kd, 1, Padding::same);
  const Tensor b = conv2d(x, k2, 1, Padding::same);
  ASSERT_EQ(a.shape(), b.shape());
  for (long i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(DepthwiseConv2d, DeltaKernelsAreIdentityPerChannel) {
  Rng rng(8);
  const auto x = random_tensor<float>({3, 5, 5}, rng);
  Tensor k({3, 3, 3});
  for (long c = 0; c < 3; ++c) k.at(c, 1, 1) = 1.0f;
  const Tensor y = depthwise_conv2d(x, k, 1, Padding::same);
  ASSERT_EQ(y.shape(), x.shape());
  for (long i = 0; i < x.size(); ++i) EXPECT_EQ(y[i], x[i]);
}

TEST(DepthwiseConv2d, MatchesBruteForceLoops) {
  Rng rng(9);
  for (const long stride : {1L, 2L}) {
    const auto x = random_tensor<float>({3, 6, 6}, rng);
    const auto k = random_tensor<float>({3, 3, 3}, rng);
    const Tensor y = depthwise_conv2d(x, k, stride, Padding::same);
    const Tensor ref = oracles::brute_depthwise(x, k, stride, true);
    ASSERT_EQ(y.shape(), ref.shape());
    for (long i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-6f);
  }
}

TEST(DepthwiseConv2d, ComposedWithPointwiseEqualsProductKernel) {
  // On C=1, depthwise k then pointwise scalar w equals a standard conv with
  // kernel w*k.
  Rng rng(10);
  const auto x = random_tensor<float>({1, 8, 8}, rng);
  const auto kd = random_tensor<float>({1, 3, 3}, rng);
  const float wpw = 0.7f;

  const Tensor mid = depthwise_conv2d(x, kd, 1, Padding::same);
  Tensor kp({1, 1, 1, 1});
  kp[0] = wpw;
  const Tensor composed = conv2d(mid, kp, 1, Padding::same);

  Tensor kprod({1, 1, 3, 3});
  for (long i = 0; i < 9; ++i) kprod[i] = wpw * kd[i];
  const Tensor direct = conv2d(x, kprod, 1, Padding::same);

  ASSERT_EQ(composed.shape(), direct.shape());
  for (long i = 0; i < composed.size(); ++i) EXPECT_NEAR(composed[i], direct[i], 1e-6f);
}

TEST(BatchNorm, InferWithUnitStatsIsNearIdentity) {
  Rng rng(11);
  const auto x = random_tensor<float>({3, 4, 4}, rng);
  Tensor gamma = Tensor::full({3}, 1.0f), beta({3});
  Tensor rm({3}), rv = Tensor::full({3}, 1.0f);
  const Tensor y = batchnorm(x, gamma, beta, rm, rv, Mode::infer);
  // eps = 1e-3 shifts the scale by ~5e-4
  for (long i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], x[i], 1e-3f * std::max(1.0f, std::abs(x[i])));
}

TEST(BatchNorm, TrainModeNormalizesBatchStatistics) {
  Rng rng(12);
  // Data variance >> eps so the eps bias stays below the 1e-5 tolerance.
  const auto x = random_tensor<float>({2, 3, 8, 8}, rng, -100.0, 100.0);
  Tensor gamma = Tensor::full({3}, 1.0f), beta({3});
  Tensor rm({3}), rv = Tensor::full({3}, 1.0f);
  const Tensor y = batchnorm(x, gamma, beta, rm, rv, Mode::train);

  const long n = 2, c = 3, hw = 64;
  for (long ch = 0; ch < c; ++ch) {
    double mean = 0.0, var = 0.0;
    for (long b = 0; b < n; ++b)
      for (long i = 0; i < hw; ++i) mean += y.data()[(b * c + ch) * hw + i];
    mean /= static_cast<double>(n * hw);
    for (long b = 0; b < n; ++b)
      for (long i = 0; i < hw; ++i) {
        const double d = y.data()[(b * c + ch) * hw + i] - mean;
        var += d * d;
      }
    var /= static_cast<double>(n * hw);
    EXPECT_NEAR(mean, 0.0, 1e-5);
    EXPECT_NEAR(var, 1.0, 1e-5);
  }
  // Running stats moved toward the batch stats.
  for (long ch = 0; ch < c; ++ch) EXPECT_NE(rv[ch], 1.0f);
}

TEST(BatchNorm, ZeroGammaGivesConstantBeta) {
  Rng rng(13);
  const auto x = random_tensor<float>({2, 5, 5}, rng);
  Tensor gamma({2}), beta = Tensor::full({2}, 5.0f);
  Tensor rm({2}), rv = Tensor::full({2}, 1.0f);
  const Tensor y = batchnorm(x, gamma, beta, rm, rv, Mode::infer);
  for (long i = 0; i < y.size(); ++i) EXPECT_EQ(y[i], 5.0f);
}

TEST(Relu6, ClampsBothSides) {
  Tensor x({5}, {-3.0f, 0.0f, 2.5f, 6.0f, 9.0f});
  const Tensor y = relu6(x);
  EXPECT_EQ(y[0], 0.0f);
  EXPECT_EQ(y[1], 0.0f);
  EXPECT_EQ(y[2], 2.5f);
  EXPECT_EQ(y[3], 6.0f);
  EXPECT_EQ(y[4], 6.0f);
}

TEST(Gap, MeansOverRequestedAxis) {
  Tensor x({2, 2}, {1.0f, 2.0f, 3.0f, 4.0f});
  const Tensor y = gap_over_axis(x, 1);
  ASSERT_EQ(y.size(), 2);
  EXPECT_FLOAT_EQ(y[0], 1.5f);
  EXPECT_FLOAT_EQ(y[1], 3.5f);
  const Tensor z = gap_over_axis(x, 0);
  EXPECT_FLOAT_EQ(z[0], 2.0f);
  EXPECT_FLOAT_EQ(z[1], 3.0f);
}

TEST(Softmax, SymmetryAndAnalyticValues) {
  const auto p = softmax(std::vector<float>{2.0f, 2.0f});
  EXPECT_FLOAT_EQ(p[0], 0.5f);
  EXPECT_FLOAT_EQ(p[1], 0.5f);

  const auto q = softmax(std::vector<double>{0.0, std::log(3.0)});
  EXPECT_NEAR(q[0], 0.25, 1e-12);
  EXPECT_NEAR(q[1], 0.75, 1e-12);
}

TEST(Softmax, SumsToOneAndShiftInvariant) {
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> logits(4);
    // Integer-valued logits so the max-shift subtraction is exact and the
    // invariance is bitwise.
    for (double& v : logits) v = static_cast<double>(rng.uniform_int(-8, 8));
    const auto p = softmax(logits);
    double sum = 0.0;
    for (double v : p) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);

    std::vector<double> shifted = logits;
    const double c = static_cast<double>(rng.uniform_int(-5, 5));
    for (double& v : shifted) v += c;
    const auto ps = softmax(shifted);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i], ps[i]);
  }
}

TEST(Softmax, EmptyInputThrowsShapeError) {
  EXPECT_THROW(softmax(std::vector<float>{}), Error);
}

TEST(CrossEntropy, AnalyticValueAndFloor) {
  EXPECT_NEAR(cross_entropy(std::vector<float>{0.5f, 0.5f}, 0), std::log(2.0), 1e-6);
  // Hard zero probability hits the 1e-12 floor instead of infinity.
  EXPECT_NEAR(cross_entropy(std::vector<float>{0.0f, 1.0f}, 0), -std::log(1e-12), 1e-9);
}

TEST(Conv1d, SamePaddingMatchesManualComputation) {
  Rng rng(15);
  const auto x = random_tensor<float>({2, 5}, rng);
  const auto k = random_tensor<float>({1, 2, 3}, rng);
  const Tensor y = conv1d(x, k);
  ASSERT_EQ(y.extent(0), 1);
  ASSERT_EQ(y.extent(1), 5);
  for (long i = 0; i < 5; ++i) {
    double acc = 0.0;
    for (long c = 0; c < 2; ++c)
      for (long r = 0; r < 3; ++r) {
        const long j = i - 1 + r;
        if (j < 0 || j >= 5) continue;
        acc += static_cast<double>(k.at(0, c, r)) * static_cast<double>(x.at(c, j));
      }
    EXPECT_NEAR(y.at(0, i), acc, 1e-6);
  }
}

TEST(Conv1d, BiasIsAddedPerOutputChannel) {
  Tensor x({1, 4});
  Tensor k({2, 1, 1});
  Tensor bias({2}, {1.5f, -2.0f});
  const Tensor y = conv1d(x, k, &bias);
  for (long i = 0; i < 4; ++i) {
    EXPECT_FLOAT_EQ(y.at(0, i), 1.5f);
    EXPECT_FLOAT_EQ(y.at(1, i), -2.0f);
  }
}
