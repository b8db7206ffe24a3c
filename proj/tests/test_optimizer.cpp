#include <gtest/gtest.h>

#include <cmath>

#include "speechfcn/optimizer.hpp"

using namespace speechfcn;

namespace {

Parameter make_param(std::vector<float> values, std::vector<float> grads) {
  const long n = static_cast<long>(values.size());
  Parameter p(Tensor({n}, std::move(values)));
  for (long i = 0; i < p.gradient.size(); ++i) p.gradient[i] = grads[static_cast<std::size_t>(i)];
  return p;
}

}  // namespace

TEST(RmsProp, ZeroGradientLeavesValueUnchanged) {
  Parameter p = make_param({0.5f, -1.25f, 3.0f}, {0.0f, 0.0f, 0.0f});
  OptimizerConfig cfg;
  rmsprop_step(p, cfg);
  EXPECT_EQ(p.value[0], 0.5f);
  EXPECT_EQ(p.value[1], -1.25f);
  EXPECT_EQ(p.value[2], 3.0f);
}

TEST(RmsProp, FirstStepFromRestMatchesDirectEvaluation) {
  Parameter p = make_param({0.0f}, {1.0f});
  OptimizerConfig cfg;  // lr 1e-5, rho 0.9, eps 1e-8
  rmsprop_step(p, cfg);
  const double expected = -(1e-5 / (std::sqrt(0.1) + 1e-8));  // ~ -3.1623e-5
  EXPECT_NEAR(p.value[0], expected, std::abs(expected) * 1e-6);
  EXPECT_NEAR(p.rms_accumulator[0], 0.1, 1e-7);
}

TEST(RmsProp, TwoStepsMatchHandUnrolledComputation) {
  Parameter p = make_param({0.0f}, {1.0f});
  OptimizerConfig cfg;
  rmsprop_step(p, cfg);
  p.gradient[0] = 1.0f;
  rmsprop_step(p, cfg);

  // Hand unrolling with the update's arithmetic: float-typed config values
  // promoted to double, float stores between steps.
  const double rho = static_cast<double>(0.9f);
  const double lr = static_cast<double>(1e-5f);
  const double eps = static_cast<double>(1e-8f);
  float acc = 0.0f, theta = 0.0f;
  for (int step = 0; step < 2; ++step) {
    acc = static_cast<float>(rho * acc + (1.0 - rho) * 1.0);
    theta = static_cast<float>(theta - lr * 1.0 / (std::sqrt(static_cast<double>(acc)) + eps));
  }
  EXPECT_EQ(p.value[0], theta);
  EXPECT_EQ(p.rms_accumulator[0], acc);
}

TEST(RmsProp, ZeroLearningRateIsIdentityOnValue) {
  Rng rng(4);
  std::vector<float> vals, grads;
  for (int i = 0; i < 64; ++i) {
    vals.push_back(static_cast<float>(rng.uniform(-2.0, 2.0)));
    grads.push_back(static_cast<float>(rng.uniform(-2.0, 2.0)));
  }
  Parameter p = make_param(vals, grads);
  OptimizerConfig cfg;
  cfg.learning_rate = 0.0f;
  rmsprop_step(p, cfg);
  for (long i = 0; i < p.value.size(); ++i) EXPECT_EQ(p.value[i], vals[static_cast<std::size_t>(i)]);
}

TEST(RmsProp, AccumulatorFollowsDecayRule) {
  Parameter p = make_param({1.0f}, {2.0f});
  p.rms_accumulator[0] = 0.5f;
  OptimizerConfig cfg;
  rmsprop_step(p, cfg);
  EXPECT_NEAR(p.rms_accumulator[0], 0.9f * 0.5f + 0.1f * 4.0f, 1e-7);
}

TEST(OptimizerConfig, RejectsBadValues) {
  OptimizerConfig cfg;
  cfg.decay = 1.0f;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = OptimizerConfig{};
  cfg.epsilon = 0.0f;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = OptimizerConfig{};
  cfg.learning_rate = -1.0f;
  EXPECT_THROW(cfg.validate(), Error);
}
