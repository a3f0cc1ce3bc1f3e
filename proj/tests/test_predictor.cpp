#include <gtest/gtest.h>

#include <algorithm>

#include "fedqueue/predictor.hpp"
#include "fedqueue/rng.hpp"

using namespace fedqueue;

TEST(Predictor, FreshStateReturnsQInit) {
  const auto s = PredictorState::ewma(4, 0.5, 2.0);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(predict(s, k), 2.0);
}

TEST(Predictor, EwmaExamples) {
  auto s = PredictorState::ewma(2, 0.5, 2.0);
  EXPECT_EQ(predict(ewma_update(std::as_const(s), 0, 4.0), 0), 3.0);
  EXPECT_EQ(predict(ewma_update(std::as_const(s), 0, 2.0), 0), 2.0);
  auto full = PredictorState::ewma(1, 1.0, 5.0);
  ewma_update(full, 0, 7.3);
  EXPECT_EQ(predict(full, 0), 7.3);
  ewma_update(s, 1, 4.0);
  EXPECT_EQ(predict(s, 1), 3.0);
  EXPECT_EQ(s.observations[1], 1u);
}

TEST(Predictor, StaticIgnoresObservations) {
  auto s = PredictorState::fixed({1.5, 2.5});
  for (double q : {0.0, 10.0, 3.3}) ewma_update(s, 1, q);
  EXPECT_EQ(predict(s, 1), 2.5);
  EXPECT_EQ(predict(s, 0), 1.5);
}

TEST(Predictor, RejectsNegativeObservation) {
  auto s = PredictorState::ewma(1, 0.5, 2.0);
  EXPECT_THROW(ewma_update(s, 0, -0.1), InputError);
  EXPECT_THROW(PredictorState::ewma(1, 0.0, 2.0), ConfigError);
  EXPECT_THROW(PredictorState::ewma(1, 1.5, 2.0), ConfigError);
}

TEST(PredictorProperties, ConvexityAndLocality) {
  Stream rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const double alpha = 0.01 + 0.99 * rng.uniform();
    auto s = PredictorState::ewma(3, alpha, 10.0 * rng.uniform());
    for (auto& q : s.q_hat) q = 10.0 * rng.uniform();
    const auto before = s.q_hat;
    const auto k = static_cast<std::size_t>(rng.below(3));
    const double obs = 20.0 * rng.uniform();
    ewma_update(s, k, obs);
    EXPECT_GE(s.q_hat[k], std::min(before[k], obs));
    EXPECT_LE(s.q_hat[k], std::max(before[k], obs));
    for (std::size_t j = 0; j < 3; ++j)
      if (j != k) EXPECT_EQ(s.q_hat[j], before[j]);
  }
}

TEST(StatePredictor, SeedAssignsFullWeight) {
  StatePredictor p(PredictorState::ewma(2, 0.3, 2.0));
  p.seed(0, 4.2);
  EXPECT_EQ(p.predict(0), 4.2);
  p.observe(0, 5.2);
  EXPECT_NEAR(p.predict(0), 0.7 * 4.2 + 0.3 * 5.2, 1e-15);
  auto copy = p.clone();
  p.observe(0, 100.0);
  EXPECT_NEAR(copy->predict(0), 0.7 * 4.2 + 0.3 * 5.2, 1e-15);

  StatePredictor fixed(PredictorState::fixed({3.0}));
  fixed.seed(0, 9.0);
  EXPECT_EQ(fixed.predict(0), 3.0);
}
