#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "daec/diff_attention.hpp"
#include "helpers.hpp"
#include "oracle.hpp"

using namespace daec;

TEST(DifferenceFeatures, ConstantSeriesIsZero) {
  const double lead[2] = {5.0, 5.0};
  const Vector window(6, 5.0);
  for (const auto& d : difference_features(lead, window)) {
    EXPECT_EQ(d[0], 0.0);
    EXPECT_EQ(d[1], 0.0);
  }
}

TEST(DifferenceFeatures, HandValues) {
  const double lead[2] = {1.0, 2.0};
  const Vector window{4.0, 7.0};
  const auto d = difference_features(lead, window);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0], (DiffFeature{1.0, 4.0}));
  EXPECT_EQ(d[1], (DiffFeature{4.0, 9.0}));
}

TEST(DifferenceFeatures, Errors) {
  const double lead[2] = {0.0, 0.0};
  EXPECT_THROW(difference_features(lead, Vector{}), DomainError);
  const double lead1[1] = {0.0};
  EXPECT_THROW(difference_features(lead1, Vector{1.0}), DimensionError);
}

TEST(ConcatHidden, DiffFirst) {
  EXPECT_EQ(concat_hidden(Vector{1, 2}, DiffFeature{0, 0}), (Vector{0, 0, 1, 2}));
  EXPECT_EQ(concat_hidden(Vector(100, 0.5), DiffFeature{1, 1}).size(), 102u);
}

TEST(AttentionWeights, IdenticalFeaturesUniform) {
  std::mt19937_64 rng(4);
  const auto attn = AttentionParams::random(5, 3, rng);
  const std::vector<Vector> hts(4, Vector{0.1, -0.2, 0.3, 0.4, 0.5});
  for (double w : attention_weights(attn, hts)) EXPECT_NEAR(w, 0.25, 1e-15);
}

TEST(AttentionWeights, ZeroParamsUniformForAnyFeatures) {
  std::mt19937_64 rng(9);
  const auto attn = AttentionParams::zeros(4, 3);
  std::vector<Vector> hts;
  for (int k = 0; k < 7; ++k) hts.push_back(testutil::uniform(4, rng, -10, 10));
  for (double w : attention_weights(attn, hts)) EXPECT_EQ(w, 1.0 / 7.0);
}

TEST(AttentionWeights, EngineeredScores) {
  auto attn = AttentionParams::zeros(3, 1);
  attn.W_a(0, 0) = 1.0;
  attn.v_a[0] = 2.0 * std::log(2.0);
  const std::vector<Vector> hts{{0.0, 1.0, 1.0}, {std::atanh(0.5), 1.0, 1.0}};
  const Vector w = attention_weights(attn, hts);
  EXPECT_NEAR(w[0], 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(w[1], 2.0 / 3.0, 1e-12);
  EXPECT_THROW(attention_weights(attn, std::vector<Vector>{}), DomainError);
}

TEST(ContextVector, Examples) {
  const std::vector<Vector> one{{1.5, -2.0, 3.0}};
  EXPECT_EQ(context_vector(Vector{1.0}, one), one[0]);

  const std::vector<Vector> two{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}};
  EXPECT_EQ(context_vector(Vector{1.0, 0.0}, two), two[0]);
  const Vector theta = context_vector(Vector{0.25, 0.75}, two);
  EXPECT_EQ(theta, (Vector{0.25, 0.75, 0.0}));
  EXPECT_THROW(context_vector(Vector{1.0}, two), DimensionError);
}

TEST(DaForward, ZeroModelConstantWindow) {
  auto m = DaLstmModel::zeros(3, 3);
  m.head.b = 0.35;
  const double lead[2] = {2.0, 2.0};
  EXPECT_EQ(da_forward(m, lead, Vector(5, 2.0)), 0.35);
}

TEST(DaForward, SingleStepIgnoresAttention) {
  std::mt19937_64 rng(15);
  auto m = DaLstmModel::zeros(3, 4);
  testutil::randomize(m, rng);
  const double lead[2] = {0.2, -0.1};
  const Vector window{0.6};
  const auto r = da_forward_detailed(m, lead, window);
  EXPECT_EQ(r.weights, Vector{1.0});
  EXPECT_EQ(r.prediction, m.head.apply(r.features[0]));

  auto other = m;
  testutil::randomize(other.attn, rng);
  EXPECT_EQ(da_forward(other, lead, window), r.prediction);
}

TEST(DaForward, MatchesOracle) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 25; ++trial) {
    auto m = DaLstmModel::zeros(3, 3);
    testutil::randomize(m, rng);
    const auto lead = testutil::uniform(2, rng);
    const auto window = testutil::uniform(4, rng);
    EXPECT_NEAR(da_forward(m, lead, window), oracle::da_predict(m, lead[0], lead[1], window), 1e-12);
  }
}

TEST(DaForward, StagesCompose) {
  std::mt19937_64 rng(3);
  auto m = DaLstmModel::random(4, 0, rng);
  const auto lead = testutil::uniform(2, rng);
  const auto window = testutil::uniform(6, rng);
  const auto r = da_forward_detailed(m, lead, window);
  const auto d = difference_features(lead, window);
  const auto states = lstm_forward(m.lstm, lift_scalars(window));
  std::vector<Vector> hts;
  for (std::size_t t = 0; t < window.size(); ++t) hts.push_back(concat_hidden(states[t].h, d[t]));
  EXPECT_EQ(hts, r.features);
  const Vector alpha = attention_weights(m.attn, hts);
  EXPECT_EQ(alpha, r.weights);
  EXPECT_EQ(context_vector(alpha, hts), r.context);
  EXPECT_EQ(m.head.apply(r.context), r.prediction);
}

TEST(DaModel, DefaultAttentionWidthIsHidden) {
  std::mt19937_64 rng(1);
  const auto m = DaLstmModel::random(5, 0, rng);
  EXPECT_EQ(m.attn.W_a.rows(), 5u);
  EXPECT_EQ(m.attn.W_a.cols(), 7u);
  EXPECT_EQ(m.head.w.size(), 7u);
}
