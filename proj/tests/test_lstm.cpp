#include <random>

#include <gtest/gtest.h>

#include "daec/lstm.hpp"
#include "helpers.hpp"
#include "oracle.hpp"

using namespace daec;

TEST(LstmCell, ZeroParamsGiveZeroState) {
  const auto p = LstmParams::zeros(1, 3);
  const double x[1] = {4.2};
  const LstmState s = lstm_cell_step(p, LstmState::zeros(3), x);
  for (double v : s.h) EXPECT_EQ(v, 0.0);
  for (double v : s.c) EXPECT_EQ(v, 0.0);
}

TEST(LstmCell, SaturatedForgetGateKeepsCell) {
  auto p = LstmParams::zeros(1, 2);
  p.b_f.assign(2, 30.0);
  LstmState s{Vector{0.0, 0.0}, Vector{0.7, -1.3}};
  const double x[1] = {2.0};
  const LstmState n = lstm_cell_step(p, s, x);
  EXPECT_NEAR(n.c[0], 0.7, 1e-9);
  EXPECT_NEAR(n.c[1], -1.3, 1e-9);
}

TEST(LstmCell, MatchesOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = LstmParams::zeros(1, 2);
    testutil::randomize(p, rng);
    LstmState s{testutil::uniform(2, rng), testutil::uniform(2, rng)};
    const auto x = testutil::uniform(1, rng, -2.0, 2.0);
    const LstmState got = lstm_cell_step(p, s, x);
    std::vector<double> h = s.h, c = s.c;
    oracle::step(oracle::copy_cell(p), h, c, x);
    for (int k = 0; k < 2; ++k) {
      EXPECT_NEAR(got.h[k], h[k], 1e-12);
      EXPECT_NEAR(got.c[k], c[k], 1e-12);
    }
  }
}

TEST(LstmCell, ShapeMismatch) {
  const auto p = LstmParams::zeros(1, 2);
  const double x[2] = {1.0, 2.0};
  EXPECT_THROW(lstm_cell_step(p, LstmState::zeros(2), x), DimensionError);
  const double x1[1] = {1.0};
  EXPECT_THROW(lstm_cell_step(p, LstmState::zeros(3), x1), DimensionError);
}

TEST(LstmForward, BaseCaseAndEmpty) {
  std::mt19937_64 rng(2);
  auto p = LstmParams::random(1, 3, rng);
  const std::vector<Vector> xs{{0.4}};
  const auto states = lstm_forward(p, xs);
  ASSERT_EQ(states.size(), 1u);
  EXPECT_EQ(states[0], lstm_cell_step(p, LstmState::zeros(3), xs[0]));
  EXPECT_THROW(lstm_forward(p, std::vector<Vector>{}), DomainError);
}

TEST(LstmForward, ZeroParamsStayZero) {
  const auto p = LstmParams::zeros(1, 4);
  const std::vector<Vector> xs{{1.0}, {-3.0}, {8.0}};
  for (const auto& s : lstm_forward(p, xs))
    for (double v : s.h) EXPECT_EQ(v, 0.0);
}

TEST(LstmForward, PrefixProperty) {
  std::mt19937_64 rng(5);
  auto p = LstmParams::zeros(1, 3);
  testutil::randomize(p, rng);
  std::vector<Vector> xs;
  for (double v : testutil::uniform(9, rng)) xs.push_back({v});
  const auto full = lstm_forward(p, xs);
  for (std::size_t k = 1; k <= xs.size(); ++k) {
    const auto part = lstm_forward(p, std::span<const Vector>(xs).first(k));
    for (std::size_t t = 0; t < k; ++t) EXPECT_EQ(part[t], full[t]);
  }
}

TEST(LstmPredict, ZeroParamsReturnBias) {
  auto m = LstmModel::zeros(3);
  m.head.b = 0.7;
  EXPECT_EQ(lstm_predict(m, Vector{1, 2, 3}), 0.7);
  EXPECT_THROW(lstm_predict(m, Vector{}), DomainError);
}

TEST(LstmPredict, ZeroHeadWeightsReturnBias) {
  std::mt19937_64 rng(8);
  auto m = LstmModel::random(4, rng);
  m.head.w.assign(4, 0.0);
  m.head.b = -1.25;
  EXPECT_EQ(lstm_predict(m, Vector{0.1, 0.2, 0.9}), -1.25);
}

TEST(LstmPredict, AffineOverLastState) {
  std::mt19937_64 rng(13);
  auto m = LstmModel::zeros(4);
  testutil::randomize(m, rng);
  const auto window = testutil::uniform(5, rng);
  const auto states = lstm_forward(m.lstm, lift_scalars(window));
  EXPECT_EQ(lstm_predict(m, window), dot(m.head.w, states.back().h) + m.head.b);
  EXPECT_NEAR(lstm_predict(m, window), oracle::lstm_predict(m, window), 1e-12);
}

TEST(StackedLstm, OneLayerEqualsPlain) {
  std::mt19937_64 rng(21);
  auto m = LstmModel::zeros(3);
  testutil::randomize(m, rng);
  const std::vector<LstmParams> layers{m.lstm};
  const auto window = testutil::uniform(6, rng);
  EXPECT_EQ(stacked_lstm_predict(layers, m.head, window), lstm_predict(m, window));
}

TEST(StackedLstm, ZeroLayersReturnBias) {
  std::vector<LstmParams> layers{LstmParams::zeros(1, 2), LstmParams::zeros(2, 2), LstmParams::zeros(2, 2)};
  OutputHead head{Vector{0.3, -0.2}, 0.45};
  EXPECT_EQ(stacked_lstm_predict(layers, head, Vector{5, 6, 7}), 0.45);
}

TEST(StackedLstm, MatchesOracle) {
  std::mt19937_64 rng(34);
  auto m = StackedLstmModel::random(3, 2, rng);
  testutil::randomize(m, rng);
  const auto window = testutil::uniform(7, rng);
  EXPECT_NEAR(stacked_lstm_predict(m, window), oracle::stacked_predict(m, window), 1e-12);
}

TEST(StackedLstm, InterLayerMismatch) {
  std::vector<LstmParams> layers{LstmParams::zeros(1, 2), LstmParams::zeros(3, 2)};
  OutputHead head{Vector{0.0, 0.0}, 0.0};
  EXPECT_THROW(stacked_lstm_predict(layers, head, Vector{1.0}), DimensionError);
}

TEST(LstmParams, NamedArraysInOrder) {
  std::mt19937_64 rng(1);
  const auto m = LstmModel::random(3, rng);
  const auto b = to_bundle(m);
  EXPECT_EQ(b.size(), 10u);
  EXPECT_EQ(b.at("lstm.W_f").rows, 3u);
  EXPECT_EQ(b.at("lstm.W_f").cols, 4u);
  EXPECT_EQ(b.at("head.w").rows, 3u);
  EXPECT_EQ(parameter_count(m), 4u * 3u * 4u + 4u * 3u + 3u + 1u);
}
