#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "daec/compare.hpp"
#include "daec/experiment.hpp"
#include "daec/training.hpp"
#include "helpers.hpp"

using namespace daec;

namespace {

std::vector<double> scaled_sine(std::size_t n, double period = 25.0) {
  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) out[t] = 0.5 + 0.4 * std::sin(2.0 * std::numbers::pi * t / period);
  return out;
}

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.window_len = 6;
  cfg.hidden_size = 4;
  cfg.ec_hidden_size = 3;
  cfg.epochs_da = 3;
  cfg.epochs_ec = 2;
  cfg.epochs_joint = 2;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST(Adam, ZeroGradientLeavesParams) {
  GradientBundle p;
  p.add("w", 1, 3, {0.5, -1.0, 2.0});
  const GradientBundle before = p;
  auto st = make_adam_state(p);
  adam_step(p, zeros_like(p), st);
  EXPECT_EQ(p, before);
  EXPECT_EQ(st.t, 1u);
}

TEST(Adam, FirstStepHandValue) {
  GradientBundle p, g;
  p.add("w", 1, 1, {1.0});
  g.add("w", 1, 1, {2.0});
  auto st = make_adam_state(p, AdamConfig{});
  adam_step(p, g, st);
  EXPECT_NEAR(p.at("w").values[0], 1.0 - 0.001 * (2.0 / (2.0 + 1e-8)), 1e-15);
}

TEST(Adam, ShapeMismatch) {
  GradientBundle p, g;
  p.add("w", 1, 2, {1.0, 2.0});
  g.add("w", 1, 3, {1.0, 2.0, 3.0});
  auto st = make_adam_state(p);
  EXPECT_THROW(adam_step(p, g, st), DimensionError);
}

TEST(DeriveSeed, StreamsDiffer) {
  EXPECT_NE(derive_seed(42, kShuffleDa), derive_seed(42, kShuffleEc));
  EXPECT_NE(derive_seed(42, kInitStream), derive_seed(43, kInitStream));
  EXPECT_EQ(derive_seed(42, kShuffleJoint), derive_seed(42, kShuffleJoint));
}

TEST(PretrainDa, ZeroEpochsIsNoop) {
  const auto series = scaled_sine(60);
  auto cfg = tiny_config();
  cfg.epochs_da = 0;
  std::mt19937_64 rng(1);
  const auto m = DaLstmModel::random(4, 0, rng);
  const auto r = pretrain_da(m, make_windows(series, cfg.window_len), cfg);
  EXPECT_EQ(r.model, m);
  EXPECT_TRUE(r.history.empty());
  EXPECT_THROW(pretrain_da(m, std::vector<WindowSample>{}, cfg), DomainError);
}

TEST(PretrainDa, SameSeedBitIdentical) {
  const auto series = scaled_sine(80);
  const auto cfg = tiny_config();
  std::mt19937_64 rng(1);
  const auto m = DaLstmModel::random(4, 0, rng);
  const auto samples = make_windows(series, cfg.window_len);
  const auto a = pretrain_da(m, samples, cfg);
  const auto b = pretrain_da(m, samples, cfg);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.history, b.history);
}

TEST(PretrainDa, SineLossDecreases) {
  const auto series = scaled_sine(150);
  auto cfg = tiny_config();
  cfg.window_len = 10;
  cfg.epochs_da = 200;
  std::mt19937_64 rng(derive_seed(cfg.seed, kInitStream));
  const auto m = DaLstmModel::random(cfg.hidden_size, 0, rng);
  const auto r = pretrain_da(m, make_windows(series, cfg.window_len), cfg);
  ASSERT_EQ(r.history.size(), 200u);
  EXPECT_LT(r.history.back(), r.history.front());
}

TEST(Daec, ZeroedEcReducesToDa) {
  std::mt19937_64 rng(12);
  auto cfg = tiny_config();
  DaecModel m = init_daec(cfg);
  testutil::randomize(m.da, rng);
  m.ec = EcLstmModel::zeros(cfg.ec_hidden_size);
  const auto lead = testutil::uniform(2, rng);
  const auto window = testutil::uniform(cfg.window_len, rng);
  const auto errors = testutil::uniform(cfg.window_len, rng);
  EXPECT_EQ(daec_predict(m, lead, window, errors), da_forward(m.da, lead, window));
}

TEST(Daec, HeadsBuildSum) {
  auto cfg = tiny_config();
  DaecModel m = init_daec(cfg);
  m.da = DaLstmModel::zeros(cfg.hidden_size, cfg.hidden_size);
  m.da.head.b = 1.0;
  m.ec = EcLstmModel::zeros(cfg.ec_hidden_size);
  m.ec.head.b = 0.25;
  const Vector lead{0.1, 0.2};
  EXPECT_EQ(daec_predict(m, lead, Vector(6, 0.3), Vector(6, 0.0)), 1.25);
}

TEST(Daec, RandomModelsSumBitExact) {
  std::mt19937_64 rng(31);
  auto cfg = tiny_config();
  for (int trial = 0; trial < 50; ++trial) {
    DaecModel m = init_daec(cfg);
    testutil::randomize(m, rng);
    const auto lead = testutil::uniform(2, rng);
    const auto window = testutil::uniform(cfg.window_len, rng);
    const auto errors = testutil::uniform(cfg.window_len, rng, -0.3, 0.3);
    EXPECT_EQ(daec_predict(m, lead, window, errors), da_forward(m.da, lead, window) + ec_forward(m.ec, errors));
  }
}

TEST(Daec, LengthMismatch) {
  const auto cfg = tiny_config();
  const DaecModel m = init_daec(cfg);
  const Vector lead{0.0, 0.0};
  EXPECT_THROW(daec_predict(m, lead, Vector(5, 0.0), Vector(6, 0.0)), DimensionError);
  EXPECT_THROW(daec_predict(m, lead, Vector(6, 0.0), Vector(7, 0.0)), DimensionError);
}

TEST(Daec, InitMatchesStandaloneDa) {
  const auto cfg = tiny_config();
  const auto any = make_initial_model(ModelKind::DaLstm, cfg);
  EXPECT_EQ(init_daec(cfg).da, std::get<DaLstmModel>(any));
}

TEST(JointFinetune, ZeroEpochsUnchanged) {
  const auto series = scaled_sine(80);
  auto cfg = tiny_config();
  cfg.epochs_joint = 0;
  const DaecModel m = init_daec(cfg);
  const auto r = joint_finetune(m, series, cfg, 60);
  EXPECT_EQ(r.model, m);
  EXPECT_TRUE(r.history.empty());
}

TEST(JointFinetune, UninitializedIsConfigError) {
  const auto series = scaled_sine(80);
  EXPECT_THROW(joint_finetune(DaecModel{}, series, tiny_config(), 60), ConfigError);
}

TEST(JointFinetune, ZeroEcLossEqualsDaLoss) {
  const auto series = scaled_sine(80);
  auto cfg = tiny_config();
  DaecModel m = init_daec(cfg);
  m.ec = EcLstmModel::zeros(cfg.ec_hidden_size);
  const auto errors = build_error_series(m.da, series, cfg.window_len);
  for (const auto& s : make_cascade_samples(series, errors, cfg.window_len, 0, 60)) {
    DaecModel g = zeros_like(m);
    const double joint = joint_sample_backprop(m, s, g);
    const double y = da_forward(m.da, s.lead_in, s.input);
    EXPECT_EQ(joint, (s.target - y) * (s.target - y));
    // ec output weights see zero hidden states, so only its bias moves
    for (double v : g.ec.head.w) EXPECT_EQ(v, 0.0);
  }
}

TEST(JointFinetune, ResidualInputsComeFromCurrentDa) {
  const auto series = scaled_sine(80);
  const auto cfg = tiny_config();
  const DaecModel m = init_daec(cfg);
  const auto errors = build_error_series(m.da, series, cfg.window_len);
  const auto samples = make_cascade_samples(series, errors, cfg.window_len, 0, 80);
  ASSERT_EQ(samples.front().index, first_cascade_index(cfg.window_len));
  for (const auto& s : samples)
    for (std::size_t k = 0; k < cfg.window_len; ++k) {
      const std::size_t u = s.index - cfg.window_len + k;
      const double xhat = da_forward(m.da, std::span<const double>(series).subspan(u - cfg.window_len - 2, 2),
                                     std::span<const double>(series).subspan(u - cfg.window_len, cfg.window_len));
      EXPECT_EQ(s.error_input[k], series[u] - xhat);
    }
}

TEST(TrainDaec, ZeroEpochsReturnsInit) {
  const auto series = scaled_sine(80);
  auto cfg = tiny_config();
  cfg.epochs_da = cfg.epochs_ec = cfg.epochs_joint = 0;
  const auto r = train_daec(series, cfg);
  EXPECT_EQ(r.model, init_daec(cfg));
  EXPECT_TRUE(r.da.empty() && r.ec.empty() && r.joint.empty());
}

TEST(TrainDaec, Deterministic) {
  const auto series = scaled_sine(90);
  const auto cfg = tiny_config();
  const auto a = train_daec(series, cfg);
  const auto b = train_daec(series, cfg);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.joint, b.joint);
  EXPECT_EQ(a.da.size(), 3u);
  EXPECT_EQ(a.ec.size(), 2u);
  EXPECT_EQ(a.joint.size(), 2u);
}

TEST(TrainDaec, PhaseOneEqualsStandaloneDa) {
  const auto series = scaled_sine(90);
  const auto cfg = tiny_config();
  const auto daec = train_daec(series, cfg);
  PreparedData d;
  d.scaled = series;
  d.train_end = train_end_index(series.size(), cfg);
  d.raw.values = series;
  const auto da = train_model(ModelKind::DaLstm, d, cfg);
  EXPECT_EQ(daec.da_phase, std::get<DaLstmModel>(da.model));
  EXPECT_NE(daec.model.da, daec.da_phase);
}

TEST(TrainEndIndex, FloorRule) {
  TrainConfig cfg;
  cfg.window_len = 40;
  cfg.split = 0.8;
  EXPECT_EQ(train_end_index(2000, cfg), static_cast<std::size_t>(0.8 * 1958) + 42);
  EXPECT_THROW(train_end_index(42, cfg), DomainError);
}

TEST(TrainModel, ImprovesOnUntrainedJumpSine) {
  SyntheticSpec spec;
  spec.length = 300;
  spec.period = 25;
  spec.jumps = 3;
  spec.noise_sigma = 0.02;
  spec.seed = 3;
  TrainConfig cfg;
  cfg.window_len = 10;
  cfg.hidden_size = 6;
  cfg.ec_hidden_size = 4;
  cfg.epochs_da = 15;
  cfg.epochs_ec = 5;
  cfg.epochs_joint = 5;
  cfg.seed = 2;
  const auto data = prepare_data(generate_synthetic(spec), cfg);
  const auto run = train_model(ModelKind::DaecLstm, data, cfg);
  const auto trained = summarize(run.model, data, cfg.window_len);
  const auto untrained = summarize(make_initial_model(ModelKind::DaecLstm, cfg), data, cfg.window_len);
  EXPECT_LT(trained.test.mse, untrained.test.mse);
  EXPECT_EQ(run.histories.size(), 3u);
  EXPECT_EQ(run.epochs.at("joint"), 5u);
}

TEST(TrainDaec, JointModelNoWorseThanDaOnJumpSine) {
  SyntheticSpec spec;
  spec.length = 300;
  spec.period = 25;
  spec.jumps = 3;
  spec.noise_sigma = 0.02;
  spec.seed = 3;
  TrainConfig cfg;
  cfg.window_len = 10;
  cfg.hidden_size = 6;
  cfg.ec_hidden_size = 4;
  cfg.epochs_da = 15;
  cfg.epochs_ec = 5;
  cfg.epochs_joint = 5;
  cfg.seed = 2;
  const auto data = prepare_data(generate_synthetic(spec), cfg);
  const auto run = train_daec(data.scaled, cfg);
  const auto joint = summarize(run.model, data, cfg.window_len);
  const auto da_only = summarize(run.da_phase, data, cfg.window_len);
  EXPECT_LE(joint.test.mse, da_only.test.mse);
}

TEST(TrainModel, EveryKindRuns) {
  SyntheticSpec spec;
  spec.length = 120;
  TrainConfig cfg;
  cfg.window_len = 5;
  cfg.hidden_size = 3;
  cfg.ec_hidden_size = 3;
  cfg.stacked_layers = 2;
  cfg.epochs_da = cfg.epochs_ec = cfg.epochs_joint = 1;
  const auto data = prepare_data(generate_synthetic(spec), cfg);
  for (auto k : {ModelKind::Lstm, ModelKind::StackedLstm, ModelKind::DaLstm, ModelKind::EcLstm, ModelKind::DaecLstm}) {
    const auto run = train_model(k, data, cfg);
    EXPECT_EQ(kind_of(run.model), k);
    const auto s = summarize(run.model, data, cfg.window_len);
    EXPECT_EQ(s.test.n, data.raw.size() - data.train_end);
    EXPECT_TRUE(std::isfinite(s.test.mse));
  }
}

TEST(Compare, RowsFollowRequestAndBudgets) {
  CompareRequest req;
  req.models = {ModelKind::DaecLstm, ModelKind::Lstm, ModelKind::DaLstm};
  req.seeds = {1, 2};
  req.config = tiny_config();
  SyntheticSpec spec;
  spec.length = 100;
  spec.period = 20;
  req.synthetic = spec;
  const auto res = run_comparison(req);
  ASSERT_EQ(res.rows.size(), 6u);
  for (std::size_t k = 0; k < res.rows.size(); ++k) {
    EXPECT_EQ(res.rows[k].kind, req.models[k % 3]);
    EXPECT_EQ(res.rows[k].seed, req.seeds[k / 3]);
  }
  EXPECT_EQ(res.rows[0].epochs.at("joint"), 2u);
  EXPECT_EQ(res.rows[1].epochs.at("base"), 3u);
  EXPECT_EQ(res.rows[2].epochs.at("da"), 3u);

  // the da-lstm row reused from the cascade equals a standalone run
  CompareRequest alone = req;
  alone.models = {ModelKind::Lstm, ModelKind::DaLstm};
  const auto res2 = run_comparison(alone);
  EXPECT_EQ(res2.rows[1].summary.test, res.rows[2].summary.test);
  EXPECT_EQ(res2.rows[3].summary.test, res.rows[5].summary.test);
}

TEST(Compare, Validation) {
  CompareRequest req;
  req.models = {ModelKind::Lstm};
  req.seeds = {1};
  req.synthetic = SyntheticSpec{};
  EXPECT_THROW(run_comparison(req), ConfigError);
  req.models = {ModelKind::Lstm, ModelKind::Lstm};
  EXPECT_THROW(run_comparison(req), ConfigError);
  req.models = {ModelKind::Lstm, ModelKind::DaLstm};
  req.series = TimeSeries{};
  EXPECT_THROW(run_comparison(req), ConfigError);
}

TEST(Compare, Median) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_THROW(median({}), DomainError);
}
