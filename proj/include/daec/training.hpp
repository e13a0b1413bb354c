#pragma once

// Adam, the cascade model, and the three-phase training procedure:
// pretrain the attention forecaster, pretrain the residual model on its
// errors, then fine-tune both on the squared error of their sum.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <type_traits>
#include <vector>

#include "daec/data.hpp"
#include "daec/diff_attention.hpp"
#include "daec/error_correction.hpp"
#include "daec/lstm.hpp"
#include "daec/numerics.hpp"

namespace daec {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool operator==(const AdamConfig&) const = default;
};

/// First/second moments shaped like the parameters they track.
template <class M>
struct AdamState {
  M m;
  M v;
  std::uint64_t t = 0;
  AdamConfig hp;
};

template <class M>
AdamState<M> make_adam_state(const M& params, const AdamConfig& hp = {}) {
  return {zeros_like(params), zeros_like(params), 0, hp};
}

template <class M>
void adam_step(M& params, const M& grads, AdamState<M>& st) {
  auto p = param_spans(params);
  const auto g = param_spans(grads);
  auto m = param_spans(st.m);
  auto v = param_spans(st.v);
  if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size())
    throw DimensionError("adam_step: parameter/gradient/state array counts differ");

  st.t += 1;
  const double b1 = st.hp.beta1;
  const double b2 = st.hp.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.t));
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (p[a].size() != g[a].size() || p[a].size() != m[a].size() || p[a].size() != v[a].size())
      throw DimensionError("adam_step: array length mismatch");
    for (std::size_t k = 0; k < p[a].size(); ++k) {
      const double gk = g[a][k];
      m[a][k] = b1 * m[a][k] + (1.0 - b1) * gk;
      v[a][k] = b2 * v[a][k] + (1.0 - b2) * gk * gk;
      const double m_hat = m[a][k] / c1;
      const double v_hat = v[a][k] / c2;
      p[a][k] -= st.hp.lr * m_hat / (std::sqrt(v_hat) + st.hp.eps);
    }
  }
}

template <class M>
  requires(!std::is_same_v<M, GradientBundle>)
void adam_step(M& params, const GradientBundle& grads, AdamState<M>& st) {
  M g = zeros_like(params);
  from_bundle(g, grads);
  adam_step(params, g, st);
}

// ---------------------------------------------------------------------------

/// Shared by every model kind. Single-phase forecasters train for epochs_da.
struct TrainConfig {
  std::size_t window_len = 40;
  std::size_t hidden_size = 100;
  std::size_t ec_hidden_size = 100;
  std::size_t attention_width = 0;  // 0: same as hidden_size
  std::size_t stacked_layers = 3;
  std::size_t epochs_da = 200;
  std::size_t epochs_ec = 200;
  std::size_t epochs_joint = 100;
  AdamConfig adam;
  std::uint64_t seed = 42;
  double split = 0.8;

  void validate() const {
    if (window_len < 1) throw ConfigError("window_len must be >= 1");
    if (hidden_size < 1 || ec_hidden_size < 1) throw ConfigError("hidden sizes must be >= 1");
    if (stacked_layers < 1) throw ConfigError("stacked_layers must be >= 1");
    if (!(split > 0.0 && split < 1.0)) throw ConfigError("split must lie in (0, 1)");
    if (!(adam.lr > 0.0) || !(adam.eps > 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
        !(adam.beta2 >= 0.0 && adam.beta2 < 1.0))
      throw ConfigError("invalid Adam hyperparameters");
  }
  bool operator==(const TrainConfig&) const = default;
};

/// splitmix64 of (seed, stream): independent deterministic seeds per use.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

enum SeedStream : std::uint64_t { kInitStream = 0, kShuffleDa = 1, kShuffleEc = 2, kShuffleJoint = 3 };

using LossHistory = std::vector<double>;

template <class M>
struct TrainResult {
  M model;
  LossHistory history;
};

/// Per-sample Adam in a freshly shuffled order each epoch. backprop(model,
/// sample, grad) accumulates into grad and returns that sample's loss.
template <class M, class Sample, class Backprop>
LossHistory fit_per_sample(M& model, std::span<const Sample> samples, std::size_t epochs, const AdamConfig& hp,
                           std::uint64_t shuffle_seed, Backprop&& backprop) {
  LossHistory history;
  if (epochs == 0) return history;
  if (samples.empty()) throw DomainError("training: empty dataset");
  AdamState<M> st = make_adam_state(model, hp);
  M grad = zeros_like(model);
  auto grad_spans = param_spans(grad);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(shuffle_seed);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t idx : order) {
      for (auto s : grad_spans) std::fill(s.begin(), s.end(), 0.0);
      total += backprop(static_cast<const M&>(model), samples[idx], grad);
      adam_step(model, grad, st);
    }
    history.push_back(total / static_cast<double>(samples.size()));
  }
  return history;
}

/// d/dy (target - y)^2
inline auto squared_error_grad(double target) {
  return [target](double y) { return 2.0 * (y - target); };
}

inline double da_sample_backprop(const DaLstmModel& m, const WindowSample& s, DaLstmModel& grad) {
  const double y = da_predict_backprop(m, s.lead_in, s.input, squared_error_grad(s.target), grad);
  return (s.target - y) * (s.target - y);
}

inline double lstm_sample_backprop(const LstmModel& m, const WindowSample& s, LstmModel& grad) {
  const double y = lstm_predict_backprop(m, s.input, squared_error_grad(s.target), grad);
  return (s.target - y) * (s.target - y);
}

inline double stacked_sample_backprop(const StackedLstmModel& m, const WindowSample& s, StackedLstmModel& grad) {
  const double y = stacked_predict_backprop(m, s.input, squared_error_grad(s.target), grad);
  return (s.target - y) * (s.target - y);
}

inline double ec_sample_backprop(const EcLstmModel& m, const ResidualSample& s, EcLstmModel& grad) {
  const double y = lstm_predict_backprop(m, s.input, squared_error_grad(s.target), grad);
  return (s.target - y) * (s.target - y);
}

/// Loss1 = (x_{t+n+1} - f_DA(window))^2 minimized over the samples.
inline TrainResult<DaLstmModel> pretrain_da(DaLstmModel model, std::span<const WindowSample> samples,
                                            const TrainConfig& cfg) {
  if (samples.empty()) throw DomainError("pretrain_da: empty dataset");
  auto history = fit_per_sample(model, samples, cfg.epochs_da, cfg.adam, derive_seed(cfg.seed, kShuffleDa),
                                 da_sample_backprop);
  return {std::move(model), std::move(history)};
}

inline TrainResult<LstmModel> pretrain_lstm(LstmModel model, std::span<const WindowSample> samples,
                                            const TrainConfig& cfg) {
  if (samples.empty()) throw DomainError("pretrain_lstm: empty dataset");
  auto history = fit_per_sample(model, samples, cfg.epochs_da, cfg.adam, derive_seed(cfg.seed, kShuffleDa),
                                 lstm_sample_backprop);
  return {std::move(model), std::move(history)};
}

inline TrainResult<StackedLstmModel> pretrain_stacked(StackedLstmModel model, std::span<const WindowSample> samples,
                                                      const TrainConfig& cfg) {
  if (samples.empty()) throw DomainError("pretrain_stacked: empty dataset");
  auto history = fit_per_sample(model, samples, cfg.epochs_da, cfg.adam, derive_seed(cfg.seed, kShuffleDa),
                                 stacked_sample_backprop);
  return {std::move(model), std::move(history)};
}

/// Loss2 = (e_u - f_EC(e_{u-W..u-1}))^2 over residual targets u in
/// [first_cascade_index, target_end). The error series must come from the
/// given base model's current parameters.
template <class Base>
TrainResult<EcLstmModel> pretrain_ec(EcLstmModel ec, const Base& base, const ErrorSeries& errors,
                                     const TrainConfig& cfg, std::size_t target_end) {
  if (errors.origin != model_fingerprint(base))
    throw ConfigError("pretrain_ec: error series was built from a different base model version");
  const auto samples = make_residual_windows(errors, cfg.window_len, first_cascade_index(cfg.window_len), target_end);
  if (samples.empty())
    throw DomainError("pretrain_ec: series too short for residual windows; need targets at index >= " +
                      std::to_string(first_cascade_index(cfg.window_len)) + " and < " + std::to_string(target_end));
  auto history = fit_per_sample(ec, std::span<const ResidualSample>(samples), cfg.epochs_ec, cfg.adam,
                                derive_seed(cfg.seed, kShuffleEc), ec_sample_backprop);
  return {std::move(ec), std::move(history)};
}

inline TrainResult<EcLstmModel> pretrain_ec(EcLstmModel ec, const DaLstmModel& da, std::span<const double> series,
                                            const TrainConfig& cfg, std::size_t target_end) {
  const ErrorSeries errors = build_error_series(da, series, cfg.window_len);
  return pretrain_ec(std::move(ec), da, errors, cfg, target_end);
}

// ---------------------------------------------------------------------------
// Cascade

struct DaecModel {
  DaLstmModel da;
  EcLstmModel ec;
  std::size_t window_len = 0;

  bool initialized() const noexcept {
    return window_len >= 1 && da.lstm.hidden_size >= 1 && ec.lstm.hidden_size >= 1;
  }
  bool operator==(const DaecModel&) const = default;
};

template <class Self, class F>
  requires std::is_same_v<std::remove_const_t<Self>, DaecModel>
void visit_params(Self& m, const std::string& prefix, F&& f) {
  visit_params(m.da, prefix + "da.", f);
  visit_params(m.ec, prefix + "ec.", f);
}

/// Fresh model from the init stream. The attention forecaster is drawn first,
/// so it equals the one a standalone DA-LSTM gets from the same seed.
inline DaecModel init_daec(const TrainConfig& cfg) {
  std::mt19937_64 rng(derive_seed(cfg.seed, kInitStream));
  DaecModel m;
  m.da = DaLstmModel::random(cfg.hidden_size, cfg.attention_width, rng);
  m.ec = EcLstmModel::random(cfg.ec_hidden_size, rng);
  m.window_len = cfg.window_len;
  return m;
}

/// f_DA(window) + f_EC(error_window).
inline double daec_predict(const DaecModel& m, std::span<const double> lead_in, std::span<const double> window,
                           std::span<const double> error_window) {
  if (window.size() != m.window_len)
    throw DimensionError("daec_predict: window length " + std::to_string(window.size()) + " != window_len " +
                         std::to_string(m.window_len));
  if (error_window.size() != m.window_len)
    throw DimensionError("daec_predict: error window length " + std::to_string(error_window.size()) +
                         " != window_len " + std::to_string(m.window_len));
  if (lead_in.size() != 2) throw DimensionError("daec_predict: lead_in must hold 2 values");
  return da_forward(m.da, lead_in, window) + ec_forward(m.ec, error_window);
}

/// One supervised example for the joint phase; the residual window is a
/// constant snapshot taken from the attention model at epoch start.
struct CascadeSample {
  std::array<double, 2> lead_in{};
  std::vector<double> input;
  std::vector<double> error_input;
  double target = 0.0;
  std::size_t index = 0;
};

/// Cascade samples for targets u in [max(begin, 2W+2), end).
inline std::vector<CascadeSample> make_cascade_samples(std::span<const double> series, const ErrorSeries& errors,
                                                       std::size_t window_len, std::size_t begin, std::size_t end) {
  std::vector<CascadeSample> out;
  const std::size_t lo = std::max(begin, first_cascade_index(window_len));
  const std::size_t hi = std::min(end, series.size());
  for (std::size_t u = lo; u < hi; ++u) {
    CascadeSample s;
    s.lead_in = {series[u - window_len - 2], series[u - window_len - 1]};
    s.input.assign(series.begin() + static_cast<std::ptrdiff_t>(u - window_len),
                   series.begin() + static_cast<std::ptrdiff_t>(u));
    s.error_input.reserve(window_len);
    for (std::size_t k = u - window_len; k < u; ++k) s.error_input.push_back(errors.at(k));
    s.target = series[u];
    s.index = u;
    out.push_back(std::move(s));
  }
  return out;
}

/// Loss = (target - (f_DA + f_EC))^2; gradients flow into both submodels
/// through their own output terms only.
inline double joint_sample_backprop(const DaecModel& m, const CascadeSample& s, DaecModel& grad) {
  const double da_y = da_forward(m.da, s.lead_in, s.input);
  const double ec_y = ec_forward(m.ec, s.error_input);
  const double y = da_y + ec_y;
  const double dy = 2.0 * (y - s.target);
  auto constant = [dy](double) { return dy; };
  da_predict_backprop(m.da, s.lead_in, s.input, constant, grad.da);
  lstm_predict_backprop(m.ec, s.error_input, constant, grad.ec);
  return (s.target - y) * (s.target - y);
}

/// Each epoch rebuilds the residual series from the current attention model,
/// then runs per-sample Adam on both submodels.
inline TrainResult<DaecModel> joint_finetune(DaecModel m, std::span<const double> series, const TrainConfig& cfg,
                                             std::size_t target_end) {
  if (!m.initialized()) throw ConfigError("joint_finetune: model is not initialized");
  if (m.window_len != cfg.window_len) throw ConfigError("joint_finetune: model window_len differs from config");
  LossHistory history;
  if (cfg.epochs_joint == 0) return {std::move(m), std::move(history)};

  AdamState<DaecModel> st = make_adam_state(m, cfg.adam);
  DaecModel grad = zeros_like(m);
  auto grad_spans = param_spans(grad);
  std::mt19937_64 rng(derive_seed(cfg.seed, kShuffleJoint));
  for (std::size_t epoch = 0; epoch < cfg.epochs_joint; ++epoch) {
    const ErrorSeries errors = build_error_series(m.da, series, cfg.window_len);
    const auto samples = make_cascade_samples(series, errors, cfg.window_len, 0, target_end);
    if (samples.empty()) throw DomainError("joint_finetune: series too short for cascade samples");
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t idx : order) {
      for (auto s : grad_spans) std::fill(s.begin(), s.end(), 0.0);
      total += joint_sample_backprop(m, samples[idx], grad);
      adam_step(m, grad, st);
    }
    history.push_back(total / static_cast<double>(samples.size()));
  }
  return {std::move(m), std::move(history)};
}

/// First target index of the test split for a series of the given length.
inline std::size_t train_end_index(std::size_t series_length, const TrainConfig& cfg) {
  if (series_length < min_series_length(cfg.window_len))
    throw DomainError("series length " + std::to_string(series_length) + " < minimum " +
                      std::to_string(min_series_length(cfg.window_len)));
  const std::size_t n = series_length - cfg.window_len - 2;
  const auto n_train = static_cast<std::size_t>(std::floor(cfg.split * static_cast<double>(n)));
  return n_train + cfg.window_len + 2;
}

struct DaecTraining {
  DaecModel model;
  DaLstmModel da_phase;  // attention model as it left the first phase
  LossHistory da;
  LossHistory ec;
  LossHistory joint;
};

/// pretrain_da -> pretrain_ec -> joint_finetune on model-space values, using
/// targets before the chronological split.
inline DaecTraining train_daec(std::span<const double> series, const TrainConfig& cfg) {
  cfg.validate();
  const std::size_t end = train_end_index(series.size(), cfg);
  DaecTraining out;
  out.model = init_daec(cfg);

  std::vector<WindowSample> samples = make_windows(series, cfg.window_len);
  samples.resize(end - cfg.window_len - 2);
  if (cfg.epochs_da > 0) {
    auto da = pretrain_da(out.model.da, samples, cfg);
    out.model.da = std::move(da.model);
    out.da = std::move(da.history);
  }
  out.da_phase = out.model.da;
  if (cfg.epochs_ec > 0) {
    auto ec = pretrain_ec(out.model.ec, out.model.da, series, cfg, end);
    out.model.ec = std::move(ec.model);
    out.ec = std::move(ec.history);
  }
  auto joint = joint_finetune(std::move(out.model), series, cfg, end);
  out.model = std::move(joint.model);
  out.joint = std::move(joint.history);
  return out;
}

}  // namespace daec
