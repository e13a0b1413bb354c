#pragma once

// Model kinds, dataset preparation, training dispatch and evaluation in
// original units. Shared by the CLI and the acceptance suite.

#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "daec/data.hpp"
#include "daec/diff_attention.hpp"
#include "daec/error_correction.hpp"
#include "daec/lstm.hpp"
#include "daec/metrics.hpp"
#include "daec/training.hpp"

namespace daec {

enum class ModelKind { Lstm, StackedLstm, DaLstm, EcLstm, DaecLstm };

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "lstm") return ModelKind::Lstm;
  if (s == "s-lstm") return ModelKind::StackedLstm;
  if (s == "da-lstm") return ModelKind::DaLstm;
  if (s == "ec-lstm") return ModelKind::EcLstm;
  if (s == "daec-lstm") return ModelKind::DaecLstm;
  throw ConfigError("unknown model kind '" + s + "' (expected lstm | s-lstm | da-lstm | ec-lstm | daec-lstm)");
}

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Lstm: return "lstm";
    case ModelKind::StackedLstm: return "s-lstm";
    case ModelKind::DaLstm: return "da-lstm";
    case ModelKind::EcLstm: return "ec-lstm";
    case ModelKind::DaecLstm: return "daec-lstm";
  }
  return "?";
}

inline bool is_cascade(ModelKind k) { return k == ModelKind::EcLstm || k == ModelKind::DaecLstm; }

/// Plain LSTM forecaster corrected by a residual LSTM, without attention and
/// without joint fine-tuning.
struct LstmEcCascade {
  LstmModel base;
  EcLstmModel ec;
  std::size_t window_len = 0;
  bool operator==(const LstmEcCascade&) const = default;
};

template <class Self, class F>
  requires std::is_same_v<std::remove_const_t<Self>, LstmEcCascade>
void visit_params(Self& m, const std::string& prefix, F&& f) {
  visit_params(m.base, prefix + "base.", f);
  visit_params(m.ec, prefix + "ec.", f);
}

using AnyModel = std::variant<LstmModel, StackedLstmModel, DaLstmModel, LstmEcCascade, DaecModel>;

inline ModelKind kind_of(const AnyModel& m) {
  return static_cast<ModelKind>(m.index());
}

/// Seeded initial model of the given kind. Every kind draws its first LSTM
/// layer from the same stream position, so equal seeds give equal starts.
inline AnyModel make_initial_model(ModelKind kind, const TrainConfig& cfg) {
  std::mt19937_64 rng(derive_seed(cfg.seed, kInitStream));
  switch (kind) {
    case ModelKind::Lstm: return LstmModel::random(cfg.hidden_size, rng);
    case ModelKind::StackedLstm: return StackedLstmModel::random(cfg.stacked_layers, cfg.hidden_size, rng);
    case ModelKind::DaLstm: return DaLstmModel::random(cfg.hidden_size, cfg.attention_width, rng);
    case ModelKind::EcLstm: {
      LstmEcCascade m;
      m.base = LstmModel::random(cfg.hidden_size, rng);
      m.ec = EcLstmModel::random(cfg.ec_hidden_size, rng);
      m.window_len = cfg.window_len;
      return m;
    }
    case ModelKind::DaecLstm: return init_daec(cfg);
  }
  throw ConfigError("unknown model kind");
}

inline GradientBundle to_bundle(const AnyModel& m) {
  return std::visit([](const auto& model) { return to_bundle(model); }, m);
}

inline std::size_t parameter_count(const AnyModel& m) {
  return std::visit([](const auto& model) { return parameter_count(model); }, m);
}

// ---------------------------------------------------------------------------

/// A series scaled with min-max parameters fitted on the training targets.
struct PreparedData {
  TimeSeries raw;
  ScalerParams scaler;
  std::vector<double> scaled;
  std::size_t train_end = 0;  // first test target index
};

inline PreparedData prepare_data(TimeSeries raw, const TrainConfig& cfg) {
  raw.validate();
  PreparedData d;
  d.train_end = train_end_index(raw.values.size(), cfg);
  d.scaler = fit_scaler(std::span<const double>(raw.values).first(d.train_end));
  d.scaled = apply_scaler(d.scaler, raw.values);
  d.raw = std::move(raw);
  return d;
}

/// Same as prepare_data but with a scaler fixed elsewhere (e.g. a checkpoint).
inline PreparedData prepare_data(TimeSeries raw, const TrainConfig& cfg, const ScalerParams& scaler) {
  raw.validate();
  if (!(scaler.hi > scaler.lo) || !std::isfinite(scaler.lo) || !std::isfinite(scaler.hi))
    throw ConfigError("incompatible scaler: requires finite lo < hi");
  PreparedData d;
  d.train_end = train_end_index(raw.values.size(), cfg);
  d.scaler = scaler;
  d.scaled = apply_scaler(d.scaler, raw.values);
  d.raw = std::move(raw);
  return d;
}

/// Earliest target index a model of this kind can forecast.
inline std::size_t first_target_index(ModelKind kind, std::size_t window_len) {
  return is_cascade(kind) ? first_cascade_index(window_len) : window_len + 2;
}

/// Model-space forecasts for targets u in [begin, end).
inline std::vector<double> predict_range(const AnyModel& model, std::span<const double> series, std::size_t window_len,
                                         std::size_t begin, std::size_t end) {
  const ModelKind kind = kind_of(model);
  if (begin < first_target_index(kind, window_len))
    throw DomainError(to_string(kind) + ": target index " + std::to_string(begin) + " lacks history; need >= " +
                      std::to_string(first_target_index(kind, window_len)));
  if (end > series.size()) throw DomainError("predict_range: end beyond series");
  std::vector<double> out;
  out.reserve(end > begin ? end - begin : 0);
  auto lead_in = [&](std::size_t u) { return series.subspan(u - window_len - 2, 2); };
  auto window = [&](std::size_t u) { return series.subspan(u - window_len, window_len); };

  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, LstmModel>) {
          for (std::size_t u = begin; u < end; ++u) out.push_back(lstm_predict(m, window(u)));
        } else if constexpr (std::is_same_v<M, StackedLstmModel>) {
          for (std::size_t u = begin; u < end; ++u) out.push_back(stacked_lstm_predict(m, window(u)));
        } else if constexpr (std::is_same_v<M, DaLstmModel>) {
          for (std::size_t u = begin; u < end; ++u) out.push_back(da_forward(m, lead_in(u), window(u)));
        } else if constexpr (std::is_same_v<M, LstmEcCascade>) {
          const auto errors = build_error_series(
              [&](std::span<const double>, std::span<const double> w) { return lstm_predict(m.base, w); }, series,
              window_len, model_fingerprint(m.base));
          for (std::size_t u = begin; u < end; ++u) {
            const auto k = u - errors.first_index;
            const std::span<const double> ew(errors.e.data() + k - window_len, window_len);
            out.push_back(lstm_predict(m.base, window(u)) + ec_forward(m.ec, ew));
          }
        } else {
          const auto errors = build_error_series(m.da, series, window_len);
          for (std::size_t u = begin; u < end; ++u) {
            const auto k = u - errors.first_index;
            const std::span<const double> ew(errors.e.data() + k - window_len, window_len);
            out.push_back(daec_predict(m, lead_in(u), window(u), ew));
          }
        }
      },
      model);
  return out;
}

struct PhaseHistory {
  std::string phase;
  LossHistory losses;
};

struct Predictions {
  std::vector<std::size_t> index;
  std::vector<double> truth;       // original units
  std::vector<double> prediction;  // original units
  double scaled_mse = 0.0;
};

inline Predictions evaluate_range(const AnyModel& model, const PreparedData& data, std::size_t window_len,
                                  std::size_t begin, std::size_t end) {
  if (end <= begin) throw DomainError("evaluate: empty evaluation range");
  Predictions p;
  const auto scaled_pred = predict_range(model, data.scaled, window_len, begin, end);
  double acc = 0.0;
  for (std::size_t u = begin; u < end; ++u) {
    const double sp = scaled_pred[u - begin];
    acc += (data.scaled[u] - sp) * (data.scaled[u] - sp);
    p.index.push_back(u);
    p.truth.push_back(data.raw.values[u]);
    p.prediction.push_back(data.scaler.invert(sp));
  }
  p.scaled_mse = acc / static_cast<double>(end - begin);
  return p;
}

struct TrainedRun {
  AnyModel model;
  std::vector<PhaseHistory> histories;
  std::map<std::string, std::size_t> epochs;  // phase -> epochs actually run
};

/// Runs the training procedure of the given kind on prepared data. Single
/// phase forecasters use cfg.epochs_da; ec-lstm adds the residual phase;
/// daec-lstm runs all three phases.
inline TrainedRun train_model(ModelKind kind, const PreparedData& data, const TrainConfig& cfg) {
  cfg.validate();
  const std::span<const double> series = data.scaled;
  const std::size_t end = data.train_end;
  std::vector<WindowSample> samples = make_windows(series, cfg.window_len);
  samples.resize(end - cfg.window_len - 2);

  TrainedRun run{make_initial_model(kind, cfg), {}, {}};
  switch (kind) {
    case ModelKind::Lstm: {
      auto r = pretrain_lstm(std::get<LstmModel>(run.model), samples, cfg);
      run.model = std::move(r.model);
      run.histories.push_back({"base", std::move(r.history)});
      run.epochs["base"] = cfg.epochs_da;
      break;
    }
    case ModelKind::StackedLstm: {
      auto r = pretrain_stacked(std::get<StackedLstmModel>(run.model), samples, cfg);
      run.model = std::move(r.model);
      run.histories.push_back({"base", std::move(r.history)});
      run.epochs["base"] = cfg.epochs_da;
      break;
    }
    case ModelKind::DaLstm: {
      auto r = pretrain_da(std::get<DaLstmModel>(run.model), samples, cfg);
      run.model = std::move(r.model);
      run.histories.push_back({"da", std::move(r.history)});
      run.epochs["da"] = cfg.epochs_da;
      break;
    }
    case ModelKind::EcLstm: {
      LstmEcCascade m = std::get<LstmEcCascade>(run.model);
      auto base = pretrain_lstm(m.base, samples, cfg);
      m.base = std::move(base.model);
      run.histories.push_back({"base", std::move(base.history)});
      run.epochs["base"] = cfg.epochs_da;
      if (cfg.epochs_ec > 0) {
        const auto errors = build_error_series(
            [&](std::span<const double>, std::span<const double> w) { return lstm_predict(m.base, w); }, series,
            cfg.window_len, model_fingerprint(m.base));
        auto ec = pretrain_ec(m.ec, m.base, errors, cfg, end);
        m.ec = std::move(ec.model);
        run.histories.push_back({"ec", std::move(ec.history)});
      }
      run.epochs["ec"] = cfg.epochs_ec;
      run.model = std::move(m);
      break;
    }
    case ModelKind::DaecLstm: {
      auto r = train_daec(series, cfg);
      run.model = std::move(r.model);
      run.histories.push_back({"da", std::move(r.da)});
      run.histories.push_back({"ec", std::move(r.ec)});
      run.histories.push_back({"joint", std::move(r.joint)});
      run.epochs["da"] = cfg.epochs_da;
      run.epochs["ec"] = cfg.epochs_ec;
      run.epochs["joint"] = cfg.epochs_joint;
      break;
    }
  }
  return run;
}

struct EvaluationSummary {
  MetricsReport train;
  MetricsReport test;
  double train_scaled_mse = 0.0;
  double test_scaled_mse = 0.0;
};

/// Train metrics over every training target the kind can forecast; test
/// metrics over [train_end, length).
inline EvaluationSummary summarize(const AnyModel& model, const PreparedData& data, std::size_t window_len) {
  EvaluationSummary s;
  const std::size_t first = first_target_index(kind_of(model), window_len);
  const auto train = evaluate_range(model, data, window_len, first, data.train_end);
  const auto test = evaluate_range(model, data, window_len, data.train_end, data.raw.size());
  s.train = report(train.truth, train.prediction);
  s.test = report(test.truth, test.prediction);
  s.train_scaled_mse = train.scaled_mse;
  s.test_scaled_mse = test.scaled_mse;
  return s;
}

}  // namespace daec
