#pragma once

// JSON documents: run configs, model checkpoints, series sidecars, metrics.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "daec/data.hpp"
#include "daec/experiment.hpp"
#include "daec/metrics.hpp"
#include "daec/training.hpp"

namespace daec {

using Json = nlohmann::ordered_json;

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCheckpointFormat = "daec-checkpoint";

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

// ---------------------------------------------------------------------------
// TrainConfig

inline Json to_json(const TrainConfig& c) {
  return Json{{"window_len", c.window_len},
              {"hidden_size", c.hidden_size},
              {"ec_hidden_size", c.ec_hidden_size},
              {"attention_width", c.attention_width},
              {"stacked_layers", c.stacked_layers},
              {"epochs", {{"da", c.epochs_da}, {"ec", c.epochs_ec}, {"joint", c.epochs_joint}}},
              {"adam", {{"lr", c.adam.lr}, {"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}},
              {"seed", c.seed},
              {"split", c.split}};
}

namespace detail {
template <class T>
void read_opt(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

inline void reject_unknown(const Json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}
}  // namespace detail

/// Overlays keys present in j onto c.
inline void merge_train_config(const Json& j, TrainConfig& c) {
  detail::reject_unknown(j,
                         {"window_len", "hidden_size", "ec_hidden_size", "attention_width", "stacked_layers",
                          "epochs", "adam", "seed", "split"},
                         "train");
  detail::read_opt(j, "window_len", c.window_len);
  detail::read_opt(j, "hidden_size", c.hidden_size);
  detail::read_opt(j, "ec_hidden_size", c.ec_hidden_size);
  detail::read_opt(j, "attention_width", c.attention_width);
  detail::read_opt(j, "stacked_layers", c.stacked_layers);
  detail::read_opt(j, "seed", c.seed);
  detail::read_opt(j, "split", c.split);
  if (j.contains("epochs")) {
    const Json& e = j.at("epochs");
    detail::reject_unknown(e, {"da", "ec", "joint"}, "train.epochs");
    detail::read_opt(e, "da", c.epochs_da);
    detail::read_opt(e, "ec", c.epochs_ec);
    detail::read_opt(e, "joint", c.epochs_joint);
  }
  if (j.contains("adam")) {
    const Json& a = j.at("adam");
    detail::reject_unknown(a, {"lr", "beta1", "beta2", "eps"}, "train.adam");
    detail::read_opt(a, "lr", c.adam.lr);
    detail::read_opt(a, "beta1", c.adam.beta1);
    detail::read_opt(a, "beta2", c.adam.beta2);
    detail::read_opt(a, "eps", c.adam.eps);
  }
}

inline TrainConfig train_config_from_json(const Json& j) {
  TrainConfig c;
  merge_train_config(j, c);
  return c;
}

// ---------------------------------------------------------------------------
// Synthetic specs and series sidecars

inline Json to_json(const SyntheticSpec& s) {
  return Json{{"kind", to_string(s.kind)},     {"length", s.length},         {"seed", s.seed},
              {"offset", s.offset},            {"amplitude", s.amplitude},   {"period", s.period},
              {"jumps", s.jumps},              {"jump_scale", s.jump_scale}, {"noise_sigma", s.noise_sigma},
              {"slope_scale", s.slope_scale}};
}

inline void merge_synthetic_spec(const Json& j, SyntheticSpec& s) {
  detail::reject_unknown(j,
                         {"kind", "length", "seed", "offset", "amplitude", "period", "jumps", "jump_scale",
                          "noise_sigma", "slope_scale"},
                         "synthetic");
  if (j.contains("kind")) s.kind = parse_series_kind(j.at("kind").get<std::string>());
  long long length = static_cast<long long>(s.length);
  detail::read_opt(j, "length", length);
  if (length < 1) throw ConfigError("synthetic.length must be >= 1");
  s.length = static_cast<std::size_t>(length);
  detail::read_opt(j, "seed", s.seed);
  detail::read_opt(j, "offset", s.offset);
  detail::read_opt(j, "amplitude", s.amplitude);
  detail::read_opt(j, "period", s.period);
  detail::read_opt(j, "jumps", s.jumps);
  detail::read_opt(j, "jump_scale", s.jump_scale);
  detail::read_opt(j, "noise_sigma", s.noise_sigma);
  detail::read_opt(j, "slope_scale", s.slope_scale);
}

inline Json sidecar_json(const TimeSeries& ts) {
  Json jumps = Json::array();
  for (const auto& j : ts.metadata.jumps) jumps.push_back({{"index", j.index}, {"magnitude", j.magnitude}});
  Json knobs = Json::object();
  for (const auto& [k, v] : ts.metadata.knobs) knobs[k] = v;
  return Json{{"name", ts.name},
              {"kind", ts.metadata.kind},
              {"seed", ts.metadata.seed},
              {"length", ts.values.size()},
              {"fingerprint", hex64(fingerprint_values(ts.values))},
              {"knobs", knobs},
              {"jumps", jumps}};
}

inline std::string sidecar_path(const std::string& csv_path) { return csv_path + ".json"; }

// ---------------------------------------------------------------------------
// Metrics

inline Json to_json(const MetricsReport& r) {
  return Json{{"mse", r.mse}, {"rmse", r.rmse}, {"mape", r.mape}, {"n", r.n}};
}

inline MetricsReport metrics_from_json(const Json& j) {
  MetricsReport r;
  r.mse = j.at("mse").get<double>();
  r.rmse = j.at("rmse").get<double>();
  r.mape = j.at("mape").get<double>();
  r.n = j.at("n").get<std::size_t>();
  return r;
}

// ---------------------------------------------------------------------------
// Checkpoints

struct ModelCheckpoint {
  int version = kCheckpointVersion;
  ModelKind kind = ModelKind::DaecLstm;
  TrainConfig config;
  ScalerParams scaler;
  std::string dataset_fingerprint;
  std::size_t dataset_length = 0;
  GradientBundle params;
  MetricsReport train_metrics;
  MetricsReport test_metrics;
};

inline Json to_json(const ModelCheckpoint& c) {
  Json params = Json::object();
  for (const auto& [name, arr] : c.params.arrays())
    params[name] = Json{{"shape", {arr.rows, arr.cols}}, {"data", arr.values}};
  return Json{{"format", kCheckpointFormat},
              {"version", c.version},
              {"kind", to_string(c.kind)},
              {"config", to_json(c.config)},
              {"scaler", {{"lo", c.scaler.lo}, {"hi", c.scaler.hi}}},
              {"dataset", {{"fingerprint", c.dataset_fingerprint}, {"length", c.dataset_length}}},
              {"metrics", {{"train", to_json(c.train_metrics)}, {"test", to_json(c.test_metrics)}}},
              {"parameter_count", c.params.coordinate_count()},
              {"params", params}};
}

inline std::string dump(const Json& j) { return j.dump(1) + "\n"; }

inline ModelCheckpoint checkpoint_from_json(const Json& j) {
  try {
    if (j.value("format", std::string{}) != kCheckpointFormat) throw ConfigError("not a daec checkpoint");
    ModelCheckpoint c;
    c.version = j.at("version").get<int>();
    if (c.version != kCheckpointVersion)
      throw ConfigError("checkpoint version " + std::to_string(c.version) + " is not supported (expected " +
                        std::to_string(kCheckpointVersion) + ")");
    c.kind = parse_model_kind(j.at("kind").get<std::string>());
    c.config = train_config_from_json(j.at("config"));
    c.scaler = {j.at("scaler").at("lo").get<double>(), j.at("scaler").at("hi").get<double>()};
    c.dataset_fingerprint = j.at("dataset").at("fingerprint").get<std::string>();
    c.dataset_length = j.at("dataset").at("length").get<std::size_t>();
    c.train_metrics = metrics_from_json(j.at("metrics").at("train"));
    c.test_metrics = metrics_from_json(j.at("metrics").at("test"));
    for (const auto& [name, a] : j.at("params").items()) {
      const auto shape = a.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2) throw ConfigError("checkpoint: parameter " + name + " must have a 2-d shape");
      c.params.add(name, shape[0], shape[1], a.at("data").get<std::vector<double>>());
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  } catch (const DimensionError& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const ModelCheckpoint& c, const std::string& path) { write_text_file(path, dump(to_json(c))); }

inline ModelCheckpoint load_checkpoint(const std::string& path) { return checkpoint_from_json(read_json_file(path)); }

/// Rebuilds a typed model: shapes come from the stored config, values from
/// the stored arrays (every name and shape must match).
inline AnyModel model_from_checkpoint(const ModelCheckpoint& c) {
  AnyModel m = make_initial_model(c.kind, c.config);
  try {
    std::visit([&](auto& model) { from_bundle(model, c.params); }, m);
  } catch (const DimensionError& e) {
    throw ConfigError(std::string("checkpoint parameters do not match its config: ") + e.what());
  }
  return m;
}

// ---------------------------------------------------------------------------
// CSV outputs

inline std::string loss_history_csv(std::span<const PhaseHistory> phases) {
  std::ostringstream out;
  out.precision(17);
  out << "phase,epoch,mean_loss\n";
  for (const auto& p : phases)
    for (std::size_t e = 0; e < p.losses.size(); ++e) out << p.phase << ',' << e + 1 << ',' << p.losses[e] << '\n';
  return out.str();
}

inline std::string predictions_csv(const Predictions& p) {
  std::ostringstream out;
  out.precision(17);
  out << "index,truth,prediction\n";
  for (std::size_t k = 0; k < p.index.size(); ++k) out << p.index[k] << ',' << p.truth[k] << ',' << p.prediction[k] << '\n';
  return out.str();
}

}  // namespace daec
