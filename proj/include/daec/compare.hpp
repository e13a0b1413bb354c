#pragma once

// Several model kinds trained on the same data, seed and epoch budget,
// repeated over a list of seeds.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "daec/experiment.hpp"

namespace daec {

struct CompareRequest {
  std::vector<ModelKind> models;
  std::vector<std::uint64_t> seeds;
  TrainConfig config;
  // Exactly one source. A synthetic source is regenerated with each run's
  // seed; a fixed series only varies the training seed.
  std::optional<SyntheticSpec> synthetic;
  std::optional<TimeSeries> series;
};

struct CompareRow {
  ModelKind kind = ModelKind::Lstm;
  std::uint64_t seed = 0;
  EvaluationSummary summary;
  std::map<std::string, std::size_t> epochs;
};

struct CompareResult {
  std::vector<CompareRow> rows;  // seed-major, models in requested order

  std::vector<double> test_mse(ModelKind kind) const {
    std::vector<double> out;
    for (const auto& r : rows)
      if (r.kind == kind) out.push_back(r.summary.test.mse);
    return out;
  }
};

inline double median(std::vector<double> v) {
  if (v.empty()) throw DomainError("median of an empty sequence");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Median of each metric over the rows of one kind.
inline MetricsReport median_report(const CompareResult& res, ModelKind kind) {
  std::vector<double> mse, rmse, mape;
  std::size_t n = 0;
  for (const auto& r : res.rows)
    if (r.kind == kind) {
      mse.push_back(r.summary.test.mse);
      rmse.push_back(r.summary.test.rmse);
      mape.push_back(r.summary.test.mape);
      n = r.summary.test.n;
    }
  return {median(mse), median(rmse), median(mape), n};
}

inline void validate(const CompareRequest& req) {
  if (req.models.size() < 2) throw ConfigError("compare: at least 2 models are required");
  for (std::size_t a = 0; a < req.models.size(); ++a)
    for (std::size_t b = a + 1; b < req.models.size(); ++b)
      if (req.models[a] == req.models[b]) throw ConfigError("compare: model " + to_string(req.models[a]) + " listed twice");
  if (req.seeds.empty()) throw ConfigError("compare: at least one seed is required");
  if (req.synthetic.has_value() == req.series.has_value())
    throw ConfigError("compare: exactly one dataset source is required");
  req.config.validate();
}

using CompareProgress = std::function<void(const CompareRow&)>;

/// When both da-lstm and daec-lstm are requested, the da-lstm row reuses the
/// cascade's first-phase model; both are trained from the same seeded start
/// on the same samples, so this equals a separate run.
inline CompareResult run_comparison(const CompareRequest& req, const CompareProgress& progress = {}) {
  validate(req);
  const bool has_daec = std::count(req.models.begin(), req.models.end(), ModelKind::DaecLstm) > 0;
  CompareResult out;
  for (std::uint64_t seed : req.seeds) {
    TrainConfig cfg = req.config;
    cfg.seed = seed;
    TimeSeries raw;
    if (req.synthetic) {
      SyntheticSpec spec = *req.synthetic;
      spec.seed = seed;
      raw = generate_synthetic(spec);
    } else {
      raw = *req.series;
    }
    const PreparedData data = prepare_data(std::move(raw), cfg);

    std::optional<DaecTraining> cascade;
    if (has_daec) cascade = train_daec(data.scaled, cfg);

    for (ModelKind kind : req.models) {
      CompareRow row;
      row.kind = kind;
      row.seed = seed;
      if (kind == ModelKind::DaecLstm) {
        row.summary = summarize(cascade->model, data, cfg.window_len);
        row.epochs = {{"da", cfg.epochs_da}, {"ec", cfg.epochs_ec}, {"joint", cfg.epochs_joint}};
      } else if (kind == ModelKind::DaLstm && cascade) {
        row.summary = summarize(cascade->da_phase, data, cfg.window_len);
        row.epochs = {{"da", cfg.epochs_da}};
      } else {
        const TrainedRun run = train_model(kind, data, cfg);
        row.summary = summarize(run.model, data, cfg.window_len);
        row.epochs = run.epochs;
      }
      if (progress) progress(row);
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

}  // namespace daec
