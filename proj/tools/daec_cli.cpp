// daec: generate | train | evaluate | compare | gradcheck
//
// Exit status: 0 success, 1 usage or configuration, 2 data, 3 verification
// failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "daec/compare.hpp"
#include "daec/gradcheck.hpp"
#include "daec/io.hpp"

namespace fs = std::filesystem;
using namespace daec;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kVerify = 3 };

struct VerificationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Run configuration: a JSON file overlaid by flags.

struct DataFlags {
  std::string csv;
  std::string kind;
  std::optional<std::size_t> length;
  std::optional<double> noise;
  std::optional<std::size_t> jumps;
  std::optional<double> jump_scale;
  std::optional<double> period;
  std::optional<double> amplitude;
  std::optional<double> offset;
};

struct TrainFlags {
  std::optional<std::size_t> window, hidden, ec_hidden, attention_width, layers;
  std::optional<std::size_t> epochs, epochs_da, epochs_ec, epochs_joint;
  std::optional<double> lr, split;
};

struct RunConfig {
  Json file = Json::object();
  std::optional<std::uint64_t> seed;
  std::optional<SyntheticSpec> synthetic;
  std::optional<std::string> csv;
  TrainConfig train;
  std::string output_dir = "daec_out";
};

RunConfig load_run_config(const std::string& path) {
  RunConfig rc;
  if (path.empty()) return rc;
  rc.file = read_json_file(path);
  detail::reject_unknown(rc.file, {"model", "models", "seed", "seeds", "data", "train", "output_dir"}, "config");
  if (rc.file.contains("seed")) rc.seed = rc.file.at("seed").get<std::uint64_t>();
  if (rc.file.contains("output_dir")) rc.output_dir = rc.file.at("output_dir").get<std::string>();
  if (rc.file.contains("train")) merge_train_config(rc.file.at("train"), rc.train);
  if (rc.file.contains("data")) {
    const Json& d = rc.file.at("data");
    detail::reject_unknown(d, {"csv", "synthetic"}, "data");
    if (d.contains("csv") && d.contains("synthetic")) throw ConfigError("data: give either csv or synthetic, not both");
    if (d.contains("csv")) rc.csv = d.at("csv").get<std::string>();
    if (d.contains("synthetic")) {
      SyntheticSpec s;
      merge_synthetic_spec(d.at("synthetic"), s);
      rc.synthetic = s;
    }
  }
  return rc;
}

void apply_data_flags(RunConfig& rc, const DataFlags& f) {
  const bool any_synth = !f.kind.empty() || f.length || f.noise || f.jumps || f.jump_scale || f.period ||
                         f.amplitude || f.offset;
  if (!f.csv.empty() && any_synth) throw ConfigError("--data cannot be combined with synthetic generator flags");
  if (!f.csv.empty()) {
    rc.csv = f.csv;
    rc.synthetic.reset();
  }
  if (any_synth) {
    rc.csv.reset();
    SyntheticSpec s = rc.synthetic.value_or(SyntheticSpec{});
    if (!f.kind.empty()) s.kind = parse_series_kind(f.kind);
    if (f.length) {
      if (*f.length == 0) throw ConfigError("--length must be >= 1");
      s.length = *f.length;
    }
    if (f.noise) s.noise_sigma = *f.noise;
    if (f.jumps) s.jumps = *f.jumps;
    if (f.jump_scale) s.jump_scale = *f.jump_scale;
    if (f.period) s.period = *f.period;
    if (f.amplitude) s.amplitude = *f.amplitude;
    if (f.offset) s.offset = *f.offset;
    rc.synthetic = s;
  }
}

void apply_train_flags(TrainConfig& c, const TrainFlags& f) {
  if (f.window) c.window_len = *f.window;
  if (f.hidden) c.hidden_size = *f.hidden;
  if (f.ec_hidden) c.ec_hidden_size = *f.ec_hidden;
  if (f.attention_width) c.attention_width = *f.attention_width;
  if (f.layers) c.stacked_layers = *f.layers;
  if (f.epochs) c.epochs_da = c.epochs_ec = c.epochs_joint = *f.epochs;
  if (f.epochs_da) c.epochs_da = *f.epochs_da;
  if (f.epochs_ec) c.epochs_ec = *f.epochs_ec;
  if (f.epochs_joint) c.epochs_joint = *f.epochs_joint;
  if (f.lr) c.adam.lr = *f.lr;
  if (f.split) c.split = *f.split;
}

void add_data_flags(CLI::App* app, DataFlags& f) {
  app->add_option("--data", f.csv, "Series CSV");
  app->add_option("--kind", f.kind, "Synthetic series kind (sine | jump-sine | piecewise-ramp | noisy-sawtooth)");
  app->add_option("--length", f.length, "Synthetic series length");
  app->add_option("--noise", f.noise, "Gaussian noise sigma");
  app->add_option("--jumps", f.jumps, "Level shifts / slope breaks");
  app->add_option("--jump-scale", f.jump_scale, "Jump magnitude scale");
  app->add_option("--period", f.period, "Sine / sawtooth period");
  app->add_option("--amplitude", f.amplitude, "Sine / sawtooth amplitude");
  app->add_option("--offset", f.offset, "Constant offset");
}

void add_train_flags(CLI::App* app, TrainFlags& f) {
  app->add_option("--window", f.window, "Input window length");
  app->add_option("--hidden", f.hidden, "Hidden size of the forecaster");
  app->add_option("--ec-hidden", f.ec_hidden, "Hidden size of the residual model");
  app->add_option("--attention-width", f.attention_width, "Attention width (0: hidden size)");
  app->add_option("--layers", f.layers, "Stacked LSTM layers");
  app->add_option("--epochs", f.epochs, "Epochs for every phase");
  app->add_option("--epochs-da", f.epochs_da, "Forecaster epochs");
  app->add_option("--epochs-ec", f.epochs_ec, "Residual model epochs");
  app->add_option("--epochs-joint", f.epochs_joint, "Joint fine-tuning epochs");
  app->add_option("--lr", f.lr, "Adam learning rate");
  app->add_option("--split", f.split, "Training fraction of the windows");
}

std::uint64_t require_seed(const std::optional<std::uint64_t>& seed) {
  if (!seed) throw ConfigError("a seed is required (--seed or \"seed\" in the config file)");
  return *seed;
}

TimeSeries load_dataset(const RunConfig& rc) {
  if (rc.csv && rc.synthetic) throw ConfigError("exactly one dataset source is allowed");
  if (rc.csv) return load_csv(*rc.csv);
  if (rc.synthetic) return generate_synthetic(*rc.synthetic);
  throw ConfigError("no dataset: give --data CSV or synthetic generator settings");
}

std::string model_from(const RunConfig& rc, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (rc.file.contains("model")) return rc.file.at("model").get<std::string>();
  throw ConfigError("a model is required (--model or \"model\" in the config file)");
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

std::string describe_epochs(const std::map<std::string, std::size_t>& epochs) {
  std::string out;
  for (const char* phase : {"base", "da", "ec", "joint"}) {
    auto it = epochs.find(phase);
    if (it == epochs.end()) continue;
    if (!out.empty()) out += "+";
    out += std::string(phase) + ":" + std::to_string(it->second);
  }
  return out;
}

Json epochs_json(const std::map<std::string, std::size_t>& epochs) {
  Json j = Json::object();
  for (const char* phase : {"base", "da", "ec", "joint"})
    if (auto it = epochs.find(phase); it != epochs.end()) j[phase] = it->second;
  return j;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_generate(const std::string& config_path, const DataFlags& df, std::optional<std::uint64_t> seed,
                 const std::string& out) {
  RunConfig rc = load_run_config(config_path);
  if (rc.csv || !df.csv.empty()) throw ConfigError("generate: the data source must be synthetic");
  if (!rc.synthetic) rc.synthetic = SyntheticSpec{};
  apply_data_flags(rc, df);
  SyntheticSpec spec = *rc.synthetic;
  const bool seed_in_file = rc.file.contains("data") && rc.file.at("data").at("synthetic").contains("seed");
  if (seed) {
    spec.seed = *seed;
  } else if (rc.seed) {
    spec.seed = *rc.seed;
  } else if (!seed_in_file) {
    require_seed(std::nullopt);
  }

  const TimeSeries ts = generate_synthetic(spec);
  if (const auto parent = fs::path(out).parent_path(); !parent.empty()) ensure_dir(parent.string());
  write_csv(ts, out);
  write_text_file(sidecar_path(out), dump(sidecar_json(ts)));
  std::cout << "wrote " << ts.size() << " values to " << out << " (" << ts.metadata.jumps.size()
            << " breakpoints, fingerprint " << hex64(fingerprint_values(ts.values)) << ")\n";
  return kOk;
}

ModelCheckpoint make_checkpoint(const TrainedRun& run, ModelKind kind, const TrainConfig& cfg,
                                const PreparedData& data, const EvaluationSummary& s) {
  ModelCheckpoint c;
  c.kind = kind;
  c.config = cfg;
  c.scaler = data.scaler;
  c.dataset_fingerprint = hex64(fingerprint_values(data.raw.values));
  c.dataset_length = data.raw.size();
  c.params = to_bundle(run.model);
  c.train_metrics = s.train;
  c.test_metrics = s.test;
  return c;
}

Json metrics_document(const std::string& model, const EvaluationSummary& s) {
  return Json{{"model", model},
              {"train", to_json(s.train)},
              {"test", to_json(s.test)},
              {"train_scaled_mse", s.train_scaled_mse},
              {"test_scaled_mse", s.test_scaled_mse}};
}

int cmd_train(const std::string& config_path, const std::string& model_flag, const DataFlags& df,
              const TrainFlags& tf, std::optional<std::uint64_t> seed, const std::string& out_flag) {
  RunConfig rc = load_run_config(config_path);
  apply_data_flags(rc, df);
  apply_train_flags(rc.train, tf);
  if (seed) rc.seed = seed;
  rc.train.seed = require_seed(rc.seed);
  const std::string out_dir = out_flag.empty() ? rc.output_dir : out_flag;
  const ModelKind kind = parse_model_kind(model_from(rc, model_flag));
  rc.train.validate();

  const PreparedData data = prepare_data(load_dataset(rc), rc.train);
  if (is_cascade(kind) && data.train_end <= first_cascade_index(rc.train.window_len))
    throw DomainError(to_string(kind) + ": training split ends at index " + std::to_string(data.train_end) +
                      " but residual windows start at " + std::to_string(first_cascade_index(rc.train.window_len)));
  const TrainedRun run = train_model(kind, data, rc.train);
  const EvaluationSummary s = summarize(run.model, data, rc.train.window_len);

  ensure_dir(out_dir);
  save_checkpoint(make_checkpoint(run, kind, rc.train, data, s), join(out_dir, "checkpoint.json"));
  write_text_file(join(out_dir, "loss_history.csv"), loss_history_csv(run.histories));
  Json metrics = metrics_document(to_string(kind), s);
  metrics["epochs"] = epochs_json(run.epochs);
  write_text_file(join(out_dir, "metrics.json"), dump(metrics));

  const std::vector<NamedReport> rows{{to_string(kind) + " train", s.train}, {to_string(kind) + " test", s.test}};
  std::cout << render_table(rows);
  std::printf("scaled MSE: train %.6g, test %.6g\n", s.train_scaled_mse, s.test_scaled_mse);
  std::cout << "epochs " << describe_epochs(run.epochs) << "\nwrote " << out_dir << "/{checkpoint.json,loss_history.csv,metrics.json}\n";
  return kOk;
}

int cmd_evaluate(const std::string& checkpoint_path, const std::string& config_path, const DataFlags& df,
                 const std::string& part, const std::string& out_flag) {
  const ModelCheckpoint ckpt = load_checkpoint(checkpoint_path);
  RunConfig rc = load_run_config(config_path);
  apply_data_flags(rc, df);
  const std::string out_dir = out_flag.empty() ? rc.output_dir : out_flag;
  const AnyModel model = model_from_checkpoint(ckpt);
  const TrainConfig& cfg = ckpt.config;

  const PreparedData data = prepare_data(load_dataset(rc), cfg, ckpt.scaler);
  if (hex64(fingerprint_values(data.raw.values)) != ckpt.dataset_fingerprint)
    std::cerr << "note: dataset differs from the one the checkpoint was trained on\n";
  const std::size_t first = first_target_index(ckpt.kind, cfg.window_len);
  std::size_t begin = data.train_end, end = data.raw.size();
  if (part == "train") {
    begin = first;
    end = data.train_end;
  } else if (part == "all") {
    begin = first;
  } else if (part != "test") {
    throw ConfigError("--part must be train | test | all");
  }
  if (begin < first || end <= begin)
    throw DomainError("dataset of length " + std::to_string(data.raw.size()) + " has no " + part +
                      " targets for window " + std::to_string(cfg.window_len));

  const Predictions p = evaluate_range(model, data, cfg.window_len, begin, end);
  const MetricsReport r = report(p.truth, p.prediction);
  ensure_dir(out_dir);
  write_text_file(join(out_dir, "predictions.csv"), predictions_csv(p));
  Json metrics{{"model", to_string(ckpt.kind)}, {"part", part}, {part, to_json(r)}, {"scaled_mse", p.scaled_mse}};
  write_text_file(join(out_dir, "metrics.json"), dump(metrics));
  const std::vector<NamedReport> rows{{to_string(ckpt.kind) + " " + part, r}};
  std::cout << render_table(rows);
  std::cout << "wrote " << out_dir << "/{predictions.csv,metrics.json}\n";
  return kOk;
}

std::string compare_table(const CompareResult& res, const std::vector<ModelKind>& models) {
  struct Line {
    std::string seed, method;
    MetricsReport m;
    std::string epochs;
  };
  std::vector<Line> lines;
  for (const auto& r : res.rows)
    lines.push_back({std::to_string(r.seed), to_string(r.kind), r.summary.test, describe_epochs(r.epochs)});
  for (ModelKind k : models) {
    std::string epochs;
    for (const auto& r : res.rows)
      if (r.kind == k) epochs = describe_epochs(r.epochs);
    lines.push_back({"median", to_string(k), median_report(res, k), epochs});
  }
  std::size_t sw = 6, mw = 6;
  for (const auto& l : lines) {
    sw = std::max(sw, l.seed.size());
    mw = std::max(mw, l.method.size());
  }
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(w, s.size()), ' ');
    return s;
  };
  std::string out = pad("Seed", sw) + "  " + pad("Method", mw) + "  " + pad("MSE", 10) + "  " + pad("RMSE", 10) +
                    "  " + pad("MAPE", 8) + "  " + pad("N", 6) + "  Epochs\n";
  for (const auto& l : lines)
    out += pad(l.seed, sw) + "  " + pad(l.method, mw) + "  " + pad(format_mse(l.m.mse), 10) + "  " +
           pad(format_fixed(l.m.rmse, 4), 10) + "  " + pad(format_mape(l.m.mape), 8) + "  " +
           pad(std::to_string(l.m.n), 6) + "  " + l.epochs + "\n";
  return out;
}

int cmd_compare(const std::string& config_path, std::vector<std::string> model_names, const DataFlags& df,
                const TrainFlags& tf, std::vector<std::uint64_t> seeds, const std::string& out_flag) {
  RunConfig rc = load_run_config(config_path);
  apply_data_flags(rc, df);
  apply_train_flags(rc.train, tf);
  if (model_names.empty() && rc.file.contains("models"))
    model_names = rc.file.at("models").get<std::vector<std::string>>();
  if (seeds.empty() && rc.file.contains("seeds")) seeds = rc.file.at("seeds").get<std::vector<std::uint64_t>>();
  if (seeds.empty() && rc.seed) seeds = {*rc.seed};
  if (seeds.empty()) require_seed(std::nullopt);

  CompareRequest req;
  for (const auto& n : model_names) req.models.push_back(parse_model_kind(n));
  req.seeds = seeds;
  req.config = rc.train;
  if (rc.csv) req.series = load_csv(*rc.csv);
  else req.synthetic = rc.synthetic;
  validate(req);

  const auto res = run_comparison(req, [](const CompareRow& r) {
    std::fprintf(stderr, "seed %llu %-10s test MSE %.6g\n", static_cast<unsigned long long>(r.seed),
                 to_string(r.kind).c_str(), r.summary.test.mse);
  });
  std::cout << compare_table(res, req.models);

  if (!out_flag.empty() || rc.file.contains("output_dir")) {
    const std::string out_dir = out_flag.empty() ? rc.output_dir : out_flag;
    ensure_dir(out_dir);
    Json rows = Json::array();
    for (const auto& r : res.rows) {
      Json row = metrics_document(to_string(r.kind), r.summary);
      row["seed"] = r.seed;
      row["epochs"] = epochs_json(r.epochs);
      rows.push_back(row);
    }
    Json medians = Json::object();
    for (ModelKind k : req.models) medians[to_string(k)] = to_json(median_report(res, k));
    Json doc{{"config", to_json(req.config)}, {"rows", rows}, {"median_test", medians}};
    if (req.synthetic) doc["synthetic"] = to_json(*req.synthetic);
    write_text_file(join(out_dir, "compare.json"), dump(doc));
    std::cout << "wrote " << out_dir << "/compare.json\n";
  }
  return kOk;
}

int cmd_gradcheck(const std::vector<std::string>& models, std::vector<std::uint64_t> seeds, GradcheckRequest base) {
  if (seeds.empty()) require_seed(std::nullopt);
  std::vector<ModelKind> kinds;
  for (const auto& m : models) {
    if (m == "all") {
      kinds = {ModelKind::Lstm, ModelKind::StackedLstm, ModelKind::DaLstm, ModelKind::EcLstm, ModelKind::DaecLstm};
    } else {
      kinds.push_back(parse_model_kind(m));
    }
  }
  bool ok = true;
  for (ModelKind k : kinds)
    for (std::uint64_t seed : seeds) {
      GradcheckRequest req = base;
      req.kind = k;
      req.seed = seed;
      const GradcheckResult r = run_gradcheck(req);
      std::printf("%-10s seed %-4llu params %-5zu max_rel_error %.3e  %s\n", to_string(k).c_str(),
                  static_cast<unsigned long long>(seed), r.parameters, r.max_relative_error, r.passed ? "PASS" : "FAIL");
      ok = ok && r.passed;
    }
  if (!ok) throw VerificationFailure("gradient check failed (tolerance " + std::to_string(base.tolerance) + ")");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Difference-attention and error-correction LSTM forecasting"};
  app.require_subcommand(1);

  std::string config_path, out_path, out_dir, model_flag, checkpoint_path, part = "test";
  std::vector<std::string> model_list;
  std::vector<std::uint64_t> seed_list;
  std::optional<std::uint64_t> seed;
  DataFlags df;
  TrainFlags tf;
  GradcheckRequest gc;

  auto* gen = app.add_subcommand("generate", "Write a synthetic series CSV and its JSON sidecar");
  gen->add_option("--config", config_path, "Run config JSON (uses data.synthetic)");
  add_data_flags(gen, df);
  gen->add_option("--seed", seed, "Generator seed");
  gen->add_option("--out", out_path, "Output CSV path")->required();

  auto* train = app.add_subcommand("train", "Train one model and write checkpoint, loss history and metrics");
  train->add_option("--config", config_path, "Run config JSON");
  train->add_option("--model", model_flag, "lstm | s-lstm | da-lstm | ec-lstm | daec-lstm");
  add_data_flags(train, df);
  add_train_flags(train, tf);
  train->add_option("--seed", seed, "Training seed");
  train->add_option("--out-dir", out_dir, "Output directory");

  auto* eval = app.add_subcommand("evaluate", "Evaluate a checkpoint; write predictions and metrics");
  eval->add_option("--checkpoint", checkpoint_path, "Checkpoint JSON")->required();
  eval->add_option("--config", config_path, "Run config JSON (dataset source)");
  add_data_flags(eval, df);
  eval->add_option("--part", part, "train | test | all");
  eval->add_option("--out-dir", out_dir, "Output directory");

  auto* cmp = app.add_subcommand("compare", "Train several models under one budget over several seeds");
  cmp->add_option("--config", config_path, "Run config JSON");
  cmp->add_option("--models", model_list, "Comma-separated model kinds")->delimiter(',');
  add_data_flags(cmp, df);
  add_train_flags(cmp, tf);
  cmp->add_option("--seeds", seed_list, "Comma-separated seeds")->delimiter(',');
  cmp->add_option("--out-dir", out_dir, "Write compare.json here");

  auto* grad = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  grad->add_option("--model", model_list, "Model kind(s) or 'all'")->delimiter(',')->required();
  grad->add_option("--seed", seed_list, "Seed(s)")->delimiter(',');
  grad->add_option("--hidden", gc.hidden_size, "Hidden size")->capture_default_str();
  grad->add_option("--window", gc.window_len, "Window length")->capture_default_str();
  grad->add_option("--layers", gc.stacked_layers, "Stacked layers")->capture_default_str();
  grad->add_option("--eps", gc.eps, "Finite-difference step")->capture_default_str();
  grad->add_option("--tolerance", gc.tolerance, "Maximum relative error")->capture_default_str();
  grad->add_option("--max-parameters", gc.max_parameters, "Refuse larger models")->capture_default_str();
  grad->add_flag("--corrupt", gc.corrupt, "Perturb one analytic coordinate (negative control)")->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_generate(config_path, df, seed, out_path);
    if (*train) return cmd_train(config_path, model_flag, df, tf, seed, out_dir);
    if (*eval) return cmd_evaluate(checkpoint_path, config_path, df, part, out_dir);
    if (*cmp) return cmd_compare(config_path, model_list, df, tf, seed_list, out_dir);
    if (*grad) return cmd_gradcheck(model_list, seed_list, gc);
  } catch (const VerificationFailure& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return kVerify;
  } catch (const EvaluationError& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return kVerify;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const DomainError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const IoError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
