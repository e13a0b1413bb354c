#pragma once

// Analytic-vs-central-difference comparison of every model's training loss
// on a random tiny instance.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "daec/experiment.hpp"
#include "daec/numerics.hpp"

namespace daec {

struct GradcheckRequest {
  ModelKind kind = ModelKind::DaecLstm;
  std::size_t hidden_size = 4;
  std::size_t window_len = 5;
  std::size_t stacked_layers = 3;
  std::uint64_t seed = 1;
  double eps = 1e-5;
  double tolerance = 1e-4;
  std::size_t max_parameters = 2000;
  bool corrupt = false;  // negative control: perturb one analytic coordinate
};

struct GradcheckResult {
  double max_relative_error = 0.0;
  std::size_t parameters = 0;
  bool passed = false;
};

namespace detail {

/// Draws every parameter from [-1, 1]. Narrower ranges let gradients of the
/// lowest stacked layer fall near 1e-8, below what central differences at
/// eps = 1e-5 resolve.
template <class M>
void randomize(M& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (auto s : param_spans(m))
    for (double& v : s) v = dist(rng);
}

inline std::vector<double> random_values(std::size_t n, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> out(n);
  for (double& v : out) v = dist(rng);
  return out;
}

template <class M, class Loss, class Backprop>
GradcheckResult compare(const M& model, Loss&& loss, Backprop&& backprop, const GradcheckRequest& req) {
  GradcheckResult r;
  r.parameters = parameter_count(model);
  M grad = zeros_like(model);
  backprop(model, grad);
  GradientBundle analytic = to_bundle(grad);
  if (req.corrupt) {
    auto& first = analytic.arrays().begin()->second.values.front();
    first = first * 1.5 + 1e-3;
  }
  const GradientBundle numeric = finite_diff_gradient(loss, model, req.eps);
  r.max_relative_error = gradient_check(analytic, numeric);
  r.passed = r.max_relative_error < req.tolerance;
  return r;
}

}  // namespace detail

inline GradcheckResult run_gradcheck(const GradcheckRequest& req) {
  if (req.hidden_size == 0 || req.window_len == 0) throw ConfigError("gradcheck: sizes must be >= 1");
  TrainConfig cfg;
  cfg.hidden_size = req.hidden_size;
  cfg.ec_hidden_size = req.hidden_size;
  cfg.window_len = req.window_len;
  cfg.stacked_layers = req.stacked_layers;
  cfg.seed = req.seed;
  AnyModel any = make_initial_model(req.kind, cfg);
  if (parameter_count(any) > req.max_parameters)
    throw ConfigError("gradcheck: " + std::to_string(parameter_count(any)) + " parameters exceeds limit of " +
                      std::to_string(req.max_parameters));

  std::mt19937_64 rng(derive_seed(req.seed, 99));
  const auto window = detail::random_values(req.window_len, rng, -1.0, 1.0);
  const auto lead = detail::random_values(2, rng, -1.0, 1.0);
  const auto errors = detail::random_values(req.window_len, rng, -0.5, 0.5);
  const double target = detail::random_values(1, rng, -2.0, 2.0).front();
  const std::array<double, 2> lead_in{lead[0], lead[1]};

  auto sq = [target](double y) { return (target - y) * (target - y); };

  return std::visit(
      [&](auto model) -> GradcheckResult {
        using M = std::decay_t<decltype(model)>;
        detail::randomize(model, rng);
        if constexpr (std::is_same_v<M, LstmModel>) {
          return detail::compare(
              model, [&](const M& m) { return sq(lstm_predict(m, window)); },
              [&](const M& m, M& g) { lstm_predict_backprop(m, window, squared_error_grad(target), g); }, req);
        } else if constexpr (std::is_same_v<M, StackedLstmModel>) {
          return detail::compare(
              model, [&](const M& m) { return sq(stacked_lstm_predict(m, window)); },
              [&](const M& m, M& g) { stacked_predict_backprop(m, window, squared_error_grad(target), g); }, req);
        } else if constexpr (std::is_same_v<M, DaLstmModel>) {
          return detail::compare(
              model, [&](const M& m) { return sq(da_forward(m, lead_in, window)); },
              [&](const M& m, M& g) { da_predict_backprop(m, lead_in, window, squared_error_grad(target), g); }, req);
        } else if constexpr (std::is_same_v<M, LstmEcCascade>) {
          // Loss2 on the residual model alone.
          const EcLstmModel ec = model.ec;
          return detail::compare(
              ec, [&](const EcLstmModel& m) { return sq(ec_forward(m, errors)); },
              [&](const EcLstmModel& m, EcLstmModel& g) {
                lstm_predict_backprop(m, errors, squared_error_grad(target), g);
              },
              req);
        } else {
          // Joint loss; residual inputs held fixed on both sides.
          CascadeSample s;
          s.lead_in = lead_in;
          s.input = window;
          s.error_input = errors;
          s.target = target;
          return detail::compare(
              model, [&](const M& m) { return sq(daec_predict(m, s.lead_in, s.input, s.error_input)); },
              [&](const M& m, M& g) { joint_sample_backprop(m, s, g); }, req);
        }
      },
      any);
}

}  // namespace daec
