#pragma once

// Difference-feature attention LSTM. Each step's hidden state is extended
// with the squared first differences preceding it, an additive attention
// scores every extended state, and the readout sees their weighted sum.

#include <array>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "daec/lstm.hpp"
#include "daec/numerics.hpp"

namespace daec {

/// ((x_{t-1} - x_{t-2})^2, (x_t - x_{t-1})^2)
using DiffFeature = std::array<double, 2>;

/// lead_in holds the two raw points that precede window[0].
inline std::vector<DiffFeature> difference_features(std::span<const double> lead_in,
                                                    std::span<const double> window) {
  if (lead_in.size() != 2) throw DimensionError("difference_features: lead_in must hold exactly 2 values");
  if (window.empty()) throw DomainError("difference_features: empty window");
  std::vector<DiffFeature> out(window.size());
  auto at = [&](std::ptrdiff_t k) { return k < 0 ? lead_in[static_cast<std::size_t>(k + 2)] : window[k]; };
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(window.size()); ++k) {
    const double d1 = at(k - 1) - at(k - 2);
    const double d2 = at(k) - at(k - 1);
    out[static_cast<std::size_t>(k)] = {d1 * d1, d2 * d2};
  }
  return out;
}

/// [d; h]
inline Vector concat_hidden(std::span<const double> h, const DiffFeature& d) { return concat(d, h); }

struct AttentionParams {
  Matrix W_a;  // A x (H+2)
  Vector v_a;  // A
  Vector b_a;  // A

  static AttentionParams zeros(std::size_t feature_width, std::size_t attention_width) {
    return {Matrix(attention_width, feature_width), Vector(attention_width, 0.0), Vector(attention_width, 0.0)};
  }
  static AttentionParams random(std::size_t feature_width, std::size_t attention_width, std::mt19937_64& rng) {
    AttentionParams a = zeros(feature_width, attention_width);
    fill_fan_in_uniform(a.W_a, rng);
    const double bound = 1.0 / std::sqrt(static_cast<double>(attention_width));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : a.v_a) v = dist(rng);
    return a;
  }
  bool operator==(const AttentionParams&) const = default;
};

template <class Self, class F>
  requires std::is_same_v<std::remove_const_t<Self>, AttentionParams>
void visit_params(Self& a, const std::string& prefix, F&& f) {
  f(prefix + "W_a", std::span(a.W_a.data()), a.W_a.rows(), a.W_a.cols());
  f(prefix + "v_a", std::span(a.v_a), a.v_a.size(), std::size_t{1});
  f(prefix + "b_a", std::span(a.b_a), a.b_a.size(), std::size_t{1});
}

/// v_a · tanh(W_a h̃ + b_a)
inline double attention_score(const AttentionParams& attn, std::span<const double> feature) {
  check_dims(attn.v_a.size() == attn.W_a.rows(), "attention: v_a length != attention width");
  const Vector u = tanh_act(affine(attn.W_a, feature, attn.b_a));
  return dot(attn.v_a, u);
}

inline Vector attention_weights(const AttentionParams& attn, std::span<const Vector> features) {
  if (features.empty()) throw DomainError("attention_weights: empty sequence");
  Vector scores(features.size());
  for (std::size_t k = 0; k < features.size(); ++k) scores[k] = attention_score(attn, features[k]);
  return softmax(scores);
}

inline Vector context_vector(std::span<const double> weights, std::span<const Vector> features) {
  if (weights.size() != features.size())
    throw DimensionError("context_vector: " + std::to_string(weights.size()) + " weights for " +
                         std::to_string(features.size()) + " features");
  if (features.empty()) throw DomainError("context_vector: empty sequence");
  Vector theta(features.front().size(), 0.0);
  for (std::size_t k = 0; k < features.size(); ++k) {
    check_dims(features[k].size() == theta.size(), "context_vector: ragged features");
    for (std::size_t j = 0; j < theta.size(); ++j) theta[j] += weights[k] * features[k][j];
  }
  return theta;
}

struct DaLstmModel {
  LstmParams lstm;
  AttentionParams attn;
  OutputHead head;  // reads the context vector, width H+2

  static DaLstmModel zeros(std::size_t hidden_size, std::size_t attention_width) {
    return {LstmParams::zeros(1, hidden_size), AttentionParams::zeros(hidden_size + 2, attention_width),
            OutputHead{Vector(hidden_size + 2, 0.0), 0.0}};
  }
  /// attention_width 0 means "same as hidden_size".
  static DaLstmModel random(std::size_t hidden_size, std::size_t attention_width, std::mt19937_64& rng) {
    if (attention_width == 0) attention_width = hidden_size;
    DaLstmModel m;
    m.lstm = LstmParams::random(1, hidden_size, rng);
    m.attn = AttentionParams::random(hidden_size + 2, attention_width, rng);
    m.head = random_head(hidden_size + 2, rng);
    return m;
  }

  void validate() const {
    lstm.validate();
    check_dims(lstm.input_size == 1, "DaLstmModel: input_size must be 1");
    check_dims(attn.W_a.cols() == lstm.hidden_size + 2, "DaLstmModel: attention width mismatch");
    check_dims(head.w.size() == lstm.hidden_size + 2, "DaLstmModel: head width must be hidden_size + 2");
  }
  bool operator==(const DaLstmModel&) const = default;
};

template <class Self, class F>
  requires std::is_same_v<std::remove_const_t<Self>, DaLstmModel>
void visit_params(Self& m, const std::string& prefix, F&& f) {
  visit_params(m.lstm, prefix + "lstm.", f);
  visit_params(m.attn, prefix + "attn.", f);
  visit_params(m.head, prefix + "head.", f);
}

/// Everything the forward pass computes, for inspection and backprop.
struct DaForwardResult {
  double prediction = 0.0;
  LstmTrace lstm;
  std::vector<Vector> features;  // h̃_k = [d_k; h_k]
  std::vector<Vector> attn_hidden;  // tanh(W_a h̃_k + b_a)
  Vector weights;
  Vector context;
};

inline DaForwardResult da_forward_detailed(const DaLstmModel& m, std::span<const double> lead_in,
                                           std::span<const double> window) {
  if (window.empty()) throw DomainError("da_forward: empty window");
  m.validate();
  DaForwardResult r;
  const auto diffs = difference_features(lead_in, window);
  r.lstm = lstm_forward_traced(m.lstm, lift_scalars(window));
  r.features.reserve(window.size());
  r.attn_hidden.reserve(window.size());
  Vector scores(window.size());
  for (std::size_t k = 0; k < window.size(); ++k) {
    r.features.push_back(concat_hidden(r.lstm.hidden[k], diffs[k]));
    r.attn_hidden.push_back(tanh_act(affine(m.attn.W_a, r.features[k], m.attn.b_a)));
    scores[k] = dot(m.attn.v_a, r.attn_hidden[k]);
  }
  r.weights = softmax(scores);
  r.context = context_vector(r.weights, r.features);
  r.prediction = m.head.apply(r.context);
  return r;
}

inline double da_forward(const DaLstmModel& m, std::span<const double> lead_in, std::span<const double> window) {
  return da_forward_detailed(m, lead_in, window).prediction;
}

template <class DLoss>
double da_predict_backprop(const DaLstmModel& m, std::span<const double> lead_in, std::span<const double> window,
                           DLoss&& dloss_dy, DaLstmModel& grad) {
  const DaForwardResult r = da_forward_detailed(m, lead_in, window);
  const double dy = dloss_dy(r.prediction);
  const std::size_t T = window.size();
  const std::size_t F = m.head.w.size();
  const std::size_t H = m.lstm.hidden_size;
  const std::size_t A = m.attn.v_a.size();

  for (std::size_t j = 0; j < F; ++j) grad.head.w[j] += dy * r.context[j];
  grad.head.b += dy;

  Vector d_context(F);
  for (std::size_t j = 0; j < F; ++j) d_context[j] = dy * m.head.w[j];

  // softmax backward: ds_k = α_k (dα_k - Σ_j α_j dα_j)
  Vector d_weight(T);
  double mean = 0.0;
  for (std::size_t k = 0; k < T; ++k) {
    d_weight[k] = dot(d_context, r.features[k]);
    mean += r.weights[k] * d_weight[k];
  }

  std::vector<Vector> dh(T, Vector(H, 0.0));
  Vector d_feature(F);
  Vector d_pre(A);
  for (std::size_t k = 0; k < T; ++k) {
    const double d_score = r.weights[k] * (d_weight[k] - mean);
    for (std::size_t j = 0; j < F; ++j) d_feature[j] = r.weights[k] * d_context[j];
    for (std::size_t a = 0; a < A; ++a) {
      const double u = r.attn_hidden[k][a];
      grad.attn.v_a[a] += d_score * u;
      d_pre[a] = d_score * m.attn.v_a[a] * (1.0 - u * u);
      grad.attn.b_a[a] += d_pre[a];
    }
    accumulate_outer(grad.attn.W_a, d_pre, r.features[k]);
    accumulate_transposed(m.attn.W_a, d_pre, d_feature);
    // difference features are inputs, only the hidden part flows back
    std::copy(d_feature.begin() + 2, d_feature.end(), dh[k].begin());
  }
  lstm_backward(m.lstm, r.lstm, dh, grad.lstm);
  return r.prediction;
}

}  // namespace daec
