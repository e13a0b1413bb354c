#pragma once

// Standard LSTM cell, sequence forward/backward, and the single-layer and
// stacked forecasting models built on it.

#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "daec/numerics.hpp"

namespace daec {

/// Gate weights act on the concatenation [h_{t-1}; x_t]; biases sit inside
/// the activations.
struct LstmParams {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  Matrix W_f, W_i, W_C, W_O;
  Vector b_f, b_i, b_C, b_O;

  static LstmParams zeros(std::size_t input_size, std::size_t hidden_size) {
    LstmParams p;
    p.input_size = input_size;
    p.hidden_size = hidden_size;
    const std::size_t cols = hidden_size + input_size;
    p.W_f = p.W_i = p.W_C = p.W_O = Matrix(hidden_size, cols);
    p.b_f = p.b_i = p.b_C = p.b_O = Vector(hidden_size, 0.0);
    return p;
  }

  /// Fan-in uniform weights, zero biases.
  static LstmParams random(std::size_t input_size, std::size_t hidden_size, std::mt19937_64& rng) {
    LstmParams p = zeros(input_size, hidden_size);
    for (Matrix* W : {&p.W_f, &p.W_i, &p.W_C, &p.W_O}) fill_fan_in_uniform(*W, rng);
    return p;
  }

  void validate() const {
    const std::size_t cols = hidden_size + input_size;
    for (const Matrix* W : {&W_f, &W_i, &W_C, &W_O})
      check_dims(W->rows() == hidden_size && W->cols() == cols, "LstmParams: weight shape mismatch");
    for (const Vector* b : {&b_f, &b_i, &b_C, &b_O})
      check_dims(b->size() == hidden_size, "LstmParams: bias length mismatch");
  }

  bool operator==(const LstmParams&) const = default;
};

template <class Self, class F>
  requires std::is_same_v<std::remove_const_t<Self>, LstmParams>
void visit_params(Self& p, const std::string& prefix, F&& f) {
  const std::size_t H = p.hidden_size;
  f(prefix + "W_f", std::span(p.W_f.data()), p.W_f.rows(), p.W_f.cols());
  f(prefix + "W_i", std::span(p.W_i.data()), p.W_i.rows(), p.W_i.cols());
  f(prefix + "W_C", std::span(p.W_C.data()), p.W_C.rows(), p.W_C.cols());
  f(prefix + "W_O", std::span(p.W_O.data()), p.W_O.rows(), p.W_O.cols());
  f(prefix + "b_f", std::span(p.b_f), H, std::size_t{1});
  f(prefix + "b_i", std::span(p.b_i), H, std::size_t{1});
  f(prefix + "b_C", std::span(p.b_C), H, std::size_t{1});
  f(prefix + "b_O", std::span(p.b_O), H, std::size_t{1});
}

struct LstmState {
  Vector h;
  Vector c;

  static LstmState zeros(std::size_t hidden_size) { return {Vector(hidden_size, 0.0), Vector(hidden_size, 0.0)}; }
  bool operator==(const LstmState&) const = default;
};

/// Fully connected scalar readout: w · feature + b.
struct OutputHead {
  Vector w;
  double b = 0.0;

  double apply(std::span<const double> feature) const { return dot(w, feature) + b; }
  bool operator==(const OutputHead&) const = default;
};

template <class Self, class F>
  requires std::is_same_v<std::remove_const_t<Self>, OutputHead>
void visit_params(Self& head, const std::string& prefix, F&& f) {
  f(prefix + "w", std::span(head.w), head.w.size(), std::size_t{1});
  f(prefix + "b", std::span(&head.b, 1), std::size_t{1}, std::size_t{1});
}

inline OutputHead random_head(std::size_t width, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(width));
  std::uniform_real_distribution<double> dist(-bound, bound);
  OutputHead head{Vector(width), 0.0};
  for (double& v : head.w) v = dist(rng);
  return head;
}

/// Intermediate values of one cell step, kept for backpropagation.
struct LstmStepCache {
  Vector z;  // [h_prev; x]
  Vector f, i, g, o;
  Vector c_prev, c, tanh_c;
};

namespace detail {

/// Writes one step's intermediates into cache; returns nothing so the
/// traced path never allocates once the cache is sized.
inline void cell_step_into(const LstmParams& p, std::span<const double> h_prev, std::span<const double> c_prev,
                           std::span<const double> x, LstmStepCache& cache) {
  if (x.size() != p.input_size)
    throw DimensionError("lstm_cell_step: input length " + std::to_string(x.size()) + " != input_size " +
                         std::to_string(p.input_size));
  if (h_prev.size() != p.hidden_size || c_prev.size() != p.hidden_size)
    throw DimensionError("lstm_cell_step: state length does not match hidden_size");
  const std::size_t H = p.hidden_size;
  const std::size_t Z = H + p.input_size;
  for (Vector* v : {&cache.f, &cache.i, &cache.g, &cache.o, &cache.c_prev, &cache.c, &cache.tanh_c}) v->resize(H);
  cache.z.resize(Z);
  std::copy(h_prev.begin(), h_prev.end(), cache.z.begin());
  std::copy(x.begin(), x.end(), cache.z.begin() + static_cast<std::ptrdiff_t>(H));
  std::copy(c_prev.begin(), c_prev.end(), cache.c_prev.begin());

  const double* z = cache.z.data();
  const double* wf = p.W_f.data().data();
  const double* wi = p.W_i.data().data();
  const double* wg = p.W_C.data().data();
  const double* wo = p.W_O.data().data();
  for (std::size_t k = 0; k < H; ++k) {
    double af = 0.0, ai = 0.0, ag = 0.0, ao = 0.0;
    const std::size_t row = k * Z;
    for (std::size_t j = 0; j < Z; ++j) {
      af += wf[row + j] * z[j];
      ai += wi[row + j] * z[j];
      ag += wg[row + j] * z[j];
      ao += wo[row + j] * z[j];
    }
    const double f = sigmoid(af + p.b_f[k]);
    const double i = sigmoid(ai + p.b_i[k]);
    const double g = std::tanh(ag + p.b_C[k]);
    const double o = sigmoid(ao + p.b_O[k]);
    const double c = f * c_prev[k] + i * g;
    cache.f[k] = f;
    cache.i[k] = i;
    cache.g[k] = g;
    cache.o[k] = o;
    cache.c[k] = c;
    cache.tanh_c[k] = std::tanh(c);
  }
}

}  // namespace detail

/// f = σ(W_f z + b_f), i = σ(W_i z + b_i), C̃ = tanh(W_C z + b_C),
/// O = σ(W_O z + b_O) with z = [h; x]; C' = f⊙C + i⊙C̃, h' = O⊙tanh(C').
inline LstmState lstm_cell_step(const LstmParams& p, const LstmState& s, std::span<const double> x) {
  LstmStepCache cache;
  detail::cell_step_into(p, s.h, s.c, x, cache);
  LstmState next{Vector(p.hidden_size), std::move(cache.c)};
  for (std::size_t k = 0; k < p.hidden_size; ++k) next.h[k] = cache.o[k] * cache.tanh_c[k];
  return next;
}

/// Element k is the state after consuming inputs[0..=k].
inline std::vector<LstmState> lstm_forward(const LstmParams& p, std::span<const Vector> inputs,
                                           const LstmState& s0) {
  if (inputs.empty()) throw DomainError("lstm_forward: empty input sequence");
  std::vector<LstmState> out;
  out.reserve(inputs.size());
  const LstmState* prev = &s0;
  for (const Vector& x : inputs) {
    out.push_back(lstm_cell_step(p, *prev, x));
    prev = &out.back();
  }
  return out;
}

inline std::vector<LstmState> lstm_forward(const LstmParams& p, std::span<const Vector> inputs) {
  return lstm_forward(p, inputs, LstmState::zeros(p.hidden_size));
}

/// Forward pass from the zero state, retaining every step's intermediates.
struct LstmTrace {
  std::vector<LstmStepCache> steps;
  std::vector<Vector> hidden;  // h after each step
};

inline LstmTrace lstm_forward_traced(const LstmParams& p, std::span<const Vector> inputs) {
  if (inputs.empty()) throw DomainError("lstm_forward: empty input sequence");
  LstmTrace trace;
  trace.steps.resize(inputs.size());
  trace.hidden.reserve(inputs.size());
  const Vector zeros(p.hidden_size, 0.0);
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const Vector& h_prev = t == 0 ? zeros : trace.hidden[t - 1];
    const Vector& c_prev = t == 0 ? zeros : trace.steps[t - 1].c;
    LstmStepCache& step = trace.steps[t];
    detail::cell_step_into(p, h_prev, c_prev, inputs[t], step);
    Vector h(p.hidden_size);
    for (std::size_t k = 0; k < p.hidden_size; ++k) h[k] = step.o[k] * step.tanh_c[k];
    trace.hidden.push_back(std::move(h));
  }
  return trace;
}

/// Backpropagation through time. dh[t] is the loss gradient injected into the
/// hidden output of step t from outside the recurrence. Parameter gradients
/// are accumulated into grad; the return value holds dLoss/dx_t per step.
inline std::vector<Vector> lstm_backward(const LstmParams& p, const LstmTrace& trace,
                                         std::span<const Vector> dh, LstmParams& grad) {
  const std::size_t T = trace.steps.size();
  const std::size_t H = p.hidden_size;
  const std::size_t D = p.input_size;
  check_dims(dh.size() == T, "lstm_backward: dh length != sequence length");

  std::vector<Vector> dx(T, Vector(D, 0.0));
  Vector dh_next(H, 0.0);
  Vector dc_next(H, 0.0);
  Vector da_f(H), da_i(H), da_g(H), da_o(H);
  Vector dz(H + D);

  for (std::size_t t = T; t-- > 0;) {
    const LstmStepCache& s = trace.steps[t];
    check_dims(dh[t].size() == H, "lstm_backward: dh entry has wrong length");
    for (std::size_t k = 0; k < H; ++k) {
      const double dh_k = dh[t][k] + dh_next[k];
      const double d_o = dh_k * s.tanh_c[k];
      const double dc = dc_next[k] + dh_k * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]);
      const double d_f = dc * s.c_prev[k];
      const double d_i = dc * s.g[k];
      const double d_g = dc * s.i[k];
      dc_next[k] = dc * s.f[k];
      da_f[k] = d_f * s.f[k] * (1.0 - s.f[k]);
      da_i[k] = d_i * s.i[k] * (1.0 - s.i[k]);
      da_g[k] = d_g * (1.0 - s.g[k] * s.g[k]);
      da_o[k] = d_o * s.o[k] * (1.0 - s.o[k]);
    }
    const std::size_t Z = H + D;
    std::fill(dz.begin(), dz.end(), 0.0);
    double* gf = grad.W_f.data().data();
    double* gi = grad.W_i.data().data();
    double* gg = grad.W_C.data().data();
    double* go = grad.W_O.data().data();
    const double* wf = p.W_f.data().data();
    const double* wi = p.W_i.data().data();
    const double* wg = p.W_C.data().data();
    const double* wo = p.W_O.data().data();
    const double* z = s.z.data();
    for (std::size_t k = 0; k < H; ++k) {
      const double ef = da_f[k], ei = da_i[k], eg = da_g[k], eo = da_o[k];
      grad.b_f[k] += ef;
      grad.b_i[k] += ei;
      grad.b_C[k] += eg;
      grad.b_O[k] += eo;
      const std::size_t row = k * Z;
      for (std::size_t j = 0; j < Z; ++j) {
        gf[row + j] += ef * z[j];
        gi[row + j] += ei * z[j];
        gg[row + j] += eg * z[j];
        go[row + j] += eo * z[j];
        dz[j] += wf[row + j] * ef + wi[row + j] * ei + wg[row + j] * eg + wo[row + j] * eo;
      }
    }
    std::copy(dz.begin(), dz.begin() + static_cast<std::ptrdiff_t>(H), dh_next.begin());
    std::copy(dz.begin() + static_cast<std::ptrdiff_t>(H), dz.end(), dx[t].begin());
  }
  return dx;
}

/// Scalars lifted to length-1 input vectors.
inline std::vector<Vector> lift_scalars(std::span<const double> window) {
  std::vector<Vector> out;
  out.reserve(window.size());
  for (double v : window) out.push_back(Vector{v});
  return out;
}

// ---------------------------------------------------------------------------
// Single-layer forecaster: readout from the last hidden state.

struct LstmModel {
  LstmParams lstm;
  OutputHead head;

  static LstmModel zeros(std::size_t hidden_size) {
    return {LstmParams::zeros(1, hidden_size), OutputHead{Vector(hidden_size, 0.0), 0.0}};
  }
  static LstmModel random(std::size_t hidden_size, std::mt19937_64& rng) {
    LstmModel m;
    m.lstm = LstmParams::random(1, hidden_size, rng);
    m.head = random_head(hidden_size, rng);
    return m;
  }
  bool operator==(const LstmModel&) const = default;
};

template <class Self, class F>
  requires std::is_same_v<std::remove_const_t<Self>, LstmModel>
void visit_params(Self& m, const std::string& prefix, F&& f) {
  visit_params(m.lstm, prefix + "lstm.", f);
  visit_params(m.head, prefix + "head.", f);
}

inline double lstm_predict(const LstmParams& p, const OutputHead& head, std::span<const double> window) {
  if (window.empty()) throw DomainError("lstm_predict: empty window");
  check_dims(p.input_size == 1, "lstm_predict: input_size must be 1");
  check_dims(head.w.size() == p.hidden_size, "lstm_predict: head width != hidden_size");
  LstmState s = LstmState::zeros(p.hidden_size);
  for (double v : window) {
    const double x[1] = {v};
    s = lstm_cell_step(p, s, x);
  }
  return head.apply(s.h);
}

inline double lstm_predict(const LstmModel& m, std::span<const double> window) {
  return lstm_predict(m.lstm, m.head, window);
}

/// Prediction plus accumulated dLoss/dparams for loss with dLoss/dy = dloss_dy(y).
template <class DLoss>
double lstm_predict_backprop(const LstmModel& m, std::span<const double> window, DLoss&& dloss_dy,
                             LstmModel& grad) {
  if (window.empty()) throw DomainError("lstm_predict: empty window");
  const auto inputs = lift_scalars(window);
  const LstmTrace trace = lstm_forward_traced(m.lstm, inputs);
  const Vector& h_last = trace.hidden.back();
  const double y = m.head.apply(h_last);
  const double dy = dloss_dy(y);

  for (std::size_t k = 0; k < h_last.size(); ++k) grad.head.w[k] += dy * h_last[k];
  grad.head.b += dy;

  std::vector<Vector> dh(window.size(), Vector(m.lstm.hidden_size, 0.0));
  for (std::size_t k = 0; k < h_last.size(); ++k) dh.back()[k] = dy * m.head.w[k];
  lstm_backward(m.lstm, trace, dh, grad.lstm);
  return y;
}

// ---------------------------------------------------------------------------
// Stacked forecaster: layer k consumes the hidden sequence of layer k-1.

struct StackedLstmModel {
  std::vector<LstmParams> layers;
  OutputHead head;

  static StackedLstmModel random(std::size_t num_layers, std::size_t hidden_size, std::mt19937_64& rng) {
    StackedLstmModel m;
    for (std::size_t k = 0; k < num_layers; ++k)
      m.layers.push_back(LstmParams::random(k == 0 ? 1 : hidden_size, hidden_size, rng));
    m.head = random_head(hidden_size, rng);
    return m;
  }
  bool operator==(const StackedLstmModel&) const = default;
};

template <class Self, class F>
  requires std::is_same_v<std::remove_const_t<Self>, StackedLstmModel>
void visit_params(Self& m, const std::string& prefix, F&& f) {
  for (std::size_t k = 0; k < m.layers.size(); ++k)
    visit_params(m.layers[k], prefix + "layer" + std::to_string(k) + ".", f);
  visit_params(m.head, prefix + "head.", f);
}

inline void validate_stack(std::span<const LstmParams> layers, const OutputHead& head) {
  if (layers.empty()) throw DimensionError("stacked_lstm: no layers");
  if (layers.front().input_size != 1) throw DimensionError("stacked_lstm: layer 0 input_size must be 1");
  for (std::size_t k = 1; k < layers.size(); ++k)
    if (layers[k].input_size != layers[k - 1].hidden_size)
      throw DimensionError("stacked_lstm: layer " + std::to_string(k) + " input_size != layer " +
                           std::to_string(k - 1) + " hidden_size");
  if (head.w.size() != layers.back().hidden_size)
    throw DimensionError("stacked_lstm: head width != top hidden_size");
}

inline double stacked_lstm_predict(std::span<const LstmParams> layers, const OutputHead& head,
                                   std::span<const double> window) {
  if (window.empty()) throw DomainError("stacked_lstm_predict: empty window");
  validate_stack(layers, head);
  std::vector<Vector> seq = lift_scalars(window);
  for (const LstmParams& layer : layers) {
    const auto states = lstm_forward(layer, seq);
    for (std::size_t t = 0; t < seq.size(); ++t) seq[t] = states[t].h;
  }
  return head.apply(seq.back());
}

inline double stacked_lstm_predict(const StackedLstmModel& m, std::span<const double> window) {
  return stacked_lstm_predict(m.layers, m.head, window);
}

template <class DLoss>
double stacked_predict_backprop(const StackedLstmModel& m, std::span<const double> window, DLoss&& dloss_dy,
                                StackedLstmModel& grad) {
  if (window.empty()) throw DomainError("stacked_lstm_predict: empty window");
  validate_stack(m.layers, m.head);
  std::vector<LstmTrace> traces;
  traces.reserve(m.layers.size());
  std::vector<Vector> seq = lift_scalars(window);
  for (const LstmParams& layer : m.layers) {
    traces.push_back(lstm_forward_traced(layer, seq));
    seq = traces.back().hidden;
  }
  const Vector& top = seq.back();
  const double y = m.head.apply(top);
  const double dy = dloss_dy(y);
  for (std::size_t k = 0; k < top.size(); ++k) grad.head.w[k] += dy * top[k];
  grad.head.b += dy;

  std::vector<Vector> dh(window.size(), Vector(m.layers.back().hidden_size, 0.0));
  for (std::size_t k = 0; k < top.size(); ++k) dh.back()[k] = dy * m.head.w[k];
  for (std::size_t l = m.layers.size(); l-- > 0;) dh = lstm_backward(m.layers[l], traces[l], dh, grad.layers[l]);
  return y;
}

}  // namespace daec
