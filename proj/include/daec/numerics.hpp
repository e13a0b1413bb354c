#pragma once

// Dense 64-bit array math shared by all models, plus the named-parameter
// protocol used for gradients, optimizer state and checkpoints.
//
// Every model type M provides an ADL-visible
//
//   template <class Self, class F> void visit_params(Self& m, const std::string& prefix, F&& f);
//
// which calls f(name, span, rows, cols) once per parameter array, in a fixed
// order. Self may be const or not; the span element constness follows it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "daec/errors.hpp"

namespace daec {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("Matrix: data length " + std::to_string(data_.size()) + " != " +
                           std::to_string(rows_) + "x" + std::to_string(cols_));
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline void check_dims(bool ok, const char* what) {
  if (!ok) throw DimensionError(what);
}

/// W x + b.
inline Vector affine(const Matrix& W, std::span<const double> x, std::span<const double> b) {
  if (W.cols() != x.size())
    throw DimensionError("affine: W has " + std::to_string(W.cols()) + " cols but x has length " +
                         std::to_string(x.size()));
  if (W.rows() != b.size())
    throw DimensionError("affine: W has " + std::to_string(W.rows()) + " rows but b has length " +
                         std::to_string(b.size()));
  Vector out(b.begin(), b.end());
  const double* w = W.data().data();
  for (std::size_t i = 0; i < W.rows(); ++i) {
    double acc = 0.0;
    const double* row = w + i * W.cols();
    for (std::size_t j = 0; j < W.cols(); ++j) acc += row[j] * x[j];
    out[i] += acc;
  }
  return out;
}

/// out += Wᵀ g
inline void accumulate_transposed(const Matrix& W, std::span<const double> g, std::span<double> out) {
  check_dims(W.rows() == g.size() && W.cols() == out.size(), "accumulate_transposed: shape mismatch");
  const double* w = W.data().data();
  for (std::size_t i = 0; i < W.rows(); ++i) {
    const double gi = g[i];
    if (gi == 0.0) continue;
    const double* row = w + i * W.cols();
    for (std::size_t j = 0; j < W.cols(); ++j) out[j] += row[j] * gi;
  }
}

/// dW += g ⊗ x
inline void accumulate_outer(Matrix& dW, std::span<const double> g, std::span<const double> x) {
  check_dims(dW.rows() == g.size() && dW.cols() == x.size(), "accumulate_outer: shape mismatch");
  double* w = dW.data().data();
  for (std::size_t i = 0; i < dW.rows(); ++i) {
    const double gi = g[i];
    if (gi == 0.0) continue;
    double* row = w + i * dW.cols();
    for (std::size_t j = 0; j < dW.cols(); ++j) row[j] += gi * x[j];
  }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  check_dims(a.size() == b.size(), "dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Two-branch form: exp() is only ever taken of a non-positive argument.
inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline Vector sigmoid(std::span<const double> z) {
  Vector out(z.size());
  std::transform(z.begin(), z.end(), out.begin(), [](double v) { return sigmoid(v); });
  return out;
}

inline Vector tanh_act(std::span<const double> z) {
  Vector out(z.size());
  std::transform(z.begin(), z.end(), out.begin(), [](double v) { return std::tanh(v); });
  return out;
}

inline Vector softmax(std::span<const double> scores) {
  if (scores.empty()) throw DomainError("softmax: empty input");
  const double mx = *std::max_element(scores.begin(), scores.end());
  Vector out(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - mx);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

inline Vector concat(std::span<const double> a, std::span<const double> b) {
  Vector out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

/// Uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
inline void fill_fan_in_uniform(Matrix& W, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(W.cols(), 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : W.data()) v = dist(rng);
}

// ---------------------------------------------------------------------------
// Named parameter arrays

struct NamedArray {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  bool operator==(const NamedArray&) const = default;
};

/// Named map of arrays, shape-matched to the parameters of some model.
class GradientBundle {
 public:
  using Map = std::map<std::string, NamedArray>;

  void add(const std::string& name, std::size_t rows, std::size_t cols, std::vector<double> values) {
    if (values.size() != rows * cols) throw DimensionError("GradientBundle: bad shape for " + name);
    if (!arrays_.emplace(name, NamedArray{rows, cols, std::move(values)}).second)
      throw DimensionError("GradientBundle: duplicate parameter " + name);
  }

  const NamedArray& at(const std::string& name) const {
    auto it = arrays_.find(name);
    if (it == arrays_.end()) throw DimensionError("GradientBundle: no parameter named " + name);
    return it->second;
  }
  NamedArray& at(const std::string& name) {
    auto it = arrays_.find(name);
    if (it == arrays_.end()) throw DimensionError("GradientBundle: no parameter named " + name);
    return it->second;
  }
  bool contains(const std::string& name) const { return arrays_.count(name) != 0; }
  std::size_t size() const noexcept { return arrays_.size(); }
  std::size_t coordinate_count() const {
    std::size_t n = 0;
    for (const auto& [_, a] : arrays_) n += a.values.size();
    return n;
  }

  Map& arrays() noexcept { return arrays_; }
  const Map& arrays() const noexcept { return arrays_; }

  bool operator==(const GradientBundle&) const = default;

 private:
  Map arrays_;
};

template <class Self, class F>
  requires std::is_same_v<std::remove_const_t<Self>, GradientBundle>
void visit_params(Self& bundle, const std::string& prefix, F&& f) {
  for (auto& [name, arr] : bundle.arrays()) f(prefix + name, std::span(arr.values), arr.rows, arr.cols);
}

template <class M>
GradientBundle to_bundle(const M& model) {
  GradientBundle out;
  visit_params(model, std::string{}, [&](const std::string& name, auto values, std::size_t r, std::size_t c) {
    out.add(name, r, c, std::vector<double>(values.begin(), values.end()));
  });
  return out;
}

template <class M>
std::size_t parameter_count(const M& model) {
  std::size_t n = 0;
  visit_params(model, std::string{}, [&](const std::string&, auto values, std::size_t, std::size_t) {
    n += values.size();
  });
  return n;
}

/// All parameter arrays of a model in visitation order.
template <class M>
  requires(!std::is_const_v<M>)
std::vector<std::span<double>> param_spans(M& model) {
  std::vector<std::span<double>> out;
  visit_params(model, std::string{}, [&](const std::string&, std::span<double> v, std::size_t, std::size_t) {
    out.push_back(v);
  });
  return out;
}

template <class M>
std::vector<std::span<const double>> param_spans(const M& model) {
  std::vector<std::span<const double>> out;
  visit_params(model, std::string{}, [&](const std::string&, std::span<const double> v, std::size_t, std::size_t) {
    out.push_back(v);
  });
  return out;
}

/// Overwrite every parameter of target from a bundle with exactly the same
/// names and shapes.
template <class M>
void from_bundle(M& target, const GradientBundle& bundle) {
  std::size_t seen = 0;
  visit_params(target, std::string{}, [&](const std::string& name, std::span<double> v, std::size_t r, std::size_t c) {
    const NamedArray& a = bundle.at(name);
    if (a.rows != r || a.cols != c)
      throw DimensionError("from_bundle: shape mismatch for " + name + ": expected " + std::to_string(r) + "x" +
                           std::to_string(c) + ", got " + std::to_string(a.rows) + "x" + std::to_string(a.cols));
    std::copy(a.values.begin(), a.values.end(), v.begin());
    ++seen;
  });
  if (seen != bundle.size()) throw DimensionError("from_bundle: bundle has parameters the model does not");
}

/// Copy of a model with every parameter set to zero (gradient accumulator).
template <class M>
M zeros_like(const M& m) {
  M out = m;
  for (auto span : param_spans(out)) std::fill(span.begin(), span.end(), 0.0);
  return out;
}

/// Central-difference gradient of a scalar function of a parameter set.
/// The parameter value is copied; f receives the perturbed copy.
template <class Params, class F>
GradientBundle finite_diff_gradient(F&& f, const Params& params, double eps) {
  if (!(eps > 0.0)) throw DomainError("finite_diff_gradient: eps must be positive");
  Params work = params;
  GradientBundle out;
  std::vector<std::pair<std::string, std::span<double>>> arrays;
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  visit_params(work, std::string{}, [&](const std::string& name, std::span<double> v, std::size_t r, std::size_t c) {
    arrays.emplace_back(name, v);
    shapes.emplace_back(r, c);
  });
  auto eval = [&]() {
    const double y = f(static_cast<const Params&>(work));
    if (!std::isfinite(y)) throw EvaluationError("finite_diff_gradient: non-finite function value");
    return y;
  };
  for (std::size_t a = 0; a < arrays.size(); ++a) {
    auto& [name, values] = arrays[a];
    std::vector<double> grad(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double saved = values[k];
      values[k] = saved + eps;
      const double up = eval();
      values[k] = saved - eps;
      const double down = eval();
      values[k] = saved;
      grad[k] = (up - down) / (2.0 * eps);
    }
    out.add(name, shapes[a].first, shapes[a].second, std::move(grad));
  }
  return out;
}

/// max over coordinates of |a - n| / max(|a|, |n|, 1e-8).
inline double gradient_check(const GradientBundle& analytic, const GradientBundle& numeric) {
  if (analytic.size() != numeric.size())
    throw DimensionError("gradient_check: bundles have different parameter counts");
  double worst = 0.0;
  for (const auto& [name, a] : analytic.arrays()) {
    if (!numeric.contains(name)) throw DimensionError("gradient_check: numeric bundle lacks " + name);
    const auto& n = numeric.at(name);
    if (a.rows != n.rows || a.cols != n.cols) throw DimensionError("gradient_check: shape mismatch for " + name);
    for (std::size_t k = 0; k < a.values.size(); ++k) {
      const double av = a.values[k];
      const double nv = n.values[k];
      const double denom = std::max({std::abs(av), std::abs(nv), 1e-8});
      worst = std::max(worst, std::abs(av - nv) / denom);
    }
  }
  return worst;
}

}  // namespace daec
