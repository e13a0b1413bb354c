#pragma once

// Residual series of a base forecaster and the LSTM that predicts its next
// residual.

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "daec/data.hpp"
#include "daec/diff_attention.hpp"
#include "daec/lstm.hpp"

namespace daec {

/// Same mechanics as the plain LSTM forecaster, fed residuals instead of values.
using EcLstmModel = LstmModel;

inline double ec_forward(const EcLstmModel& m, std::span<const double> error_window) {
  if (error_window.empty()) throw DomainError("ec_forward: empty error window");
  return lstm_predict(m, error_window);
}

/// 64-bit FNV-1a over parameter names and values; identifies a model version.
template <class M>
std::uint64_t model_fingerprint(const M& m) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  };
  visit_params(m, std::string{}, [&](const std::string& name, auto values, std::size_t, std::size_t) {
    mix(name.data(), name.size());
    mix(values.data(), values.size_bytes());
  });
  return h;
}

/// e[k] = x_u - x̂_u for u = first_index + k.
struct ErrorSeries {
  std::vector<double> e;
  std::size_t first_index = 0;
  std::uint64_t origin = 0;  // fingerprint of the base model that produced it

  std::size_t end_index() const noexcept { return first_index + e.size(); }
  double at(std::size_t u) const { return e.at(u - first_index); }
};

/// Residuals of any base predictor (lead_in, window) -> x̂ over every series
/// position with a complete history of 2 + window_len points.
template <class Predictor>
ErrorSeries build_error_series(Predictor&& predict, std::span<const double> series, std::size_t window_len,
                               std::uint64_t origin) {
  if (window_len == 0) throw ConfigError("build_error_series: window_len must be >= 1");
  if (series.size() < window_len + 3)
    throw DomainError("build_error_series: series length " + std::to_string(series.size()) +
                      " is below the required minimum " + std::to_string(window_len + 3));
  ErrorSeries out;
  out.first_index = window_len + 2;
  out.origin = origin;
  out.e.reserve(series.size() - out.first_index);
  for (std::size_t u = out.first_index; u < series.size(); ++u) {
    const auto lead_in = series.subspan(u - window_len - 2, 2);
    const auto window = series.subspan(u - window_len, window_len);
    out.e.push_back(series[u] - predict(lead_in, window));
  }
  return out;
}

inline ErrorSeries build_error_series(const DaLstmModel& da, std::span<const double> series, std::size_t window_len) {
  return build_error_series(
      [&](std::span<const double> lead_in, std::span<const double> window) { return da_forward(da, lead_in, window); },
      series, window_len, model_fingerprint(da));
}

struct ResidualSample {
  std::vector<double> input;  // e_{u-W} .. e_{u-1}
  double target = 0.0;        // e_u
  std::size_t index = 0;      // u
};

/// Residual windows whose target position u lies in [begin, end).
inline std::vector<ResidualSample> make_residual_windows(const ErrorSeries& errors, std::size_t window_len,
                                                         std::size_t begin, std::size_t end) {
  std::vector<ResidualSample> out;
  const std::size_t lo = std::max(begin, errors.first_index + window_len);
  const std::size_t hi = std::min(end, errors.end_index());
  for (std::size_t u = lo; u < hi; ++u) {
    ResidualSample s;
    const std::size_t k = u - errors.first_index;
    s.input.assign(errors.e.begin() + static_cast<std::ptrdiff_t>(k - window_len),
                   errors.e.begin() + static_cast<std::ptrdiff_t>(k));
    s.target = errors.e[k];
    s.index = u;
    out.push_back(std::move(s));
  }
  return out;
}

/// Earliest target position with a full residual window: 2 + 2 * window_len.
inline std::size_t first_cascade_index(std::size_t window_len) { return 2 * window_len + 2; }

}  // namespace daec
