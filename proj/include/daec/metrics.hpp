#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "daec/errors.hpp"

namespace daec {

namespace detail {
inline void check_pair(std::span<const double> truth, std::span<const double> pred, const char* who) {
  if (truth.size() != pred.size())
    throw DomainError(std::string(who) + ": length mismatch (" + std::to_string(truth.size()) + " vs " +
                      std::to_string(pred.size()) + ")");
  if (truth.empty()) throw DomainError(std::string(who) + ": empty input");
}
}  // namespace detail

inline double mse(std::span<const double> truth, std::span<const double> pred) {
  detail::check_pair(truth, pred, "mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) acc += (truth[i] - pred[i]) * (truth[i] - pred[i]);
  return acc / static_cast<double>(truth.size());
}

inline double rmse(std::span<const double> truth, std::span<const double> pred) {
  return std::sqrt(mse(truth, pred));
}

/// Mean |x - x̂| / |x| as a fraction.
inline double mape(std::span<const double> truth, std::span<const double> pred) {
  detail::check_pair(truth, pred, "mape");
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (std::abs(truth[i]) < 1e-12)
      throw DomainError("mape: truth value at index " + std::to_string(i) + " is too close to zero");
    acc += std::abs(truth[i] - pred[i]) / std::abs(truth[i]);
  }
  return acc / static_cast<double>(truth.size());
}

struct MetricsReport {
  double mse = 0.0;
  double rmse = 0.0;
  double mape = 0.0;  // fraction
  std::size_t n = 0;
  bool operator==(const MetricsReport&) const = default;
};

inline MetricsReport report(std::span<const double> truth, std::span<const double> pred) {
  MetricsReport r;
  r.mse = mse(truth, pred);
  r.rmse = std::sqrt(r.mse);
  r.mape = mape(truth, pred);
  r.n = truth.size();
  return r;
}

inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

/// MSE to 4 decimals, MAPE as a percentage to 2 decimals.
inline std::string format_mse(double v) { return format_fixed(v, 4); }
inline std::string format_mape(double fraction) { return format_fixed(fraction * 100.0, 2) + "%"; }

inline std::string render_row(const MetricsReport& r) { return format_mse(r.mse) + ", " + format_mape(r.mape); }

struct NamedReport {
  std::string method;
  MetricsReport metrics;
};

/// Aligned text table, one row per method.
inline std::string render_table(std::span<const NamedReport> rows) {
  std::size_t width = 6;
  for (const auto& r : rows) width = std::max(width, r.method.size());
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(w, s.size()), ' ');
    return s;
  };
  std::string out = pad("Method", width) + "  " + pad("MSE", 10) + "  " + pad("RMSE", 10) + "  " + pad("MAPE", 8) +
                    "  N\n";
  for (const auto& r : rows) {
    out += pad(r.method, width) + "  " + pad(format_mse(r.metrics.mse), 10) + "  " +
           pad(format_fixed(r.metrics.rmse, 4), 10) + "  " + pad(format_mape(r.metrics.mape), 8) + "  " +
           std::to_string(r.metrics.n) + "\n";
  }
  return out;
}

}  // namespace daec
