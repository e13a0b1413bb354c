#pragma once

// Series generation, CSV ingestion, min-max scaling and sliding windows.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "daec/errors.hpp"

namespace daec {

struct JumpRecord {
  std::size_t index = 0;
  double magnitude = 0.0;
  bool operator==(const JumpRecord&) const = default;
};

/// Generator provenance carried alongside a synthetic series.
struct SeriesMetadata {
  std::string kind;
  std::uint64_t seed = 0;
  std::map<std::string, double> knobs;
  std::vector<JumpRecord> jumps;  // level shifts (jump-sine) or slope breaks (piecewise-ramp)
};

struct TimeSeries {
  std::string name;
  std::vector<double> values;
  SeriesMetadata metadata;

  std::size_t size() const noexcept { return values.size(); }
  void validate() const {
    if (values.empty()) throw DomainError("TimeSeries '" + name + "' is empty");
    for (std::size_t i = 0; i < values.size(); ++i)
      if (!std::isfinite(values[i]))
        throw DomainError("TimeSeries '" + name + "': non-finite value at index " + std::to_string(i));
  }
};

// ---------------------------------------------------------------------------
// Synthetic generators

enum class SeriesKind { Sine, JumpSine, PiecewiseRamp, NoisySawtooth };

inline SeriesKind parse_series_kind(const std::string& s) {
  if (s == "sine") return SeriesKind::Sine;
  if (s == "jump-sine") return SeriesKind::JumpSine;
  if (s == "piecewise-ramp") return SeriesKind::PiecewiseRamp;
  if (s == "noisy-sawtooth") return SeriesKind::NoisySawtooth;
  throw ConfigError("unknown series kind '" + s + "' (expected sine | jump-sine | piecewise-ramp | noisy-sawtooth)");
}

inline std::string to_string(SeriesKind k) {
  switch (k) {
    case SeriesKind::Sine: return "sine";
    case SeriesKind::JumpSine: return "jump-sine";
    case SeriesKind::PiecewiseRamp: return "piecewise-ramp";
    case SeriesKind::NoisySawtooth: return "noisy-sawtooth";
  }
  return "?";
}

struct SyntheticSpec {
  SeriesKind kind = SeriesKind::JumpSine;
  std::size_t length = 2000;
  std::uint64_t seed = 7;
  double offset = 20.0;
  double amplitude = 1.0;
  double period = 50.0;
  std::size_t jumps = 6;     // level shifts (jump-sine) / slope breaks (piecewise-ramp)
  double jump_scale = 1.0;   // |jump| drawn uniformly from [0.5, 1.5] * jump_scale
  double noise_sigma = 0.0;
  double slope_scale = 0.02; // piecewise-ramp: slopes uniform in [-slope_scale, slope_scale]
};

namespace detail {

/// k distinct sorted positions in [1, length-1].
inline std::vector<std::size_t> pick_positions(std::size_t count, std::size_t length, std::mt19937_64& rng) {
  if (length < 2 || count == 0) return {};
  if (count > length - 1) throw ConfigError("more breakpoints requested than series positions");
  std::uniform_int_distribution<std::size_t> pos(1, length - 1);
  std::set<std::size_t> picked;
  while (picked.size() < count) picked.insert(pos(rng));
  return {picked.begin(), picked.end()};
}

}  // namespace detail

inline TimeSeries generate_synthetic(const SyntheticSpec& spec) {
  if (spec.length == 0) throw ConfigError("generate_synthetic: length must be >= 1");
  for (double knob : {spec.offset, spec.amplitude, spec.period, spec.jump_scale, spec.noise_sigma, spec.slope_scale})
    if (!std::isfinite(knob)) throw ConfigError("generate_synthetic: non-finite knob");
  if (spec.period <= 0.0) throw ConfigError("generate_synthetic: period must be positive");
  if (spec.noise_sigma < 0.0) throw ConfigError("generate_synthetic: noise_sigma must be >= 0");

  std::mt19937_64 rng(spec.seed);
  TimeSeries ts;
  ts.name = to_string(spec.kind);
  ts.metadata.kind = ts.name;
  ts.metadata.seed = spec.seed;
  ts.metadata.knobs = {{"length", static_cast<double>(spec.length)},
                       {"offset", spec.offset},
                       {"amplitude", spec.amplitude},
                       {"period", spec.period},
                       {"noise_sigma", spec.noise_sigma}};
  ts.values.resize(spec.length);
  const double two_pi = 2.0 * std::numbers::pi;
  const auto n = spec.length;

  switch (spec.kind) {
    case SeriesKind::Sine:
      for (std::size_t t = 0; t < n; ++t)
        ts.values[t] = spec.offset + spec.amplitude * std::sin(two_pi * static_cast<double>(t) / spec.period);
      break;
    case SeriesKind::JumpSine: {
      ts.metadata.knobs["jumps"] = static_cast<double>(spec.jumps);
      ts.metadata.knobs["jump_scale"] = spec.jump_scale;
      const auto positions = detail::pick_positions(spec.jumps, n, rng);
      std::uniform_real_distribution<double> mag(0.5, 1.5);
      std::bernoulli_distribution sign(0.5);
      // Shifts revert toward zero whenever a free sign would push the level
      // past 1.5 * jump_scale, so regimes stay in a bounded band.
      double walk = 0.0;
      for (std::size_t p : positions) {
        double j = (sign(rng) ? 1.0 : -1.0) * spec.jump_scale * mag(rng);
        if (std::abs(walk + j) > 1.5 * spec.jump_scale) j = -j;
        walk += j;
        ts.metadata.jumps.push_back({p, j});
      }
      double level = 0.0;
      std::size_t next = 0;
      for (std::size_t t = 0; t < n; ++t) {
        while (next < ts.metadata.jumps.size() && ts.metadata.jumps[next].index == t)
          level += ts.metadata.jumps[next++].magnitude;
        ts.values[t] =
            spec.offset + spec.amplitude * std::sin(two_pi * static_cast<double>(t) / spec.period) + level;
      }
      break;
    }
    case SeriesKind::PiecewiseRamp: {
      ts.metadata.knobs["jumps"] = static_cast<double>(spec.jumps);
      ts.metadata.knobs["slope_scale"] = spec.slope_scale;
      const auto positions = detail::pick_positions(spec.jumps, n, rng);
      std::uniform_real_distribution<double> slope_dist(-spec.slope_scale, spec.slope_scale);
      double slope = slope_dist(rng);
      std::size_t next = 0;
      double v = spec.offset;
      for (std::size_t t = 0; t < n; ++t) {
        if (next < positions.size() && positions[next] == t) {
          const double s = slope_dist(rng);
          ts.metadata.jumps.push_back({t, s - slope});
          slope = s;
          ++next;
        }
        if (t > 0) v += slope;
        ts.values[t] = v;
      }
      break;
    }
    case SeriesKind::NoisySawtooth:
      for (std::size_t t = 0; t < n; ++t) {
        const double phase = std::fmod(static_cast<double>(t), spec.period) / spec.period;
        ts.values[t] = spec.offset + spec.amplitude * phase;
      }
      break;
  }

  if (spec.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (double& v : ts.values) v += noise(rng);
  }
  return ts;
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::size_t used = 0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == s.size() && std::isfinite(out);
}

}  // namespace detail

/// One observation per row. A non-numeric first line is a header; with more
/// than one column the header must name a "value" column.
inline TimeSeries load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  TimeSeries ts;
  ts.name = path;
  std::string line;
  std::size_t line_no = 0;
  std::size_t column = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto cells = detail::split_csv_line(line);
    if (first) {
      first = false;
      double probe = 0.0;
      const bool numeric = std::all_of(cells.begin(), cells.end(),
                                       [&](const std::string& c) { return detail::parse_double(c, probe); });
      if (!numeric) {
        if (cells.size() > 1) {
          auto it = std::find(cells.begin(), cells.end(), "value");
          if (it == cells.end()) throw ParseError(path + ": multi-column header has no 'value' column", line_no);
          column = static_cast<std::size_t>(it - cells.begin());
        }
        continue;
      }
      if (cells.size() > 1) throw ParseError(path + ": multi-column CSV needs a header naming 'value'", line_no);
    }
    double v = 0.0;
    if (column >= cells.size() || !detail::parse_double(cells[column], v))
      throw ParseError(path + ": unparseable value '" + (column < cells.size() ? cells[column] : "") + "'", line_no);
    ts.values.push_back(v);
  }
  if (ts.values.empty()) throw DomainError(path + ": no observations");
  return ts;
}

/// Header "index,value"; values written with round-trip precision.
inline void write_csv(const TimeSeries& ts, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out.precision(17);
  out << "index,value\n";
  for (std::size_t i = 0; i < ts.values.size(); ++i) out << i << ',' << ts.values[i] << '\n';
  if (!out) throw IoError("write failed for " + path);
}

/// 64-bit FNV-1a over the raw bytes of the values.
inline std::uint64_t fingerprint_values(std::span<const double> values) {
  std::uint64_t h = 1469598103934665603ull;
  for (double v : values) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ull;
    }
  }
  return h;
}

// ---------------------------------------------------------------------------
// Scaling

struct ScalerParams {
  double lo = 0.0;
  double hi = 1.0;

  double apply(double v) const { return (v - lo) / (hi - lo); }
  double invert(double s) const { return s * (hi - lo) + lo; }
  bool operator==(const ScalerParams&) const = default;
};

inline ScalerParams fit_scaler(std::span<const double> train) {
  if (train.empty()) throw DomainError("fit_scaler: empty training data");
  const auto [mn, mx] = std::minmax_element(train.begin(), train.end());
  if (!(*mx > *mn)) throw DomainError("fit_scaler: degenerate range (constant training series)");
  return {*mn, *mx};
}

inline std::vector<double> apply_scaler(const ScalerParams& s, std::span<const double> values) {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), [&](double v) { return s.apply(v); });
  return out;
}

inline std::vector<double> invert_scaler(const ScalerParams& s, std::span<const double> values) {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), [&](double v) { return s.invert(v); });
  return out;
}

// ---------------------------------------------------------------------------
// Windows

struct WindowSample {
  std::array<double, 2> lead_in{};  // x_{t-2}, x_{t-1}
  std::vector<double> input;        // x_t .. x_{t+n}
  double target = 0.0;              // x_{t+n+1}
  std::size_t index = 0;            // position of target in the source series
};

inline std::size_t min_series_length(std::size_t window_len) { return window_len + 3; }

/// Stride-1 windows; count = length - window_len - 2.
inline std::vector<WindowSample> make_windows(std::span<const double> series, std::size_t window_len) {
  if (window_len == 0) throw ConfigError("make_windows: window_len must be >= 1");
  if (series.size() < min_series_length(window_len))
    throw DomainError("make_windows: series length " + std::to_string(series.size()) + " < minimum " +
                      std::to_string(min_series_length(window_len)) + " for window_len " +
                      std::to_string(window_len));
  const std::size_t count = series.size() - window_len - 2;
  std::vector<WindowSample> out(count);
  for (std::size_t s = 0; s < count; ++s) {
    WindowSample& w = out[s];
    w.lead_in = {series[s], series[s + 1]};
    w.input.assign(series.begin() + static_cast<std::ptrdiff_t>(s + 2),
                   series.begin() + static_cast<std::ptrdiff_t>(s + 2 + window_len));
    w.index = s + 2 + window_len;
    w.target = series[w.index];
  }
  return out;
}

/// Chronological: the first floor(fraction * N) samples train.
template <class T>
std::pair<std::vector<T>, std::vector<T>> train_test_split(const std::vector<T>& samples, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ConfigError("train_test_split: fraction must lie in (0, 1), got " + std::to_string(fraction));
  const auto n_train = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(samples.size())));
  return {std::vector<T>(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(n_train)),
          std::vector<T>(samples.begin() + static_cast<std::ptrdiff_t>(n_train), samples.end())};
}

}  // namespace daec
