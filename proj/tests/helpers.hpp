#pragma once

#include <random>
#include <vector>

#include "daec/numerics.hpp"

namespace testutil {

/// Every parameter of m drawn from U[lo, hi].
template <class M>
void randomize(M& m, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto s : daec::param_spans(m))
    for (double& v : s) v = dist(rng);
}

inline std::vector<double> uniform(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> out(n);
  for (double& v : out) v = dist(rng);
  return out;
}

}  // namespace testutil
