#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "drats/error.hpp"
#include "drats/rng.hpp"

namespace drats {

// (j - j_min) / (j_max - j_min) clamped to [0, 1].
inline double normalized_return(double j, double j_min, double j_max) {
  require(j_max > j_min, "normalized_return: j_max must exceed j_min");
  return std::clamp((j - j_min) / (j_max - j_min), 0.0, 1.0);
}

inline double mean(std::span<const double> xs) {
  require(!xs.empty(), "mean: empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Linear-interpolated quantile of sorted data, p in [0, 1].
inline double quantile_sorted(std::span<const double> sorted, double p) {
  require(!sorted.empty(), "quantile: empty sample");
  const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

// Percentile bootstrap interval for the mean.
inline Interval bootstrap_ci(std::span<const double> samples, double level, std::size_t n_resamples, Engine& rng) {
  require(samples.size() >= 2, "bootstrap_ci: need at least two samples");
  require(level >= 0.0 && level < 1.0, "bootstrap_ci: level must lie in [0, 1)");
  require(n_resamples >= 1, "bootstrap_ci: need at least one resample");
  const std::size_t n = samples.size();
  std::vector<double> means(n_resamples);
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const auto idx = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
      s += samples[std::min(idx, n - 1)];
    }
    m = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double tail = (1.0 - level) / 2.0;
  return {quantile_sorted(means, tail), quantile_sorted(means, 1.0 - tail)};
}

}  // namespace drats
