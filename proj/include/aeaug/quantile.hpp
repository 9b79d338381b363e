#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "aeaug/error.hpp"

namespace aeaug {

/// Quantile of already-sorted data by linear interpolation between closest
/// ranks: position p * (n - 1).
inline double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ContractError("quantile of empty data");
  if (!(p >= 0.0 && p <= 1.0)) throw ContractError("quantile level must lie in [0,1]");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, p);
}

}  // namespace aeaug
