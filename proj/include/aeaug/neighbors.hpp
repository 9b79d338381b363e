#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "aeaug/matrix.hpp"

namespace aeaug {

struct Neighbor {
  std::size_t index;
  double distance;
};

/// Exact k nearest rows of `points` to `query` by Euclidean distance, ties
/// broken by lowest row index. `exclude` removes one row (the query itself).
inline std::vector<Neighbor> k_nearest(const Matrix& points, std::span<const double> query,
                                       std::size_t k, std::optional<std::size_t> exclude = {}) {
  std::vector<Neighbor> all;
  all.reserve(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    if (exclude && *exclude == i) continue;
    all.push_back({i, std::sqrt(squared_distance(points.row(i), query))});
  }
  k = std::min(k, all.size());
  auto closer = [](const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), closer);
  all.resize(k);
  return all;
}

/// k-distance neighbourhood: every row no farther than the k-th nearest
/// distance, so ties at the boundary may yield more than k members. Members
/// are in row order; ties are decided on squared distances.
struct Neighborhood {
  double k_distance = 0.0;
  std::vector<Neighbor> members;
};

inline Neighborhood k_distance_neighborhood(const Matrix& points, std::span<const double> query,
                                            std::size_t k, std::optional<std::size_t> exclude = {}) {
  thread_local std::vector<double> sq, scratch;
  sq.resize(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) sq[i] = squared_distance(points.row(i), query);
  const std::size_t available = points.rows() - (exclude && *exclude < points.rows() ? 1 : 0);
  Neighborhood nb;
  if (available == 0 || k == 0) return nb;
  k = std::min(k, available);

  scratch.clear();
  for (std::size_t i = 0; i < points.rows(); ++i) {
    if (!(exclude && *exclude == i)) scratch.push_back(sq[i]);
  }
  std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k - 1), scratch.end());
  const double kth = scratch[k - 1];
  nb.k_distance = std::sqrt(kth);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    if (exclude && *exclude == i) continue;
    if (sq[i] <= kth) nb.members.push_back({i, std::sqrt(sq[i])});
  }
  return nb;
}

}  // namespace aeaug
