#pragma once

// Brute-force references for the ranking metrics and the signed-rank test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

namespace oracle {

/// All-pairs Mann-Whitney count as an exact fraction numerator / denominator.
struct PairCount {
  std::uint64_t twice_wins;  // 2 * wins + ties
  std::uint64_t twice_pairs;
  double auc() const { return static_cast<double>(twice_wins) / static_cast<double>(twice_pairs); }
};

inline PairCount roc_pairs(const std::vector<double>& s, const std::vector<int>& y) {
  PairCount c{0, 0};
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      c.twice_pairs += 2;
      if (s[i] > s[j]) c.twice_wins += 2;
      else if (s[i] == s[j]) c.twice_wins += 1;
    }
  }
  return c;
}

/// Enumerates each distinct threshold t (descending), computing precision and
/// recall of {score >= t} from scratch, then sums (R_i - R_{i-1}) P_i.
inline double pr_auc_by_thresholds(const std::vector<double>& s, const std::vector<int>& y) {
  std::set<double, std::greater<>> thresholds(s.begin(), s.end());
  double positives = 0;
  for (int l : y) positives += l;
  double prev_r = 0, area = 0;
  for (double t : thresholds) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= t) (y[i] ? tp : fp) += 1;
    }
    const double r = tp / positives;
    area += (r - prev_r) * tp / (tp + fp);
    prev_r = r;
  }
  return area;
}

/// Two-sided exact p-value by enumerating all 2^n sign assignments of the
/// nonzero differences' average ranks: P(min(W+, W-) <= observed).
struct SignedRankExact {
  double statistic;
  double p_value;
};

inline SignedRankExact wilcoxon_enumerate(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) d.push_back(a[i] - b[i]);
  }
  const std::size_t n = d.size();
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(d[j]) < std::abs(d[i])) less += 1;
      else if (std::abs(d[j]) == std::abs(d[i])) equal += 1;
    }
    ranks[i] = less + (equal + 1) / 2.0;
  }
  double wp = 0, wm = 0;
  for (std::size_t i = 0; i < n; ++i) (d[i] > 0 ? wp : wm) += ranks[i];
  const double observed = std::min(wp, wm);
  std::uint64_t hits = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    double p = 0, m = 0;
    for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1 ? p : m) += ranks[i];
    if (std::min(p, m) <= observed + 1e-9) ++hits;
  }
  return {observed, static_cast<double>(hits) / std::ldexp(1.0, static_cast<int>(n))};
}

}  // namespace oracle
