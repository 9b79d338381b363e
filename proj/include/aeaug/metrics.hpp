#pragma once

// Threshold-free ranking metrics, repetition aggregation, Tukey boxplot
// summaries and the Wilcoxon signed-rank test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "aeaug/error.hpp"
#include "aeaug/quantile.hpp"
#include "json.hpp"

namespace aeaug {

/// Scores (higher = more anomalous) paired with labels (1 = anomaly).
struct ScoredSet {
  std::vector<double> scores;
  std::vector<int> labels;

  void validate() const {
    if (scores.size() != labels.size()) throw ShapeError("scores and labels differ in length");
    std::size_t pos = 0;
    for (int l : labels) {
      if (l != 0 && l != 1) throw ContractError("labels must be 0 or 1");
      pos += static_cast<std::size_t>(l);
    }
    if (pos == 0 || pos == labels.size()) {
      throw ContractError("AUC needs at least one positive and one negative label");
    }
  }
};

namespace detail {

/// Indices ordered by descending score.
inline std::vector<std::size_t> descending_order(const std::vector<double>& scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace detail

/// Mann-Whitney form: P(pos > neg) + 0.5 P(tie), from integer pair counts.
inline double roc_auc(const ScoredSet& s) {
  s.validate();
  const auto order = detail::descending_order(s.scores);
  std::uint64_t pos_above = 0, neg_total = 0, pos_total = 0;
  std::uint64_t twice_wins = 0;  // 2 * (#pos > neg) + (#ties)
  // Walk ascending so each positive group sees the negatives strictly below it.
  std::uint64_t neg_below = 0;
  for (std::size_t end = order.size(); end > 0;) {
    std::size_t begin = end - 1;
    while (begin > 0 && s.scores[order[begin - 1]] == s.scores[order[end - 1]]) --begin;
    std::uint64_t pg = 0, ng = 0;
    for (std::size_t i = begin; i < end; ++i) (s.labels[order[i]] == 1 ? pg : ng) += 1;
    twice_wins += 2 * pg * neg_below + pg * ng;
    neg_below += ng;
    pos_above += pg;
    end = begin;
  }
  pos_total = pos_above;
  neg_total = neg_below;
  return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(pos_total * neg_total));
}

/// Step-wise area under the precision-recall curve: sum of (R_i - R_{i-1}) P_i
/// over distinct thresholds in descending order; tied scores form one step.
inline double pr_auc(const ScoredSet& s) {
  s.validate();
  const auto order = detail::descending_order(s.scores);
  const double positives =
      static_cast<double>(std::count(s.labels.begin(), s.labels.end(), 1));
  double tp = 0, fp = 0, prev_recall = 0, area = 0;
  for (std::size_t begin = 0; begin < order.size();) {
    std::size_t end = begin + 1;
    while (end < order.size() && s.scores[order[end]] == s.scores[order[begin]]) ++end;
    for (std::size_t i = begin; i < end; ++i) (s.labels[order[i]] == 1 ? tp : fp) += 1;
    const double recall = tp / positives;
    area += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
    begin = end;
  }
  return area;
}

/// Mean after dropping the `trim_each_end` smallest and largest values.
inline double trimmed_mean(std::vector<double> values, std::size_t trim_each_end = 1) {
  if (values.size() <= 2 * trim_each_end) {
    throw ContractError("trimmed_mean: " + std::to_string(values.size()) +
                        " values cannot lose " + std::to_string(trim_each_end) + " from each end");
  }
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (std::size_t i = trim_each_end; i < values.size() - trim_each_end; ++i) sum += values[i];
  return sum / static_cast<double>(values.size() - 2 * trim_each_end);
}

struct BoxplotStats {
  double q1 = 0, median = 0, q3 = 0;
  double lower_whisker = 0, upper_whisker = 0;
  std::vector<double> outliers;

  double iqr() const noexcept { return q3 - q1; }

  friend bool operator==(const BoxplotStats&, const BoxplotStats&) = default;
};

/// Tukey boxplot: whiskers reach the most extreme points within 1.5 IQR of
/// the quartiles; anything beyond is an outlier.
inline BoxplotStats boxplot_stats(std::vector<double> values) {
  if (values.size() < 4) throw ContractError("boxplot_stats: need at least 4 values");
  std::sort(values.begin(), values.end());
  BoxplotStats b;
  b.q1 = quantile_sorted(values, 0.25);
  b.median = quantile_sorted(values, 0.5);
  b.q3 = quantile_sorted(values, 0.75);
  const double lo_fence = b.q1 - 1.5 * b.iqr();
  const double hi_fence = b.q3 + 1.5 * b.iqr();
  b.lower_whisker = b.q1;
  b.upper_whisker = b.q3;
  for (double v : values) {
    if (v < lo_fence || v > hi_fence) {
      b.outliers.push_back(v);
    } else {
      b.lower_whisker = std::min(b.lower_whisker, v);
      b.upper_whisker = std::max(b.upper_whisker, v);
    }
  }
  return b;
}

inline void to_json(nlohmann::json& j, const BoxplotStats& b) {
  j = nlohmann::json{{"q1", b.q1},
                     {"median", b.median},
                     {"q3", b.q3},
                     {"lower_whisker", b.lower_whisker},
                     {"upper_whisker", b.upper_whisker},
                     {"outliers", b.outliers}};
}

inline void from_json(const nlohmann::json& j, BoxplotStats& b) {
  j.at("q1").get_to(b.q1);
  j.at("median").get_to(b.median);
  j.at("q3").get_to(b.q3);
  j.at("lower_whisker").get_to(b.lower_whisker);
  j.at("upper_whisker").get_to(b.upper_whisker);
  j.at("outliers").get_to(b.outliers);
}

struct WilcoxonOptions {
  std::size_t exact_max_n = 20;  // exact null distribution up to this many nonzero pairs
};

struct WilcoxonResult {
  double statistic = 0;  // min(W+, W-)
  double w_plus = 0;
  double w_minus = 0;
  double p_value = 1;    // two-sided
  std::size_t n = 0;     // nonzero differences used
  bool exact = false;
};

namespace detail {

/// Average ranks of |d| doubled so tied ranks stay integral.
inline std::vector<std::uint64_t> doubled_abs_ranks(const std::vector<double>& diffs,
                                                    std::vector<std::size_t>* tie_sizes = nullptr) {
  const std::size_t n = diffs.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(diffs[a]) < std::abs(diffs[b]); });
  std::vector<std::uint64_t> rank2(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && std::abs(diffs[idx[j]]) == std::abs(diffs[idx[i]])) ++j;
    // positions i+1 .. j share rank (i+1+j)/2
    for (std::size_t k = i; k < j; ++k) rank2[idx[k]] = i + 1 + j;
    if (tie_sizes && j - i > 1) tie_sizes->push_back(j - i);
    i = j;
  }
  return rank2;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace detail

/// Two-sided paired signed-rank test. Zero differences are dropped; the
/// exact null distribution is used for n <= opts.exact_max_n, otherwise a
/// normal approximation with tie and continuity corrections.
inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                           const WilcoxonOptions& opts = {}) {
  if (a.size() != b.size()) throw ShapeError("wilcoxon: samples differ in length");
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  if (diffs.empty()) throw ContractError("wilcoxon: all differences are zero");
  if (diffs.size() < 5) {
    throw ContractError("wilcoxon: need at least 5 nonzero differences, got " +
                        std::to_string(diffs.size()));
  }

  std::vector<std::size_t> ties;
  const auto rank2 = detail::doubled_abs_ranks(diffs, &ties);
  const std::size_t n = diffs.size();
  std::uint64_t plus2 = 0, total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total2 += rank2[i];
    if (diffs[i] > 0) plus2 += rank2[i];
  }
  const std::uint64_t minus2 = total2 - plus2;
  const std::uint64_t stat2 = std::min(plus2, minus2);

  WilcoxonResult r;
  r.n = n;
  r.w_plus = static_cast<double>(plus2) / 2.0;
  r.w_minus = static_cast<double>(minus2) / 2.0;
  r.statistic = static_cast<double>(stat2) / 2.0;

  if (n <= opts.exact_max_n) {
    // count[s] = number of sign patterns whose doubled positive-rank sum is s
    std::vector<double> count(total2 + 1, 0.0);
    count[0] = 1.0;
    std::uint64_t reach = 0;
    for (auto rk : rank2) {
      for (std::uint64_t s = reach + 1; s-- > 0;) {
        if (count[s] != 0.0) count[s + rk] += count[s];
      }
      reach += rk;
    }
    double tail = 0.0;
    for (std::uint64_t s = 0; s <= stat2; ++s) tail += count[s];
    r.p_value = std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(n)));
    r.exact = true;
  } else {
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    for (auto t : ties) {
      const double tt = static_cast<double>(t);
      var -= (tt * tt * tt - tt) / 48.0;
    }
    const double z = (r.statistic - mean + 0.5) / std::sqrt(var);
    r.p_value = std::min(1.0, 2.0 * detail::normal_cdf(z));
  }
  return r;
}

}  // namespace aeaug
