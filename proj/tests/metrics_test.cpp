#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "aeaug/metrics.hpp"
#include "oracles/metric_oracles.hpp"

namespace aeaug {
namespace {

// Scores drawn from a small integer set (so ties are frequent) with labels
// guaranteed to contain both classes.
ScoredSet random_scored(std::size_t n, std::uint64_t seed, int levels = 7) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> score(0, levels - 1);
  std::bernoulli_distribution label(0.3);
  ScoredSet s;
  for (std::size_t i = 0; i < n; ++i) {
    s.scores.push_back(score(rng) * 0.5);
    s.labels.push_back(label(rng) ? 1 : 0);
  }
  s.labels[0] = 1;
  s.labels[1] = 0;
  return s;
}

TEST(RocAuc, HandCase) {
  EXPECT_DOUBLE_EQ(roc_auc({{0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}}), 0.75);
  EXPECT_DOUBLE_EQ(roc_auc({{1, 2, 3, 4}, {0, 0, 1, 1}}), 1.0);
  EXPECT_DOUBLE_EQ(roc_auc({{1, 2, 3, 4}, {1, 1, 0, 0}}), 0.0);
  EXPECT_DOUBLE_EQ(roc_auc({{5, 5, 5, 5}, {1, 0, 1, 0}}), 0.5);
}

TEST(RocAuc, EqualsPairCountOracle) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const std::size_t n = 2 + (seed * 37) % 1000;
    auto s = random_scored(n, seed, seed % 2 ? 5 : 1000);
    EXPECT_EQ(roc_auc(s), oracle::roc_pairs(s.scores, s.labels).auc()) << "seed " << seed;
  }
}

TEST(RocAuc, InvariantUnderMonotoneMapAndFlipsUnderNegation) {
  auto s = random_scored(300, 3, 20);
  ScoredSet mapped = s, negated = s;
  for (double& v : mapped.scores) v = std::exp(3 * v) + 1;
  for (double& v : negated.scores) v = -v;
  EXPECT_DOUBLE_EQ(roc_auc(mapped), roc_auc(s));
  EXPECT_NEAR(roc_auc(negated), 1.0 - roc_auc(s), 1e-15);
  for (int& l : negated.labels) l = 1 - l;
  EXPECT_NEAR(roc_auc(negated), roc_auc(s), 1e-15);
}

TEST(RocAuc, Contracts) {
  EXPECT_THROW(roc_auc({{1, 2}, {1, 1}}), ContractError);
  EXPECT_THROW(roc_auc({{1, 2}, {0, 0}}), ContractError);
  EXPECT_THROW(roc_auc({{1, 2}, {0, 2}}), ContractError);
  EXPECT_THROW(roc_auc({{1, 2, 3}, {0, 1}}), ShapeError);
}

TEST(PrAuc, HandCase) {
  EXPECT_NEAR(pr_auc({{0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}}), 5.0 / 6.0, 1e-12);
  EXPECT_DOUBLE_EQ(pr_auc({{1, 2, 3, 4}, {0, 0, 1, 1}}), 1.0);
  // all tied: one block at precision = prevalence
  EXPECT_DOUBLE_EQ(pr_auc({{1, 1, 1, 1}, {1, 0, 0, 0}}), 0.25);
}

TEST(PrAuc, MatchesThresholdEnumeration) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto s = random_scored(5 + seed * 3, seed, seed % 3 ? 6 : 500);
    EXPECT_NEAR(pr_auc(s), oracle::pr_auc_by_thresholds(s.scores, s.labels), 1e-12) << seed;
  }
}

TEST(PrAuc, WorstRankerAndRandomScores) {
  // positives ranked last: recall jumps only at the end
  ScoredSet worst;
  for (int i = 0; i < 90; ++i) worst.scores.push_back(100 - i), worst.labels.push_back(0);
  for (int i = 0; i < 10; ++i) worst.scores.push_back(i), worst.labels.push_back(1);
  EXPECT_LT(pr_auc(worst), 0.15);
  EXPECT_NEAR(pr_auc(worst), oracle::pr_auc_by_thresholds(worst.scores, worst.labels), 1e-12);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  ScoredSet coin;
  for (int i = 0; i < 20000; ++i) {
    coin.scores.push_back(u(rng));
    coin.labels.push_back(i % 2);
  }
  EXPECT_NEAR(pr_auc(coin), 0.5, 0.03);
  EXPECT_NEAR(roc_auc(coin), 0.5, 0.03);
}

TEST(PrAuc, BoundedByOne) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto s = random_scored(50, seed + 500, 10);
    const double a = pr_auc(s);
    EXPECT_GT(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
}

TEST(TrimmedMean, DropsExtremes) {
  EXPECT_DOUBLE_EQ(trimmed_mean({1, 2, 3, 4, 100}), 3.0);
  EXPECT_DOUBLE_EQ(trimmed_mean({-50, 2, 3, 4, 5}), 3.0);
  EXPECT_DOUBLE_EQ(trimmed_mean({1, 2, 3, 4, 5, 6}, 2), 3.5);
  EXPECT_DOUBLE_EQ(trimmed_mean({4, 1, 7}, 0), 4.0);
  EXPECT_THROW(trimmed_mean({1, 2}), ContractError);
  std::vector<double> v{0.3, 0.9, 0.1, 0.5, 0.7, 0.2};
  const double base = trimmed_mean(v);
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    std::shuffle(v.begin(), v.end(), rng);
    EXPECT_EQ(trimmed_mean(v), base);
  }
}

TEST(Boxplot, QuartilesAndWhiskers) {
  auto b = boxplot_stats({1, 2, 3, 4, 5, 6, 7, 8});
  EXPECT_DOUBLE_EQ(b.q1, 2.75);
  EXPECT_DOUBLE_EQ(b.median, 4.5);
  EXPECT_DOUBLE_EQ(b.q3, 6.25);
  EXPECT_DOUBLE_EQ(b.lower_whisker, 1);
  EXPECT_DOUBLE_EQ(b.upper_whisker, 8);
  EXPECT_TRUE(b.outliers.empty());
}

TEST(Boxplot, SingleOutlier) {
  auto b = boxplot_stats({1, 2, 3, 4, 5, 6, 7, 100});
  EXPECT_EQ(b.outliers, std::vector<double>{100});
  EXPECT_DOUBLE_EQ(b.upper_whisker, 7);
  EXPECT_LE(b.lower_whisker, b.q1);
  EXPECT_GE(b.upper_whisker, b.q3);
}

TEST(Boxplot, ConstantValuesAndJson) {
  auto b = boxplot_stats({2, 2, 2, 2, 2});
  EXPECT_EQ(b.iqr(), 0.0);
  EXPECT_EQ(b.lower_whisker, 2.0);
  EXPECT_TRUE(b.outliers.empty());
  auto c = boxplot_stats({0.5, -3, 2, 2, 9, 1, 40});
  nlohmann::json j = c;
  EXPECT_EQ(j.get<BoxplotStats>(), c);
  EXPECT_THROW(boxplot_stats({1, 2, 3}), ContractError);
}

TEST(Wilcoxon, AllPositiveSixPairs) {
  std::vector<double> a{1, 2, 3, 4, 5, 6}, b(6, 0.0);
  auto r = wilcoxon_signed_rank(a, b);
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.w_plus, 21.0);
  EXPECT_DOUBLE_EQ(r.p_value, 0.03125);
}

TEST(Wilcoxon, AlternatingSigns) {
  std::vector<double> a{1, -2, 3, -4, 5, -6}, b(6, 0.0);
  auto r = wilcoxon_signed_rank(a, b);
  EXPECT_EQ(r.w_plus, 9.0);
  EXPECT_EQ(r.w_minus, 12.0);
  EXPECT_EQ(r.statistic, 9.0);
  auto ref = oracle::wilcoxon_enumerate(a, b);
  EXPECT_NEAR(r.p_value, ref.p_value, 1e-12);
  EXPECT_NEAR(r.p_value, 54.0 / 64.0, 1e-12);
}

TEST(Wilcoxon, ExactMatchesEnumerationWithTiesAndZeros) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> v(-4, 4);
  int checked = 0;
  for (int t = 0; t < 200 && checked < 60; ++t) {
    const std::size_t n = 5 + t % 10;
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = v(rng);
      b[i] = v(rng) * 0.5;
    }
    std::size_t nonzero = 0;
    for (std::size_t i = 0; i < n; ++i) nonzero += a[i] != b[i];
    if (nonzero < 5) continue;
    auto r = wilcoxon_signed_rank(a, b);
    auto ref = oracle::wilcoxon_enumerate(a, b);
    EXPECT_EQ(r.n, nonzero);
    EXPECT_EQ(r.statistic, ref.statistic);
    EXPECT_NEAR(r.p_value, ref.p_value, 1e-12);
    ++checked;
  }
  EXPECT_GE(checked, 50);
}

TEST(Wilcoxon, NormalApproximationCloseToExactAtTwenty) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.3, 1.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> a(20), b(20, 0.0);
    for (double& x : a) x = g(rng);
    auto exact = wilcoxon_signed_rank(a, b);
    auto approx = wilcoxon_signed_rank(a, b, {.exact_max_n = 0});
    EXPECT_TRUE(exact.exact);
    EXPECT_FALSE(approx.exact);
    EXPECT_NEAR(exact.p_value, approx.p_value, 0.02);
  }
}

TEST(Wilcoxon, SymmetricAndBounded) {
  std::vector<double> a{0.91, 0.85, 0.88, 0.93, 0.79, 0.9, 0.87}, b{0.8, 0.86, 0.81, 0.9, 0.7, 0.83, 0.8};
  auto ab = wilcoxon_signed_rank(a, b), ba = wilcoxon_signed_rank(b, a);
  EXPECT_EQ(ab.p_value, ba.p_value);
  EXPECT_EQ(ab.w_plus, ba.w_minus);
  EXPECT_GT(ab.p_value, 0.0);
  EXPECT_LE(ab.p_value, 1.0);
}

TEST(Wilcoxon, Contracts) {
  std::vector<double> a(8, 1.0);
  EXPECT_THROW(wilcoxon_signed_rank(a, a), ContractError);
  std::vector<double> shorter(7, 0.0);
  EXPECT_THROW(wilcoxon_signed_rank(a, shorter), ShapeError);
  std::vector<double> few{1, 2, 3, 4}, zeros(4, 0.0);
  EXPECT_THROW(wilcoxon_signed_rank(few, zeros), ContractError);
}

TEST(Quantile, Type7) {
  EXPECT_DOUBLE_EQ(quantile({3, 1, 2, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}, 0.9), 10.0);
  EXPECT_DOUBLE_EQ(quantile({7}, 0.3), 7.0);
  EXPECT_THROW(quantile({}, 0.5), ContractError);
  EXPECT_THROW(quantile({1, 2}, 1.5), ContractError);
}

}  // namespace
}  // namespace aeaug
