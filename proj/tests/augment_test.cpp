#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "aeaug/augment.hpp"
#include "test_util.hpp"

namespace aeaug {
namespace {

AugmentConfig cfg_with(double multiplier, std::uint64_t seed = 1, std::size_t k = 5) {
  AugmentConfig c;
  c.target_multiplier = multiplier;
  c.seed = seed;
  c.k_neighbors = k;
  return c;
}

// True if y = x_i + t (x_j - x_i), t in [0,1], for some i and j among i's k neighbours.
bool on_some_segment(const Matrix& x, std::span<const double> y, std::size_t k) {
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (const auto& nb : k_nearest(x, x.row(i), k, i)) {
      auto a = x.row(i);
      auto b = x.row(nb.index);
      double dot = 0, len = 0;
      for (std::size_t c = 0; c < a.size(); ++c) {
        dot += (y[c] - a[c]) * (b[c] - a[c]);
        len += (b[c] - a[c]) * (b[c] - a[c]);
      }
      const double t = len > 0 ? dot / len : 0.0;
      if (t < -1e-12 || t > 1 + 1e-12) continue;
      double resid = 0;
      for (std::size_t c = 0; c < a.size(); ++c) {
        const double d = a[c] + t * (b[c] - a[c]) - y[c];
        resid += d * d;
      }
      if (resid < 1e-20) return true;
    }
  }
  return false;
}

TEST(Budget, Rounding) {
  EXPECT_EQ(synthetic_budget(10, 1.0), 0u);
  EXPECT_EQ(synthetic_budget(10, 4.0), 30u);
  EXPECT_EQ(synthetic_budget(10, 1.25), 3u);  // 2.5 rounds away from zero
  EXPECT_THROW(synthetic_budget(10, 0.5), ContractError);
}

TEST(Smote, SyntheticRowsLieOnNeighbourSegments) {
  auto x = testutil::random_matrix(30, 3, 11);
  auto out = smote(x, cfg_with(3.0));
  ASSERT_EQ(out.rows(), 90u);
  for (std::size_t r = 0; r < 30; ++r) {
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(out(r, c), x(r, c));
  }
  for (std::size_t r = 30; r < out.rows(); ++r) EXPECT_TRUE(on_some_segment(x, out.row(r), 5)) << r;
}

TEST(Smote, IdenticalPointsProduceCopies) {
  Matrix x(8, 4, 0.3);
  auto out = smote(x, cfg_with(2.0));
  for (double v : out.flat()) EXPECT_EQ(v, 0.3);
}

TEST(Smote, CountsAndContracts) {
  auto x = testutil::random_matrix(10, 2, 3);
  EXPECT_EQ(smote(x, cfg_with(4.0)).rows(), 40u);
  EXPECT_EQ(smote(x, cfg_with(1.0)), x);
  EXPECT_THROW(smote(x, cfg_with(2.0, 1, 10)), ContractError);
  EXPECT_THROW(smote(x, cfg_with(2.0, 1, 0)), ContractError);
  EXPECT_EQ(smote(x, cfg_with(3.0, 5)), smote(x, cfg_with(3.0, 5)));
  EXPECT_NE(smote(x, cfg_with(3.0, 5)), smote(x, cfg_with(3.0, 6)));
}

TEST(Adasyn, AllocationSumsToBudget) {
  auto x = testutil::random_matrix(23, 3, 4);
  for (std::size_t budget : {0u, 1u, 22u, 23u, 100u, 577u}) {
    auto a = adasyn_allocation(x, 5, budget);
    EXPECT_EQ(std::accumulate(a.begin(), a.end(), std::size_t{0}), budget);
  }
}

TEST(Adasyn, SymmetricConfigurationGetsEqualShares) {
  // Vertices of a regular simplex: every row has the same neighbour distances.
  Matrix x(4, 4, 0.0);
  for (std::size_t i = 0; i < 4; ++i) x(i, i) = 1.0;
  auto a = adasyn_allocation(x, 3, 40);
  for (auto v : a) EXPECT_EQ(v, 10u);
}

TEST(Adasyn, IsolatedPointGetsLargestShare) {
  auto x = testutil::random_matrix(20, 2, 5, 0.0, 0.1);
  x.append_row(std::vector<double>{5.0, 5.0});
  const std::size_t k = 4, budget = 200;
  auto a = adasyn_allocation(x, k, budget);
  const auto top = std::max_element(a.begin(), a.end()) - a.begin();
  EXPECT_EQ(top, 20);

  // brute force: shares proportional to mean distance to the k nearest others
  std::vector<double> w(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::vector<double> d;
    for (std::size_t j = 0; j < x.rows(); ++j) {
      if (j != i) d.push_back(std::sqrt(squared_distance(x.row(i), x.row(j))));
    }
    std::sort(d.begin(), d.end());
    w[i] = std::accumulate(d.begin(), d.begin() + k, 0.0) / k;
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    EXPECT_LE(std::abs(static_cast<double>(a[i]) - budget * w[i] / total), 1.0) << i;
  }
}

TEST(Adasyn, RowsAndSegments) {
  auto x = testutil::random_matrix(15, 3, 6);
  auto out = adasyn(x, cfg_with(3.0, 2, 4));
  ASSERT_EQ(out.rows(), 45u);
  for (std::size_t r = 15; r < out.rows(); ++r) EXPECT_TRUE(on_some_segment(x, out.row(r), 4));
  EXPECT_EQ(adasyn(x, cfg_with(3.0, 2, 4)), out);
  EXPECT_THROW(adasyn(Matrix(3, 2), cfg_with(2.0)), ContractError);
}

TEST(Adasyn, IdenticalPointsFallBackToUniform) {
  Matrix x(6, 2, 0.5);
  auto a = adasyn_allocation(x, 2, 12);
  for (auto v : a) EXPECT_EQ(v, 2u);
}

TEST(Noise, TinySigmaKeepsCopiesClose) {
  auto x = testutil::random_matrix(10, 3, 7);
  auto c = cfg_with(3.0);
  c.noise_sigma = 1e-12;
  auto out = noise_augment(x, c);
  ASSERT_EQ(out.rows(), 30u);
  for (std::size_t r = 10; r < 30; ++r) {
    for (std::size_t col = 0; col < 3; ++col) EXPECT_NEAR(out(r, col), x(r % 10, col), 1e-10);
  }
}

TEST(Noise, EmpiricalVarianceMatchesSigma) {
  Matrix x(10, 5, 0.0);
  auto c = cfg_with(1001.0);
  c.noise_sigma = 0.05;
  auto out = noise_augment(x, c);
  double ss = 0;
  std::size_t count = 0;
  for (std::size_t r = 10; r < out.rows(); ++r) {
    for (double v : out.row(r)) {
      ss += v * v;
      ++count;
    }
  }
  EXPECT_NEAR(ss / count, 0.0025, 0.0025 * 0.05);
}

TEST(Noise, MultiplierOneIsIdentityAndBadSigmaFails) {
  auto x = testutil::random_matrix(4, 2, 8);
  EXPECT_EQ(noise_augment(x, cfg_with(1.0)), x);
  auto c = cfg_with(2.0);
  c.noise_sigma = 0.0;
  EXPECT_THROW(noise_augment(x, c), ContractError);
}

AugmentedLatentSet fake_harvest(const Matrix& latents, std::size_t blocks) {
  AugmentedLatentSet h;
  h.rows_per_epoch = latents.rows();
  h.matrix = Matrix(0, latents.cols());
  for (std::size_t b = 0; b < blocks; ++b) {
    h.source_epochs.push_back(75 + b);
    Matrix shifted = latents;
    for (double& v : shifted.flat()) v += 0.001 * static_cast<double>(b);
    h.matrix.append_rows(shifted);
  }
  return h;
}

TEST(MakeTrainingSet, RowCounts) {
  auto z = testutil::random_matrix(12, 3, 9);
  auto h = fake_harvest(z, 25);
  AugmentConfig cfg;
  EXPECT_EQ(make_training_set(AugmentMethod::none, z, &h, cfg), z);
  EXPECT_EQ(make_training_set(AugmentMethod::none, z, nullptr, cfg), z);
  EXPECT_EQ(make_training_set(AugmentMethod::ae_epochs, z, &h, cfg), h.matrix);
  for (auto m : {AugmentMethod::smote, AugmentMethod::adasyn, AugmentMethod::noise}) {
    auto out = make_training_set(m, z, &h, cfg);
    EXPECT_EQ(out.rows(), 25u * 12u) << to_string(m);
    EXPECT_EQ(out.cols(), 3u);
    for (std::size_t r = 0; r < 12; ++r) {
      for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(out(r, c), z(r, c));
    }
  }
}

TEST(MakeTrainingSet, DeterministicAndSeeded) {
  auto z = testutil::random_matrix(12, 3, 9);
  auto h = fake_harvest(z, 5);
  AugmentConfig a, b;
  a.seed = 4;
  b.seed = 5;
  for (auto m : {AugmentMethod::smote, AugmentMethod::adasyn, AugmentMethod::noise}) {
    EXPECT_EQ(make_training_set(m, z, &h, a), make_training_set(m, z, &h, a));
    EXPECT_NE(make_training_set(m, z, &h, a), make_training_set(m, z, &h, b));
  }
}

TEST(MakeTrainingSet, NeedsHarvestForOversamplers) {
  auto z = testutil::random_matrix(12, 3, 9);
  EXPECT_THROW(make_training_set(AugmentMethod::ae_epochs, z, nullptr, {}), ContractError);
  EXPECT_THROW(make_training_set(AugmentMethod::smote, z, nullptr, {}), ContractError);
}

TEST(AugmentMethodNames, RoundTrip) {
  for (auto m : kAllAugmenters) EXPECT_EQ(parse_augment_method(to_string(m)), m);
  EXPECT_THROW(parse_augment_method("mixup"), ParseError);
}

}  // namespace
}  // namespace aeaug
