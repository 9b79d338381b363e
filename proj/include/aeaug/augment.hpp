#pragma once

// Baseline augmenters for latent training sets: SMOTE, ADASYN adapted to a
// single class, Gaussian noise, and the epoch-harvest pass-through.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "aeaug/autoencoder.hpp"
#include "aeaug/error.hpp"
#include "aeaug/matrix.hpp"
#include "aeaug/neighbors.hpp"
#include "aeaug/random.hpp"

namespace aeaug {

enum class AugmentMethod { none, smote, adasyn, noise, ae_epochs };

inline constexpr AugmentMethod kAllAugmenters[] = {AugmentMethod::none, AugmentMethod::smote,
                                                   AugmentMethod::adasyn, AugmentMethod::noise,
                                                   AugmentMethod::ae_epochs};

inline std::string_view to_string(AugmentMethod m) {
  switch (m) {
    case AugmentMethod::none: return "none";
    case AugmentMethod::smote: return "smote";
    case AugmentMethod::adasyn: return "adasyn";
    case AugmentMethod::noise: return "noise";
    case AugmentMethod::ae_epochs: return "ae_epochs";
  }
  return "?";
}

inline AugmentMethod parse_augment_method(std::string_view s) {
  for (auto m : kAllAugmenters) {
    if (to_string(m) == s) return m;
  }
  throw ParseError("unknown augmentation method '" + std::string(s) + "'");
}

struct AugmentConfig {
  AugmentMethod method = AugmentMethod::none;
  std::size_t k_neighbors = 5;
  double target_multiplier = 1.0;  // output rows ~= multiplier * input rows
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;
};

/// round((multiplier - 1) * n), the number of rows appended to the originals.
inline std::size_t synthetic_budget(std::size_t n, double multiplier) {
  if (!(multiplier >= 1.0)) throw ContractError("target multiplier must be >= 1");
  return static_cast<std::size_t>(std::llround((multiplier - 1.0) * static_cast<double>(n)));
}

namespace detail {

inline void check_knn_contract(const Matrix& x, std::size_t k, std::string_view who) {
  if (k < 1 || x.rows() <= k) {
    throw ContractError(std::string(who) + ": need more rows (" + std::to_string(x.rows()) +
                        ") than k_neighbors (" + std::to_string(k) + ")");
  }
}

inline std::vector<std::vector<Neighbor>> all_knn(const Matrix& x, std::size_t k) {
  std::vector<std::vector<Neighbor>> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = k_nearest(x, x.row(i), k, i);
  return out;
}

inline void append_interpolated(Matrix& out, std::span<const double> a, std::span<const double> b,
                                double lambda, std::vector<double>& scratch) {
  scratch.resize(a.size());
  for (std::size_t c = 0; c < a.size(); ++c) scratch[c] = a[c] + lambda * (b[c] - a[c]);
  out.append_row(scratch);
}

}  // namespace detail

/// Originals followed by x + lambda (x_nn - x) rows; seed row and neighbour
/// are drawn uniformly, lambda ~ U[0, 1].
inline Matrix smote(const Matrix& latents, const AugmentConfig& cfg) {
  detail::check_knn_contract(latents, cfg.k_neighbors, "smote");
  const std::size_t budget = synthetic_budget(latents.rows(), cfg.target_multiplier);
  const auto knn = detail::all_knn(latents, cfg.k_neighbors);

  auto rng = make_rng(cfg.seed, streams::smote);
  std::uniform_int_distribution<std::size_t> pick_row(0, latents.rows() - 1);
  std::uniform_int_distribution<std::size_t> pick_nn(0, cfg.k_neighbors - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Matrix out = latents;
  std::vector<double> scratch;
  for (std::size_t s = 0; s < budget; ++s) {
    const std::size_t i = pick_row(rng);
    const std::size_t j = knn[i][pick_nn(rng)].index;
    const double lambda = unit(rng);
    detail::append_interpolated(out, latents.row(i), latents.row(j), lambda, scratch);
  }
  return out;
}

/// Per-row synthesis counts for the single-class ADASYN variant: weights are
/// the mean k-NN distance of each row, normalised, and the budget is split by
/// largest remainder (ties to the lower row index).
inline std::vector<std::size_t> adasyn_allocation(const Matrix& latents, std::size_t k,
                                                  std::size_t budget) {
  detail::check_knn_contract(latents, k, "adasyn");
  const std::size_t n = latents.rows();
  std::vector<double> weight(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& nb : k_nearest(latents, latents.row(i), k, i)) weight[i] += nb.distance;
    weight[i] /= static_cast<double>(k);
  }
  double total = std::accumulate(weight.begin(), weight.end(), 0.0);
  if (!(total > 0.0)) {
    std::fill(weight.begin(), weight.end(), 1.0);
    total = static_cast<double>(n);
  }

  std::vector<std::size_t> alloc(n, 0);
  std::vector<std::pair<double, std::size_t>> remainder(n);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double share = static_cast<double>(budget) * weight[i] / total;
    alloc[i] = static_cast<std::size_t>(std::floor(share));
    assigned += alloc[i];
    remainder[i] = {share - std::floor(share), i};
  }
  std::stable_sort(remainder.begin(), remainder.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < budget; ++r, ++assigned) ++alloc[remainder[r % n].second];
  return alloc;
}

inline Matrix adasyn(const Matrix& latents, const AugmentConfig& cfg) {
  detail::check_knn_contract(latents, cfg.k_neighbors, "adasyn");
  const std::size_t budget = synthetic_budget(latents.rows(), cfg.target_multiplier);
  const auto alloc = adasyn_allocation(latents, cfg.k_neighbors, budget);
  const auto knn = detail::all_knn(latents, cfg.k_neighbors);

  auto rng = make_rng(cfg.seed, streams::adasyn);
  std::uniform_int_distribution<std::size_t> pick_nn(0, cfg.k_neighbors - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Matrix out = latents;
  std::vector<double> scratch;
  for (std::size_t i = 0; i < latents.rows(); ++i) {
    for (std::size_t s = 0; s < alloc[i]; ++s) {
      const std::size_t j = knn[i][pick_nn(rng)].index;
      const double lambda = unit(rng);
      detail::append_interpolated(out, latents.row(i), latents.row(j), lambda, scratch);
    }
  }
  return out;
}

/// Originals followed by noisy copies x + N(0, sigma^2 I), cycling through
/// the rows so each row gets (multiplier - 1) copies when that is integral.
inline Matrix noise_augment(const Matrix& latents, const AugmentConfig& cfg) {
  if (latents.rows() < 1) throw ContractError("noise_augment: empty input");
  if (!(cfg.noise_sigma > 0.0)) throw ContractError("noise_sigma must be > 0");
  const std::size_t budget = synthetic_budget(latents.rows(), cfg.target_multiplier);
  auto rng = make_rng(cfg.seed, streams::noise);
  std::normal_distribution<double> eps(0.0, cfg.noise_sigma);

  Matrix out = latents;
  std::vector<double> scratch(latents.cols());
  for (std::size_t s = 0; s < budget; ++s) {
    auto x = latents.row(s % latents.rows());
    for (std::size_t c = 0; c < x.size(); ++c) scratch[c] = x[c] + eps(rng);
    out.append_row(scratch);
  }
  return out;
}

/// Builds the detector training set for one method. Oversamplers are sized so
/// their output has exactly as many rows as the harvested latent set.
inline Matrix make_training_set(AugmentMethod method, const Matrix& final_latents,
                                const AugmentedLatentSet* harvested, AugmentConfig cfg) {
  if (method == AugmentMethod::none) return final_latents;
  if (harvested == nullptr) {
    throw ContractError(std::string("make_training_set: method '") + std::string(to_string(method)) +
                        "' needs the harvested latent set");
  }
  if (method == AugmentMethod::ae_epochs) return harvested->matrix;
  if (final_latents.rows() == 0) throw ContractError("make_training_set: no latents");

  cfg.method = method;
  cfg.target_multiplier =
      static_cast<double>(harvested->matrix.rows()) / static_cast<double>(final_latents.rows());
  switch (method) {
    case AugmentMethod::smote: return smote(final_latents, cfg);
    case AugmentMethod::adasyn: return adasyn(final_latents, cfg);
    case AugmentMethod::noise: return noise_augment(final_latents, cfg);
    default: break;
  }
  throw ContractError("make_training_set: unhandled method");
}

}  // namespace aeaug
