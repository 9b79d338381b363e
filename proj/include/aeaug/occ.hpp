#pragma once

// One-class detectors fitted on (augmented) latent training sets. Every
// detector reports scores where higher means more anomalous, and carries a
// threshold at the (1 - contamination) quantile of its training self-scores.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "aeaug/error.hpp"
#include "aeaug/matrix.hpp"
#include "aeaug/neighbors.hpp"
#include "aeaug/quantile.hpp"
#include "aeaug/random.hpp"

namespace aeaug {

enum class DetectorKind { lof, kde, isf };

inline constexpr DetectorKind kAllDetectors[] = {DetectorKind::lof, DetectorKind::kde,
                                                 DetectorKind::isf};

inline std::string_view to_string(DetectorKind d) {
  switch (d) {
    case DetectorKind::lof: return "lof";
    case DetectorKind::kde: return "kde";
    case DetectorKind::isf: return "isf";
  }
  return "?";
}

inline DetectorKind parse_detector(std::string_view s) {
  for (auto d : kAllDetectors) {
    if (to_string(d) == s) return d;
  }
  throw ParseError("unknown detector '" + std::string(s) + "'");
}

enum class Prediction { normal, anomaly };

struct OccConfig {
  DetectorKind detector = DetectorKind::lof;
  std::size_t lof_k = 20;
  double contamination = 0.1;
  std::size_t isf_trees = 20;
  std::size_t isf_subsample = 256;       // capped at the training row count
  std::optional<double> kde_bandwidth;   // nullopt: Scott's rule
  std::uint64_t seed = 0;

  void validate() const {
    if (!(contamination > 0.0 && contamination <= 0.5)) {
      throw ContractError("contamination must lie in (0, 0.5]");
    }
    if (isf_trees < 1) throw ContractError("isf_trees must be >= 1");
    if (isf_subsample < 2) throw ContractError("isf_subsample must be >= 2");
    if (lof_k < 1) throw ContractError("lof_k must be >= 1");
    if (kde_bandwidth && !(*kde_bandwidth > 0.0)) throw ContractError("kde bandwidth must be > 0");
  }
};

// ---------------------------------------------------------------------------
// Local Outlier Factor

inline constexpr double kLofReachFloor = 1e-12;

class LofModel {
 public:
  LofModel(Matrix train, std::size_t k) : train_(std::move(train)), k_(k) {
    const std::size_t n = train_.rows();
    neighborhoods_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      neighborhoods_[i] = k_distance_neighborhood(train_, train_.row(i), k_, i);
    }
    lrd_.resize(n);
    for (std::size_t i = 0; i < n; ++i) lrd_[i] = local_density(neighborhoods_[i]);
  }

  double score(std::span<const double> x) const {
    return factor(k_distance_neighborhood(train_, x, k_));
  }

  /// Score of training row i with itself left out of its neighbourhood.
  double self_score(std::size_t i) const { return factor(neighborhoods_[i]); }

  std::size_t k() const noexcept { return k_; }
  std::size_t size() const noexcept { return train_.rows(); }

 private:
  double local_density(const Neighborhood& nb) const {
    double reach = 0.0;
    for (const auto& m : nb.members) reach += std::max(neighborhoods_[m.index].k_distance, m.distance);
    reach /= static_cast<double>(nb.members.size());
    return 1.0 / std::max(reach, kLofReachFloor);
  }

  double factor(const Neighborhood& nb) const {
    const double own = local_density(nb);
    double sum = 0.0;
    for (const auto& m : nb.members) sum += lrd_[m.index];
    return sum / static_cast<double>(nb.members.size()) / own;
  }

  Matrix train_;
  std::size_t k_;
  std::vector<Neighborhood> neighborhoods_;
  std::vector<double> lrd_;
};

// ---------------------------------------------------------------------------
// Gaussian kernel density

/// Scott's rule with the mean per-dimension sample standard deviation:
/// h = n^(-1/(d+4)) * sigma. Degenerate spread falls back to sigma = 1.
inline double scott_bandwidth(const Matrix& x) {
  const std::size_t n = x.rows(), d = x.cols();
  double sigma = 0.0;
  if (n > 1) {
    for (std::size_t c = 0; c < d; ++c) {
      double mean = 0.0;
      for (std::size_t r = 0; r < n; ++r) mean += x(r, c);
      mean /= static_cast<double>(n);
      double ss = 0.0;
      for (std::size_t r = 0; r < n; ++r) ss += (x(r, c) - mean) * (x(r, c) - mean);
      sigma += std::sqrt(ss / static_cast<double>(n - 1));
    }
    sigma /= static_cast<double>(d);
  }
  if (!(sigma > 0.0)) sigma = 1.0;
  return std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0)) * sigma;
}

class KdeModel {
 public:
  KdeModel(Matrix train, double bandwidth) : train_(std::move(train)), h_(bandwidth) {
    const double d = static_cast<double>(train_.cols());
    log_norm_ = -0.5 * d * std::log(2.0 * std::numbers::pi * h_ * h_) -
                std::log(static_cast<double>(train_.rows()));
  }

  double log_density(std::span<const double> x) const {
    const double inv = 1.0 / (2.0 * h_ * h_);
    std::vector<double> expo(train_.rows());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < train_.rows(); ++i) {
      expo[i] = -squared_distance(train_.row(i), x) * inv;
      top = std::max(top, expo[i]);
    }
    double sum = 0.0;
    for (double e : expo) sum += std::exp(e - top);
    return log_norm_ + top + std::log(sum);
  }

  /// Negative log density.
  double score(std::span<const double> x) const { return -log_density(x); }

  double bandwidth() const noexcept { return h_; }

 private:
  Matrix train_;
  double h_;
  double log_norm_ = 0.0;
};

// ---------------------------------------------------------------------------
// Isolation Forest

/// Average unsuccessful-search path length of a BST with `size` keys:
/// 2 H(size - 1) - 2 (size - 1) / size with H(i) ~ ln(i) + Euler's constant.
inline double average_path_length(std::size_t size) {
  if (size <= 1) return 0.0;
  if (size == 2) return 1.0;
  const double n = static_cast<double>(size);
  return 2.0 * (std::log(n - 1.0) + std::numbers::egamma) - 2.0 * (n - 1.0) / n;
}

/// 2^(-mean_path / c(psi)), in (0, 1].
inline double isolation_score(double mean_path, std::size_t psi) {
  const double c = average_path_length(psi);
  return c > 0.0 ? std::exp2(-mean_path / c) : 1.0;
}

class IsolationTree {
 public:
  struct Node {
    std::size_t feature = 0;
    double split = 0.0;
    std::int32_t left = -1;   // -1 marks an external node
    std::int32_t right = -1;
    std::size_t size = 0;     // rows reaching an external node
  };

  IsolationTree(const Matrix& x, std::vector<std::size_t> rows, std::size_t max_depth, Rng& rng) {
    build(x, rows, 0, max_depth, rng);
  }

  double path_length(std::span<const double> x) const {
    std::size_t node = 0;
    double depth = 0.0;
    while (nodes_[node].left >= 0) {
      const auto& n = nodes_[node];
      node = static_cast<std::size_t>(x[n.feature] < n.split ? n.left : n.right);
      depth += 1.0;
    }
    return depth + average_path_length(nodes_[node].size);
  }

 private:
  std::int32_t build(const Matrix& x, std::span<std::size_t> rows, std::size_t depth,
                     std::size_t max_depth, Rng& rng) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({});
    nodes_.back().size = rows.size();
    if (depth >= max_depth || rows.size() <= 1) return id;

    std::vector<std::size_t> candidates;
    std::vector<std::pair<double, double>> ranges(x.cols());
    for (std::size_t c = 0; c < x.cols(); ++c) {
      double lo = x(rows[0], c), hi = lo;
      for (auto r : rows) {
        lo = std::min(lo, x(r, c));
        hi = std::max(hi, x(r, c));
      }
      ranges[c] = {lo, hi};
      if (hi > lo) candidates.push_back(c);
    }
    if (candidates.empty()) return id;

    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    const std::size_t feature = candidates[pick(rng)];
    std::uniform_real_distribution<double> cut(ranges[feature].first, ranges[feature].second);
    const double split = cut(rng);

    auto mid = std::partition(rows.begin(), rows.end(),
                              [&](std::size_t r) { return x(r, feature) < split; });
    const auto n_left = static_cast<std::size_t>(mid - rows.begin());
    const std::int32_t left = build(x, rows.subspan(0, n_left), depth + 1, max_depth, rng);
    const std::int32_t right = build(x, rows.subspan(n_left), depth + 1, max_depth, rng);
    nodes_[static_cast<std::size_t>(id)].feature = feature;
    nodes_[static_cast<std::size_t>(id)].split = split;
    nodes_[static_cast<std::size_t>(id)].left = left;
    nodes_[static_cast<std::size_t>(id)].right = right;
    return id;
  }

  std::vector<Node> nodes_;
};

class IsolationForestModel {
 public:
  IsolationForestModel(const Matrix& train, std::size_t n_trees, std::size_t subsample,
                       std::uint64_t seed) {
    psi_ = std::min(subsample, train.rows());
    const auto max_depth =
        static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(psi_))));
    auto rng = make_rng(seed, streams::isf);
    std::vector<std::size_t> all(train.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    for (std::size_t t = 0; t < n_trees; ++t) {
      // Partial Fisher-Yates: the first psi_ entries become a sample without replacement.
      for (std::size_t i = 0; i < psi_; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, all.size() - 1);
        std::swap(all[i], all[pick(rng)]);
      }
      trees_.emplace_back(train, std::vector<std::size_t>(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(psi_)),
                          max_depth, rng);
    }
  }

  double mean_path_length(std::span<const double> x) const {
    double sum = 0.0;
    for (const auto& t : trees_) sum += t.path_length(x);
    return sum / static_cast<double>(trees_.size());
  }

  double score(std::span<const double> x) const { return isolation_score(mean_path_length(x), psi_); }

  std::size_t subsample_size() const noexcept { return psi_; }
  std::size_t tree_count() const noexcept { return trees_.size(); }

 private:
  std::size_t psi_ = 0;
  std::vector<IsolationTree> trees_;
};

// ---------------------------------------------------------------------------

class OccDetector {
 public:
  static OccDetector fit(const Matrix& train, const OccConfig& cfg) {
    cfg.validate();
    const std::size_t n = train.rows();
    if (n < 2) throw ContractError("occ fit: need at least 2 training rows");
    OccDetector det;
    det.kind_ = cfg.detector;
    det.width_ = train.cols();
    std::vector<double> self(n);
    switch (cfg.detector) {
      case DetectorKind::lof: {
        if (n < cfg.lof_k + 1) {
          throw ContractError("lof fit: k = " + std::to_string(cfg.lof_k) + " needs at least " +
                              std::to_string(cfg.lof_k + 1) + " training rows, got " +
                              std::to_string(n));
        }
        LofModel m(train, cfg.lof_k);
        for (std::size_t i = 0; i < n; ++i) self[i] = m.self_score(i);
        det.model_ = std::move(m);
        break;
      }
      case DetectorKind::kde: {
        KdeModel m(train, cfg.kde_bandwidth.value_or(scott_bandwidth(train)));
        for (std::size_t i = 0; i < n; ++i) self[i] = m.score(train.row(i));
        det.model_ = std::move(m);
        break;
      }
      case DetectorKind::isf: {
        IsolationForestModel m(train, cfg.isf_trees, cfg.isf_subsample, cfg.seed);
        for (std::size_t i = 0; i < n; ++i) self[i] = m.score(train.row(i));
        det.model_ = std::move(m);
        break;
      }
    }
    det.threshold_ = quantile(self, 1.0 - cfg.contamination);
    det.training_scores_ = std::move(self);
    return det;
  }

  double score(std::span<const double> x) const {
    if (x.size() != width_) throw ShapeError("score: query width mismatch");
    return std::visit([&](const auto& m) { return m.score(x); }, model_);
  }

  std::vector<double> scores(const Matrix& x) const {
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = score(x.row(i));
    return out;
  }

  /// Anomaly iff the score strictly exceeds the threshold.
  Prediction predict(std::span<const double> x) const { return classify(score(x)); }
  Prediction classify(double score) const {
    return score > threshold_ ? Prediction::anomaly : Prediction::normal;
  }

  DetectorKind kind() const noexcept { return kind_; }
  double threshold() const noexcept { return threshold_; }
  void set_threshold(double t) noexcept { threshold_ = t; }
  const std::vector<double>& training_scores() const noexcept { return training_scores_; }

  template <class Model>
  const Model* as() const noexcept {
    return std::get_if<Model>(&model_);
  }

 private:
  OccDetector() : model_(KdeModel(Matrix(1, 1), 1.0)) {}

  DetectorKind kind_ = DetectorKind::lof;
  std::size_t width_ = 0;
  std::variant<LofModel, KdeModel, IsolationForestModel> model_;
  double threshold_ = 0.0;
  std::vector<double> training_scores_;
};

}  // namespace aeaug
