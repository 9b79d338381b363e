#pragma once

// Dense undercomplete autoencoder with hand-written backpropagation, a
// SmoothL1 reconstruction loss, SGD / RMSProp updates and early stopping.
// Training keeps the bottleneck output of the trailing fraction of epochs,
// which becomes the augmented training set for the one-class detectors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "aeaug/data.hpp"
#include "aeaug/error.hpp"
#include "aeaug/matrix.hpp"
#include "aeaug/random.hpp"
#include "json.hpp"

namespace aeaug {

enum class Activation { tanh, identity };

inline double activate(Activation a, double z) noexcept {
  return a == Activation::tanh ? std::tanh(z) : z;
}

/// Derivative expressed through the activation output.
inline double activation_slope(Activation a, double out) noexcept {
  return a == Activation::tanh ? 1.0 - out * out : 1.0;
}

struct DenseLayer {
  Matrix weights;             // out x in
  std::vector<double> bias;   // out
  Activation activation = Activation::tanh;

  std::size_t in() const noexcept { return weights.cols(); }
  std::size_t out() const noexcept { return weights.rows(); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct AEModel {
  std::vector<DenseLayer> layers;
  std::size_t bottleneck_index = 0;  // layer whose output is the latent code

  std::size_t input_width() const { return layers.front().in(); }
  std::size_t latent_width() const { return layers.at(bottleneck_index).out(); }

  /// Widths of every node layer, input first.
  std::vector<std::size_t> widths() const {
    std::vector<std::size_t> w{input_width()};
    for (const auto& l : layers) w.push_back(l.out());
    return w;
  }

  void validate() const {
    if (layers.empty()) throw ShapeError("model has no layers");
    if (bottleneck_index >= layers.size()) throw ShapeError("bottleneck index out of range");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (l.bias.size() != l.out()) throw ShapeError("layer " + std::to_string(i) + ": bias size");
      if (i + 1 < layers.size() && l.out() != layers[i + 1].in()) {
        throw ShapeError("layer " + std::to_string(i) + " output does not feed layer " +
                         std::to_string(i + 1));
      }
      for (double v : l.weights.flat()) {
        if (!std::isfinite(v)) throw ShapeError("non-finite weight");
      }
    }
    if (layers.back().out() != input_width()) throw ShapeError("output width != input width");
  }

  friend bool operator==(const AEModel&, const AEModel&) = default;
};

struct LayerGradient {
  Matrix weights;
  std::vector<double> bias;
};

using Gradients = std::vector<LayerGradient>;

inline Gradients zeros_like(const AEModel& model) {
  Gradients g;
  for (const auto& l : model.layers) {
    g.push_back({Matrix(l.out(), l.in()), std::vector<double>(l.out(), 0.0)});
  }
  return g;
}

enum class WidthRounding { nearest, floor, ceil };

/// round(1 + sqrt(n)), clamped so the code stays strictly narrower than the input.
inline std::size_t bottleneck_width(std::size_t n_features,
                                    WidthRounding rounding = WidthRounding::nearest) {
  const double raw = 1.0 + std::sqrt(static_cast<double>(n_features));
  double m = 0;
  switch (rounding) {
    case WidthRounding::nearest: m = std::round(raw); break;
    case WidthRounding::floor: m = std::floor(raw); break;
    case WidthRounding::ceil: m = std::ceil(raw); break;
  }
  return std::clamp<std::size_t>(static_cast<std::size_t>(m), 1, n_features - 1);
}

inline std::size_t hidden_width(std::size_t n_features, std::size_t latent) {
  return (n_features + latent) / 2;
}

/// n -> h -> m_b -> h -> n, tanh throughout, weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
/// zero biases.
inline AEModel build_ae(std::size_t n_features, std::uint64_t seed,
                        WidthRounding rounding = WidthRounding::nearest) {
  if (n_features < 2) throw ContractError("build_ae: need at least 2 features");
  const std::size_t mb = bottleneck_width(n_features, rounding);
  const std::size_t h = hidden_width(n_features, mb);
  const std::size_t widths[] = {n_features, h, mb, h, n_features};

  auto rng = make_rng(seed, streams::init);
  AEModel model;
  for (std::size_t i = 0; i + 1 < std::size(widths); ++i) {
    const std::size_t in = widths[i], out = widths[i + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    DenseLayer layer{Matrix(out, in), std::vector<double>(out, 0.0), Activation::tanh};
    for (double& w : layer.weights.flat()) w = u(rng);
    model.layers.push_back(std::move(layer));
  }
  model.bottleneck_index = 1;
  return model;
}

namespace detail {

/// Activations of every node layer; trace[0] is the input batch.
inline std::vector<Matrix> forward_trace(const AEModel& model, const Matrix& batch) {
  if (batch.cols() != model.input_width()) {
    throw ShapeError("forward: batch width " + std::to_string(batch.cols()) +
                     " != model input width " + std::to_string(model.input_width()));
  }
  std::vector<Matrix> trace;
  trace.reserve(model.layers.size() + 1);
  trace.push_back(batch);
  for (const auto& layer : model.layers) {
    const Matrix& a = trace.back();
    Matrix z(a.rows(), layer.out());
    for (std::size_t r = 0; r < a.rows(); ++r) {
      auto x = a.row(r);
      for (std::size_t o = 0; o < layer.out(); ++o) {
        auto w = layer.weights.row(o);
        double s = layer.bias[o];
        for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * x[i];
        z(r, o) = activate(layer.activation, s);
      }
    }
    trace.push_back(std::move(z));
  }
  return trace;
}

}  // namespace detail

struct ForwardResult {
  Matrix latent;
  Matrix recon;
};

inline ForwardResult forward(const AEModel& model, const Matrix& batch) {
  auto trace = detail::forward_trace(model, batch);
  return {std::move(trace[model.bottleneck_index + 1]), std::move(trace.back())};
}

inline Matrix encode(const AEModel& model, const Matrix& x) {
  if (x.cols() != model.input_width()) {
    throw ShapeError("encode: width " + std::to_string(x.cols()) + " != " +
                     std::to_string(model.input_width()));
  }
  if (x.rows() == 0) return Matrix(0, model.latent_width());
  AEModel encoder;
  encoder.layers.assign(model.layers.begin(),
                        model.layers.begin() + static_cast<std::ptrdiff_t>(model.bottleneck_index + 1));
  return std::move(detail::forward_trace(encoder, x).back());
}

inline Matrix encode(const AEModel& model, const NumericDataset& ds) { return encode(model, ds.matrix); }

/// Mean over all elements of 0.5 d^2 (|d| < 1) or |d| - 0.5.
inline double smooth_l1(const Matrix& recon, const Matrix& target) {
  if (recon.rows() != target.rows() || recon.cols() != target.cols()) {
    throw ShapeError("smooth_l1: shape mismatch");
  }
  const auto a = recon.flat();
  const auto b = target.flat();
  if (a.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    const double ad = std::abs(d);
    s += ad < 1.0 ? 0.5 * d * d : ad - 0.5;
  }
  return s / static_cast<double>(a.size());
}

inline double smooth_l1_slope(double d) noexcept {
  if (std::abs(d) < 1.0) return d;
  return d > 0 ? 1.0 : -1.0;
}

/// Analytic gradient of smooth_l1(forward(model, batch).recon, target).
inline Gradients backward(const AEModel& model, const Matrix& batch, const Matrix& target) {
  auto trace = detail::forward_trace(model, batch);
  const Matrix& recon = trace.back();
  if (recon.rows() != target.rows() || recon.cols() != target.cols()) {
    throw ShapeError("backward: target shape mismatch");
  }
  Gradients grads = zeros_like(model);
  if (batch.rows() == 0) return grads;

  const double scale = 1.0 / static_cast<double>(recon.rows() * recon.cols());
  Matrix upstream(recon.rows(), recon.cols());  // dL/d(activation output)
  for (std::size_t r = 0; r < recon.rows(); ++r) {
    for (std::size_t c = 0; c < recon.cols(); ++c) {
      upstream(r, c) = smooth_l1_slope(recon(r, c) - target(r, c)) * scale;
    }
  }

  for (std::size_t li = model.layers.size(); li-- > 0;) {
    const auto& layer = model.layers[li];
    const Matrix& out = trace[li + 1];
    const Matrix& in = trace[li];
    auto& g = grads[li];
    Matrix delta(out.rows(), out.cols());
    for (std::size_t r = 0; r < out.rows(); ++r) {
      for (std::size_t o = 0; o < out.cols(); ++o) {
        delta(r, o) = upstream(r, o) * activation_slope(layer.activation, out(r, o));
      }
    }
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      auto x = in.row(r);
      for (std::size_t o = 0; o < layer.out(); ++o) {
        const double d = delta(r, o);
        g.bias[o] += d;
        auto gw = g.weights.row(o);
        for (std::size_t i = 0; i < x.size(); ++i) gw[i] += d * x[i];
      }
    }
    if (li == 0) break;
    Matrix next(in.rows(), in.cols());
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      for (std::size_t o = 0; o < layer.out(); ++o) {
        const double d = delta(r, o);
        auto w = layer.weights.row(o);
        for (std::size_t i = 0; i < w.size(); ++i) next(r, i) += d * w[i];
      }
    }
    upstream = std::move(next);
  }
  return grads;
}

namespace detail {

inline void check_same_shape(const AEModel& model, const Gradients& g) {
  if (g.size() != model.layers.size()) throw ShapeError("gradient layer count mismatch");
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i].weights.rows() != model.layers[i].out() || g[i].weights.cols() != model.layers[i].in() ||
        g[i].bias.size() != model.layers[i].out()) {
      throw ShapeError("gradient shape mismatch at layer " + std::to_string(i));
    }
  }
}

/// Applies fn(param, grad, slot) to every (parameter, gradient) pair in a fixed order.
template <class Fn>
void for_each_parameter(AEModel& model, const Gradients& g, Fn&& fn) {
  std::size_t slot = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto w = model.layers[i].weights.flat();
    auto gw = g[i].weights.flat();
    for (std::size_t k = 0; k < w.size(); ++k) fn(w[k], gw[k], slot++);
    auto& b = model.layers[i].bias;
    for (std::size_t k = 0; k < b.size(); ++k) fn(b[k], g[i].bias[k], slot++);
  }
}

}  // namespace detail

/// p <- p - lr * g
inline void sgd_step(AEModel& model, const Gradients& grads, double lr) {
  detail::check_same_shape(model, grads);
  detail::for_each_parameter(model, grads, [lr](double& p, double g, std::size_t) { p -= lr * g; });
}

/// Running mean of squared gradients, one accumulator per parameter.
struct RmspropState {
  std::vector<double> mean_square;

  static RmspropState for_model(const AEModel& model) {
    std::size_t n = 0;
    for (const auto& l : model.layers) n += l.weights.flat().size() + l.bias.size();
    return {std::vector<double>(n, 0.0)};
  }
};

/// v <- decay v + (1 - decay) g^2 ;  p <- p - lr g / (sqrt(v) + eps)
inline void rmsprop_step(AEModel& model, const Gradients& grads, RmspropState& state, double lr,
                         double decay, double eps) {
  detail::check_same_shape(model, grads);
  if (state.mean_square.empty()) state = RmspropState::for_model(model);
  detail::for_each_parameter(model, grads, [&](double& p, double g, std::size_t slot) {
    if (slot >= state.mean_square.size()) throw ShapeError("rmsprop state too small");
    double& v = state.mean_square[slot];
    v = decay * v + (1.0 - decay) * g * g;
    p -= lr * g / (std::sqrt(v) + eps);
  });
}

enum class Optimizer { sgd, rmsprop };

struct TrainConfig {
  std::size_t n_epochs = 100;
  double nu = 0.25;
  std::size_t batch_size = 0;            // 0: 64 when train rows > 2000, else 16
  std::optional<double> learning_rate;   // default 0.01 for SGD, 0.001 for RMSProp
  Optimizer optimizer = Optimizer::sgd;
  double rmsprop_decay = 0.9;
  double rmsprop_eps = 1e-8;
  bool early_stopping = true;
  std::size_t early_stop_patience = 20;
  double early_stop_min_delta = 1e-5;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_epochs < 1) throw ContractError("n_epochs must be >= 1");
    if (!(nu > 0.0 && nu <= 1.0)) throw ContractError("nu must lie in (0, 1]");
    if (learning_rate && !(*learning_rate > 0.0)) throw ContractError("learning rate must be > 0");
    if (!(rmsprop_decay > 0.0 && rmsprop_decay < 1.0)) throw ContractError("rmsprop decay must lie in (0,1)");
    if (!(rmsprop_eps > 0.0)) throw ContractError("rmsprop eps must be > 0");
    if (early_stop_min_delta < 0.0) throw ContractError("min_delta must be >= 0");
  }

  double resolved_learning_rate() const {
    return learning_rate.value_or(optimizer == Optimizer::sgd ? 0.01 : 0.001);
  }

  std::size_t resolved_batch_size(std::size_t train_rows) const {
    if (batch_size > 0) return batch_size;
    return train_rows > 2000 ? 64 : 16;
  }
};

/// First epoch index (0-based) of the trailing nu window of `epochs` epochs:
/// the smallest i with i >= (1 - nu) * epochs.
inline std::size_t harvest_start(std::size_t epochs, double nu) {
  const double bound = (1.0 - nu) * static_cast<double>(epochs);
  auto start = static_cast<std::size_t>(std::max(0.0, std::ceil(bound - 1e-9)));
  return std::min(start, epochs == 0 ? 0 : epochs - 1);
}

struct AugmentedLatentSet {
  Matrix matrix;
  std::vector<std::size_t> source_epochs;
  std::size_t rows_per_epoch = 0;
};

struct EpochLoss {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();  // NaN without a validation set
};

struct TrainResult {
  AEModel model;
  AugmentedLatentSet latents;
  std::vector<EpochLoss> history;
  bool stopped_early = false;
};

/// Mini-batch training that stacks the bottleneck output of the training set
/// at the end of each epoch in the trailing nu window. On early stop the
/// window is re-anchored to the epochs actually run (at least one block).
inline TrainResult train_with_harvest(AEModel model, const NumericDataset& train,
                                      const NumericDataset& val, const TrainConfig& cfg) {
  cfg.validate();
  model.validate();
  if (train.rows() == 0) throw ContractError("train_with_harvest: empty training set");
  if (train.cols() != model.input_width()) throw ShapeError("train width != model input width");
  if (val.rows() > 0 && val.cols() != model.input_width()) throw ShapeError("val width != model input width");

  const std::size_t n = train.rows();
  const std::size_t batch = std::min(cfg.resolved_batch_size(n), n);
  const double lr = cfg.resolved_learning_rate();
  const std::size_t window = cfg.n_epochs - harvest_start(cfg.n_epochs, cfg.nu);

  auto rng = make_rng(cfg.seed, streams::shuffle);
  RmspropState rms = RmspropState::for_model(model);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  std::deque<std::pair<std::size_t, Matrix>> recent;  // (epoch, latents), at most `window`
  double best = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  std::size_t epochs_run = 0;

  for (std::size_t epoch = 0; epoch < cfg.n_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(start + batch, n);
      const std::span<const std::size_t> ids(order.data() + start, end - start);
      const Matrix xb = train.matrix.select_rows(ids);
      const Gradients g = backward(model, xb, xb);
      if (cfg.optimizer == Optimizer::sgd) {
        sgd_step(model, g, lr);
      } else {
        rmsprop_step(model, g, rms, lr, cfg.rmsprop_decay, cfg.rmsprop_eps);
      }
    }

    auto trace = detail::forward_trace(model, train.matrix);
    EpochLoss rec{epoch, smooth_l1(trace.back(), train.matrix)};
    if (val.rows() > 0) rec.val_loss = smooth_l1(forward(model, val.matrix).recon, val.matrix);
    if (!std::isfinite(rec.train_loss) || (val.rows() > 0 && !std::isfinite(rec.val_loss))) {
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                            " (train loss " + std::to_string(rec.train_loss) + ", val loss " +
                            std::to_string(rec.val_loss) + "); lower the learning rate");
    }
    result.history.push_back(rec);
    recent.emplace_back(epoch, std::move(trace[model.bottleneck_index + 1]));
    if (recent.size() > window) recent.pop_front();
    epochs_run = epoch + 1;

    if (cfg.early_stopping) {
      const double monitored = val.rows() > 0 ? rec.val_loss : rec.train_loss;
      if (monitored < best - cfg.early_stop_min_delta) {
        best = monitored;
        stale = 0;
      } else if (++stale >= cfg.early_stop_patience) {
        result.stopped_early = epoch + 1 < cfg.n_epochs;
        break;
      }
    }
  }

  const std::size_t first = harvest_start(epochs_run, cfg.nu);
  auto& set = result.latents;
  set.rows_per_epoch = n;
  set.matrix = Matrix(0, model.latent_width());
  for (auto& [epoch, block] : recent) {
    if (epoch < first) continue;
    set.source_epochs.push_back(epoch);
    set.matrix.append_rows(block);
  }
  result.model = std::move(model);
  return result;
}

inline std::string_view to_string(Activation a) { return a == Activation::tanh ? "tanh" : "identity"; }

inline void to_json(nlohmann::json& j, const AEModel& m) {
  j = nlohmann::json::object();
  j["widths"] = m.widths();
  j["bottleneck_index"] = m.bottleneck_index;
  auto layers = nlohmann::json::array();
  for (const auto& l : m.layers) {
    layers.push_back({{"in", l.in()},
                      {"out", l.out()},
                      {"activation", to_string(l.activation)},
                      {"weights", l.weights.values()},
                      {"bias", l.bias}});
  }
  j["layers"] = std::move(layers);
}

inline void from_json(const nlohmann::json& j, AEModel& m) {
  m = AEModel{};
  m.bottleneck_index = j.at("bottleneck_index").get<std::size_t>();
  for (const auto& jl : j.at("layers")) {
    const auto in = jl.at("in").get<std::size_t>();
    const auto out = jl.at("out").get<std::size_t>();
    const auto act = jl.at("activation").get<std::string>();
    if (act != "tanh" && act != "identity") throw ParseError("unknown activation '" + act + "'");
    m.layers.push_back({Matrix(out, in, jl.at("weights").get<std::vector<double>>()),
                        jl.at("bias").get<std::vector<double>>(),
                        act == "tanh" ? Activation::tanh : Activation::identity});
  }
  m.validate();
}

inline void write_loss_history(const std::vector<EpochLoss>& history, std::ostream& out) {
  out.precision(17);
  out << "epoch,train_loss,val_loss\n";
  for (const auto& e : history) out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << '\n';
}

}  // namespace aeaug
