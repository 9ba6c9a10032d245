#pragma once

// Surrogate-gradient training.
//
// Backward pass for a dense layer with membrane u and output error e
// (dL/do, per neuron and step):
//
//   delta[n][t] = e[n][t] * rho(u[n][t])            surrogate spike derivative
//   g[n][tau]   = sum_{t >= tau} delta[n][t] eps[t - tau]   (time-reversed eps)
//   dW[n][i]    = sum_tau s_i[tau] g[n][tau]
//   e_in[i][tau] = sum_n W[n][i] g[n][tau]
//
// The refractory term is held constant, so no gradient flows through it.

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <functional>
#include <future>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vtsnn/error.hpp"
#include "vtsnn/loss.hpp"
#include "vtsnn/matrix.hpp"
#include "vtsnn/network.hpp"
#include "vtsnn/predict.hpp"
#include "vtsnn/srm.hpp"

namespace vtsnn {

struct SurrogateConfig {
  double scale = 1.0;
  double sharpness = 8.0;  // 1 / membrane units

  /// scale 1, sharpness 10 / threshold.
  static SurrogateConfig defaults(double threshold) {
    return {1.0, 10.0 / threshold};
  }

  void validate() const {
    require(scale > 0.0 && sharpness > 0.0, ErrorKind::config,
            "surrogate scale and sharpness must be positive");
  }
};

/// scale * exp(-sharpness * |membrane - threshold|).
inline double surrogate_spike_derivative(double membrane,
                                         const SurrogateConfig& config,
                                         double threshold) {
  return config.scale * std::exp(-config.sharpness * std::abs(membrane - threshold));
}

struct LayerGradient {
  Matrix weights;      // [n_out x n_in]
  Matrix input_error;  // [n_in x n_bins], empty unless requested
};

namespace detail {

inline std::size_t input_channels(const SpikeTensor& x) { return x.channel_count(); }
inline std::size_t input_steps(const SpikeTensor& x) { return x.n_bins(); }
inline std::size_t input_channels(const Matrix& x) { return x.rows(); }
inline std::size_t input_steps(const Matrix& x) { return x.cols(); }

inline double input_dot(const SpikeTensor& input, std::size_t channel,
                        std::span<const double> g) {
  double acc = 0.0;
  for (std::uint32_t b : input.active_bins(static_cast<std::uint32_t>(channel))) acc += g[b];
  return acc;
}

inline double input_dot(const Matrix& input, std::size_t channel,
                        std::span<const double> g) {
  const auto row = input.row(channel);
  double acc = 0.0;
  for (std::size_t t = 0; t < row.size(); ++t) acc += row[t] * g[t];
  return acc;
}

}  // namespace detail

/// Gradients from dL/du. `Input` is a SpikeTensor or a real-valued
/// [n_in x n_bins] Matrix of presynaptic activity.
template <typename Input>
LayerGradient membrane_backward(const SrmLayer& layer, const Input& input,
                                const Matrix& delta, bool need_input_error) {
  const std::size_t n_in = detail::input_channels(input);
  const std::size_t n_bins = detail::input_steps(input);
  require(n_in == layer.n_in() && delta.rows() == layer.n_out() &&
              delta.cols() == n_bins,
          ErrorKind::shape, "backward shapes do not match the layer");
  Matrix g(layer.n_out(), n_bins);
  for (std::size_t n = 0; n < layer.n_out(); ++n) {
    const auto row = kernel_correlate(delta.row(n), layer.response_kernel());
    std::copy(row.begin(), row.end(), g.row(n).begin());
  }
  LayerGradient out;
  out.weights = Matrix(layer.n_out(), n_in);
  for (std::size_t n = 0; n < layer.n_out(); ++n) {
    const auto gn = g.row(n);
    for (std::size_t i = 0; i < n_in; ++i)
      out.weights(n, i) = detail::input_dot(input, i, gn);
  }
  if (need_input_error) {
    out.input_error = Matrix(n_in, n_bins);
    const Matrix& w = layer.weights();
    for (std::size_t n = 0; n < layer.n_out(); ++n) {
      const auto gn = g.row(n);
      for (std::size_t i = 0; i < n_in; ++i) {
        const double wni = w(n, i);
        if (wni == 0.0) continue;
        auto ei = out.input_error.row(i);
        for (std::size_t t = 0; t < n_bins; ++t) ei[t] += wni * gn[t];
      }
    }
  }
  return out;
}

/// Gradients from dL/d(output spikes), mapped through the surrogate.
template <typename Input>
LayerGradient spike_backward(const SrmLayer& layer, const Input& input,
                             const Matrix& membrane, const Matrix& output_error,
                             const SurrogateConfig& surrogate,
                             bool need_input_error) {
  require(membrane.rows() == output_error.rows() &&
              membrane.cols() == output_error.cols(),
          ErrorKind::shape, "membrane and output error shapes differ");
  Matrix delta(membrane.rows(), membrane.cols());
  const double phi = layer.config().threshold;
  for (std::size_t n = 0; n < membrane.rows(); ++n)
    for (std::size_t t = 0; t < membrane.cols(); ++t) {
      const double e = output_error(n, t);
      if (e != 0.0)
        delta(n, t) = e * surrogate_spike_derivative(membrane(n, t), surrogate, phi);
    }
  return membrane_backward(layer, input, delta, need_input_error);
}

/// One matrix per trainable layer, in `dense_layers` order.
struct NetworkGradients {
  std::vector<Matrix> layers;

  static NetworkGradients zeros_like(const Network& net) {
    NetworkGradients g;
    for (const auto* l : dense_layers(net)) g.layers.emplace_back(l->n_out(), l->n_in());
    return g;
  }

  NetworkGradients& operator+=(const NetworkGradients& o) {
    require(layers.size() == o.layers.size(), ErrorKind::shape, "gradient sets differ");
    for (std::size_t i = 0; i < layers.size(); ++i) layers[i] += o.layers[i];
    return *this;
  }

  NetworkGradients& operator*=(double s) {
    for (auto& m : layers) m *= s;
    return *this;
  }
};

/// Backpropagates `loss_grad` (dL/d output spikes, [n_classes x n_bins])
/// through the traces of a matching forward pass.
inline NetworkGradients backward(const Network& net, const NetworkInput& input,
                                 const NetworkTraces& traces,
                                 const Matrix& loss_grad,
                                 const SurrogateConfig& surrogate) {
  require(traces.branches.size() == net.branches.size() &&
              traces.head.size() == net.head.size() &&
              input.branches.size() == net.branches.size(),
          ErrorKind::shape, "traces do not match the network");
  for (std::size_t b = 0; b < net.branches.size(); ++b)
    require(traces.branches[b].size() == net.branches[b].layers.size(),
            ErrorKind::shape, "branch traces do not match the network");
  require(loss_grad.rows() == net.n_classes() &&
              loss_grad.cols() == traces.output().n_bins(),
          ErrorKind::shape, "loss gradient shape mismatch");

  // Head gradients are appended after the branch gradients at the end.
  std::vector<Matrix> head_grads(net.head.size());
  Matrix error = loss_grad;
  for (std::size_t j = net.head.size(); j-- > 0;) {
    const SpikeTensor& in =
        j == 0 ? traces.combined : traces.head[j - 1].output_spikes;
    auto g = spike_backward(net.head[j], in, traces.head[j].membrane, error,
                            surrogate, /*need_input_error=*/true);
    head_grads[j] = std::move(g.weights);
    error = std::move(g.input_error);
  }

  std::vector<Matrix> grads;
  std::size_t offset = 0;
  for (std::size_t b = 0; b < net.branches.size(); ++b) {
    const auto& layers = net.branches[b].layers;
    const std::size_t width = net.branches[b].n_out();
    Matrix branch_error(width, error.cols());
    for (std::size_t r = 0; r < width; ++r) {
      const auto src = error.row(offset + r);
      std::copy(src.begin(), src.end(), branch_error.row(r).begin());
    }
    offset += width;

    std::vector<Matrix> branch_grads;
    for (std::size_t j = layers.size(); j-- > 0;) {
      const auto* dense = std::get_if<SrmLayer>(&layers[j]);
      if (dense == nullptr) break;  // pooling has nothing to learn
      const SpikeTensor& in = j == 0 ? input.branches[b]
                                     : traces.branches[b][j - 1].output_spikes;
      const bool need = j > 0 && std::holds_alternative<SrmLayer>(layers[j - 1]);
      auto g = spike_backward(*dense, in, traces.branches[b][j].membrane,
                              branch_error, surrogate, need);
      branch_grads.push_back(std::move(g.weights));
      branch_error = std::move(g.input_error);
    }
    for (auto it = branch_grads.rbegin(); it != branch_grads.rend(); ++it)
      grads.push_back(std::move(*it));
  }
  for (auto& g : head_grads) grads.push_back(std::move(g));
  return {std::move(grads)};
}

/// RMS-normalised gradient step with an l2 shrink applied outside the
/// normalisation:
///
///   v <- decay v + (1 - decay) g^2
///   w <- w - lr (g / (sqrt(v) + eps) + l2 w)
struct OptimizerState {
  double learning_rate = 1e-3;
  double l2_coefficient = 1e-4;
  double decay = 0.99;
  double epsilon = 1e-8;
  std::vector<Matrix> mean_square;

  void validate() const {
    require(learning_rate >= 0.0, ErrorKind::config, "learning rate must be >= 0");
    require(l2_coefficient >= 0.0, ErrorKind::config, "l2 coefficient must be >= 0");
    require(l2_coefficient == 0.0 || learning_rate * l2_coefficient < 1.0, ErrorKind::config,
            "learning rate * l2 must stay below 1");
    require(decay >= 0.0 && decay < 1.0 && epsilon > 0.0, ErrorKind::config,
            "bad RMS decay or epsilon");
  }
};

inline void optimizer_step(Network& net, const NetworkGradients& grads,
                           OptimizerState& opt) {
  auto layers = dense_layers(net);
  require(grads.layers.size() == layers.size(), ErrorKind::shape,
          "gradient count does not match the network");
  if (opt.mean_square.empty()) {
    for (const auto* l : layers) opt.mean_square.emplace_back(l->n_out(), l->n_in());
  }
  for (std::size_t k = 0; k < layers.size(); ++k) {
    auto w = layers[k]->mutable_weights().values();
    const auto g = grads.layers[k].values();
    auto v = opt.mean_square[k].values();
    require(g.size() == w.size(), ErrorKind::shape, "gradient shape mismatch");
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = opt.decay * v[i] + (1.0 - opt.decay) * g[i] * g[i];
      const double step = g[i] / (std::sqrt(v[i]) + opt.epsilon) + opt.l2_coefficient * w[i];
      w[i] -= opt.learning_rate * step;
    }
  }
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct InitConfig {
  double range_scale = 4.0;     // a = range_scale / sqrt(fan_in)
  double revive_factor = 1.5;   // weight scale applied to silent layers
  std::size_t max_rounds = 24;
};

/// Draws weights uniformly in [-a, a], a = 4 / sqrt(fan_in), then rescales
/// any layer that stays silent on the calibration inputs.
inline void initialize_weights(Network& net, std::uint64_t seed,
                               std::span<const LabeledInput> calibration = {},
                               const InitConfig& config = {}) {
  std::mt19937_64 rng(seed);
  auto layers = dense_layers(net);
  for (auto* l : layers) {
    const double a = config.range_scale / std::sqrt(static_cast<double>(l->n_in()));
    for (double& w : l->mutable_weights().values()) w = (2.0 * unit_uniform(rng) - 1.0) * a;
  }
  if (calibration.empty()) return;
  for (std::size_t round = 0; round < config.max_rounds; ++round) {
    std::vector<std::size_t> spikes(layers.size(), 0);
    for (const auto& sample : calibration) {
      const auto traces = network_forward(net, sample.input);
      std::size_t k = 0;
      for (std::size_t b = 0; b < net.branches.size(); ++b)
        for (std::size_t j = 0; j < net.branches[b].layers.size(); ++j)
          if (std::holds_alternative<SrmLayer>(net.branches[b].layers[j]))
            spikes[k++] += traces.branches[b][j].output_spikes.total_spikes();
      for (const auto& t : traces.head) spikes[k++] += t.output_spikes.total_spikes();
    }
    const auto silent = std::find(spikes.begin(), spikes.end(), std::size_t{0});
    if (silent == spikes.end()) return;
    layers[static_cast<std::size_t>(silent - spikes.begin())]->mutable_weights() *=
        config.revive_factor;
  }
}

struct TrainConfig {
  std::uint32_t epochs = 500;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool initialize = true;
  std::optional<SurrogateConfig> surrogate;  // defaults from the first layer
};

struct EpochMetrics {
  std::uint32_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  Network network;
  OptimizerState optimizer;
  std::vector<EpochMetrics> metrics;
};

inline double accuracy(const Network& net, std::span<const LabeledInput> set) {
  if (set.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t correct = 0;
  for (const auto& s : set)
    if (predict(network_forward(net, s.input).output()) == s.label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(set.size());
}

struct SampleResult {
  NetworkGradients grads;
  double loss = 0.0;
  bool correct = false;
};

inline SampleResult sample_gradient(const Network& net, const LabeledInput& sample,
                                    const LossSpec& spec,
                                    const SurrogateConfig& surrogate) {
  const auto traces = network_forward(net, sample.input);
  const auto err = output_error(traces.output(), sample.label, spec);
  return {backward(net, sample.input, traces, err.grad, surrogate), err.loss,
          predict(traces.output()) == sample.label};
}

/// Minibatch training. Batch gradients are averaged in sample order, so the
/// result is bit-identical for any thread count.
inline TrainResult train(Network net, std::span<const LabeledInput> train_set,
                         const LossSpec& spec, OptimizerState optimizer,
                         const TrainConfig& config,
                         std::span<const LabeledInput> test_set = {},
                         const std::function<void(const EpochMetrics&)>& on_epoch = {}) {
  require(!train_set.empty(), ErrorKind::invalid_argument, "training set is empty");
  require(config.batch_size > 0, ErrorKind::config, "batch size must be positive");
  net.validate();
  spec.validate();
  optimizer.validate();
  for (const auto& s : train_set) {
    require(s.input.branches.size() == net.branches.size(), ErrorKind::shape,
            "sample branch count does not match the network");
    for (std::size_t b = 0; b < net.branches.size(); ++b) {
      require(s.input.branches[b].channel_count() == train_set[0].input.branches[b].channel_count() &&
                  s.input.branches[b].n_bins() == train_set[0].input.branches[b].n_bins(),
              ErrorKind::shape, "training samples differ in tensor shape");
    }
    require(s.label < net.n_classes(), ErrorKind::index, "label out of range");
  }
  const SurrogateConfig surrogate = config.surrogate.value_or(
      SurrogateConfig::defaults(dense_layers(net).front()->config().threshold));
  surrogate.validate();

  std::mt19937_64 init_rng(config.seed);
  std::mt19937_64 shuffle_rng(config.seed ^ 0x9E3779B97F4A7C15ull);
  if (config.initialize) {
    const std::size_t n_cal = std::min<std::size_t>(train_set.size(), 16);
    initialize_weights(net, init_rng(), train_set.first(n_cal));
  }

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  TrainResult result;
  for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(shuffle_rng() % i);
      std::swap(order[i - 1], order[j]);
    }
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<SampleResult> results(end - start);
      if (config.threads <= 1) {
        for (std::size_t k = start; k < end; ++k)
          results[k - start] = sample_gradient(net, train_set[order[k]], spec, surrogate);
      } else {
        for (std::size_t k0 = start; k0 < end; k0 += config.threads) {
          std::vector<std::future<SampleResult>> jobs;
          for (std::size_t k = k0; k < std::min(end, k0 + config.threads); ++k)
            jobs.push_back(std::async(std::launch::async, [&, k] {
              return sample_gradient(net, train_set[order[k]], spec, surrogate);
            }));
          for (std::size_t k = k0; k < std::min(end, k0 + config.threads); ++k)
            results[k - start] = jobs[k - k0].get();
        }
      }
      NetworkGradients batch = NetworkGradients::zeros_like(net);
      double batch_loss = 0.0;
      for (const auto& r : results) {
        batch += r.grads;
        batch_loss += r.loss;
        correct += r.correct ? 1 : 0;
      }
      if (!std::isfinite(batch_loss)) {
        fail(ErrorKind::divergence, "non-finite loss at epoch " + std::to_string(epoch + 1) +
                                        ", batch " + std::to_string(batch_index + 1));
      }
      batch *= 1.0 / static_cast<double>(results.size());
      optimizer_step(net, batch, optimizer);
      for (const auto* l : dense_layers(net)) {
        if (!l->weights().all_finite()) {
          fail(ErrorKind::divergence, "non-finite weights at epoch " +
                                          std::to_string(epoch + 1) + ", batch " +
                                          std::to_string(batch_index + 1));
        }
      }
      loss_sum += batch_loss;
    }
    EpochMetrics m;
    m.epoch = epoch + 1;
    m.train_loss = loss_sum / static_cast<double>(train_set.size());
    m.train_acc = static_cast<double>(correct) / static_cast<double>(train_set.size());
    if (!test_set.empty()) m.test_acc = accuracy(net, test_set);
    result.metrics.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  result.network = std::move(net);
  result.optimizer = std::move(optimizer);
  return result;
}

}  // namespace vtsnn
