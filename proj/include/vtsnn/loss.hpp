#pragma once

// Spike-count losses.
//
//   count:     L   = 1/2 sum_n ( sum_t s_n(t) - c_n )^2
//   weighted:  L_w = 1/2 sum_n ( sum_t w(t) s_n(t) - sum_t w(t) d_n(t) )^2
//
// with c_n the desired count of neuron n (true count for the target class,
// false count otherwise), d_n a desired spike train carrying c_n spikes and
// w(t) = max(0, beta t^2 + gamma) over bin index t.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "vtsnn/error.hpp"
#include "vtsnn/event.hpp"
#include "vtsnn/matrix.hpp"

namespace vtsnn {

enum class WeightingKind { uniform, quadratic };

/// Where the desired spikes of the weighted loss sit inside the window.
enum class TargetPlacement { earliest, uniform };

struct Weighting {
  WeightingKind kind = WeightingKind::uniform;
  double beta = 0.0;   // per bin^2; must be <= 0
  double gamma = 1.0;

  /// beta = -0.9 gamma / horizon^2, so w stays above 0.1 gamma.
  static Weighting quadratic(std::uint32_t horizon, double gamma = 1.0) {
    require(horizon > 0, ErrorKind::config, "weighting horizon must be positive");
    const double h = static_cast<double>(horizon);
    return {WeightingKind::quadratic, -0.9 * gamma / (h * h), gamma};
  }
};

struct LossSpec {
  std::uint32_t desired_count_true = 0;
  std::uint32_t desired_count_false = 0;
  Weighting weighting;
  std::uint32_t horizon = 0;  // n_bins
  TargetPlacement placement = TargetPlacement::earliest;

  void validate() const {
    require(desired_count_true > desired_count_false, ErrorKind::config,
            "desired true count must exceed the false count");
    if (weighting.kind == WeightingKind::quadratic) {
      require(weighting.beta <= 0.0, ErrorKind::config,
              "quadratic weighting needs beta <= 0");
    }
  }

  std::uint32_t desired_count(std::size_t neuron, std::size_t target) const {
    return neuron == target ? desired_count_true : desired_count_false;
  }
};

/// w(t) for t in [0, n_bins). Throws a config error when any weight is not
/// strictly positive after clamping at zero.
inline std::vector<double> temporal_weights(const Weighting& weighting,
                                            std::uint32_t n_bins) {
  std::vector<double> w(n_bins, 1.0);
  if (weighting.kind == WeightingKind::uniform) return w;
  for (std::uint32_t t = 0; t < n_bins; ++t) {
    const double td = static_cast<double>(t);
    w[t] = std::max(0.0, weighting.beta * td * td + weighting.gamma);
    if (!(w[t] > 0.0)) {
      fail(ErrorKind::config, "temporal weight is not positive at bin " +
                                  std::to_string(t));
    }
  }
  return w;
}

/// Bins of the desired spike train carrying `count` spikes.
inline std::vector<std::uint32_t> desired_train(std::uint32_t count,
                                                std::uint32_t n_bins,
                                                TargetPlacement placement) {
  require(count <= n_bins, ErrorKind::config,
          "desired count exceeds the number of bins");
  std::vector<std::uint32_t> bins(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    bins[i] = placement == TargetPlacement::earliest
                  ? i
                  : static_cast<std::uint32_t>(
                        (static_cast<std::uint64_t>(i) * n_bins) / count);
  }
  return bins;
}

struct CountLoss {
  double loss = 0.0;
  std::vector<double> grad;  // dL / d(count_n) = count_n - c_n
};

struct WeightedLoss {
  double loss = 0.0;
  Matrix grad;  // dL / ds_n(t) = w(t) * residual_n
  std::vector<double> residual;
};

inline void check_target(const SpikeTensor& output, std::size_t target) {
  if (target >= output.channel_count()) {
    fail(ErrorKind::index, "target class " + std::to_string(target) +
                               " out of range for " +
                               std::to_string(output.channel_count()) +
                               " output neurons");
  }
}

inline CountLoss spike_count_loss(const SpikeTensor& output, std::size_t target,
                                  const LossSpec& spec) {
  check_target(output, target);
  require(spec.weighting.kind == WeightingKind::uniform, ErrorKind::config,
          "spike-count loss expects uniform weighting");
  CountLoss r;
  r.grad.resize(output.channel_count());
  for (std::uint32_t n = 0; n < output.channel_count(); ++n) {
    const double residual = static_cast<double>(output.count(n)) -
                            static_cast<double>(spec.desired_count(n, target));
    r.grad[n] = residual;
    r.loss += residual * residual;
  }
  r.loss *= 0.5;
  return r;
}

inline WeightedLoss weighted_spike_count_loss(const SpikeTensor& output,
                                              std::size_t target,
                                              const LossSpec& spec) {
  check_target(output, target);
  const std::uint32_t n_bins = output.n_bins();
  const auto w = temporal_weights(spec.weighting, n_bins);
  WeightedLoss r;
  r.grad = Matrix(output.channel_count(), n_bins);
  r.residual.resize(output.channel_count());
  for (std::uint32_t n = 0; n < output.channel_count(); ++n) {
    double observed = 0.0;
    for (std::uint32_t b : output.active_bins(n)) observed += w[b];
    double desired = 0.0;
    for (std::uint32_t b :
         desired_train(spec.desired_count(n, target), n_bins, spec.placement))
      desired += w[b];
    const double residual = observed - desired;
    r.residual[n] = residual;
    r.loss += residual * residual;
    for (std::uint32_t t = 0; t < n_bins; ++t) r.grad(n, t) = w[t] * residual;
  }
  r.loss *= 0.5;
  return r;
}

struct OutputError {
  double loss = 0.0;
  Matrix grad;  // [n_classes x n_bins]
};

/// Loss plus per-step gradient w.r.t. output spikes, for either weighting.
inline OutputError output_error(const SpikeTensor& output, std::size_t target,
                                const LossSpec& spec) {
  if (spec.weighting.kind == WeightingKind::quadratic) {
    auto r = weighted_spike_count_loss(output, target, spec);
    return {r.loss, std::move(r.grad)};
  }
  const auto r = spike_count_loss(output, target, spec);
  OutputError e{r.loss, Matrix(output.channel_count(), output.n_bins())};
  for (std::uint32_t n = 0; n < output.channel_count(); ++n)
    for (std::uint32_t t = 0; t < output.n_bins(); ++t) e.grad(n, t) = r.grad[n];
  return e;
}

struct TargetCounts {
  std::uint32_t true_count = 0;
  std::uint32_t false_count = 0;
};

/// True count is half the maximum spike count, rounded half up and at least
/// one; the false count is `false_ratio` of it, rounded half up.
inline TargetCounts make_target_counts(std::uint32_t max_spikes_per_window,
                                       double false_ratio = 0.1) {
  require(max_spikes_per_window > 0, ErrorKind::invalid_argument,
          "max spikes per window must be positive");
  require(false_ratio >= 0.0 && false_ratio < 1.0, ErrorKind::invalid_argument,
          "false ratio must be in [0, 1)");
  TargetCounts c;
  c.true_count = std::max<std::uint32_t>(1, (max_spikes_per_window + 1) / 2);
  c.false_count =
      static_cast<std::uint32_t>(std::floor(false_ratio * c.true_count + 0.5));
  if (c.false_count >= c.true_count) c.false_count = c.true_count - 1;
  return c;
}

}  // namespace vtsnn
