#pragma once

// Spike Response Model layers.
//
// The membrane of output neuron n at step t is
//
//   u[n][t] = sum_i w[n][i] * (eps * s_i)[t] + (nu * o_n)[t]
//
// where eps is the response kernel, nu the (non-positive) refractory kernel
// and o_n the neuron's own spikes emitted strictly before t. A spike is
// emitted at t iff u[n][t] >= threshold.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vtsnn/error.hpp"
#include "vtsnn/event.hpp"
#include "vtsnn/matrix.hpp"

namespace vtsnn {

struct SrmConfig {
  double threshold = 1.25;
  double tau_response = 0.005;   // seconds
  double tau_refractory = 0.005; // seconds
  double sim_step = 0.001;       // seconds

  /// Defaults with both time constants at five simulation steps.
  static SrmConfig with_step(double sim_step) {
    SrmConfig c;
    c.sim_step = sim_step;
    c.tau_response = 5.0 * sim_step;
    c.tau_refractory = 5.0 * sim_step;
    return c;
  }

  void validate() const {
    require(threshold > 0.0 && tau_response > 0.0 && tau_refractory > 0.0 &&
                sim_step > 0.0,
            ErrorKind::config,
            "SRM threshold, time constants and step must be positive");
  }

  friend bool operator==(const SrmConfig&, const SrmConfig&) = default;
};

/// Causal kernel sampled at non-negative integer steps.
struct Kernel {
  std::vector<double> samples;

  std::size_t support_length() const { return samples.size(); }
  double operator[](std::size_t k) const { return samples[k]; }
};

inline constexpr double kKernelCutoff = 1e-6;

/// amplitude * (k / tau) * exp(1 - k / tau), peak `amplitude` at k = tau,
/// cut once past the peak and below kKernelCutoff in magnitude.
inline Kernel alpha_kernel(double tau_steps, double amplitude) {
  require(tau_steps > 0.0, ErrorKind::config, "kernel time constant must be positive");
  Kernel k;
  const auto max_len = static_cast<std::size_t>(std::ceil(tau_steps * 64.0)) + 2;
  for (std::size_t i = 0; i < max_len; ++i) {
    const double x = static_cast<double>(i) / tau_steps;
    const double v = amplitude * x * std::exp(1.0 - x);
    if (x > 1.0 && std::abs(v) < kKernelCutoff) break;
    k.samples.push_back(v);
  }
  return k;
}

/// eps(t) = (t / tau_s) exp(1 - t / tau_s), unit peak at t = tau_s.
inline Kernel make_response_kernel(const SrmConfig& c) {
  c.validate();
  return alpha_kernel(c.tau_response / c.sim_step, 1.0);
}

/// nu(t) = -2 phi (t / tau_r) exp(1 - t / tau_r).
inline Kernel make_refractory_kernel(const SrmConfig& c) {
  c.validate();
  return alpha_kernel(c.tau_refractory / c.sim_step, -2.0 * c.threshold);
}

/// out[t] = sum_{k=0..t} kernel[k] * signal[t-k], truncated to the signal
/// length.
inline std::vector<double> kernel_convolve(std::span<const double> signal,
                                           const Kernel& kernel) {
  std::vector<double> out(signal.size(), 0.0);
  for (std::size_t t = 0; t < signal.size(); ++t) {
    const std::size_t kmax = std::min(t + 1, kernel.support_length());
    double acc = 0.0;
    for (std::size_t k = 0; k < kmax; ++k) acc += kernel[k] * signal[t - k];
    out[t] = acc;
  }
  return out;
}

/// out[t] = sum_{tau >= t} kernel[tau - t] * signal[tau]; the adjoint of
/// kernel_convolve.
inline std::vector<double> kernel_correlate(std::span<const double> signal,
                                            const Kernel& kernel) {
  std::vector<double> out(signal.size(), 0.0);
  for (std::size_t t = 0; t < signal.size(); ++t) {
    const std::size_t kmax = std::min(signal.size() - t, kernel.support_length());
    double acc = 0.0;
    for (std::size_t k = 0; k < kmax; ++k) acc += kernel[k] * signal[t + k];
    out[t] = acc;
  }
  return out;
}

struct LayerTrace {
  Matrix membrane;  // [n_out x n_bins]
  SpikeTensor output_spikes;
};

/// Fully connected SRM layer.
class SrmLayer {
 public:
  SrmLayer(std::size_t n_in, std::size_t n_out, SrmConfig config)
      : SrmLayer(Matrix(n_out, n_in), config) {}

  SrmLayer(Matrix weights, SrmConfig config)
      : weights_(std::move(weights)),
        config_(config),
        response_(make_response_kernel(config)),
        refractory_(make_refractory_kernel(config)) {
    require(weights_.rows() > 0 && weights_.cols() > 0, ErrorKind::shape,
            "dense layer needs non-empty fan-in and fan-out");
    require(weights_.all_finite(), ErrorKind::validation,
            "layer weights must be finite");
  }

  std::size_t n_in() const { return weights_.cols(); }
  std::size_t n_out() const { return weights_.rows(); }
  const Matrix& weights() const { return weights_; }
  Matrix& mutable_weights() { return weights_; }
  const SrmConfig& config() const { return config_; }
  const Kernel& response_kernel() const { return response_; }
  const Kernel& refractory_kernel() const { return refractory_; }

 private:
  Matrix weights_;
  SrmConfig config_;
  Kernel response_;
  Kernel refractory_;
};

namespace detail {

/// Adds kernel * row into `out`, skipping zero entries of `row`.
inline void accumulate_response(std::span<const double> row,
                                const Kernel& kernel, std::span<double> out) {
  const std::size_t n = row.size();
  for (std::size_t t = 0; t < n; ++t) {
    const double a = row[t];
    if (a == 0.0) continue;
    const std::size_t kmax = std::min(n - t, kernel.support_length());
    for (std::size_t k = 0; k < kmax; ++k) out[t + k] += a * kernel[k];
  }
}

/// Runs the threshold/refractory recursion on a pre-kernel drive matrix
/// [n_out x n_bins].
inline LayerTrace run_srm(const Matrix& drive, const SrmConfig& config,
                          const Kernel& response, const Kernel& refractory,
                          double bin_width,
                          std::optional<VisionGeometry> geometry = std::nullopt) {
  const std::size_t n_out = drive.rows();
  const std::size_t n_bins = drive.cols();
  LayerTrace trace;
  trace.membrane = Matrix(n_out, n_bins);
  for (std::size_t n = 0; n < n_out; ++n) {
    accumulate_response(drive.row(n), response, trace.membrane.row(n));
  }
  std::vector<std::vector<std::uint32_t>> spikes(n_out);
  for (std::size_t n = 0; n < n_out; ++n) {
    auto u = trace.membrane.row(n);
    for (std::size_t t = 0; t < n_bins; ++t) {
      // u[t] already holds refractory contributions from spikes before t.
      if (u[t] >= config.threshold) {
        spikes[n].push_back(static_cast<std::uint32_t>(t));
        const std::size_t kmax =
            std::min(n_bins - t, refractory.support_length());
        for (std::size_t k = 1; k < kmax; ++k) u[t + k] += refractory[k];
      }
    }
  }
  trace.output_spikes = SpikeTensor::from_rows(
      static_cast<std::uint32_t>(n_bins), bin_width, spikes, geometry);
  return trace;
}

}  // namespace detail

inline LayerTrace srm_forward(const SrmLayer& layer, const SpikeTensor& input) {
  if (input.channel_count() != layer.n_in()) {
    fail(ErrorKind::shape, "layer expects " + std::to_string(layer.n_in()) +
                               " input channels, got " +
                               std::to_string(input.channel_count()));
  }
  const Matrix& w = layer.weights();
  Matrix drive(layer.n_out(), input.n_bins());
  for (std::uint32_t i = 0; i < input.channel_count(); ++i) {
    for (std::uint32_t b : input.active_bins(i)) {
      for (std::size_t n = 0; n < layer.n_out(); ++n) drive(n, b) += w(n, i);
    }
  }
  return detail::run_srm(drive, layer.config(), layer.response_kernel(),
                         layer.refractory_kernel(), input.bin_width());
}

inline LayerTrace dense_spiking_forward(const SrmLayer& layer,
                                        const SpikeTensor& input) {
  return srm_forward(layer, input);
}

/// Grid size along one axis for a window of `kernel` moved by `stride`;
/// trailing pixels that do not fill a whole window are dropped.
inline std::uint32_t pooled_extent(std::uint32_t extent, std::uint32_t kernel,
                                   std::uint32_t stride) {
  require(kernel > 0 && stride > 0, ErrorKind::config,
          "pool kernel and stride must be positive");
  require(extent >= kernel, ErrorKind::shape,
          "pool kernel larger than the input extent");
  return (extent - kernel) / stride + 1;
}

inline VisionGeometry pooled_geometry(const VisionGeometry& in,
                                      std::uint32_t kernel,
                                      std::uint32_t stride) {
  return {pooled_extent(in.width, kernel, stride),
          pooled_extent(in.height, kernel, stride), in.polarities};
}

/// Sum pooling over each polarity plane followed by SRM dynamics. Every
/// pooled neuron sees the unweighted spike sum of its receptive field scaled
/// by gain * threshold, so one input spike can drive it over threshold
/// whenever gain > 1.
class PoolLayer {
 public:
  PoolLayer(VisionGeometry input, std::uint32_t kernel, std::uint32_t stride,
            SrmConfig config, double gain = 1.1)
      : input_(input),
        output_(pooled_geometry(input, kernel, stride)),
        kernel_(kernel),
        stride_(stride),
        gain_(gain),
        config_(config),
        response_(make_response_kernel(config)),
        refractory_(make_refractory_kernel(config)) {
    require(gain > 0.0, ErrorKind::config, "pool gain must be positive");
  }

  const VisionGeometry& input_geometry() const { return input_; }
  const VisionGeometry& output_geometry() const { return output_; }
  std::size_t n_in() const { return input_.channel_count(); }
  std::size_t n_out() const { return output_.channel_count(); }
  std::uint32_t kernel() const { return kernel_; }
  std::uint32_t stride() const { return stride_; }
  double gain() const { return gain_; }
  double weight() const { return gain_ * config_.threshold; }
  const SrmConfig& config() const { return config_; }
  const Kernel& response_kernel() const { return response_; }
  const Kernel& refractory_kernel() const { return refractory_; }

 private:
  VisionGeometry input_;
  VisionGeometry output_;
  std::uint32_t kernel_;
  std::uint32_t stride_;
  double gain_;
  SrmConfig config_;
  Kernel response_;
  Kernel refractory_;
};

inline LayerTrace pool_forward(const PoolLayer& layer, const SpikeTensor& input) {
  if (!input.geometry()) {
    fail(ErrorKind::shape, "layout error: pooling needs a vision geometry");
  }
  if (!(*input.geometry() == layer.input_geometry())) {
    fail(ErrorKind::shape, "pool input geometry mismatch");
  }
  const VisionGeometry& in = layer.input_geometry();
  const VisionGeometry& out = layer.output_geometry();
  const std::uint32_t k = layer.kernel();
  const std::uint32_t s = layer.stride();
  // Cells along one axis whose window [cell*s, cell*s + k) covers `pos`.
  auto cells = [&](std::uint32_t pos, std::uint32_t n_cells) {
    const std::uint32_t hi = std::min(pos / s, n_cells - 1);
    const std::uint32_t lo = pos + 1 > k ? (pos + 1 - k + s - 1) / s : 0;
    return std::pair{lo, hi};
  };
  Matrix drive(out.channel_count(), input.n_bins());
  const double w = layer.weight();
  for (std::uint32_t c = 0; c < input.channel_count(); ++c) {
    const auto bins = input.active_bins(c);
    if (bins.empty()) continue;
    const PixelAddress px = vision_pixel(c, in);
    const std::uint32_t plane =
        in.polarities == 1 ? 0u : polarity_plane(px.polarity);
    const auto [x_lo, x_hi] = cells(px.x, out.width);
    const auto [y_lo, y_hi] = cells(px.y, out.height);
    for (std::uint32_t cy = y_lo; cy <= y_hi && cy < out.height; ++cy) {
      if (cy * s + k <= px.y) continue;
      for (std::uint32_t cx = x_lo; cx <= x_hi && cx < out.width; ++cx) {
        if (cx * s + k <= px.x) continue;
        const std::size_t oc = (std::size_t{plane} * out.height + cy) * out.width + cx;
        for (std::uint32_t b : bins) drive(oc, b) += w;
      }
    }
  }
  return detail::run_srm(drive, layer.config(), layer.response_kernel(),
                         layer.refractory_kernel(), input.bin_width(), out);
}

inline LayerTrace sum_pool_forward(const SpikeTensor& input, std::uint32_t kernel,
                                   std::uint32_t stride, const SrmConfig& config,
                                   double gain = 1.1) {
  if (!input.geometry()) {
    fail(ErrorKind::shape, "layout error: pooling needs a vision geometry");
  }
  return pool_forward(PoolLayer(*input.geometry(), kernel, stride, config, gain),
                      input);
}

}  // namespace vtsnn
