#pragma once

// Prediction, early-classification curves and the latency benchmark.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "vtsnn/error.hpp"
#include "vtsnn/network.hpp"
#include "vtsnn/predict.hpp"
#include "vtsnn/training.hpp"

namespace vtsnn {

/// Every 10 bins plus the horizon.
inline std::vector<std::uint32_t> default_cutoffs(std::uint32_t n_bins) {
  std::vector<std::uint32_t> cuts;
  for (std::uint32_t b = 10; b < n_bins; b += 10) cuts.push_back(b);
  cuts.push_back(n_bins);
  return cuts;
}

/// Accuracy at each cutoff (bins [0, cutoff)), one forward pass per sample.
inline std::vector<double> early_accuracy(const Network& net,
                                          std::span<const LabeledInput> test_set,
                                          std::span<const std::uint32_t> cutoffs) {
  std::vector<std::size_t> correct(cutoffs.size(), 0);
  for (const auto& s : test_set) {
    const auto traces = network_forward(net, s.input);
    const SpikeTensor& out = traces.output();
    for (std::size_t k = 0; k < cutoffs.size(); ++k) {
      require(cutoffs[k] <= out.n_bins(), ErrorKind::invalid_argument,
              "curve cutoff beyond the horizon");
      if (predict(out, cutoffs[k]) == s.label) ++correct[k];
    }
  }
  std::vector<double> acc(cutoffs.size(), 0.0);
  if (test_set.empty()) return acc;
  for (std::size_t k = 0; k < cutoffs.size(); ++k)
    acc[k] = static_cast<double>(correct[k]) / static_cast<double>(test_set.size());
  return acc;
}

struct AccuracyCurve {
  std::vector<double> time;  // seconds from window start
  std::vector<double> mean;
  std::vector<double> std_dev;  // population std across folds
};

struct FoldModel {
  const Network* network = nullptr;
  std::span<const LabeledInput> test_set;
};

inline AccuracyCurve aggregate_curve(const std::vector<std::vector<double>>& per_fold,
                                     std::span<const std::uint32_t> cutoffs,
                                     double bin_width) {
  require(!per_fold.empty(), ErrorKind::invalid_argument, "no folds to aggregate");
  AccuracyCurve c;
  const double folds = static_cast<double>(per_fold.size());
  for (std::size_t k = 0; k < cutoffs.size(); ++k) {
    double sum = 0.0;
    for (const auto& f : per_fold) sum += f[k];
    const double mean = sum / folds;
    double var = 0.0;
    for (const auto& f : per_fold) var += (f[k] - mean) * (f[k] - mean);
    c.time.push_back(cutoffs[k] * bin_width);
    c.mean.push_back(mean);
    c.std_dev.push_back(std::sqrt(var / folds));
  }
  return c;
}

/// Mean and spread across folds of the accuracy from spikes seen up to each
/// cutoff.
inline AccuracyCurve early_accuracy_curve(std::span<const FoldModel> folds,
                                          std::span<const std::uint32_t> cutoffs,
                                          double bin_width) {
  std::vector<std::vector<double>> per_fold;
  for (const auto& f : folds) per_fold.push_back(early_accuracy(*f.network, f.test_set, cutoffs));
  return aggregate_curve(per_fold, cutoffs, bin_width);
}

inline void write_curve_csv(std::ostream& out, const AccuracyCurve& c) {
  out.precision(10);
  out << "time_s,mean_acc,std_acc\n";
  for (std::size_t k = 0; k < c.time.size(); ++k)
    out << c.time[k] << "," << c.mean[k] << "," << c.std_dev[k] << "\n";
}

// ---------------------------------------------------------------------------

enum class BenchMode { offline, realtime };

inline const char* to_string(BenchMode m) {
  return m == BenchMode::offline ? "offline" : "realtime";
}

struct BenchConfig {
  std::size_t n_samples = 1000;
  std::uint32_t n_steps = 150;
  BenchMode mode = BenchMode::offline;
  std::chrono::duration<double> fetch_delay{0.15};  // realtime mode only
};

struct BenchReport {
  std::size_t n_samples = 0;
  std::uint32_t n_steps = 0;
  BenchMode mode = BenchMode::offline;
  double wall_time = 0.0;   // seconds, t_end - t_start
  double latency_us = 0.0;  // per timestep
  std::vector<double> sample_times;  // seconds per sample, fetch included
  std::size_t correct = 0;
};

inline double latency_per_step_us(double wall_time, std::size_t n_samples,
                                  std::uint32_t n_steps) {
  return wall_time * 1e6 / static_cast<double>(n_samples * n_steps);
}

/// Runs `n_samples` single-sample forward passes, cycling through `pool`.
/// Realtime mode sleeps `fetch_delay` before each pass, standing in for a
/// device that must wait for the whole window to arrive. Latency per step
/// is (t_end - t_start) / (n_samples * n_steps).
inline BenchReport bench(const Network& net, std::span<const LabeledInput> pool,
                         const BenchConfig& config) {
  require(!pool.empty(), ErrorKind::config, "bench needs at least one sample");
  require(config.n_samples > 0 && config.n_steps > 0, ErrorKind::config,
          "bench sample and step counts must be positive");
  for (const auto& s : pool) {
    for (const auto& t : s.input.branches) {
      if (t.n_bins() != config.n_steps) {
        fail(ErrorKind::config, "bench sample has " + std::to_string(t.n_bins()) +
                                    " steps, expected " + std::to_string(config.n_steps));
      }
    }
  }
  using clock = std::chrono::steady_clock;
  BenchReport r;
  r.n_samples = config.n_samples;
  r.n_steps = config.n_steps;
  r.mode = config.mode;
  r.sample_times.reserve(config.n_samples);
  const auto t_start = clock::now();
  for (std::size_t i = 0; i < config.n_samples; ++i) {
    const auto s0 = clock::now();
    if (config.mode == BenchMode::realtime) std::this_thread::sleep_for(config.fetch_delay);
    const auto& sample = pool[i % pool.size()];
    const auto traces = network_forward(net, sample.input);
    if (predict(traces.output()) == sample.label) ++r.correct;
    r.sample_times.push_back(std::chrono::duration<double>(clock::now() - s0).count());
  }
  const auto t_end = clock::now();
  r.wall_time = std::chrono::duration<double>(t_end - t_start).count();
  r.latency_us = latency_per_step_us(r.wall_time, r.n_samples, r.n_steps);
  return r;
}

inline void write_bench_csv(std::ostream& out, const BenchReport& r) {
  out.precision(10);
  out << "mode,n_samples,n_steps,wall_time_s,latency_us_per_step\n"
      << to_string(r.mode) << "," << r.n_samples << "," << r.n_steps << ","
      << r.wall_time << "," << r.latency_us << "\n";
}

inline std::string bench_summary(const BenchReport& r) {
  std::string s = std::string(to_string(r.mode)) + " bench: " +
                  std::to_string(r.n_samples) + " samples x " +
                  std::to_string(r.n_steps) + " steps, wall " +
                  std::to_string(r.wall_time) + " s, latency " +
                  std::to_string(r.latency_us) + " us/step, accuracy " +
                  std::to_string(static_cast<double>(r.correct) /
                                 static_cast<double>(r.n_samples));
  return s;
}

}  // namespace vtsnn
