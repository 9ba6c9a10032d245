// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "vtsnn/vtsnn.hpp"

using namespace vtsnn;

namespace {

struct Outcome {
  enum Status { pass, fail, skip } status;
  std::string detail;
};

int failures = 0;

void criterion(int n, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {Outcome::fail, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const char* tag = o.status == Outcome::pass ? "PASS" : o.status == Outcome::fail ? "FAIL" : "SKIP";
  if (o.status == Outcome::fail) ++failures;
  std::cout << "criterion " << n << ": " << tag << " (" << o.detail << ") [" << secs << " s]"
            << std::endl;
}

SpikeTensor random_tensor(std::uint32_t channels, std::uint32_t n_bins, double p,
                          std::mt19937_64& rng) {
  std::bernoulli_distribution on(p);
  std::vector<std::vector<std::uint32_t>> rows(channels);
  for (auto& r : rows)
    for (std::uint32_t b = 0; b < n_bins; ++b)
      if (on(rng)) r.push_back(b);
  return SpikeTensor::from_rows(n_bins, 0.001, rows);
}

std::vector<std::size_t> labels_of(std::span<const Sample> s) {
  std::vector<std::size_t> y;
  for (const auto& x : s) y.push_back(x.label);
  return y;
}

struct Split {
  std::vector<LabeledInput> train, test;
};

Split fold0(std::span<const Sample> samples, const Network& net, const Preprocess& p,
            std::uint64_t seed) {
  const auto data = prepare(samples, net, p);
  const auto plan = stratified_kfold(labels_of(samples), 5, seed);
  return {select<LabeledInput>(data, plan.train_indices(0)),
          select<LabeledInput>(data, plan.test_indices(0))};
}

Outcome loss_identity() {
  std::mt19937_64 rng(101);
  std::size_t exact = 0, scaled = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::uint32_t classes = 2 + rng() % 19, bins = 20 + rng() % 300;
    const auto out = random_tensor(classes, bins, 0.02 + 0.3 * (rng() % 100) / 100.0, rng);
    const std::size_t target = rng() % classes;
    LossSpec spec{1 + static_cast<std::uint32_t>(rng() % bins), 0, {}, bins};
    spec.desired_count_false = static_cast<std::uint32_t>(rng() % spec.desired_count_true);
    const double plain = spike_count_loss(out, target, spec).loss;
    spec.weighting = {WeightingKind::quadratic, 0.0, 1.0};
    if (weighted_spike_count_loss(out, target, spec).loss == plain) ++exact;
    const double c = 0.1 + 10.0 * (rng() % 1000) / 1000.0;
    spec.weighting = {WeightingKind::quadratic, 0.0, c};
    const double w = weighted_spike_count_loss(out, target, spec).loss;
    if (std::abs(w - c * c * plain) <= 1e-12 * std::max(1.0, std::abs(w))) ++scaled;
  }
  std::ostringstream d;
  d << exact << "/1000 exact, " << scaled << "/1000 scaled";
  return {exact == 1000 && scaled == 1000 ? Outcome::pass : Outcome::fail, d.str()};
}

Outcome gradient_check() {
  const SrmConfig cfg = SrmConfig::with_step(0.001);
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> wd(-0.2, 0.2), rd(-1, 1);
  double worst = 0.0;
  int configs = 0;
  while (configs < 100) {
    const std::uint32_t n_in = 2 + rng() % 10, bins = 50 + rng() % 150;
    const auto in = random_tensor(n_in, bins, 0.03, rng);
    Matrix w(1, n_in);
    for (double& v : w.values()) v = wd(rng);
    if (srm_forward(SrmLayer(w, cfg), in).output_spikes.total_spikes() > 0) continue;
    Matrix r(1, bins);
    for (double& v : r.values()) v = rd(rng);
    auto objective = [&](const Matrix& weights) {
      const auto tr = srm_forward(SrmLayer(weights, cfg), in);
      double acc = 0.0;
      for (std::size_t t = 0; t < bins; ++t) acc += r(0, t) * tr.membrane(0, t);
      return acc;
    };
    const auto g = membrane_backward(SrmLayer(w, cfg), in, r, false);
    for (std::size_t i = 0; i < n_in; ++i) {
      const double h = 1e-3;
      Matrix wp = w, wm = w;
      wp(0, i) += h;
      wm(0, i) -= h;
      const double fd = (objective(wp) - objective(wm)) / (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(g.weights(0, i)), 1e-12});
      worst = std::max(worst, std::abs(fd - g.weights(0, i)) / denom);
    }
    ++configs;
  }
  std::ostringstream d;
  d << "max relative error " << worst << " over 100 neurons";
  return {worst < 1e-6 ? Outcome::pass : Outcome::fail, d.str()};
}

Outcome binning_oracle() {
  std::mt19937_64 rng(303);
  int matched = 0;
  for (int i = 0; i < 50; ++i) {
    double bw;
    std::uint32_t n_bins, s_min = 1;
    if (i % 3 == 0) {
      bw = 0.02, n_bins = 325;
    } else if (i % 3 == 1) {
      bw = 0.001, n_bins = 150;
    } else {
      bw = 0.001 * (1 + rng() % 20), n_bins = 10 + rng() % 200;
      s_min = 1 + rng() % 3;
    }
    const std::uint32_t channels = 156;
    const auto horizon_us = static_cast<std::uint64_t>(std::llround(bw * n_bins * 1e6));
    std::uniform_int_distribution<std::uint64_t> ts(0, horizon_us + horizon_us / 10);
    std::vector<Event> ev(200 + rng() % 2000);
    for (auto& e : ev)
      e = {ts(rng), static_cast<std::uint32_t>(rng() % channels),
           rng() % 2 ? Polarity::positive : Polarity::negative};
    const auto stream = EventStream::from_unsorted(Modality::tactile, channels, std::move(ev));
    const auto bin_us = static_cast<std::uint64_t>(std::llround(bw * 1e6));
    if (bin_events(stream, bw, n_bins, s_min).to_dense() ==
        oracle::histogram_bins(stream, bin_us, n_bins, s_min))
      ++matched;
  }
  return {matched == 50 ? Outcome::pass : Outcome::fail,
          std::to_string(matched) + "/50 streams bit-identical"};
}

Outcome learnability() {
  const auto samples = generate_synthetic(synthetic_preset("disjoint"), 100, 1);
  const auto net = build_tactile_snn(2);
  const auto split = fold0(samples, net, Preprocess::slip(), 1);
  const LossSpec spec{30, 3, {}, 150};
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.seed = 1;
  const auto a = train(net, split.train, spec, {}, cfg);
  const auto b = train(net, split.train, spec, {}, cfg);
  const double tr = accuracy(a.network, split.train), te = accuracy(a.network, split.test);
  const bool same = encode_weights(a.network) == encode_weights(b.network);
  std::ostringstream d;
  d << "train " << tr << ", test " << te << ", deterministic " << (same ? "yes" : "no");
  return {tr == 1.0 && te >= 0.95 && same ? Outcome::pass : Outcome::fail, d.str()};
}

Outcome early_ordering() {
  const std::vector<std::uint32_t> cuts{20, 50, 150};
  double count_mean = 0.0, weighted_mean = 0.0, count20 = 0.0, weighted20 = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto samples = generate_synthetic(synthetic_preset("early"), 100, seed);
    const auto net = build_tactile_snn(2);
    const auto split = fold0(samples, net, Preprocess::slip(), seed);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.seed = seed;
    LossSpec spec{30, 3, {}, 150};
    const auto plain = train(net, split.train, spec, {}, cfg);
    spec.weighting = Weighting::quadratic(150);
    const auto weighted = train(net, split.train, spec, {}, cfg);
    const auto ca = early_accuracy(plain.network, split.test, cuts);
    const auto cb = early_accuracy(weighted.network, split.test, cuts);
    count_mean += ca[1] / 5.0, weighted_mean += cb[1] / 5.0;
    count20 += ca[0] / 5.0, weighted20 += cb[0] / 5.0;
  }
  std::ostringstream d;
  d << "accuracy at 50/150 bins: weighted " << weighted_mean << " vs count " << count_mean
    << "; at 20 bins: " << weighted20 << " vs " << count20;
  return {weighted_mean >= count_mean ? Outcome::pass : Outcome::fail, d.str()};
}

Outcome slip_annotation() {
  int within = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::size_t lift = 150 + seed % 100, slip = lift + 2 + seed % 10;
    const auto a = annotate(oracle::synthetic_pose(420, lift, slip, 10.0, seed));
    if (a.lift_frame && a.slip_frame &&
        std::abs(double(*a.lift_frame) - double(lift)) <= 1.0 &&
        std::abs(double(*a.slip_frame) - double(slip)) <= 1.0)
      ++within;
  }
  std::mt19937_64 rng(606);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto q0 = oracle::random_unit_quaternion(rng), q1 = oracle::random_unit_quaternion(rng);
    worst = std::max(worst, std::abs(quaternion_angle(q0, q1) - oracle::rotation_angle(q0, q1)));
  }
  std::ostringstream d;
  d << within << "/100 traces within 1 frame, angle error " << worst;
  return {within == 100 && worst <= 1e-9 ? Outcome::pass : Outcome::fail, d.str()};
}

Outcome bench_harness() {
  auto net = build_tactile_snn(2);
  initialize_weights(net, 7);
  const auto pool = prepare(generate_synthetic(synthetic_preset("disjoint"), 20, 7), net,
                            Preprocess::slip());
  BenchConfig cfg;
  cfg.n_samples = 1000;
  cfg.n_steps = 150;
  const auto off = bench(net, pool, cfg);
  const bool formula = off.latency_us == off.wall_time / 150000.0 * 1e6 ||
                       off.latency_us == off.wall_time * 1e6 / 150000.0;
  cfg.mode = BenchMode::realtime;
  const auto rt = bench(net, pool, cfg);
  const double slowest_floor = *std::min_element(rt.sample_times.begin(), rt.sample_times.end());
  std::ostringstream d;
  d << "offline " << off.latency_us << " us/step, realtime min sample " << slowest_floor
    << " s over " << rt.sample_times.size();
  return {formula && rt.sample_times.size() == 1000 && slowest_floor >= 0.15 ? Outcome::pass
                                                                             : Outcome::fail,
          d.str()};
}

/// Trains the combined network on fold 0 of an imported dataset.
double reproduce(const std::string& dir, const Preprocess& p, std::uint32_t epochs) {
  const auto samples = load_dataset(dir);
  std::size_t classes = 0;
  for (const auto& s : samples) classes = std::max(classes, s.label + 1);
  const auto net = build_vtsnn(std::max<std::size_t>(classes, 2));
  const auto split = fold0(samples, net, p, 0);
  const auto counts = make_target_counts(p.n_bins * 2 / 5);
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.threads = std::max(1u, std::thread::hardware_concurrency());
  const auto r = train(net, split.train, {counts.true_count, counts.false_count, {}, p.n_bins},
                       {}, cfg);
  return accuracy(r.network, split.test);
}

Outcome dataset_reproduction() {
  const char* containers = std::getenv("VTSNN_CONTAINERS_DATA");
  const char* slip = std::getenv("VTSNN_SLIP_DATA");
  if (!containers && !slip)
    return {Outcome::skip, "set VTSNN_CONTAINERS_DATA and/or VTSNN_SLIP_DATA to run"};
  std::uint32_t epochs = 500;
  if (const char* e = std::getenv("VTSNN_REPRO_EPOCHS")) epochs = std::atoi(e);
  bool ok = true;
  std::ostringstream d;
  if (containers) {
    const double acc = reproduce(containers, Preprocess::containers(), epochs);
    d << "containers " << acc << " (>= 0.70) ";
    ok = ok && acc >= 0.70;
  }
  if (slip) {
    const double acc = reproduce(slip, Preprocess::slip(), epochs);
    d << "slip " << acc << " (>= 0.95)";
    ok = ok && acc >= 0.95;
  }
  return {ok ? Outcome::pass : Outcome::fail, d.str()};
}

}  // namespace

int main() {
  criterion(1, loss_identity);
  criterion(2, gradient_check);
  criterion(3, binning_oracle);
  criterion(4, learnability);
  criterion(5, early_ordering);
  criterion(6, slip_annotation);
  criterion(7, bench_harness);
  criterion(8, dataset_reproduction);
  return failures == 0 ? 0 : 1;
}
