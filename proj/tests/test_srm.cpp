#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "oracles.hpp"
#include "vtsnn/srm.hpp"

using namespace vtsnn;

namespace {

const SrmConfig kCfg = SrmConfig::with_step(0.001);

SpikeTensor random_spikes(std::uint32_t channels, std::uint32_t n_bins, double p,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution on(p);
  std::vector<std::uint8_t> dense(std::size_t{channels} * n_bins);
  for (auto& v : dense) v = on(rng) ? 1 : 0;
  return SpikeTensor::from_dense(channels, n_bins, 0.001, dense);
}

std::vector<std::vector<int>> as_rows(const SpikeTensor& t) {
  std::vector<std::vector<int>> rows(t.channel_count(), std::vector<int>(t.n_bins(), 0));
  for (std::uint32_t c = 0; c < t.channel_count(); ++c)
    for (auto b : t.active_bins(c)) rows[c][b] = 1;
  return rows;
}

}  // namespace

TEST(Kernel, ResponseShape) {
  const auto eps = make_response_kernel(kCfg);
  ASSERT_GT(eps.support_length(), 6u);
  EXPECT_EQ(eps[0], 0.0);
  EXPECT_DOUBLE_EQ(eps[5], 1.0);
  std::size_t peak = 0;
  for (std::size_t k = 0; k < eps.support_length(); ++k) {
    EXPECT_GE(eps[k], 0.0);
    EXPECT_NEAR(eps[k], oracle::alpha(double(k), 5.0, 1.0), 1e-15);
    if (eps[k] > eps[peak]) peak = k;
  }
  EXPECT_EQ(peak, 5u);
  EXPECT_LT(eps.samples.back(), 1e-6 * 1.01 + 1e-5);
}

TEST(Kernel, RefractoryNonPositive) {
  const auto nu = make_refractory_kernel(kCfg);
  for (double v : nu.samples) EXPECT_LE(v, 0.0);
  EXPECT_DOUBLE_EQ(nu[5], -2.0 * kCfg.threshold);
}

TEST(Kernel, RejectsBadConfig) {
  SrmConfig c = kCfg;
  c.threshold = 0;
  EXPECT_THROW(make_response_kernel(c), Error);
}

TEST(Convolve, ImpulseGivesKernel) {
  const auto eps = make_response_kernel(kCfg);
  std::vector<double> x(150, 0.0);
  x[0] = 1.0;
  const auto y = kernel_convolve(x, eps);
  for (std::size_t t = 0; t < 150; ++t)
    EXPECT_EQ(y[t], t < eps.support_length() ? eps[t] : 0.0);
}

TEST(Convolve, ZeroSignal) {
  const auto y = kernel_convolve(std::vector<double>(40, 0.0), make_response_kernel(kCfg));
  for (double v : y) EXPECT_EQ(v, 0.0);
}

TEST(Convolve, MatchesDoubleLoopOracle) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  const auto eps = make_response_kernel(kCfg);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(150);
    for (auto& v : x) v = u(rng);
    const auto got = kernel_convolve(x, eps);
    const auto want = oracle::convolve(x, eps.samples);
    for (std::size_t t = 0; t < x.size(); ++t)
      EXPECT_NEAR(got[t], want[t], 1e-12 * std::max(1.0, std::abs(want[t])));
  }
}

TEST(Convolve, CorrelateIsAdjoint) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  const auto eps = make_response_kernel(kCfg);
  std::vector<double> a(90), b(90);
  for (auto& v : a) v = u(rng);
  for (auto& v : b) v = u(rng);
  const auto ca = kernel_convolve(a, eps);
  const auto cb = kernel_correlate(b, eps);
  double lhs = 0, rhs = 0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    lhs += ca[t] * b[t];
    rhs += a[t] * cb[t];
  }
  EXPECT_NEAR(lhs, rhs, 1e-12);
}

TEST(SrmForward, ZeroInput) {
  Matrix w(3, 4, 0.7);
  const SrmLayer layer(w, kCfg);
  const auto tr = srm_forward(layer, SpikeTensor(4, 30, 0.001));
  EXPECT_EQ(tr.output_spikes.total_spikes(), 0u);
  for (double v : tr.membrane.values()) EXPECT_EQ(v, 0.0);
}

TEST(SrmForward, SubThresholdEqualsScaledKernel) {
  const double w = 1.2;  // peak w * 1 < 1.25
  const SrmLayer layer(Matrix(1, 1, w), kCfg);
  const auto in = SpikeTensor::from_rows(40, 0.001, {{3}});
  const auto tr = srm_forward(layer, in);
  EXPECT_EQ(tr.output_spikes.total_spikes(), 0u);
  const auto eps = layer.response_kernel();
  for (std::size_t t = 0; t < 40; ++t)
    EXPECT_EQ(tr.membrane(0, t), t >= 3 && t - 3 < eps.support_length() ? w * eps[t - 3] : 0.0);
}

TEST(SrmForward, SingleCrossingThenRefractory) {
  const double w = 2.0;
  const SrmLayer layer(Matrix(1, 1, w), kCfg);
  const auto in = SpikeTensor::from_rows(60, 0.001, {{0}});
  const auto tr = srm_forward(layer, in);
  // First t with 2 * eps(t) >= 1.25.
  std::uint32_t first = 0;
  while (w * oracle::alpha(first, 5.0, 1.0) < kCfg.threshold) ++first;
  ASSERT_EQ(tr.output_spikes.count(0), 1u);
  EXPECT_TRUE(tr.output_spikes.at(0, first));
  const auto ref = oracle::step_neuron({as_rows(in)[0]}, {w}, 5.0, kCfg.threshold);
  for (std::size_t t = 0; t < 60; ++t) {
    EXPECT_NEAR(tr.membrane(0, t), ref.membrane[t], 1e-5);
    EXPECT_EQ(tr.output_spikes.at(0, t), ref.spikes[t] == 1);
  }
  EXPECT_LT(tr.membrane(0, first + 5), w * oracle::alpha(first + 5, 5.0, 1.0));
}

TEST(SrmForward, RandomLayerMatchesStepThroughOracle) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> wdist(-0.8, 1.6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto in = random_spikes(6, 80, 0.08, 100 + trial);
    Matrix w(1, 6);
    for (double& v : w.values()) v = wdist(rng);
    const auto tr = srm_forward(SrmLayer(w, kCfg), in);
    const auto ref = oracle::step_neuron(as_rows(in), {w.values().begin(), w.values().end()},
                                         5.0, kCfg.threshold);
    for (std::size_t t = 0; t < 80; ++t) {
      EXPECT_NEAR(tr.membrane(0, t), ref.membrane[t], 1e-5);
      EXPECT_EQ(tr.output_spikes.at(0, t), ref.spikes[t] == 1) << "trial " << trial << " t " << t;
    }
  }
}

TEST(SrmForward, ShapeMismatch) {
  const SrmLayer layer(Matrix(2, 3, 0.1), kCfg);
  try {
    srm_forward(layer, SpikeTensor(4, 10, 0.001));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::shape);
  }
}

TEST(SrmForward, RejectsNonFiniteWeights) {
  EXPECT_THROW(SrmLayer(Matrix(1, 1, std::nan("")), kCfg), Error);
}

TEST(DenseLayer, TactileEncoderShapes) {
  std::mt19937_64 rng(1);
  Matrix w(32, 156);
  std::uniform_real_distribution<double> d(-0.3, 0.6);
  for (double& v : w.values()) v = d(rng);
  const auto tr = dense_spiking_forward(SrmLayer(w, kCfg), random_spikes(156, 150, 0.05, 2));
  EXPECT_EQ(tr.membrane.rows(), 32u);
  EXPECT_EQ(tr.membrane.cols(), 150u);
  EXPECT_EQ(tr.output_spikes.channel_count(), 32u);
  EXPECT_EQ(tr.output_spikes.n_bins(), 150u);
}

TEST(DenseLayer, ZeroWeightsNoSpikes) {
  const auto tr = dense_spiking_forward(SrmLayer(156, 32, kCfg), random_spikes(156, 150, 0.3, 3));
  EXPECT_EQ(tr.output_spikes.total_spikes(), 0u);
}

TEST(SrmProperties, SubThresholdLinearity) {
  const auto in = random_spikes(10, 100, 0.05, 6);
  Matrix w(4, 10);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-0.3, 0.3);
  for (double& v : w.values()) v = d(rng);
  const auto a = srm_forward(SrmLayer(w, kCfg), in);
  Matrix w2 = w;
  w2 *= 2.0;
  const auto b = srm_forward(SrmLayer(w2, kCfg), in);
  for (std::size_t n = 0; n < 4; ++n) {
    const auto first = [&](const LayerTrace& t) {
      const auto bins = t.output_spikes.active_bins(static_cast<std::uint32_t>(n));
      return bins.empty() ? 100u : bins.front();
    };
    const std::uint32_t limit = std::min(first(a), first(b));
    for (std::uint32_t t = 0; t <= std::min(limit, 99u); ++t)
      EXPECT_NEAR(b.membrane(n, t), 2.0 * a.membrane(n, t), 1e-12);
  }
}

TEST(SrmProperties, CausalTruncation) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(-0.5, 2.0);
  Matrix w(5, 12);
  for (double& v : w.values()) v = d(rng);
  const SrmLayer layer(w, kCfg);
  const auto in = random_spikes(12, 120, 0.1, 10);
  const auto full = srm_forward(layer, in);
  for (std::uint32_t t : {1u, 17u, 64u, 119u}) {
    const auto part = srm_forward(layer, in.truncated(t));
    EXPECT_EQ(part.output_spikes, full.output_spikes.truncated(t));
  }
}

TEST(SrmProperties, ExtraRefractorySpikeNeverRaisesMembrane) {
  const auto nu = make_refractory_kernel(kCfg);
  std::vector<double> history(50, 0.0);
  history[4] = 1.0;
  const auto before = kernel_convolve(history, nu);
  history[9] = 1.0;
  const auto after = kernel_convolve(history, nu);
  for (std::size_t t = 0; t < 50; ++t) EXPECT_LE(after[t], before[t]);
}

TEST(SrmProperties, SpikesOnlyAtOrAboveThreshold) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> d(-1.0, 3.0);
  Matrix w(8, 20);
  for (double& v : w.values()) v = d(rng);
  const auto tr = srm_forward(SrmLayer(w, kCfg), random_spikes(20, 150, 0.1, 22));
  ASSERT_GT(tr.output_spikes.total_spikes(), 0u);
  for (std::uint32_t n = 0; n < 8; ++n)
    for (std::uint32_t t = 0; t < 150; ++t)
      EXPECT_EQ(tr.output_spikes.at(n, t), tr.membrane(n, t) >= kCfg.threshold);
}

TEST(Pool, CameraCropGrid) {
  EXPECT_EQ(pooled_extent(200, 4, 4), 50u);
  EXPECT_EQ(pooled_extent(250, 4, 4), 62u);
  const PoolLayer pool({200, 250, 2}, 4, 4, kCfg);
  EXPECT_EQ(pool.n_out(), 6200u);
}

TEST(Pool, SinglePixelTriggersItsCell) {
  const VisionGeometry g{8, 8, 2};
  const auto ch = vision_channel_index(5, 2, Polarity::negative, g);
  std::vector<std::vector<std::uint32_t>> rows(g.channel_count());
  rows[ch] = {0};
  const auto in = SpikeTensor::from_rows(20, 0.001, rows, g);
  const auto tr = sum_pool_forward(in, 4, 4, kCfg);
  const VisionGeometry out{2, 2, 2};
  const auto cell = vision_channel_index(1, 0, Polarity::negative, out);
  EXPECT_EQ(tr.output_spikes.total_spikes(), 1u);
  EXPECT_EQ(tr.output_spikes.count(cell), 1u);
  // Oracle: one input with weight gain * phi through the scalar neuron.
  const auto ref = oracle::step_neuron({std::vector<int>(20, 0)}, {1.1 * kCfg.threshold}, 5.0,
                                       kCfg.threshold);
  std::vector<std::vector<int>> one{std::vector<int>(20, 0)};
  one[0][0] = 1;
  const auto ref2 = oracle::step_neuron(one, {1.1 * kCfg.threshold}, 5.0, kCfg.threshold);
  for (std::uint32_t t = 0; t < 20; ++t) {
    EXPECT_EQ(tr.output_spikes.at(cell, t), ref2.spikes[t] == 1);
    EXPECT_EQ(ref.spikes[t], 0);
  }
}

TEST(Pool, MatchesReceptiveFieldOracle) {
  // Kernel 3, stride 2 on 7x5: windows overlap and the last column is dropped.
  const VisionGeometry g{7, 5, 2};
  const auto in = [&] {
    auto t = random_spikes(static_cast<std::uint32_t>(g.channel_count()), 30, 0.05, 77);
    std::vector<std::vector<std::uint32_t>> rows(t.channel_count());
    for (std::uint32_t c = 0; c < t.channel_count(); ++c)
      rows[c].assign(t.active_bins(c).begin(), t.active_bins(c).end());
    return SpikeTensor::from_rows(30, 0.001, rows, g);
  }();
  const auto tr = sum_pool_forward(in, 3, 2, kCfg);
  const VisionGeometry out{3, 2, 2};
  ASSERT_EQ(tr.output_spikes.channel_count(), out.channel_count());
  const auto dense = as_rows(in);
  for (std::uint32_t p = 0; p < 2; ++p) {
    const auto pol = p == 0 ? Polarity::positive : Polarity::negative;
    for (std::uint32_t cy = 0; cy < out.height; ++cy)
      for (std::uint32_t cx = 0; cx < out.width; ++cx) {
        std::vector<std::vector<int>> field;
        for (std::uint32_t y = cy * 2; y < cy * 2 + 3; ++y)
          for (std::uint32_t x = cx * 2; x < cx * 2 + 3; ++x)
            field.push_back(dense[vision_channel_index(x, y, pol, g)]);
        const std::vector<double> w(field.size(), 1.1 * kCfg.threshold);
        const auto ref = oracle::step_neuron(field, w, 5.0, kCfg.threshold);
        const auto oc = vision_channel_index(cx, cy, pol, out);
        for (std::uint32_t t = 0; t < 30; ++t)
          ASSERT_EQ(tr.output_spikes.at(oc, t), ref.spikes[t] == 1);
      }
  }
}

TEST(Pool, MergedPolarityUsesOnePlane) {
  const VisionGeometry g{8, 4, 1};
  std::vector<std::vector<std::uint32_t>> rows(g.channel_count());
  rows[vision_channel_index(6, 1, Polarity::negative, g)] = {2};
  const auto tr = sum_pool_forward(SpikeTensor::from_rows(12, 0.001, rows, g), 4, 4, kCfg);
  ASSERT_EQ(tr.output_spikes.channel_count(), 2u);
  EXPECT_EQ(tr.output_spikes.count(1), 1u);
}

TEST(Pool, ZeroInputAndMissingGeometry) {
  const VisionGeometry g{8, 8, 2};
  const auto tr = sum_pool_forward(SpikeTensor(128, 10, 0.001, g), 4, 4, kCfg);
  EXPECT_EQ(tr.output_spikes.total_spikes(), 0u);
  EXPECT_TRUE(tr.output_spikes.geometry().has_value());
  try {
    sum_pool_forward(SpikeTensor(128, 10, 0.001), 4, 4, kCfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::shape);
    EXPECT_NE(std::string(e.what()).find("layout"), std::string::npos);
  }
}
