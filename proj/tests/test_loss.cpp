#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include <random>

#include "vtsnn/loss.hpp"
#include "vtsnn/predict.hpp"

using namespace vtsnn;

namespace {

SpikeTensor with_counts(const std::vector<std::uint32_t>& counts, std::uint32_t n_bins) {
  std::vector<std::vector<std::uint32_t>> rows;
  for (auto c : counts) {
    std::vector<std::uint32_t> r;
    for (std::uint32_t b = 0; b < c; ++b) r.push_back(b);
    rows.push_back(r);
  }
  return SpikeTensor::from_rows(n_bins, 0.001, rows);
}

SpikeTensor random_output(std::uint32_t classes, std::uint32_t n_bins, std::mt19937_64& rng) {
  std::bernoulli_distribution on(std::uniform_real_distribution<double>(0, 0.6)(rng));
  std::vector<std::vector<std::uint32_t>> rows(classes);
  for (auto& r : rows)
    for (std::uint32_t b = 0; b < n_bins; ++b)
      if (on(rng)) r.push_back(b);
  return SpikeTensor::from_rows(n_bins, 0.001, rows);
}

LossSpec count_spec(std::uint32_t t, std::uint32_t f, std::uint32_t horizon) {
  return LossSpec{t, f, {}, horizon};
}

}  // namespace

TEST(SpikeCountLoss, ExactTargetsGiveZero) {
  const auto out = with_counts({80, 5}, 150);
  const auto r = spike_count_loss(out, 0, count_spec(80, 5, 150));
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_EQ(r.grad, (std::vector<double>{0.0, 0.0}));
}

TEST(SpikeCountLoss, HandArithmetic) {
  const auto r = spike_count_loss(with_counts({10, 3}, 20), 0, count_spec(8, 5, 20));
  EXPECT_DOUBLE_EQ(r.loss, 4.0);
  EXPECT_EQ(r.grad, (std::vector<double>{2.0, -2.0}));
}

TEST(SpikeCountLoss, TargetOutOfRange) {
  try {
    spike_count_loss(with_counts({1, 1}, 5), 2, count_spec(3, 1, 5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::index);
  }
}

TEST(WeightedLoss, UnitWeightsReduceExactly) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto out = random_output(4, 60, rng);
    const std::size_t target = rng() % 4;
    auto spec = count_spec(30, 3, 60);
    const double plain = spike_count_loss(out, target, spec).loss;
    spec.weighting = {WeightingKind::quadratic, 0.0, 1.0};
    EXPECT_EQ(weighted_spike_count_loss(out, target, spec).loss, plain);
  }
}

TEST(WeightedLoss, ConstantWeightScalesByCSquared) {
  std::mt19937_64 rng(2);
  for (double c : {0.25, 3.0, 7.5}) {
    const auto out = random_output(3, 40, rng);
    auto spec = count_spec(20, 2, 40);
    const double plain = spike_count_loss(out, 1, spec).loss;
    spec.weighting = {WeightingKind::quadratic, 0.0, c};
    const double w = weighted_spike_count_loss(out, 1, spec).loss;
    EXPECT_NEAR(w, c * c * plain, 1e-12 * std::max(1.0, w));
  }
}

TEST(WeightedLoss, EarlierSpikesWeighMore) {
  const auto weights = temporal_weights(Weighting::quadratic(100), 100);
  const auto early = SpikeTensor::from_rows(100, 0.001, {{0, 1, 2, 3, 4}});
  const auto late = SpikeTensor::from_rows(100, 0.001, {{95, 96, 97, 98, 99}});
  double we = 0, wl = 0;
  for (auto b : early.active_bins(0)) we += weights[b];
  for (auto b : late.active_bins(0)) wl += weights[b];
  EXPECT_GT(we, wl);
  for (std::size_t t = 1; t < weights.size(); ++t) EXPECT_LT(weights[t], weights[t - 1]);
  EXPECT_GT(weights.back(), 0.1);
}

TEST(WeightedLoss, GradientIsWeightTimesResidual) {
  auto spec = count_spec(4, 1, 30);
  spec.weighting = Weighting::quadratic(30);
  const auto out = with_counts({2, 6}, 30);
  const auto r = weighted_spike_count_loss(out, 0, spec);
  const auto w = temporal_weights(spec.weighting, 30);
  for (std::uint32_t n = 0; n < 2; ++n)
    for (std::uint32_t t = 0; t < 30; ++t) EXPECT_EQ(r.grad(n, t), w[t] * r.residual[n]);
  // Earliest placement: desired weighted count for neuron 0 is w0+w1+w2+w3.
  EXPECT_NEAR(r.residual[0], (w[0] + w[1]) - (w[0] + w[1] + w[2] + w[3]), 1e-15);
}

TEST(WeightedLoss, NonPositiveWeightRejected) {
  Weighting w{WeightingKind::quadratic, -1.0, 1.0};
  try {
    temporal_weights(w, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
}

TEST(WeightedLoss, UniformPlacementSpreadsTargets) {
  EXPECT_EQ(desired_train(3, 9, TargetPlacement::uniform), (std::vector<std::uint32_t>{0, 3, 6}));
  EXPECT_EQ(desired_train(3, 9, TargetPlacement::earliest), (std::vector<std::uint32_t>{0, 1, 2}));
}

TEST(LossProperties, NonNegativeAndZeroOnlyAtTarget) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 300; ++i) {
    const auto out = random_output(3, 25, rng);
    auto spec = count_spec(10, 2, 25);
    if (i % 2) spec.weighting = Weighting::quadratic(25);
    const auto r = output_error(out, 0, spec);
    EXPECT_GE(r.loss, 0.0);
    const bool exact = out.count(0) == 10 && out.count(1) == 2 && out.count(2) == 2;
    if (r.loss == 0.0 && spec.weighting.kind == WeightingKind::uniform) EXPECT_TRUE(exact);
  }
}

TEST(LossSpecCheck, TrueMustExceedFalse) {
  EXPECT_THROW(count_spec(5, 5, 10).validate(), Error);
  auto s = count_spec(5, 1, 10);
  s.weighting = {WeightingKind::quadratic, 0.1, 1.0};
  EXPECT_THROW(s.validate(), Error);
}

TEST(TargetCounts, HeuristicExamples) {
  EXPECT_EQ(make_target_counts(160).true_count, 80u);
  EXPECT_EQ(make_target_counts(1).true_count, 1u);
  EXPECT_EQ(make_target_counts(1).false_count, 0u);
  const auto c = make_target_counts(100);
  EXPECT_EQ(c.true_count, 50u);
  EXPECT_EQ(c.false_count, 5u);
  EXPECT_EQ(make_target_counts(3).true_count, 2u);  // 1.5 rounds half up
  EXPECT_THROW(make_target_counts(0), Error);
}

TEST(Predict, ArgmaxAndTies) {
  EXPECT_EQ(predict(with_counts({5, 9}, 20)), 1u);
  EXPECT_EQ(predict(with_counts({0, 0, 0}, 20)), 0u);
  EXPECT_EQ(predict(with_counts({4, 4, 1}, 20)), 0u);
  const auto out = with_counts({3, 12}, 20);
  EXPECT_EQ(predict(out, 20), predict(out));
  EXPECT_EQ(predict(out, 2), 0u);  // both have 2 spikes in [0, 2)
  EXPECT_THROW(predict(out, 21), Error);
}

TEST(Predict, InvariantUnderTimePermutation) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    const auto out = random_output(5, 40, rng);
    std::vector<std::uint32_t> perm(40);
    std::iota(perm.begin(), perm.end(), 0u);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::vector<std::uint32_t>> rows(5);
    for (std::uint32_t n = 0; n < 5; ++n) {
      for (auto b : out.active_bins(n)) rows[n].push_back(perm[b]);
      std::sort(rows[n].begin(), rows[n].end());
    }
    EXPECT_EQ(predict(SpikeTensor::from_rows(40, 0.001, rows)), predict(out));
  }
}
