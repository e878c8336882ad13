#include <gtest/gtest.h>

#include <cmath>

#include "spikeforge/dataset.hpp"
#include "spikeforge/snn.hpp"

using namespace spikeforge;

namespace {
DenseNetwork single_layer(std::vector<std::vector<double>> rows) {
  DenseNetwork net;
  net.layers.push_back({WeightMatrix::from_rows(rows), std::vector<double>(rows.size(), 0.0)});
  return net;
}

BuildOptions opts(double leak, ResetMode reset, std::size_t steps, double dt = 1.0, double rate_max = 1.0) {
  return {leak, reset, dt, steps, rate_max, std::nullopt};
}
}  // namespace

TEST(Build, IdentityRelayForwardsEachInputSpikeOneStepLater) {
  auto snn = build(single_layer({{1.0}}), std::vector<double>{1.0}, opts(1.0, ResetMode::Soft, 1000));
  const std::vector<double> x{0.5};
  RngStream rng(12, 0), oracle(12, 0);
  const auto r = infer(snn, x, rng);
  // The last encoded step is never consumed because of the one-step delay.
  std::size_t consumed = 0;
  for (std::size_t t = 0; t + 1 < 1000; ++t) consumed += oracle.bernoulli(0.5) ? 1 : 0;
  EXPECT_EQ(r.counts[0], consumed);
}

TEST(Build, Validation) {
  EXPECT_THROW(build(DenseNetwork{}, std::vector<double>{}, opts(1.0, ResetMode::Soft, 10)), RejectedInput);
  EXPECT_THROW(build(single_layer({{1.0}}), std::vector<double>{0.0}, opts(1.0, ResetMode::Soft, 10)), ConfigError);
  EXPECT_THROW(build(single_layer({{1.0}}), std::vector<double>{1.0}, opts(1.0, ResetMode::Soft, 10, 1.0, 2.0)),
               ConfigError);
}

TEST(Build, Deterministic) {
  RngStream rng(3, 0);
  const auto net = make_network({4, 5, 2}, rng);
  const std::vector<double> th{1.5, 0.7};
  const auto a = build(net, th, opts(0.9, ResetMode::Hard, 50));
  const auto b = build(net, th, opts(0.9, ResetMode::Hard, 50));
  ASSERT_EQ(a.layers.size(), b.layers.size());
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    EXPECT_EQ(a.layers[l].weights(), b.layers[l].weights());
    EXPECT_EQ(a.layers[l].bias_drive(), b.layers[l].bias_drive());
    EXPECT_EQ(a.layers[l].config(), b.layers[l].config());
    EXPECT_EQ(a.layers[l].weights(), net.layers[l].weights);
  }
}

TEST(Build, BiasDriveFollowsUpstreamThresholds) {
  DenseNetwork net;
  net.layers.push_back({WeightMatrix(2, 2, 1.0), {0.5, -0.25}});
  net.layers.push_back({WeightMatrix(1, 2, 1.0), {2.0}});
  const auto snn = build(net, std::vector<double>{4.0, 0.5}, opts(1.0, ResetMode::Soft, 10, 0.5, 1.0));
  EXPECT_DOUBLE_EQ(snn.layers[0].bias_drive()[0], 0.5 * 0.5);
  EXPECT_DOUBLE_EQ(snn.layers[0].bias_drive()[1], -0.25 * 0.5);
  EXPECT_DOUBLE_EQ(snn.layers[1].bias_drive()[0], 2.0 * 0.5 / 4.0);
}

TEST(Infer, ZeroInputIsSilentAndPredictsClassZero) {
  RngStream rng(1, 0);
  auto snn = build(make_network({3, 4, 3}, rng), std::vector<double>{1.0, 1.0}, opts(0.9, ResetMode::Soft, 50));
  const auto r = infer(snn, std::vector<double>{0, 0, 0}, rng);
  EXPECT_EQ(r.counts, (std::vector<std::size_t>{0, 0, 0}));
  EXPECT_EQ(r.predicted, 0u);
  for (double s : r.layer_spike_rate) EXPECT_EQ(s, 0.0);
}

TEST(Infer, OnlyDrivenClassWins) {
  auto snn = build(single_layer({{0.0}, {1.0}}), std::vector<double>{1.0}, opts(1.0, ResetMode::Soft, 100));
  RngStream rng(1, 0);
  EXPECT_EQ(infer(snn, std::vector<double>{1.0}, rng).predicted, 1u);
  auto snn0 = build(single_layer({{1.0}, {0.0}}), std::vector<double>{1.0}, opts(1.0, ResetMode::Soft, 100));
  EXPECT_EQ(infer(snn0, std::vector<double>{1.0}, rng).predicted, 0u);
}

TEST(Infer, RejectsUnencodableFeatures) {
  auto snn = build(single_layer({{1.0}}), std::vector<double>{1.0}, opts(1.0, ResetMode::Soft, 10));
  RngStream rng(1, 0);
  EXPECT_THROW(infer(snn, std::vector<double>{1.5}, rng), RejectedInput);
  EXPECT_THROW(infer(snn, std::vector<double>{-0.1}, rng), RejectedInput);
}

TEST(Infer, EqualMeanPairLargerVarianceNeuronOutSpikes) {
  // Neuron 0: w = 2 on a rate-1 channel. Neuron 1: w = 1 on a rate-2 channel.
  // tau = 1, dt = 0.01, threshold 3 above the common steady-state mean of 2.
  const double dt = 0.01;
  auto snn = build(single_layer({{2.0, 0.0}, {0.0, 1.0}}), std::vector<double>{3.0},
                   opts(leak_from_tau(1.0, dt), ResetMode::Hard, 200000, dt, 2.0));
  RngStream rng(31, 0);
  const auto r = infer(snn, std::vector<double>{0.5, 1.0}, rng);
  EXPECT_GT(r.counts[0], r.counts[1]);
}

TEST(Evaluate, SingleStepCannotEncodeRates) {
  SyntheticSpec spec;
  spec.points_per_class = 40;
  const auto split = make_synthetic(spec);
  RngStream rng(2, 0);
  const auto snn = build(make_network({spec.dim, 6, spec.classes}, rng), std::vector<double>{1.0, 1.0},
                         opts(1.0, ResetMode::Soft, 1));
  // One step never reaches the output through the pipeline delay, so every prediction is class 0.
  const auto r = evaluate(snn, split.test, 1, RngStream(4, 0));
  std::size_t zeros = 0;
  for (auto l : split.test.labels) zeros += l == 0;
  EXPECT_DOUBLE_EQ(r.accuracy, static_cast<double>(zeros) / split.test.size());
}

TEST(Evaluate, DeterministicForSeed) {
  SyntheticSpec spec;
  spec.points_per_class = 30;
  const auto split = make_synthetic(spec);
  RngStream rng(2, 0);
  const auto snn = build(make_network({spec.dim, 6, spec.classes}, rng), std::vector<double>{0.8, 0.8},
                         opts(0.95, ResetMode::Soft, 60));
  const auto a = evaluate(snn, split.test, 2, RngStream(4, 0));
  const auto b = evaluate(snn, split.test, 2, RngStream(4, 0));
  EXPECT_EQ(a.accuracy, b.accuracy);
  EXPECT_EQ(a.spikes_per_inference, b.spikes_per_inference);
  EXPECT_THROW(evaluate(snn, Dataset{}, 1, RngStream(4, 0)), RejectedInput);
}

// ---- properties --------------------------------------------------------------

TEST(SnnProperties, JointLayerScalingLeavesSpikesBitIdentical) {
  RngStream init(8, 0);
  const auto net = make_network({5, 7, 3}, init);
  auto base = build(net, std::vector<double>{0.9, 0.6}, opts(0.92, ResetMode::Soft, 80));
  for (std::size_t layer = 0; layer < 2; ++layer) {
    for (double alpha : {0.5, 4.0}) {
      auto scaled = base;
      auto& l = scaled.layers[layer];
      for (double& w : l.weights().values()) w *= alpha;
      for (double& b : l.bias_drive()) b *= alpha;
      l.set_threshold(l.config().threshold * alpha);
      for (int n = 0; n < 10; ++n) {
        std::vector<double> x(5);
        for (double& v : x) v = init.uniform();
        RngStream ra(50, n), rb(50, n);
        const auto a = infer(base, x, ra), b = infer(scaled, x, rb);
        EXPECT_EQ(a.counts, b.counts);
        EXPECT_EQ(a.predicted, b.predicted);
        EXPECT_EQ(a.layer_spike_rate, b.layer_spike_rate);
        EXPECT_EQ(a.layer_mean_potential[1 - layer], b.layer_mean_potential[1 - layer]);
        EXPECT_EQ(b.layer_mean_potential[layer], alpha * a.layer_mean_potential[layer]);
      }
    }
  }
}

TEST(SnnProperties, NoLeakRateTracksDotProductDeterministicDrive) {
  // Every channel at probability 1: the drive is exactly dot(w, x) per step.
  const std::vector<std::vector<double>> rows{{0.3, 0.2, 0.15}};
  const double threshold = 0.8;
  const std::size_t steps = 5000;
  auto snn = build(single_layer(rows), std::vector<double>{threshold}, opts(1.0, ResetMode::Soft, steps));
  RngStream rng(1, 0);
  const auto r = infer(snn, std::vector<double>{1, 1, 1}, rng);
  const double expected = 0.65 * steps / threshold;
  EXPECT_NEAR(static_cast<double>(r.counts[0]), expected, 2.0);
}

TEST(SnnProperties, NoLeakRateTracksRealizedDrive) {
  const std::vector<double> w{0.4, 0.9, 0.25}, x{0.3, 0.6, 0.9};
  const double threshold = 1.7;
  const std::size_t steps = 20000;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto snn = build(single_layer({w}), std::vector<double>{threshold}, opts(1.0, ResetMode::Soft, steps));
    RngStream rng(seed, 0), oracle(seed, 0);
    const auto r = infer(snn, x, rng);
    double drive = 0.0;
    for (std::size_t t = 0; t + 1 < steps; ++t) {
      for (std::size_t i = 0; i < 3; ++i) drive += oracle.bernoulli(x[i]) ? w[i] : 0.0;
    }
    EXPECT_NEAR(static_cast<double>(r.counts[0]), drive / threshold, 2.0);
    // And the realized drive itself is consistent with dot(w, x) * T.
    EXPECT_NEAR(drive, dot(w, x) * steps, 5.0 * std::sqrt(steps * 0.5));
  }
}

TEST(SnnProperties, RaisingThresholdNeverAddsSpikes) {
  RngStream init(21, 0);
  WeightMatrix w(6, 8);
  for (double& v : w.values()) v = 0.05 + 0.5 * init.uniform();
  DenseNetwork net;
  net.layers.push_back({w, std::vector<double>(6, 0.0)});
  for (auto reset : {ResetMode::Soft, ResetMode::Hard}) {
    for (double leak : {1.0, 0.9}) {
      for (int n = 0; n < 10; ++n) {
        std::vector<double> x(8);
        for (double& v : x) v = init.uniform();
        std::vector<std::size_t> prev;
        for (double th : {0.5, 0.8, 1.0, 1.3, 2.0, 3.5}) {
          auto snn = build(net, std::vector<double>{th}, opts(leak, reset, 200));
          RngStream rng(n, 1);
          const auto r = infer(snn, x, rng);
          if (!prev.empty()) {
            for (std::size_t j = 0; j < 6; ++j) EXPECT_LE(r.counts[j], prev[j]) << "threshold " << th;
          }
          prev = r.counts;
        }
      }
    }
  }
}
