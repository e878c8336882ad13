#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "spikeforge/potential_stats.hpp"

using namespace spikeforge;

namespace {
const double kInf = std::numeric_limits<double>::infinity();
const std::vector<double> kW2{2.0}, kW1{1.0}, kRate1{1.0}, kRate2{2.0};
}  // namespace

TEST(AnalyticMean, Examples) {
  EXPECT_DOUBLE_EQ(analytic_mean(kW2, kRate1, 1.0, kInf), 2.0);
  EXPECT_DOUBLE_EQ(analytic_mean(kW1, kRate2, 1.0, kInf), 2.0);
  EXPECT_EQ(analytic_mean(std::vector<double>{3, -1}, std::vector<double>{0.5, 4}, 2.0, 0.0), 0.0);
  EXPECT_THROW(analytic_mean(kW2, std::vector<double>{1, 1}, 1.0, 1.0), RejectedInput);
  EXPECT_THROW(analytic_mean(kW2, kRate1, 0.0, 1.0), RejectedInput);
}

TEST(AnalyticVariance, Examples) {
  EXPECT_DOUBLE_EQ(analytic_variance(kW2, kRate1, 1.0, kInf), 2.0);
  EXPECT_DOUBLE_EQ(analytic_variance(kW1, kRate2, 1.0, kInf), 1.0);
  EXPECT_EQ(analytic_variance(kW2, kRate1, 1.0, 0.0), 0.0);
}

TEST(SteadyState, MatchesLimitAndScales) {
  const auto a = steady_state_stats(kW2, kRate1, 1.0);
  EXPECT_DOUBLE_EQ(a.mean, 2.0);
  EXPECT_DOUBLE_EQ(a.variance, 2.0);
  const std::vector<double> w{0.3, -0.7, 1.2}, rates{1.0, 0.5, 2.0};
  const auto base = steady_state_stats(w, rates, 1.5);
  std::vector<double> w3 = w;
  for (double& v : w3) v *= 3.0;
  const auto scaled = steady_state_stats(w3, rates, 1.5);
  EXPECT_NEAR(scaled.mean, 3.0 * base.mean, 1e-12);
  EXPECT_NEAR(scaled.variance, 9.0 * base.variance, 1e-12);
  const auto zero = steady_state_stats(w, std::vector<double>(3, 0.0), 1.5);
  EXPECT_EQ(zero.mean, 0.0);
  EXPECT_EQ(zero.variance, 0.0);
}

TEST(AnalyticStats, NondecreasingTransientForNonnegativeWeights) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int k = 0; k < 50; ++k) {
    const std::vector<double> w{u(gen), u(gen), u(gen)}, rates{u(gen), u(gen), u(gen)};
    const double tau = 0.1 + u(gen);
    double prev_mean = 0.0, prev_var = 0.0;
    for (double t = 0.0; t <= 10.0; t += 0.05) {
      const double m = analytic_mean(w, rates, tau, t), v = analytic_variance(w, rates, tau, t);
      EXPECT_GE(m, prev_mean);
      EXPECT_GE(v, prev_var);
      prev_mean = m;
      prev_var = v;
    }
  }
}

TEST(StdL4Relation, HandEvaluatedExamples) {
  const double h = std::sqrt(2.0) / 2.0;
  // Var = 1/2 * 1 * (1*1 + 1*0) = 1/2.
  EXPECT_NEAR(std_dev_l4_ratio(std::vector<double>{1, 0}, std::vector<double>{1, 1}, 1.0).std_dev,
              std::sqrt(0.5), 1e-15);
  // Var = 1/2 * 1 * (1*0.5 + 1*0.5) = 1/2.
  EXPECT_NEAR(std_dev_l4_ratio(std::vector<double>{h, h}, std::vector<double>{1, 1}, 1.0).std_dev,
              std::sqrt(0.5), 1e-15);
  EXPECT_EQ(std_dev_l4_ratio(std::vector<double>{0, 0}, std::vector<double>{1, 1}, 1.0).std_dev, 0.0);
}

TEST(StdL4Relation, StdIsProportionalToL4NormAtFixedAngle) {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int k = 0; k < 2000; ++k) {
    std::vector<double> w(1 + k % 40), rates(w.size());
    for (double& v : w) v = n(gen);
    for (double& v : rates) v = u(gen);
    const double tau = 0.2 + u(gen);
    const auto rel = std_dev_l4_ratio(w, rates, tau);
    EXPECT_NEAR(rel.std_dev, rel.proportionality * rel.l4_norm, 1e-12 * std::max(1.0, rel.std_dev));
  }
}

TEST(StdL4Relation, RatesAlignedWithSquaredWeightsGiveExactL4Proportionality) {
  std::mt19937_64 gen(23);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    std::vector<double> w(2 + k % 10);
    for (double& v : w) v = n(gen);
    auto rates = hadamard_square(w);
    const double c = 0.5 + std::fabs(n(gen));
    for (double& r : rates) r *= c;
    const double tau = 1.3;
    const auto rel = std_dev_l4_ratio(w, rates, tau);
    const double expected = std::sqrt(0.5 * tau * l2_norm(rates)) * l4_norm(w);
    EXPECT_NEAR(rel.std_dev, expected, 1e-12 * expected);
    EXPECT_NEAR(rel.cosine, 1.0, 1e-12);
  }
}

TEST(StdL4Relation, UniformRatesGiveL2Proportionality) {
  std::mt19937_64 gen(29);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    std::vector<double> w(1 + k % 20);
    for (double& v : w) v = n(gen);
    const double rate = 0.7, tau = 2.0;
    const auto rel = std_dev_l4_ratio(w, std::vector<double>(w.size(), rate), tau);
    EXPECT_NEAR(rel.std_dev, std::sqrt(0.5 * tau * rate) * l2_norm(w), 1e-12 * std::max(1.0, rel.std_dev));
  }
}

TEST(MonteCarlo, ZeroRateIsExactlyZero) {
  const auto s = mc_potential_stats(kW2, std::vector<double>{0.0}, 1.0, 0.01, 1000, 100, RngStream(1, 0));
  EXPECT_EQ(s.mean, 0.0);
  EXPECT_EQ(s.variance, 0.0);
}

TEST(MonteCarlo, RequiresTwoTrialsAndAdmissibleRates) {
  EXPECT_THROW(mc_potential_stats(kW2, kRate1, 1.0, 0.01, 10, 1, RngStream(1, 0)), ConfigError);
  EXPECT_THROW(mc_potential_stats(kW2, std::vector<double>{200.0}, 1.0, 0.01, 10, 10, RngStream(1, 0)), ConfigError);
}

TEST(MonteCarlo, AgreesWithAnalyticStatisticsForEqualMeanPair) {
  const double tau = 1.0, dt = 0.01;
  const std::size_t horizon = 1000, trials = 100000;
  for (const auto& [w, rate, var] : {std::tuple{kW2, kRate1, 2.0}, std::tuple{kW1, kRate2, 1.0}}) {
    const auto s = mc_potential_stats(w, rate, tau, dt, horizon, trials, RngStream(2024, 0));
    const double mean_exact = analytic_mean(w, rate, tau, 10.0);
    const double se = std::sqrt(s.variance / trials);
    EXPECT_LE(std::fabs(s.mean - mean_exact), 3.0 * se);
    EXPECT_NEAR(s.mean, 2.0, 0.02 * 2.0);
    EXPECT_NEAR(s.variance, var, 0.05 * var);
  }
}

TEST(MonteCarlo, TransientMatchesAnalyticAtShortTimes) {
  const std::vector<double> w{1.0, -0.5}, rates{3.0, 2.0};
  const auto s = mc_potential_stats(w, rates, 1.0, 0.01, 50, 40000, RngStream(8, 0));
  const double mean = analytic_mean(w, rates, 1.0, 0.5), var = analytic_variance(w, rates, 1.0, 0.5);
  EXPECT_NEAR(s.mean, mean, 4.0 * std::sqrt(var / 40000));
  EXPECT_NEAR(s.variance, var, 0.06 * var);
}

TEST(MonteCarlo, DeterministicForSeed) {
  const auto a = mc_potential_samples(kW2, kRate1, 1.0, 0.01, 200, 500, RngStream(3, 4));
  const auto b = mc_potential_samples(kW2, kRate1, 1.0, 0.01, 200, 500, RngStream(3, 4));
  EXPECT_EQ(a, b);
}

TEST(FiringRate, LargerVarianceNeuronFiresMoreAboveTheMean) {
  const RngStream rng(77, 0);
  const auto a = firing_rate_stats(kW2, kRate1, 1.0, 0.01, 3.0, ResetMode::Hard, 500, 2000, 1000, rng);
  const auto b = firing_rate_stats(kW1, kRate2, 1.0, 0.01, 3.0, ResetMode::Hard, 500, 2000, 1000, rng.derive(1));
  EXPECT_GT(a.mean_rate - b.mean_rate, 3.0 * std::hypot(a.std_error, b.std_error));
}
