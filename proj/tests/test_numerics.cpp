#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "spikeforge/numerics.hpp"

using namespace spikeforge;

TEST(Dot, Examples) {
  EXPECT_DOUBLE_EQ(dot(std::vector<double>{2}, std::vector<double>{1}), 2.0);
  EXPECT_DOUBLE_EQ(dot(std::vector<double>{0, 0}, std::vector<double>{5, 7}), 0.0);
  EXPECT_DOUBLE_EQ(dot(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5, 6}), 32.0);
}

TEST(Dot, DimensionMismatchIsRejected) {
  EXPECT_THROW(dot(std::vector<double>{1, 2}, std::vector<double>{1}), RejectedInput);
}

TEST(HadamardSquare, Examples) {
  EXPECT_EQ(hadamard_square(std::vector<double>{2, -3}), (std::vector<double>{4, 9}));
  EXPECT_EQ(hadamard_square(std::vector<double>{0, 0}), (std::vector<double>{0, 0}));
  EXPECT_EQ(hadamard_square(std::vector<double>{1, 0}), (std::vector<double>{1, 0}));
}

TEST(Norms, Examples) {
  const double h = std::sqrt(2.0) / 2.0;
  EXPECT_DOUBLE_EQ(l4_norm(std::vector<double>{1, 0}), 1.0);
  EXPECT_NEAR(l4_norm(std::vector<double>{h, h}), std::pow(2.0, -0.25), 1e-15);
  EXPECT_NEAR(l4_norm(std::vector<double>{h, h}), 0.8409, 5e-5);
  EXPECT_EQ(l4_norm(std::vector<double>{0, 0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(l2_norm(std::vector<double>{1, 0}), 1.0);
  EXPECT_NEAR(l2_norm(std::vector<double>{h, h}), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(l2_norm(std::vector<double>{3, 4}), 5.0);
}

namespace {
std::vector<double> random_vector(std::mt19937_64& gen, std::size_t max_dim) {
  std::uniform_int_distribution<std::size_t> dim(1, max_dim);
  std::normal_distribution<double> val(0.0, 1.5);
  std::vector<double> w(dim(gen));
  for (double& v : w) v = val(gen);
  return w;
}
}  // namespace

TEST(NormProperties, L2OfHadamardSquareEqualsL4Squared) {
  std::mt19937_64 gen(7);
  for (int k = 0; k < 2000; ++k) {
    const auto w = random_vector(gen, 64);
    const double lhs = l2_norm(hadamard_square(w));
    const double rhs = std::pow(l4_norm(w), 2);
    EXPECT_LE(std::fabs(lhs - rhs), 1e-12 * std::max(lhs, 1e-300));
  }
}

TEST(NormProperties, L4NeverExceedsL2) {
  std::mt19937_64 gen(11);
  for (int k = 0; k < 2000; ++k) {
    const auto w = random_vector(gen, 32);
    EXPECT_LE(l4_norm(w), l2_norm(w) * (1.0 + 1e-12));
  }
}

TEST(NormProperties, EqualityOnlyForSingleNonzeroComponent) {
  for (std::size_t n = 1; n <= 6; ++n) {
    for (std::size_t axis = 0; axis < n; ++axis) {
      std::vector<double> w(n, 0.0);
      w[axis] = -3.25;
      EXPECT_NEAR(l4_norm(w), l2_norm(w), 1e-15);
    }
  }
  EXPECT_LT(l4_norm(std::vector<double>{1.0, 1e-3}), l2_norm(std::vector<double>{1.0, 1e-3}));
  EXPECT_LT(l4_norm(std::vector<double>{1, 1, 1}), l2_norm(std::vector<double>{1, 1, 1}) - 0.1);
}

TEST(DotProperties, Homogeneous) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> alpha(-4.0, 4.0);
  for (int k = 0; k < 500; ++k) {
    const auto w = random_vector(gen, 16);
    std::vector<double> x(w.size());
    for (double& v : x) v = std::fabs(alpha(gen));
    const double a = alpha(gen);
    std::vector<double> aw(w);
    for (double& v : aw) v *= a;
    EXPECT_NEAR(dot(aw, x), a * dot(w, x), 1e-10 * (1.0 + std::fabs(a * dot(w, x))));
  }
}

TEST(StableMean, ExactForIdenticalValues) {
  const std::vector<double> v(7, 0.1);
  EXPECT_EQ(stable_mean(v), 0.1);
  EXPECT_DOUBLE_EQ(stable_mean(std::vector<double>{1, 3}), 2.0);
}

TEST(RngStream, SameKeyReproducesDraws) {
  RngStream a(42, 5), b(42, 5), c(42, 6);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    differs |= x != c.uniform();
  }
  EXPECT_TRUE(differs);
  EXPECT_EQ(RngStream(1, 2).derive(3).stream(), RngStream(1, 2).derive(3).stream());
  EXPECT_NE(RngStream(1, 2).derive(3).stream(), RngStream(1, 2).derive(4).stream());
}

TEST(RngStream, DistinctStreamsAreUncorrelated) {
  const std::size_t n = 20000;
  RngStream a(9, 0), b(9, 1);
  double sab = 0, sa = 0, sb = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a.uniform(), y = b.uniform();
    sab += x * y;
    sa += x;
    sb += y;
    saa += x * x;
    sbb += y * y;
  }
  const double cov = sab / n - (sa / n) * (sb / n);
  const double corr = cov / std::sqrt((saa / n - sa * sa / n / n) * (sbb / n - sb * sb / n / n));
  EXPECT_LT(std::fabs(corr), 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST(PoissonSpikeTrain, ZeroRateIsSilent) {
  RngStream rng(1, 0);
  const auto train = poisson_spike_train(std::vector<double>{0.0}, 1000, 1.0, rng);
  EXPECT_EQ(train.total(), 0u);
}

TEST(PoissonSpikeTrain, UnitProbabilitySpikesEveryStep) {
  RngStream rng(1, 0);
  const auto train = poisson_spike_train(std::vector<double>{1.0}, 1000, 1.0, rng);
  EXPECT_EQ(train.total(), 1000u);
}

TEST(PoissonSpikeTrain, EmpiricalRateWithinBinomialBound) {
  RngStream rng(2024, 0);
  const std::size_t steps = 100000;
  const auto train = poisson_spike_train(std::vector<double>{0.2}, steps, 1.0, rng);
  const double rate = static_cast<double>(train.count(0)) / steps;
  EXPECT_NEAR(rate, 0.2, 3.0 * std::sqrt(0.2 * 0.8 / steps));
}

TEST(PoissonSpikeTrain, Reproducible) {
  RngStream a(5, 9), b(5, 9);
  const std::vector<double> rates{0.3, 2.0, 0.0};
  EXPECT_EQ(poisson_spike_train(rates, 500, 0.1, a), poisson_spike_train(rates, 500, 0.1, b));
}

TEST(PoissonSpikeTrain, RejectsProbabilityAboveOneNamingChannel) {
  RngStream rng(1, 0);
  try {
    poisson_spike_train(std::vector<double>{0.5, 3.0}, 10, 0.5, rng);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("channel 1"), std::string::npos);
  }
  EXPECT_THROW(poisson_spike_train(std::vector<double>{-1.0}, 10, 0.5, rng), RejectedInput);
}
