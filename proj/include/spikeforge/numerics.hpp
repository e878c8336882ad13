#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "spikeforge/error.hpp"

namespace spikeforge {

/// Synaptic weights of one post-synaptic neuron, one entry per input channel.
using WeightVector = std::vector<double>;

/// Non-negative input rates (spikes per unit time), one entry per input channel.
using RateVector = std::vector<double>;

/// Throws RejectedInput unless every rate is finite and non-negative.
inline void validate_rates(std::span<const double> rates) {
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (!std::isfinite(rates[i]) || rates[i] < 0.0) {
      throw RejectedInput("rate channel " + std::to_string(i) + " is " + std::to_string(rates[i]) +
                          "; rates must be finite and >= 0");
    }
  }
}

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw RejectedInput(std::string(what) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                        std::to_string(b) + ")");
  }
}

inline double dot(std::span<const double> w, std::span<const double> x) {
  require_same_size(w.size(), x.size(), "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * x[i];
  return acc;
}

inline WeightVector hadamard_square(std::span<const double> w) {
  WeightVector out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] * w[i];
  return out;
}

inline double l2_norm(std::span<const double> w) {
  double acc = 0.0;
  for (double v : w) acc += v * v;
  return std::sqrt(acc);
}

/// (sum w_i^4)^(1/4). Equals sqrt(l2_norm(hadamard_square(w))).
inline double l4_norm(std::span<const double> w) {
  double acc = 0.0;
  for (double v : w) {
    const double sq = v * v;
    acc += sq * sq;
  }
  return std::sqrt(std::sqrt(acc));
}

/// Mean that is exact when all values are equal: first + mean of deviations from first.
inline double stable_mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double anchor = values.front();
  double dev = 0.0;
  for (double v : values) dev += v - anchor;
  return anchor + dev / static_cast<double>(values.size());
}

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}
}  // namespace detail

/// Reproducible random stream keyed by (seed, stream id).
///
/// Each (seed, stream) pair seeds its own Mersenne Twister through a seed
/// sequence, so trials can be run in any order or in parallel and still draw
/// identical numbers. derive() builds child streams for nested loops
/// (cell -> sample -> trial).
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x5f3759dfu};
    engine_.seed(seq);
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Independent child stream; same (parent, key) always gives the same child.
  RngStream derive(std::uint64_t key) const {
    return RngStream(seed_, detail::splitmix64(stream_ ^ detail::splitmix64(key + 0x632BE59BD9B4E019ull)));
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  double normal(double mean = 0.0, double stddev = 1.0) {
    std::normal_distribution<double> dist(mean, stddev);
    return dist(engine_);
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

/// Binary spike events, row-major steps x channels.
class SpikeTrain {
 public:
  SpikeTrain() = default;
  SpikeTrain(std::size_t steps, std::size_t channels)
      : steps_(steps), channels_(channels), events_(steps * channels, 0) {}

  std::size_t steps() const noexcept { return steps_; }
  std::size_t channels() const noexcept { return channels_; }

  std::span<std::uint8_t> row(std::size_t t) { return {events_.data() + t * channels_, channels_}; }
  std::span<const std::uint8_t> row(std::size_t t) const {
    return {events_.data() + t * channels_, channels_};
  }

  std::uint8_t at(std::size_t t, std::size_t c) const { return events_[t * channels_ + c]; }
  void set(std::size_t t, std::size_t c, bool spike) { events_[t * channels_ + c] = spike ? 1 : 0; }

  std::size_t count(std::size_t channel) const {
    std::size_t n = 0;
    for (std::size_t t = 0; t < steps_; ++t) n += at(t, channel);
    return n;
  }

  std::size_t total() const {
    std::size_t n = 0;
    for (auto e : events_) n += e;
    return n;
  }

  const std::vector<std::uint8_t>& events() const noexcept { return events_; }

  friend bool operator==(const SpikeTrain&, const SpikeTrain&) = default;

 private:
  std::size_t steps_ = 0;
  std::size_t channels_ = 0;
  std::vector<std::uint8_t> events_;
};

/// Throws ConfigError naming the first channel whose per-step probability rate*dt exceeds 1.
inline void check_step_probabilities(std::span<const double> rates, double dt) {
  validate_rates(rates);
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be finite and > 0");
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (rates[i] * dt > 1.0) {
      throw ConfigError("channel " + std::to_string(i) + ": rate*dt = " + std::to_string(rates[i] * dt) +
                        " exceeds 1; lower the rate or dt");
    }
  }
}

/// Discrete-time Poisson encoding: channel i spikes with probability rates[i]*dt each step.
inline SpikeTrain poisson_spike_train(std::span<const double> rates, std::size_t steps, double dt,
                                      RngStream& rng) {
  check_step_probabilities(rates, dt);
  SpikeTrain train(steps, rates.size());
  std::vector<double> p(rates.size());
  for (std::size_t i = 0; i < rates.size(); ++i) p[i] = rates[i] * dt;
  for (std::size_t t = 0; t < steps; ++t) {
    auto row = train.row(t);
    for (std::size_t i = 0; i < p.size(); ++i) row[i] = rng.bernoulli(p[i]) ? 1 : 0;
  }
  return train;
}

}  // namespace spikeforge
