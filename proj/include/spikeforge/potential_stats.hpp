#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "spikeforge/error.hpp"
#include "spikeforge/lif.hpp"
#include "spikeforge/numerics.hpp"
#include "spikeforge/parallel.hpp"

namespace spikeforge {

/// Mean and variance of the pre-firing membrane potential at elapsed time t.
struct PotentialStats {
  double mean = 0.0;
  double variance = 0.0;
  double t = 0.0;
  double tau = 0.0;
};

namespace detail {
inline void check_tau_t(double tau, double t) {
  if (!(tau > 0.0)) throw RejectedInput("tau must be > 0");
  if (!(t >= 0.0)) throw RejectedInput("t must be >= 0");
}
}  // namespace detail

/// E[V(t)] = tau * (w . rates) * (1 - exp(-t/tau)) for Poisson-driven shot noise.
inline double analytic_mean(std::span<const double> w, std::span<const double> rates, double tau,
                            double t) {
  detail::check_tau_t(tau, t);
  return tau * dot(w, rates) * -std::expm1(-t / tau);
}

/// Var[V(t)] = 1/2 * tau * (rates . w∘2) * (1 - exp(-2t/tau)).
inline double analytic_variance(std::span<const double> w, std::span<const double> rates, double tau,
                                double t) {
  detail::check_tau_t(tau, t);
  return 0.5 * tau * dot(hadamard_square(w), rates) * -std::expm1(-2.0 * t / tau);
}

inline PotentialStats steady_state_stats(std::span<const double> w, std::span<const double> rates,
                                         double tau) {
  if (!(tau > 0.0)) throw RejectedInput("tau must be > 0");
  return {tau * dot(w, rates), 0.5 * tau * dot(hadamard_square(w), rates),
          std::numeric_limits<double>::infinity(), tau};
}

/// Steady-state standard deviation decomposed along the weight vector's L4 norm.
///
/// rates . w∘2 = |rates|_2 * |w|_L4^2 * cos(angle(rates, w∘2)), so
/// std = proportionality * l4_norm with proportionality = sqrt(tau/2 * |rates| * cos).
/// For rates parallel to w∘2 the cosine is 1 and std is exactly sqrt(tau/2 * |rates|) * |w|_L4.
struct StdL4Relation {
  double std_dev = 0.0;
  double l4_norm = 0.0;
  double cosine = 0.0;
  double proportionality = 0.0;
};

inline StdL4Relation std_dev_l4_ratio(std::span<const double> w, std::span<const double> rates,
                                      double tau) {
  validate_rates(rates);
  const auto stats = steady_state_stats(w, rates, tau);
  StdL4Relation rel;
  rel.std_dev = std::sqrt(stats.variance);
  rel.l4_norm = l4_norm(w);
  const auto sq = hadamard_square(w);
  const double denom = l2_norm(rates) * l2_norm(sq);
  rel.cosine = denom > 0.0 ? dot(sq, rates) / denom : 0.0;
  rel.proportionality = std::sqrt(0.5 * tau * l2_norm(rates) * rel.cosine);
  return rel;
}

/// Final potentials of independent non-firing leaky integrators after horizon steps.
///
/// Each bin's arrivals are Bernoulli(rate*dt); an arrival lands uniformly
/// inside its bin and decays exactly to the bin end, so the sample mean is
/// unbiased for the continuous-time shot-noise mean. The variance keeps the
/// O(rate*dt) Bernoulli-vs-Poisson deficit. Trial k uses rng.derive(k).
inline std::vector<double> mc_potential_samples(std::span<const double> w, std::span<const double> rates,
                                                double tau, double dt, std::size_t horizon,
                                                std::size_t trials, const RngStream& rng) {
  require_same_size(w.size(), rates.size(), "mc_potential_stats");
  if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
  check_step_probabilities(rates, dt);
  const double leak = std::exp(-dt / tau);
  const double decay_per_bin = dt / tau;
  std::vector<double> p(rates.size());
  for (std::size_t i = 0; i < rates.size(); ++i) p[i] = rates[i] * dt;

  std::vector<double> finals(trials, 0.0);
  parallel_for(trials, [&](std::size_t k) {
    RngStream trial_rng = rng.derive(k);
    double v = 0.0;
    for (std::size_t s = 0; s < horizon; ++s) {
      v *= leak;
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0 && trial_rng.bernoulli(p[i])) {
          v += w[i] * std::exp(-trial_rng.uniform() * decay_per_bin);
        }
      }
    }
    finals[k] = v;
  });
  return finals;
}

/// Sample mean and unbiased (n-1) variance, summed in index order.
inline PotentialStats sample_stats(std::span<const double> samples) {
  PotentialStats s;
  const double n = static_cast<double>(samples.size());
  double sum = 0.0;
  for (double v : samples) sum += v;
  s.mean = sum / n;
  double ss = 0.0;
  for (double v : samples) ss += (v - s.mean) * (v - s.mean);
  s.variance = samples.size() > 1 ? ss / (n - 1.0) : 0.0;
  return s;
}

/// Monte-Carlo estimate of the pre-firing potential statistics at t = horizon*dt.
inline PotentialStats mc_potential_stats(std::span<const double> w, std::span<const double> rates,
                                         double tau, double dt, std::size_t horizon, std::size_t trials,
                                         const RngStream& rng) {
  if (trials < 2) throw ConfigError("mc_potential_stats needs at least 2 trials");
  const auto samples = mc_potential_samples(w, rates, tau, dt, horizon, trials, rng);
  auto s = sample_stats(samples);
  s.t = static_cast<double>(horizon) * dt;
  s.tau = tau;
  return s;
}

/// Empirical firing rate of a single LIF neuron (firing enabled), one value per trial.
struct FiringRateStats {
  double mean_rate = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
};

/// Simulates `trials` independent neurons with threshold and reset, counting
/// spikes during the `measure` steps that follow `warmup` steps. Rates are per
/// unit time.
inline FiringRateStats firing_rate_stats(std::span<const double> w, std::span<const double> rates, double tau,
                                         double dt, double threshold, ResetMode reset, std::size_t warmup,
                                         std::size_t measure, std::size_t trials, const RngStream& rng) {
  require_same_size(w.size(), rates.size(), "firing_rate_stats");
  if (trials < 2) throw ConfigError("firing_rate_stats needs at least 2 trials");
  if (measure == 0) throw ConfigError("firing_rate_stats needs a non-empty measurement window");
  check_step_probabilities(rates, dt);
  NeuronConfig cfg{leak_from_tau(tau, dt), threshold, reset, dt, std::nullopt};
  const WeightMatrix weights(1, w.size(), std::vector<double>(w.begin(), w.end()));
  std::vector<double> p(rates.size());
  for (std::size_t i = 0; i < rates.size(); ++i) p[i] = rates[i] * dt;

  std::vector<double> per_trial(trials, 0.0);
  parallel_for(trials, [&](std::size_t k) {
    RngStream trial_rng = rng.derive(k);
    LifLayer layer(weights, cfg);
    std::vector<std::uint8_t> in(p.size());
    std::uint8_t out = 0;
    std::size_t spikes = 0;
    for (std::size_t s = 0; s < warmup + measure; ++s) {
      for (std::size_t i = 0; i < p.size(); ++i) in[i] = trial_rng.bernoulli(p[i]) ? 1 : 0;
      layer.step(in, std::span<std::uint8_t>(&out, 1));
      if (s >= warmup) spikes += out;
    }
    per_trial[k] = static_cast<double>(spikes) / (static_cast<double>(measure) * dt);
  });
  const auto s = sample_stats(per_trial);
  return {s.mean, std::sqrt(s.variance / static_cast<double>(trials)), trials};
}

}  // namespace spikeforge
