#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spikeforge/ann.hpp"
#include "spikeforge/error.hpp"
#include "spikeforge/lif.hpp"
#include "spikeforge/numerics.hpp"
#include "spikeforge/parallel.hpp"

namespace spikeforge {

/// Converted network: LIF layers plus the Poisson encoder settings.
///
/// Features x in [0, 1] are encoded as rates x * rate_max, i.e. spike
/// probability x * rate_max * dt per step. Every connection, including
/// encoder -> first layer, carries a one-step delay.
struct SpikingNetwork {
  std::vector<LifLayer> layers;
  std::size_t steps = 100;
  double dt = 1.0;
  double rate_max = 1.0;

  double spike_probability_scale() const noexcept { return rate_max * dt; }
  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().inputs(); }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().size(); }
};

struct BuildOptions {
  double leak = 1.0;
  ResetMode reset = ResetMode::Soft;
  double dt = 1.0;
  std::size_t steps = 100;
  double rate_max = 1.0;
  /// Optional lower bound on every membrane potential.
  std::optional<double> floor;
};

/// Copies the ANN weights verbatim into LIF layers with the given per-layer thresholds.
///
/// Biases become a constant per-step drive. For layer l the drive is
/// b * rate_max * dt / prod_{k<l} threshold_k, which is what a feature of value
/// 1 delivers once propagated through the upstream thresholds, so the
/// per-step drive of every layer stays proportional to the ANN pre-activation.
inline SpikingNetwork build(const DenseNetwork& net, std::span<const double> thresholds, const BuildOptions& opt) {
  net.validate();
  require_same_size(thresholds.size(), net.layers.size(), "build thresholds");
  if (opt.steps == 0) throw ConfigError("steps per inference must be >= 1");
  if (!(opt.rate_max > 0.0) || opt.rate_max * opt.dt > 1.0) {
    throw ConfigError("rate_max * dt must lie in (0, 1]");
  }
  SpikingNetwork snn;
  snn.steps = opt.steps;
  snn.dt = opt.dt;
  snn.rate_max = opt.rate_max;
  double upstream = 1.0;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    if (!(thresholds[l] > 0.0)) {
      throw ConfigError("threshold of layer " + std::to_string(l) + " must be > 0");
    }
    const auto& layer = net.layers[l];
    std::vector<double> bias_drive(layer.bias.size());
    const double bias_scale = snn.spike_probability_scale() / upstream;
    for (std::size_t j = 0; j < bias_drive.size(); ++j) bias_drive[j] = layer.bias[j] * bias_scale;
    NeuronConfig cfg{opt.leak, thresholds[l], opt.reset, opt.dt, opt.floor};
    snn.layers.emplace_back(layer.weights, cfg, std::move(bias_drive));
    upstream *= thresholds[l];
  }
  return snn;
}

/// Draws one step of input spikes for features x.
inline void encode_step(std::span<const double> x, double scale, RngStream& rng, std::span<std::uint8_t> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = rng.bernoulli(x[i] * scale) ? 1 : 0;
}

inline void check_encodable(std::span<const double> x, double scale) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= 0.0) || x[i] * scale > 1.0) {
      throw RejectedInput("feature " + std::to_string(i) + " = " + std::to_string(x[i]) +
                          " is not rate-encodable (needs 0 <= x*rate_max*dt <= 1)");
    }
  }
}

struct InferenceResult {
  std::vector<std::size_t> counts;
  /// argmax of counts; ties go to the lowest class index.
  std::size_t predicted = 0;
  /// Spikes per neuron per step, per layer.
  std::vector<double> layer_spike_rate;
  /// Mean pre-reset potential over neurons and steps, per layer.
  std::vector<double> layer_mean_potential;

  friend bool operator==(const InferenceResult&, const InferenceResult&) = default;
};

/// Resets every potential, encodes x for snn.steps steps and propagates spikes.
inline InferenceResult infer(SpikingNetwork& snn, std::span<const double> x, RngStream& rng) {
  if (snn.layers.empty()) throw RejectedInput("spiking network has no layers");
  require_same_size(x.size(), snn.input_dim(), "infer input");
  const double scale = snn.spike_probability_scale();
  check_encodable(x, scale);

  const std::size_t depth = snn.layers.size();
  for (auto& layer : snn.layers) layer.reset_state();
  std::vector<std::uint8_t> input(x.size(), 0);
  std::vector<std::vector<std::uint8_t>> prev(depth), next(depth);
  for (std::size_t l = 0; l < depth; ++l) {
    prev[l].assign(snn.layers[l].size(), 0);
    next[l].assign(snn.layers[l].size(), 0);
  }
  InferenceResult result;
  result.counts.assign(snn.output_dim(), 0);
  std::vector<std::size_t> layer_spikes(depth, 0);
  std::vector<double> potential_sum(depth, 0.0);

  for (std::size_t t = 0; t < snn.steps; ++t) {
    for (std::size_t l = 0; l < depth; ++l) {
      snn.layers[l].step(l == 0 ? std::span<const std::uint8_t>(input) : std::span<const std::uint8_t>(prev[l - 1]),
                         next[l]);
      for (auto s : next[l]) layer_spikes[l] += s;
      for (double v : snn.layers[l].pre_reset()) potential_sum[l] += v;
    }
    for (std::size_t k = 0; k < result.counts.size(); ++k) result.counts[k] += next[depth - 1][k];
    std::swap(prev, next);
    encode_step(x, scale, rng, input);
  }
  result.predicted = static_cast<std::size_t>(std::max_element(result.counts.begin(), result.counts.end()) -
                                              result.counts.begin());
  for (std::size_t l = 0; l < depth; ++l) {
    const double denom = static_cast<double>(snn.layers[l].size() * snn.steps);
    result.layer_spike_rate.push_back(static_cast<double>(layer_spikes[l]) / denom);
    result.layer_mean_potential.push_back(potential_sum[l] / denom);
  }
  return result;
}

struct EvaluationResult {
  double accuracy = 0.0;
  /// Mean spikes emitted by each layer per inference.
  std::vector<double> spikes_per_inference;
  std::size_t inferences = 0;
};

/// Accuracy over every (sample, trial). Sample n, trial k draws from
/// rng.derive(n).derive(k), so the result does not depend on thread count.
inline EvaluationResult evaluate(const SpikingNetwork& snn, const Dataset& data, std::size_t trials_per_sample,
                                 const RngStream& rng) {
  if (data.empty()) throw RejectedInput("evaluation data is empty");
  if (trials_per_sample == 0) throw ConfigError("trials per sample must be >= 1");
  const std::size_t depth = snn.layers.size();
  std::vector<std::size_t> correct(data.size(), 0);
  std::vector<std::vector<double>> spikes(data.size(), std::vector<double>(depth, 0.0));
  parallel_for(data.size(), [&](std::size_t n) {
    SpikingNetwork local = snn;
    const RngStream sample_rng = rng.derive(n);
    for (std::size_t k = 0; k < trials_per_sample; ++k) {
      RngStream trial_rng = sample_rng.derive(k);
      const auto r = infer(local, data.inputs[n], trial_rng);
      if (r.predicted == data.labels[n]) ++correct[n];
      for (std::size_t l = 0; l < depth; ++l) {
        spikes[n][l] += r.layer_spike_rate[l] * static_cast<double>(local.layers[l].size() * local.steps);
      }
    }
  });
  EvaluationResult out;
  out.inferences = data.size() * trials_per_sample;
  std::size_t total_correct = 0;
  for (auto c : correct) total_correct += c;
  out.accuracy = static_cast<double>(total_correct) / static_cast<double>(out.inferences);
  out.spikes_per_inference.assign(depth, 0.0);
  for (const auto& s : spikes) {
    for (std::size_t l = 0; l < depth; ++l) out.spikes_per_inference[l] += s[l];
  }
  for (double& s : out.spikes_per_inference) s /= static_cast<double>(out.inferences);
  return out;
}

}  // namespace spikeforge
