#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spikeforge/ann.hpp"
#include "spikeforge/error.hpp"
#include "spikeforge/lif.hpp"
#include "spikeforge/numerics.hpp"
#include "spikeforge/parallel.hpp"
#include "spikeforge/snn.hpp"

namespace spikeforge {

struct ConversionConfig {
  /// Smoothing ratio r_s blending each neuron's L4 norm and scalar toward the layer average.
  double smoothing = 0.0;
  /// Optional smoothing ratios swept jointly with the threshold factors (L4 variant only).
  std::vector<double> smoothing_grid;
  /// Threshold scale factors applied to the balanced base thresholds.
  std::vector<double> sweep_grid{0.6, 0.7, 0.8, 0.9, 1.0};
  double leak = 1.0;
  ResetMode reset = ResetMode::Soft;
  std::size_t steps = 100;
  double dt = 1.0;
  double rate_max = 1.0;
  /// Leading training samples used for threshold balancing and potential profiling.
  std::size_t profiling_batch_size = 64;
  /// Trailing training samples used to score sweep candidates.
  std::size_t sweep_samples = 100;
  std::size_t trials_per_sample = 1;
  /// Upper bound on an adjustment scalar; neurons whose adjusted threshold is non-positive get this value.
  double max_scalar = 2.0;
  /// Optional lower bound on membrane potentials in every layer.
  std::optional<double> floor;

  void validate() const {
    auto check_ratio = [](double r) {
      if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("smoothing ratio must be finite and >= 0");
    };
    check_ratio(smoothing);
    for (double r : smoothing_grid) check_ratio(r);
    if (sweep_grid.empty()) throw ConfigError("threshold sweep grid must not be empty");
    for (double f : sweep_grid) {
      if (!(f > 0.0)) throw ConfigError("threshold sweep factors must be > 0");
    }
    if (profiling_batch_size == 0) throw ConfigError("profiling batch size must be > 0");
    if (sweep_samples == 0) throw ConfigError("sweep sample count must be > 0");
    if (!(max_scalar >= 1.0)) throw ConfigError("max_scalar must be >= 1");
    NeuronConfig{leak, 1.0, reset, dt, std::nullopt}.validate();
  }

  BuildOptions build_options() const { return {leak, reset, dt, steps, rate_max, floor}; }
};

// ---- threshold balancing ---------------------------------------------------

/// Per-layer base thresholds from ANN pre-activation maxima over the batch.
///
/// Layer 0 gets its maximum pre-activation. Deeper layers get the maximum
/// pre-activation computed with upstream activations normalized by their own
/// layer maximum, i.e. lambda_l / lambda_{l-1}.
inline std::vector<double> base_thresholds(const DenseNetwork& ann, const std::vector<std::vector<double>>& batch) {
  const auto profile = profile_activations(ann, batch);
  std::vector<double> base(profile.layer_max.size());
  double upstream = 1.0;
  for (std::size_t l = 0; l < base.size(); ++l) {
    const double peak = profile.layer_max[l];
    if (!(peak > 0.0)) {
      throw DegenerateLayer("layer " + std::to_string(l) + " has no positive pre-activation on the balancing batch");
    }
    base[l] = peak / upstream;
    upstream = peak;
  }
  return base;
}

// ---- L4 adjustment algebra -------------------------------------------------

/// (norm_j + r_s * mean) / (1 + r_s), written as mean + (norm_j - mean) / (1 + r_s).
/// r_s = 0 returns the norms unchanged.
inline std::vector<double> smooth_l4(std::span<const double> norms, double smoothing) {
  if (norms.empty()) throw RejectedInput("smooth_l4: empty norm list");
  if (!(smoothing >= 0.0)) throw RejectedInput("smooth_l4: smoothing ratio must be >= 0");
  if (smoothing == 0.0) return {norms.begin(), norms.end()};
  const double mean = stable_mean(norms);
  std::vector<double> out(norms.size());
  for (std::size_t j = 0; j < norms.size(); ++j) out[j] = mean + (norms[j] - mean) / (1.0 + smoothing);
  return out;
}

/// New per-neuron thresholds mu_V + (norm/mean_norm) * (v_th0 - mu_V), evaluated as
/// v_th0 + (ratio - 1) * (v_th0 - mu_V) so a unit ratio returns v_th0 exactly.
inline std::vector<double> l4_thresholds(std::span<const double> mean_potential, std::span<const double> norms,
                                         double mean_norm, double base_threshold) {
  require_same_size(mean_potential.size(), norms.size(), "l4_thresholds");
  if (!(base_threshold > 0.0)) throw ConfigError("l4_thresholds: base threshold must be > 0");
  if (!(mean_norm > 0.0)) throw DegenerateLayer("l4_thresholds: layer mean L4 norm is zero");
  std::vector<double> out(norms.size());
  for (std::size_t j = 0; j < norms.size(); ++j) {
    const double ratio = norms[j] / mean_norm;
    out[j] = base_threshold + (ratio - 1.0) * (base_threshold - mean_potential[j]);
  }
  return out;
}

/// Weight scalars s = v_th0 / v_hat, smoothed to (s - 1) / (1 + r_s) + 1.
inline std::vector<double> adjustment_scalars(std::span<const double> new_thresholds, double base_threshold,
                                              double smoothing) {
  std::vector<double> out(new_thresholds.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    if (!(new_thresholds[j] > 0.0)) {
      throw AdjustmentFault("neuron " + std::to_string(j) + " has non-positive adjusted threshold " +
                            std::to_string(new_thresholds[j]));
    }
    const double s = base_threshold / new_thresholds[j];
    out[j] = smoothing == 0.0 ? s : (s - 1.0) / (1.0 + smoothing) + 1.0;
  }
  return out;
}

/// Per-neuron mean pre-reset potential of the first layer, averaged over
/// snn.steps steps and over the batch, with firing enabled. Sample n draws
/// its encoding from rng.derive(n).
inline std::vector<double> profile_first_layer_mean(const SpikingNetwork& snn,
                                                    const std::vector<std::vector<double>>& batch,
                                                    const RngStream& rng) {
  if (snn.layers.empty()) throw RejectedInput("spiking network has no layers");
  const LifLayer& first = snn.layers.front();
  const std::size_t width = first.size();
  if (batch.empty()) return std::vector<double>(width, 0.0);
  const double scale = snn.spike_probability_scale();
  std::vector<std::vector<double>> sums(batch.size(), std::vector<double>(width, 0.0));
  parallel_for(batch.size(), [&](std::size_t n) {
    const auto& x = batch[n];
    require_same_size(x.size(), first.inputs(), "profile_first_layer_mean input");
    check_encodable(x, scale);
    LifLayer layer = first;
    layer.reset_state();
    RngStream sample_rng = rng.derive(n);
    std::vector<std::uint8_t> input(x.size(), 0), out(width, 0);
    for (std::size_t t = 0; t < snn.steps; ++t) {
      layer.step(input, out);
      const auto v = layer.pre_reset();
      for (std::size_t j = 0; j < width; ++j) sums[n][j] += v[j];
      encode_step(x, scale, sample_rng, input);
    }
  });
  std::vector<double> mean(width, 0.0);
  for (const auto& s : sums) {
    for (std::size_t j = 0; j < width; ++j) mean[j] += s[j];
  }
  const double denom = static_cast<double>(batch.size() * snn.steps);
  for (double& m : mean) m /= denom;
  return mean;
}

/// Everything the first-layer adjustment computed, per neuron and per layer.
struct AdjustmentRecord {
  std::vector<double> l4_norms;
  std::vector<double> smoothed_norms;
  std::vector<double> mean_potential;
  std::vector<double> new_thresholds;
  std::vector<double> raw_scalars;
  std::vector<double> scalars;
  std::vector<bool> clamped;
  double mean_l4 = 0.0;
  double base_threshold = 0.0;
  double smoothing = 0.0;
  double renormalization = 1.0;
  double mean_abs_before = 0.0;
  double mean_abs_after = 0.0;
  std::size_t clamp_count = 0;
};

struct AdjustedNetwork {
  SpikingNetwork network;
  AdjustmentRecord record;
};

/// L4-norm weight adjustment of the first layer.
///
/// profile mean potentials -> row L4 norms -> smoothing -> per-neuron thresholds
/// -> inverse scalars -> scale each row (and its bias drive) -> rescale the
/// whole layer so its mean absolute weight is unchanged. Thresholds and every
/// other layer are left alone. The bias drive is excluded from the norms
/// because a constant drive adds no shot noise.
inline AdjustedNetwork apply_l4_adjustment(const SpikingNetwork& snn, const std::vector<std::vector<double>>& batch,
                                           double smoothing, double max_scalar, const RngStream& rng) {
  if (snn.layers.empty()) throw RejectedInput("spiking network has no layers");
  if (!(smoothing >= 0.0)) throw ConfigError("smoothing ratio must be >= 0");
  AdjustedNetwork out{snn, {}};
  AdjustmentRecord& rec = out.record;
  LifLayer& first = out.network.layers.front();
  const std::size_t width = first.size();

  rec.smoothing = smoothing;
  rec.base_threshold = first.config().threshold;
  rec.mean_potential = profile_first_layer_mean(snn, batch, rng);
  rec.l4_norms.resize(width);
  for (std::size_t j = 0; j < width; ++j) rec.l4_norms[j] = l4_norm(first.weights().row(j));
  rec.mean_l4 = stable_mean(rec.l4_norms);
  rec.smoothed_norms = smooth_l4(rec.l4_norms, smoothing);
  rec.new_thresholds = l4_thresholds(rec.mean_potential, rec.smoothed_norms, rec.mean_l4, rec.base_threshold);

  rec.raw_scalars.assign(width, 0.0);
  rec.scalars.assign(width, 0.0);
  rec.clamped.assign(width, false);
  for (std::size_t j = 0; j < width; ++j) {
    const double v_hat = rec.new_thresholds[j];
    if (v_hat > 0.0) {
      rec.raw_scalars[j] = rec.base_threshold / v_hat;
      rec.scalars[j] = adjustment_scalars(std::span<const double>(&v_hat, 1), rec.base_threshold, smoothing)[0];
    } else {
      rec.raw_scalars[j] = std::numeric_limits<double>::infinity();
    }
    if (!(v_hat > 0.0) || rec.scalars[j] > max_scalar) {
      rec.scalars[j] = max_scalar;
      rec.clamped[j] = true;
      ++rec.clamp_count;
    }
  }

  rec.mean_abs_before = first.weights().mean_abs();
  for (std::size_t j = 0; j < width; ++j) {
    for (double& w : first.weights().row(j)) w *= rec.scalars[j];
    first.bias_drive()[j] *= rec.scalars[j];
  }
  const double scaled = first.weights().mean_abs();
  if (rec.mean_abs_before > 0.0) {
    if (!(scaled > 0.0)) throw DegenerateLayer("first layer vanished after scaling");
    rec.renormalization = rec.mean_abs_before / scaled;
  }
  if (rec.renormalization != 1.0) {
    for (double& w : first.weights().values()) w *= rec.renormalization;
    for (double& b : first.bias_drive()) b *= rec.renormalization;
  }
  rec.mean_abs_after = first.weights().mean_abs();
  return out;
}

// ---- full conversion -------------------------------------------------------

enum class Variant { Baseline, L4Adjusted };

inline const char* to_string(Variant v) { return v == Variant::Baseline ? "baseline" : "l4_adjusted"; }

struct SweepEntry {
  double factor = 1.0;
  double smoothing = 0.0;
  double accuracy = 0.0;
};

struct ConversionReport {
  Variant variant = Variant::Baseline;
  ConversionConfig config;
  std::vector<double> base_thresholds;
  std::vector<double> thresholds;
  double chosen_factor = 1.0;
  double chosen_smoothing = 0.0;
  std::vector<SweepEntry> sweep;
  std::optional<AdjustmentRecord> adjustment;
};

struct ConversionResult {
  SpikingNetwork network;
  ConversionReport report;
};

/// Thresholds and sweep for one variant. Every candidate is scored on the same
/// held-out slice with the same evaluation stream, so baseline and adjusted
/// variants are compared on identical input spike trains.
inline ConversionResult convert(const DenseNetwork& ann, const Dataset& train, const ConversionConfig& config,
                                Variant variant, const RngStream& rng) {
  config.validate();
  ann.validate();
  if (train.empty()) throw RejectedInput("conversion data is empty");
  const Dataset profiling = train.slice(0, config.profiling_batch_size);
  const std::size_t held_begin = train.size() > config.sweep_samples ? train.size() - config.sweep_samples : 0;
  const Dataset held_out = train.slice(held_begin, train.size());

  ConversionResult best;
  best.report.variant = variant;
  best.report.config = config;
  best.report.base_thresholds = base_thresholds(ann, profiling.inputs);

  std::vector<double> smoothing_values{config.smoothing};
  if (variant == Variant::L4Adjusted && !config.smoothing_grid.empty()) smoothing_values = config.smoothing_grid;

  const RngStream profile_rng = rng.derive(1);
  const RngStream eval_rng = rng.derive(2);
  double best_accuracy = -1.0;
  for (double factor : config.sweep_grid) {
    std::vector<double> thresholds = best.report.base_thresholds;
    for (double& t : thresholds) t *= factor;
    const SpikingNetwork base_snn = build(ann, thresholds, config.build_options());
    for (double smoothing : smoothing_values) {
      SpikingNetwork candidate = base_snn;
      std::optional<AdjustmentRecord> record;
      if (variant == Variant::L4Adjusted) {
        auto adjusted = apply_l4_adjustment(base_snn, profiling.inputs, smoothing, config.max_scalar, profile_rng);
        candidate = std::move(adjusted.network);
        record = std::move(adjusted.record);
      }
      const double acc = evaluate(candidate, held_out, config.trials_per_sample, eval_rng).accuracy;
      best.report.sweep.push_back({factor, variant == Variant::L4Adjusted ? smoothing : 0.0, acc});
      if (acc > best_accuracy) {
        best_accuracy = acc;
        best.network = std::move(candidate);
        best.report.thresholds = thresholds;
        best.report.chosen_factor = factor;
        best.report.chosen_smoothing = variant == Variant::L4Adjusted ? smoothing : 0.0;
        best.report.adjustment = std::move(record);
      }
      if (variant == Variant::Baseline) break;
    }
  }
  return best;
}

/// Baseline threshold balancing: base thresholds scaled by the best sweep factor.
inline std::vector<double> balance_thresholds(const DenseNetwork& ann, const Dataset& train,
                                              const ConversionConfig& config, const RngStream& rng) {
  return convert(ann, train, config, Variant::Baseline, rng).report.thresholds;
}

// ---- reports -----------------------------------------------------------------

inline nlohmann::json to_json(const ConversionConfig& c) {
  return {{"smoothing", c.smoothing},
          {"smoothing_grid", c.smoothing_grid},
          {"sweep_grid", c.sweep_grid},
          {"leak", c.leak},
          {"reset", to_string(c.reset)},
          {"steps", c.steps},
          {"dt", c.dt},
          {"rate_max", c.rate_max},
          {"profiling_batch_size", c.profiling_batch_size},
          {"sweep_samples", c.sweep_samples},
          {"trials_per_sample", c.trials_per_sample},
          {"max_scalar", c.max_scalar},
          {"floor", c.floor ? nlohmann::json(*c.floor) : nlohmann::json(nullptr)}};
}

inline nlohmann::json to_json(const AdjustmentRecord& r) {
  return {{"l4_norms", r.l4_norms},
          {"smoothed_norms", r.smoothed_norms},
          {"mean_potential", r.mean_potential},
          {"new_thresholds", r.new_thresholds},
          {"raw_scalars", r.raw_scalars},
          {"scalars", r.scalars},
          {"clamped", r.clamped},
          {"mean_l4", r.mean_l4},
          {"base_threshold", r.base_threshold},
          {"smoothing", r.smoothing},
          {"renormalization", r.renormalization},
          {"mean_abs_before", r.mean_abs_before},
          {"mean_abs_after", r.mean_abs_after},
          {"clamp_count", r.clamp_count}};
}

inline nlohmann::json to_json(const ConversionReport& r) {
  nlohmann::json sweep = nlohmann::json::array();
  for (const auto& e : r.sweep) sweep.push_back({{"factor", e.factor}, {"smoothing", e.smoothing}, {"accuracy", e.accuracy}});
  nlohmann::json j{{"variant", to_string(r.variant)},
                   {"config", to_json(r.config)},
                   {"base_thresholds", r.base_thresholds},
                   {"thresholds", r.thresholds},
                   {"chosen_factor", r.chosen_factor},
                   {"chosen_smoothing", r.chosen_smoothing},
                   {"sweep", sweep}};
  j["adjustment"] = r.adjustment ? to_json(*r.adjustment) : nlohmann::json(nullptr);
  j["clamp_count"] = r.adjustment ? r.adjustment->clamp_count : 0;
  return j;
}

}  // namespace spikeforge
