#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spikeforge/error.hpp"
#include "spikeforge/numerics.hpp"

namespace spikeforge {

/// Dense weights of one layer. Row j is the weight vector of post-synaptic neuron j.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  WeightMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  WeightMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw RejectedInput("WeightMatrix: " + std::to_string(data_.size()) + " values for shape " +
                          std::to_string(rows_) + "x" + std::to_string(cols_));
    }
  }

  static WeightMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    std::vector<double> data;
    data.reserve(rows.size() * cols);
    for (const auto& r : rows) {
      require_same_size(r.size(), cols, "WeightMatrix::from_rows");
      data.insert(data.end(), r.begin(), r.end());
    }
    return {rows.size(), cols, std::move(data)};
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }

  /// Mean absolute weight over the whole matrix.
  double mean_abs() const {
    if (data_.empty()) return 0.0;
    double acc = 0.0;
    for (double v : data_) acc += std::fabs(v);
    return acc / static_cast<double>(data_.size());
  }

  friend bool operator==(const WeightMatrix&, const WeightMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class ResetMode { Soft, Hard };

inline const char* to_string(ResetMode m) { return m == ResetMode::Soft ? "soft" : "hard"; }

inline ResetMode reset_mode_from_string(const std::string& s) {
  if (s == "soft") return ResetMode::Soft;
  if (s == "hard") return ResetMode::Hard;
  throw ConfigError("reset mode must be \"soft\" or \"hard\", got \"" + s + "\"");
}

/// Per-layer neuron parameters. leak is the per-step decay factor (1 = no leak).
struct NeuronConfig {
  double leak = 1.0;
  double threshold = 1.0;
  ResetMode reset = ResetMode::Soft;
  double dt = 1.0;
  /// Optional lower bound applied after reset; off by default.
  std::optional<double> floor;

  void validate() const {
    if (!(leak > 0.0 && leak <= 1.0)) throw ConfigError("leak scalar must lie in (0, 1]");
    if (!(threshold > 0.0)) throw ConfigError("threshold must be > 0");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be finite and > 0");
  }

  friend bool operator==(const NeuronConfig&, const NeuronConfig&) = default;
};

/// Per-step decay factor exp(-dt/tau); an infinite tau means no leak.
inline double leak_from_tau(double tau, double dt) {
  if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
  if (std::isinf(tau)) return 1.0;
  return std::exp(-dt / tau);
}

/// One layer of discrete-time leaky integrate-and-fire neurons.
///
/// Update per step: decay, integrate weighted input spikes plus the constant
/// bias drive, compare against the threshold (ties fire), then reset.
class LifLayer {
 public:
  LifLayer() = default;
  LifLayer(WeightMatrix weights, NeuronConfig config, std::vector<double> bias_drive = {})
      : weights_(std::move(weights)), config_(config), bias_drive_(std::move(bias_drive)) {
    config_.validate();
    if (bias_drive_.empty()) bias_drive_.assign(weights_.rows(), 0.0);
    require_same_size(bias_drive_.size(), weights_.rows(), "LifLayer bias drive");
    potentials_.assign(weights_.rows(), 0.0);
    pre_reset_.assign(weights_.rows(), 0.0);
  }

  std::size_t size() const noexcept { return weights_.rows(); }
  std::size_t inputs() const noexcept { return weights_.cols(); }

  const WeightMatrix& weights() const noexcept { return weights_; }
  WeightMatrix& weights() noexcept { return weights_; }
  const std::vector<double>& bias_drive() const noexcept { return bias_drive_; }
  std::vector<double>& bias_drive() noexcept { return bias_drive_; }
  const NeuronConfig& config() const noexcept { return config_; }

  void set_threshold(double threshold) {
    NeuronConfig c = config_;
    c.threshold = threshold;
    c.validate();
    config_ = c;
  }

  std::span<const double> potentials() const noexcept { return potentials_; }
  void set_potentials(std::span<const double> v) {
    require_same_size(v.size(), potentials_.size(), "LifLayer::set_potentials");
    potentials_.assign(v.begin(), v.end());
  }
  /// Pre-reset potentials of the most recent step.
  std::span<const double> pre_reset() const noexcept { return pre_reset_; }

  void reset_state() {
    std::fill(potentials_.begin(), potentials_.end(), 0.0);
    std::fill(pre_reset_.begin(), pre_reset_.end(), 0.0);
  }

  /// Advances one step. out receives one fire indicator per neuron.
  void step(std::span<const std::uint8_t> in, std::span<std::uint8_t> out) {
    require_same_size(in.size(), weights_.cols(), "LifLayer::step input");
    require_same_size(out.size(), weights_.rows(), "LifLayer::step output");
    active_.clear();
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (in[i]) active_.push_back(i);
    }
    const double leak = config_.leak;
    const double threshold = config_.threshold;
    for (std::size_t j = 0; j < weights_.rows(); ++j) {
      const auto w = weights_.row(j);
      double drive = bias_drive_[j];
      for (std::size_t i : active_) drive += w[i];
      double v = leak * potentials_[j] + drive;
      if (!std::isfinite(v)) {
        throw NumericFault("non-finite membrane potential in neuron " + std::to_string(j));
      }
      pre_reset_[j] = v;
      const bool fired = v >= threshold;
      if (fired) v = config_.reset == ResetMode::Hard ? 0.0 : v - threshold;
      if (config_.floor && v < *config_.floor) v = *config_.floor;
      potentials_[j] = v;
      out[j] = fired ? 1 : 0;
    }
  }

  std::vector<std::uint8_t> step(std::span<const std::uint8_t> in) {
    std::vector<std::uint8_t> out(size());
    step(in, out);
    return out;
  }

 private:
  WeightMatrix weights_;
  NeuronConfig config_;
  std::vector<double> bias_drive_;
  std::vector<double> potentials_;
  std::vector<double> pre_reset_;
  std::vector<std::size_t> active_;
};

struct RunResult {
  SpikeTrain output;
  /// Pre-reset potential, row-major steps x neurons.
  std::vector<double> trace;

  double potential(std::size_t t, std::size_t neuron) const {
    return trace[t * output.channels() + neuron];
  }
};

/// Steps the layer once per input row, starting from its current state.
inline RunResult run(LifLayer& layer, const SpikeTrain& input) {
  require_same_size(input.channels(), layer.inputs(), "run input");
  RunResult result{SpikeTrain(input.steps(), layer.size()), {}};
  result.trace.reserve(input.steps() * layer.size());
  for (std::size_t t = 0; t < input.steps(); ++t) {
    layer.step(input.row(t), result.output.row(t));
    const auto v = layer.pre_reset();
    result.trace.insert(result.trace.end(), v.begin(), v.end());
  }
  return result;
}

}  // namespace spikeforge
