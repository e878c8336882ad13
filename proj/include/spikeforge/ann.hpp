#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spikeforge/error.hpp"
#include "spikeforge/lif.hpp"
#include "spikeforge/numerics.hpp"

namespace spikeforge {

/// Labeled feature vectors. Features are non-negative so they can be rate-encoded.
struct Dataset {
  std::vector<std::vector<double>> inputs;
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;

  std::size_t size() const noexcept { return inputs.size(); }
  bool empty() const noexcept { return inputs.empty(); }
  std::size_t dim() const noexcept { return inputs.empty() ? 0 : inputs.front().size(); }

  void validate() const {
    require_same_size(inputs.size(), labels.size(), "Dataset inputs/labels");
    for (std::size_t n = 0; n < inputs.size(); ++n) {
      require_same_size(inputs[n].size(), dim(), "Dataset feature dimension");
      validate_rates(inputs[n]);
      if (labels[n] >= num_classes) {
        throw RejectedInput("label " + std::to_string(labels[n]) + " at sample " + std::to_string(n) +
                            " is not below the class count " + std::to_string(num_classes));
      }
    }
  }

  /// Samples [begin, end), clamped to the dataset size.
  Dataset slice(std::size_t begin, std::size_t end) const {
    end = std::min(end, size());
    begin = std::min(begin, end);
    Dataset out;
    out.num_classes = num_classes;
    out.inputs.assign(inputs.begin() + static_cast<std::ptrdiff_t>(begin),
                      inputs.begin() + static_cast<std::ptrdiff_t>(end));
    out.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(begin),
                      labels.begin() + static_cast<std::ptrdiff_t>(end));
    return out;
  }

  /// Fraction of samples belonging to the most frequent class.
  double majority_fraction() const {
    if (empty()) return 0.0;
    std::vector<std::size_t> counts(num_classes, 0);
    for (auto l : labels) ++counts[l];
    return static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
           static_cast<double>(size());
  }
};

struct DenseLayer {
  WeightMatrix weights;
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Affine layers with ReLU on every hidden layer and identity on the output.
struct DenseNetwork {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().weights.cols(); }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().weights.rows(); }

  void validate() const {
    if (layers.empty()) throw RejectedInput("network has no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& layer = layers[l];
      require_same_size(layer.bias.size(), layer.weights.rows(), "layer bias");
      if (l > 0) require_same_size(layer.weights.cols(), layers[l - 1].weights.rows(), "layer chaining");
      for (double v : layer.weights.values()) {
        if (!std::isfinite(v)) throw RejectedInput("non-finite weight in layer " + std::to_string(l));
      }
    }
  }

  friend bool operator==(const DenseNetwork&, const DenseNetwork&) = default;
};

/// Network with the given layer widths (dims[0] = input), He-normal weights and zero biases.
inline DenseNetwork make_network(const std::vector<std::size_t>& dims, RngStream& rng) {
  if (dims.size() < 2) throw ConfigError("a network needs at least an input and an output width");
  DenseNetwork net;
  for (std::size_t l = 1; l < dims.size(); ++l) {
    DenseLayer layer{WeightMatrix(dims[l], dims[l - 1]), std::vector<double>(dims[l], 0.0)};
    const double scale = std::sqrt(2.0 / static_cast<double>(dims[l - 1]));
    for (double& w : layer.weights.values()) w = rng.normal(0.0, scale);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

struct ForwardResult {
  std::vector<double> logits;
  /// Pre-activation (affine output before ReLU) of every layer.
  std::vector<std::vector<double>> pre_activations;
};

inline ForwardResult forward(const DenseNetwork& net, std::span<const double> x) {
  require_same_size(x.size(), net.input_dim(), "forward input");
  ForwardResult result;
  std::vector<double> act(x.begin(), x.end());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& layer = net.layers[l];
    std::vector<double> z(layer.weights.rows());
    for (std::size_t j = 0; j < z.size(); ++j) z[j] = dot(layer.weights.row(j), act) + layer.bias[j];
    result.pre_activations.push_back(z);
    if (l + 1 < net.layers.size()) {
      for (double& v : z) v = std::max(v, 0.0);
    }
    act = std::move(z);
  }
  result.logits = std::move(act);
  return result;
}

inline std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

inline double accuracy(const DenseNetwork& net, const Dataset& data) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    if (argmax(forward(net, data.inputs[n]).logits) == data.labels[n]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

struct TrainConfig {
  std::size_t epochs = 30;
  double learning_rate = 0.05;
};

/// Plain per-sample SGD on softmax cross-entropy. Sample order is shuffled each
/// epoch from rng, so the result is a pure function of (net, data, config, rng state).
inline DenseNetwork train_sgd(DenseNetwork net, const Dataset& data, const TrainConfig& config, RngStream& rng) {
  if (data.empty()) throw RejectedInput("training data is empty");
  net.validate();
  data.validate();
  const std::size_t depth = net.layers.size();
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    double epoch_loss = 0.0;
    for (std::size_t n : order) {
      const auto& x = data.inputs[n];
      // Forward pass keeping every layer's input activation.
      std::vector<std::vector<double>> acts{x};
      std::vector<std::vector<double>> pres;
      for (std::size_t l = 0; l < depth; ++l) {
        const auto& layer = net.layers[l];
        std::vector<double> z(layer.weights.rows());
        for (std::size_t j = 0; j < z.size(); ++j) z[j] = dot(layer.weights.row(j), acts.back()) + layer.bias[j];
        pres.push_back(z);
        if (l + 1 < depth) {
          for (double& v : z) v = std::max(v, 0.0);
        }
        acts.push_back(std::move(z));
      }
      const auto& logits = acts.back();
      const double peak = *std::max_element(logits.begin(), logits.end());
      std::vector<double> delta(logits.size());
      double denom = 0.0;
      for (std::size_t k = 0; k < logits.size(); ++k) denom += std::exp(logits[k] - peak);
      for (std::size_t k = 0; k < logits.size(); ++k) delta[k] = std::exp(logits[k] - peak) / denom;
      const double loss = -std::log(std::max(delta[data.labels[n]], std::numeric_limits<double>::min()));
      if (!std::isfinite(loss) || !std::isfinite(peak)) {
        throw TrainingFault("training diverged at epoch " + std::to_string(epoch));
      }
      epoch_loss += loss;
      delta[data.labels[n]] -= 1.0;

      for (std::size_t l = depth; l-- > 0;) {
        auto& layer = net.layers[l];
        const auto& in = acts[l];
        std::vector<double> back(layer.weights.cols(), 0.0);
        for (std::size_t j = 0; j < layer.weights.rows(); ++j) {
          auto row = layer.weights.row(j);
          for (std::size_t i = 0; i < row.size(); ++i) {
            back[i] += row[i] * delta[j];
            row[i] -= config.learning_rate * delta[j] * in[i];
          }
          layer.bias[j] -= config.learning_rate * delta[j];
        }
        if (l > 0) {
          for (std::size_t i = 0; i < back.size(); ++i) back[i] = pres[l - 1][i] > 0.0 ? back[i] : 0.0;
        }
        delta = std::move(back);
      }
    }
    bool finite = std::isfinite(epoch_loss);
    for (const auto& layer : net.layers) {
      for (double w : layer.weights.values()) finite = finite && std::isfinite(w);
      for (double b : layer.bias) finite = finite && std::isfinite(b);
    }
    if (!finite) throw TrainingFault("training diverged at epoch " + std::to_string(epoch));
  }
  return net;
}

/// Per-layer maximum pre-activation and per-neuron mean pre-activation over a batch.
struct ActivationProfile {
  std::vector<double> layer_max;
  std::vector<std::vector<double>> neuron_mean;
};

inline ActivationProfile profile_activations(const DenseNetwork& net, const std::vector<std::vector<double>>& batch) {
  if (batch.empty()) throw RejectedInput("profiling batch is empty");
  ActivationProfile profile;
  profile.layer_max.assign(net.layers.size(), -std::numeric_limits<double>::infinity());
  for (const auto& layer : net.layers) profile.neuron_mean.emplace_back(layer.weights.rows(), 0.0);
  for (const auto& x : batch) {
    const auto fr = forward(net, x);
    for (std::size_t l = 0; l < fr.pre_activations.size(); ++l) {
      for (std::size_t j = 0; j < fr.pre_activations[l].size(); ++j) {
        const double z = fr.pre_activations[l][j];
        profile.layer_max[l] = std::max(profile.layer_max[l], z);
        profile.neuron_mean[l][j] += z;
      }
    }
  }
  for (auto& layer : profile.neuron_mean) {
    for (double& m : layer) m /= static_cast<double>(batch.size());
  }
  return profile;
}

// ---- weight file I/O ------------------------------------------------------

inline constexpr int kWeightFormatVersion = 1;

struct LoadedNetwork {
  DenseNetwork network;
  /// True when at least one layer had no "bias" field and was given zero biases.
  bool bias_defaulted = false;
  std::vector<std::string> warnings;
};

inline nlohmann::json network_to_json(const DenseNetwork& net) {
  nlohmann::json doc;
  doc["format_version"] = kWeightFormatVersion;
  doc["activation"] = "relu";
  doc["layers"] = nlohmann::json::array();
  for (const auto& layer : net.layers) {
    nlohmann::json l;
    l["shape"] = {layer.weights.rows(), layer.weights.cols()};
    l["weights"] = std::vector<double>(layer.weights.values().begin(), layer.weights.values().end());
    l["bias"] = layer.bias;
    doc["layers"].push_back(std::move(l));
  }
  return doc;
}

inline LoadedNetwork network_from_json(const nlohmann::json& doc) {
  using nlohmann::json;
  if (!doc.is_object()) throw SchemaError("$", "weight file must be an object");
  if (!doc.contains("format_version") || !doc["format_version"].is_number_integer()) {
    throw SchemaError("format_version", "missing or not an integer");
  }
  if (doc["format_version"].get<int>() != kWeightFormatVersion) {
    throw SchemaError("format_version", "unsupported version " + doc["format_version"].dump());
  }
  if (doc.contains("activation") && doc["activation"] != "relu") {
    throw SchemaError("activation", "only \"relu\" is supported");
  }
  if (!doc.contains("layers") || !doc["layers"].is_array() || doc["layers"].empty()) {
    throw SchemaError("layers", "missing or empty layer list");
  }
  LoadedNetwork out;
  const auto& layers = doc["layers"];
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string path = "layers[" + std::to_string(l) + "]";
    const auto& lj = layers[l];
    if (!lj.is_object()) throw SchemaError(path, "layer must be an object");
    if (!lj.contains("shape") || !lj["shape"].is_array() || lj["shape"].size() != 2 ||
        !lj["shape"][0].is_number_unsigned() || !lj["shape"][1].is_number_unsigned()) {
      throw SchemaError(path + ".shape", "expected [rows, cols] of non-negative integers");
    }
    const auto rows = lj["shape"][0].get<std::size_t>();
    const auto cols = lj["shape"][1].get<std::size_t>();
    if (l > 0 && cols != out.network.layers.back().weights.rows()) {
      throw SchemaError(path + ".shape", "input width " + std::to_string(cols) +
                                             " does not match previous layer output width " +
                                             std::to_string(out.network.layers.back().weights.rows()));
    }
    if (!lj.contains("weights") || !lj["weights"].is_array()) {
      throw SchemaError(path + ".weights", "missing weight array");
    }
    const auto& wj = lj["weights"];
    if (wj.size() != rows * cols) {
      throw SchemaError(path + ".weights", "expected " + std::to_string(rows * cols) + " values, found " +
                                               std::to_string(wj.size()));
    }
    std::vector<double> values(wj.size());
    for (std::size_t k = 0; k < wj.size(); ++k) {
      if (!wj[k].is_number()) throw SchemaError(path + ".weights[" + std::to_string(k) + "]", "not a number");
      values[k] = wj[k].get<double>();
    }
    std::vector<double> bias(rows, 0.0);
    if (lj.contains("bias")) {
      const auto& bj = lj["bias"];
      if (!bj.is_array() || bj.size() != rows) {
        throw SchemaError(path + ".bias", "expected " + std::to_string(rows) + " values");
      }
      for (std::size_t k = 0; k < rows; ++k) {
        if (!bj[k].is_number()) throw SchemaError(path + ".bias[" + std::to_string(k) + "]", "not a number");
        bias[k] = bj[k].get<double>();
      }
    } else {
      out.bias_defaulted = true;
      out.warnings.push_back(path + ".bias missing; defaulted to zeros");
    }
    out.network.layers.push_back({WeightMatrix(rows, cols, std::move(values)), std::move(bias)});
  }
  return out;
}

inline void save_weights(const DenseNetwork& net, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  os << network_to_json(net).dump(2) << '\n';
}

inline LoadedNetwork load_weights(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open weight file " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("$", std::string("parse error: ") + e.what());
  }
  return network_from_json(doc);
}

}  // namespace spikeforge
