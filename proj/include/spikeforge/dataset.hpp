#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "spikeforge/ann.hpp"
#include "spikeforge/error.hpp"
#include "spikeforge/numerics.hpp"

namespace spikeforge {

enum class SyntheticKind { Blobs, Rings };

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::Blobs;
  std::uint64_t seed = 1;
  std::size_t classes = 3;
  std::size_t points_per_class = 200;
  double noise = 0.1;
  /// Feature dimension for blobs; rings are always 2-D.
  std::size_t dim = 8;
  double test_fraction = 0.25;
};

struct DatasetSplit {
  Dataset train;
  Dataset test;
};

/// Seeded Gaussian blobs or concentric rings, min-max rescaled to [0, 1] per
/// feature and shuffled into a train/test split.
inline DatasetSplit make_synthetic(const SyntheticSpec& spec) {
  if (spec.classes < 2) throw ConfigError("synthetic dataset needs at least 2 classes");
  if (spec.points_per_class == 0) throw ConfigError("points_per_class must be > 0");
  if (!(spec.noise >= 0.0)) throw ConfigError("noise must be >= 0");
  if (!(spec.test_fraction >= 0.0 && spec.test_fraction < 1.0)) throw ConfigError("test_fraction must lie in [0, 1)");
  RngStream rng(spec.seed, 0xDA7A);
  Dataset all;
  all.num_classes = spec.classes;

  if (spec.kind == SyntheticKind::Blobs) {
    if (spec.dim == 0) throw ConfigError("blob dimension must be > 0");
    std::vector<std::vector<double>> centers(spec.classes, std::vector<double>(spec.dim));
    for (auto& c : centers) {
      for (double& v : c) v = rng.uniform();
    }
    for (std::size_t c = 0; c < spec.classes; ++c) {
      for (std::size_t n = 0; n < spec.points_per_class; ++n) {
        std::vector<double> x(spec.dim);
        for (std::size_t d = 0; d < spec.dim; ++d) x[d] = centers[c][d] + rng.normal(0.0, spec.noise);
        all.inputs.push_back(std::move(x));
        all.labels.push_back(c);
      }
    }
  } else {
    for (std::size_t c = 0; c < spec.classes; ++c) {
      for (std::size_t n = 0; n < spec.points_per_class; ++n) {
        const double angle = 2.0 * std::numbers::pi * rng.uniform();
        const double radius = static_cast<double>(c + 1) + rng.normal(0.0, spec.noise);
        all.inputs.push_back({radius * std::cos(angle), radius * std::sin(angle)});
        all.labels.push_back(c);
      }
    }
  }

  const std::size_t dim = all.dim();
  for (std::size_t d = 0; d < dim; ++d) {
    double lo = all.inputs.front()[d];
    double hi = lo;
    for (const auto& x : all.inputs) {
      lo = std::min(lo, x[d]);
      hi = std::max(hi, x[d]);
    }
    const double span = hi - lo;
    for (auto& x : all.inputs) x[d] = span > 0.0 ? (x[d] - lo) / span : 0.0;
  }

  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng.engine());
  const auto n_test = static_cast<std::size_t>(std::round(spec.test_fraction * static_cast<double>(all.size())));
  DatasetSplit split;
  split.train.num_classes = split.test.num_classes = spec.classes;
  for (std::size_t k = 0; k < order.size(); ++k) {
    Dataset& dst = k < order.size() - n_test ? split.train : split.test;
    dst.inputs.push_back(all.inputs[order[k]]);
    dst.labels.push_back(all.labels[order[k]]);
  }
  return split;
}

// ---- IDX files --------------------------------------------------------------

namespace detail {
inline std::uint32_t read_be32(std::istream& is, const std::string& path) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw SchemaError(path, "truncated IDX header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}
}  // namespace detail

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Unsigned-byte image tensor (N x rows x cols) flattened per image and scaled by 1/255.
inline std::vector<std::vector<double>> load_idx_images(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path);
  if (detail::read_be32(is, path) != kIdxImageMagic) throw SchemaError(path, "bad IDX image magic");
  const auto count = detail::read_be32(is, path);
  const auto rows = detail::read_be32(is, path);
  const auto cols = detail::read_be32(is, path);
  const std::size_t pixels = std::size_t{rows} * cols;
  std::vector<std::vector<double>> images(count, std::vector<double>(pixels));
  std::vector<unsigned char> buf(pixels);
  for (auto& img : images) {
    if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels))) {
      throw SchemaError(path, "truncated IDX image data");
    }
    for (std::size_t p = 0; p < pixels; ++p) img[p] = buf[p] / 255.0;
  }
  return images;
}

inline std::vector<std::size_t> load_idx_labels(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path);
  if (detail::read_be32(is, path) != kIdxLabelMagic) throw SchemaError(path, "bad IDX label magic");
  const auto count = detail::read_be32(is, path);
  std::vector<unsigned char> buf(count);
  if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count))) {
    throw SchemaError(path, "truncated IDX label data");
  }
  return {buf.begin(), buf.end()};
}

inline Dataset load_idx_dataset(const std::string& images_path, const std::string& labels_path) {
  Dataset d;
  d.inputs = load_idx_images(images_path);
  d.labels = load_idx_labels(labels_path);
  if (d.inputs.size() != d.labels.size()) {
    throw SchemaError(labels_path, "label count does not match image count");
  }
  for (auto l : d.labels) d.num_classes = std::max(d.num_classes, l + 1);
  return d;
}

}  // namespace spikeforge
