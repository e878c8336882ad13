#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "spikeforge/error.hpp"

#ifndef SPIKEFORGE_VERSION
#define SPIKEFORGE_VERSION "0.0.0"
#endif

namespace spikeforge {

inline constexpr const char* kToolVersion = SPIKEFORGE_VERSION;

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Provenance stamped on every artifact. No timestamps, so re-runs are byte-identical.
struct ArtifactMeta {
  std::string experiment;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string version = kToolVersion;

  nlohmann::json to_json() const {
    return {{"experiment", experiment}, {"seed", seed}, {"config_hash", config_hash}, {"tool_version", version}};
  }
};

/// Shortest round-trip-safe decimal for a double; non-finite values print as nan / inf / -inf.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int precision = 12; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string format_number(std::size_t v) { return std::to_string(v); }

/// Quotes a field when it holds a comma, quote, CR or LF; embedded quotes are doubled.
inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

/// CSV file with '#'-prefixed provenance lines, a header row and CRLF-free rows.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const ArtifactMeta& meta, std::vector<std::string> columns)
      : path_(path), columns_(std::move(columns)) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    os_.open(path, std::ios::binary | std::ios::trunc);
    if (!os_) throw ConfigError("cannot open " + path.string() + " for writing");
    os_ << "# tool: spikeforge " << meta.version << '\n'
        << "# experiment: " << meta.experiment << '\n'
        << "# seed: " << meta.seed << '\n'
        << "# config_hash: " << meta.config_hash << '\n';
    write_line(columns_);
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size()) {
      throw Error(path_.string() + ": row has " + std::to_string(cells.size()) + " cells, header has " +
                  std::to_string(columns_.size()));
    }
    write_line(cells);
  }

  std::size_t rows() const noexcept { return rows_; }

 private:
  void write_line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os_ << ',';
      os_ << csv_escape(cells[i]);
    }
    os_ << '\n';
    ++rows_;
  }

  std::filesystem::path path_;
  std::vector<std::string> columns_;
  std::ofstream os_;
  std::size_t rows_ = 0;
};

inline void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
  os << doc.dump(2) << '\n';
}

/// Read-only view of one config object that remembers which keys were read.
/// finish() rejects any key nobody asked for, naming its full path.
class ConfigBlock {
 public:
  ConfigBlock(const nlohmann::json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw ConfigError(where("") + " must be an object");
  }

  bool has(const std::string& key) const { return doc_.contains(key); }

  template <class T>
  T get(const std::string& key, const T& fallback) {
    seen_.insert(key);
    if (!doc_.contains(key)) return fallback;
    return convert<T>(key);
  }

  template <class T>
  T require(const std::string& key) {
    seen_.insert(key);
    if (!doc_.contains(key)) throw ConfigError(where(key) + " is required");
    return convert<T>(key);
  }

  ConfigBlock child(const std::string& key) {
    seen_.insert(key);
    static const nlohmann::json empty = nlohmann::json::object();
    return ConfigBlock(doc_.contains(key) ? doc_.at(key) : empty, where(key));
  }

  /// Child objects of an array member, e.g. "cases".
  std::vector<ConfigBlock> children(const std::string& key) {
    seen_.insert(key);
    std::vector<ConfigBlock> out;
    if (!doc_.contains(key)) return out;
    const auto& arr = doc_.at(key);
    if (!arr.is_array()) throw ConfigError(where(key) + " must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) out.emplace_back(arr[i], where(key) + "[" + std::to_string(i) + "]");
    return out;
  }

  void finish() const {
    for (const auto& [key, value] : doc_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown config key " + where(key));
    }
  }

  const std::string& path() const noexcept { return path_; }

 private:
  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  template <class T>
  T convert(const std::string& key) const {
    const auto& v = doc_.at(key);
    if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!v.is_number_integer() || (std::is_unsigned_v<T> && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        throw ConfigError(where(key) + " must be a" + (std::is_unsigned_v<T> ? " non-negative" : "n") + " integer: " +
                          v.dump());
      }
    }
    try {
      return doc_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(where(key) + " has the wrong type: " + doc_.at(key).dump());
    }
  }

  const nlohmann::json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace spikeforge
