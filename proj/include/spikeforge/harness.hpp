#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spikeforge/ann.hpp"
#include "spikeforge/converter.hpp"
#include "spikeforge/dataset.hpp"
#include "spikeforge/error.hpp"
#include "spikeforge/experiments.hpp"
#include "spikeforge/report.hpp"

namespace spikeforge {

namespace fs = std::filesystem;

/// Top-level experiment file: {experiment, seed, output_dir, params}.
struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  fs::path output_dir;
  nlohmann::json params = nlohmann::json::object();
  /// Directory of the config file; relative data paths resolve against it.
  fs::path base_dir;
  std::string config_hash;

  ArtifactMeta meta() const { return {experiment, seed, config_hash, kToolVersion}; }
  fs::path out(const std::string& name) const { return output_dir / name; }
};

struct CommandResult {
  std::vector<fs::path> artifacts;
  /// One-line human summary printed by the CLI.
  std::vector<std::string> summary;
};

inline std::string config_hash(const std::string& experiment, const nlohmann::json& params) {
  return hex64(fnv1a64(nlohmann::json{{"experiment", experiment}, {"params", params}}.dump()));
}

inline ExperimentConfig parse_experiment_config(const nlohmann::json& doc, const fs::path& base_dir) {
  ConfigBlock top(doc, "");
  ExperimentConfig c;
  c.experiment = top.require<std::string>("experiment");
  c.seed = top.get<std::uint64_t>("seed", 0);
  c.output_dir = top.get<std::string>("output_dir", "out/" + c.experiment);
  if (top.has("params")) {
    c.params = doc.at("params");
    if (!c.params.is_object()) throw ConfigError("params must be an object");
  }
  top.child("params");
  top.finish();
  c.base_dir = base_dir;
  c.config_hash = config_hash(c.experiment, c.params);
  return c;
}

inline ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_experiment_config(doc, path.parent_path());
}

// ---- shared parameter blocks -------------------------------------------------

namespace config {

inline ResetMode reset(ConfigBlock& b, const std::string& key, ResetMode fallback) {
  return reset_mode_from_string(b.get<std::string>(key, to_string(fallback)));
}

inline SyntheticSpec synthetic(ConfigBlock& b, SyntheticSpec s = {}) {
  const auto kind = b.get<std::string>("kind", s.kind == SyntheticKind::Blobs ? "blobs" : "rings");
  if (kind == "blobs") {
    s.kind = SyntheticKind::Blobs;
  } else if (kind == "rings") {
    s.kind = SyntheticKind::Rings;
  } else {
    throw ConfigError(b.path() + ".kind must be \"blobs\", \"rings\" or \"idx\", got \"" + kind + "\"");
  }
  s.seed = b.get("seed", s.seed);
  s.classes = b.get("classes", s.classes);
  s.points_per_class = b.get("points_per_class", s.points_per_class);
  s.noise = b.get("noise", s.noise);
  s.dim = b.get("dim", s.dim);
  s.test_fraction = b.get("test_fraction", s.test_fraction);
  return s;
}

/// Synthetic blobs/rings, or IDX files resolved against the config directory.
inline DatasetSplit dataset(ConfigBlock b, const fs::path& base_dir, nlohmann::json& description) {
  description = nlohmann::json::object();
  if (b.get<std::string>("kind", "blobs") == "idx") {
    auto resolve = [&](const std::string& key) {
      const fs::path p = b.require<std::string>(key);
      return (p.is_absolute() ? p : base_dir / p).string();
    };
    const auto train_images = resolve("train_images"), train_labels = resolve("train_labels");
    const auto test_images = resolve("test_images"), test_labels = resolve("test_labels");
    b.finish();
    DatasetSplit split{load_idx_dataset(train_images, train_labels), load_idx_dataset(test_images, test_labels)};
    const std::size_t classes = std::max(split.train.num_classes, split.test.num_classes);
    split.train.num_classes = split.test.num_classes = classes;
    description = {{"kind", "idx"}, {"train_images", train_images}, {"train_labels", train_labels},
                   {"test_images", test_images}, {"test_labels", test_labels}};
    return split;
  }
  const auto spec = synthetic(b);
  b.finish();
  description = {{"kind", spec.kind == SyntheticKind::Blobs ? "blobs" : "rings"},
                 {"seed", spec.seed},
                 {"classes", spec.classes},
                 {"points_per_class", spec.points_per_class},
                 {"noise", spec.noise},
                 {"dim", spec.dim},
                 {"test_fraction", spec.test_fraction}};
  return make_synthetic(spec);
}

inline TrainConfig train(ConfigBlock b, TrainConfig t = {}) {
  t.epochs = b.get("epochs", t.epochs);
  t.learning_rate = b.get("learning_rate", t.learning_rate);
  b.finish();
  return t;
}

inline ConversionConfig conversion(ConfigBlock b, ConversionConfig c = {}) {
  c.smoothing = b.get("smoothing", c.smoothing);
  c.smoothing_grid = b.get("smoothing_grid", c.smoothing_grid);
  c.sweep_grid = b.get("sweep_grid", c.sweep_grid);
  c.leak = b.get("leak", c.leak);
  c.reset = reset(b, "reset", c.reset);
  c.steps = b.get("steps", c.steps);
  c.dt = b.get("dt", c.dt);
  c.rate_max = b.get("rate_max", c.rate_max);
  c.profiling_batch_size = b.get("profiling_batch_size", c.profiling_batch_size);
  c.sweep_samples = b.get("sweep_samples", c.sweep_samples);
  c.trials_per_sample = b.get("trials_per_sample", c.trials_per_sample);
  c.max_scalar = b.get("max_scalar", c.max_scalar);
  if (b.has("floor")) {
    const auto f = b.get<nlohmann::json>("floor", nullptr);
    if (f.is_null()) {
      c.floor.reset();
    } else if (f.is_number()) {
      c.floor = f.get<double>();
    } else {
      throw ConfigError(b.path() + ".floor must be a number or null");
    }
  }
  b.finish();
  c.validate();
  return c;
}

inline std::vector<ResetMode> resets(ConfigBlock& b, const std::string& key, const std::vector<ResetMode>& fallback) {
  std::vector<std::string> names;
  for (ResetMode m : fallback) names.push_back(to_string(m));
  std::vector<ResetMode> out;
  for (const auto& s : b.get(key, names)) out.push_back(reset_mode_from_string(s));
  return out;
}

/// Weights from "weights" when given, otherwise trained on the split from "hidden" and "train".
inline DenseNetwork ann(ConfigBlock& b, const Dataset& train_data, const fs::path& base_dir, const RngStream& rng,
                        nlohmann::json& description) {
  const auto hidden = b.get<std::vector<std::size_t>>("hidden", {32});
  const auto tc = train(b.child("train"));
  if (b.has("weights")) {
    fs::path p = b.get<std::string>("weights", "");
    if (!p.is_absolute()) p = base_dir / p;
    auto loaded = load_weights(p.string());
    for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << '\n';
    description = {{"source", "file"}, {"weights", p.string()}, {"bias_defaulted", loaded.bias_defaulted}};
    return loaded.network;
  }
  std::vector<std::size_t> dims{train_data.dim()};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(train_data.num_classes);
  RngStream train_rng = rng;
  auto net = make_network(dims, train_rng);
  description = {{"source", "trained"}, {"dims", dims}, {"epochs", tc.epochs}, {"learning_rate", tc.learning_rate}};
  return train_sgd(std::move(net), train_data, tc, train_rng);
}

inline std::string joined(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ';';
    s += format_number(v[i]);
  }
  return s;
}

}  // namespace config

inline std::string opt_number(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string("nan");
}

inline nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

// ---- subcommands -------------------------------------------------------------

inline CommandResult cmd_validate_stats(const ExperimentConfig& cfg) {
  ConfigBlock b(cfg.params, "params");
  StatsParams p;
  if (b.has("cases")) {
    p.cases.clear();
    for (auto& c : b.children("cases")) {
      StatsCase sc{c.require<std::vector<double>>("weights"), c.require<std::vector<double>>("rates")};
      c.finish();
      p.cases.push_back(std::move(sc));
    }
  } else {
    b.children("cases");
  }
  p.taus = b.get("taus", p.taus);
  p.times = b.get("times", p.times);
  p.dt = b.get("dt", p.dt);
  p.trials = b.get("trials", p.trials);
  p.histogram_bins = b.get("histogram_bins", p.histogram_bins);
  b.finish();

  const auto result = run_validate_stats(p, RngStream(cfg.seed, 0));
  CommandResult out;
  {
    CsvWriter csv(cfg.out("stats.csv"), cfg.meta(),
                  {"case", "w", "lambda", "tau", "t", "mean_analytic", "mean_mc", "var_analytic", "var_mc", "trials",
                   "dt"});
    for (const auto& r : result.rows) {
      csv.row({format_number(r.case_index), config::joined(r.weights), config::joined(r.rates), format_number(r.tau),
               format_number(r.t), format_number(r.mean_analytic), format_number(r.mean_mc),
               format_number(r.var_analytic), format_number(r.var_mc), format_number(r.trials), format_number(r.dt)});
    }
  }
  {
    CsvWriter csv(cfg.out("histogram.csv"), cfg.meta(), {"case", "tau", "bin_lo", "bin_hi", "count", "density"});
    for (const auto& h : result.histogram) {
      csv.row({format_number(h.case_index), format_number(h.tau), format_number(h.lo), format_number(h.hi),
               format_number(h.count), format_number(h.density)});
    }
  }
  out.artifacts = {cfg.out("stats.csv"), cfg.out("histogram.csv")};
  out.summary.push_back(std::to_string(result.rows.size()) + " stats rows, " + std::to_string(result.histogram.size()) +
                        " histogram bins");
  return out;
}

inline CommandResult cmd_hadamard_drift(const ExperimentConfig& cfg) {
  ConfigBlock b(cfg.params, "params");
  const auto points = b.get<std::size_t>("points", 91);
  b.finish();
  const auto rows = run_hadamard_drift(points);
  // Axis and ones-vector directions must not move.
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& r : run_hadamard_drift(3)) {
    if (std::fabs(r.drift_deg) > 1e-9) {
      throw NumericFault("hadamard drift at " + format_number(r.angle_deg) + " deg is " + format_number(r.drift_deg));
    }
    checks.push_back({{"angle_deg", r.angle_deg}, {"drift_deg", r.drift_deg}});
  }
  CommandResult out;
  {
    CsvWriter csv(cfg.out("drift.csv"), cfg.meta(), {"angle_deg", "squared_angle_deg", "drift_deg"});
    for (const auto& r : rows) {
      csv.row({format_number(r.angle_deg), format_number(r.squared_angle_deg), format_number(r.drift_deg)});
    }
  }
  write_json(cfg.out("summary.json"), {{"meta", cfg.meta().to_json()}, {"fixed_directions", checks}});
  out.artifacts = {cfg.out("drift.csv"), cfg.out("summary.json")};
  out.summary.push_back(std::to_string(rows.size()) + " drift rows");
  return out;
}

inline DominationParams parse_domination(ConfigBlock& b) {
  DominationParams p;
  p.row_a = b.get("row_a", p.row_a);
  p.row_b = b.get("row_b", p.row_b);
  p.angles = b.get("angles", p.angles);
  p.tau = b.get("tau", p.tau);
  p.dt = b.get("dt", p.dt);
  p.rate_max = b.get("rate_max", p.rate_max);
  p.threshold = b.get("threshold", p.threshold);
  p.reset = config::reset(b, "reset", p.reset);
  p.steps = b.get("steps", p.steps);
  p.trials = b.get("trials", p.trials);
  p.smoothing = b.get("smoothing", p.smoothing);
  p.max_scalar = b.get("max_scalar", p.max_scalar);
  return p;
}

inline CommandResult cmd_domination_map(const ExperimentConfig& cfg) {
  ConfigBlock b(cfg.params, "params");
  const auto p = parse_domination(b);
  b.finish();
  const auto r = run_domination_map(p, RngStream(cfg.seed, 0));
  CommandResult out;
  {
    CsvWriter csv(cfg.out("domination.csv"), cfg.meta(),
                  {"phase", "angle_deg", "count_a", "count_b", "diff", "diff_se"});
    for (const auto* curve : {&r.before, &r.after}) {
      const char* phase = curve == &r.before ? "before" : "after";
      for (std::size_t i = 0; i < curve->angle_deg.size(); ++i) {
        csv.row({phase, format_number(curve->angle_deg[i]), format_number(curve->count_a[i]),
                 format_number(curve->count_b[i]), format_number(curve->diff[i]), format_number(curve->diff_se[i])});
      }
    }
  }
  nlohmann::json summary{{"meta", cfg.meta().to_json()},
                         {"midpoint_deg", r.midpoint_deg},
                         {"angle_a_deg", r.angle_a_deg},
                         {"angle_b_deg", r.angle_b_deg},
                         {"l4_a", r.l4_a},
                         {"l4_b", r.l4_b},
                         {"lower_l4_angle_deg", r.lower_l4_angle_deg()},
                         {"crossover_before_deg", opt_json(r.before.crossover_deg)},
                         {"crossover_after_deg", opt_json(r.after.crossover_deg)},
                         {"displacement_before_deg", opt_json(r.displacement_before())},
                         {"displacement_after_deg", opt_json(r.displacement_after())},
                         {"adjustment", to_json(r.adjustment)}};
  write_json(cfg.out("summary.json"), summary);
  out.artifacts = {cfg.out("domination.csv"), cfg.out("summary.json")};
  out.summary.push_back("crossover before " + opt_number(r.before.crossover_deg) + " deg, after " +
                        opt_number(r.after.crossover_deg) + " deg, midpoint " + format_number(r.midpoint_deg) + " deg");
  return out;
}

inline HysteresisParams parse_hysteresis(ConfigBlock& b) {
  HysteresisParams p;
  p.tau = b.get("tau", p.tau);
  p.dt = b.get("dt", p.dt);
  p.input_rate = b.get("input_rate", p.input_rate);
  p.static_threshold = b.get("static_threshold", p.static_threshold);
  p.reset = config::reset(b, "reset", p.reset);
  p.angles = b.get("angles", p.angles);
  p.trials = b.get("trials", p.trials);
  p.warmup = b.get("warmup", p.warmup);
  p.measure = b.get("measure", p.measure);
  p.bracket_lo = b.get("bracket_lo", p.bracket_lo);
  p.bracket_hi = b.get("bracket_hi", p.bracket_hi);
  p.rate_tolerance = b.get("rate_tolerance", p.rate_tolerance);
  p.width_tolerance = b.get("width_tolerance", p.width_tolerance);
  p.max_iterations = b.get("max_iterations", p.max_iterations);
  return p;
}

inline CommandResult cmd_hysteresis(const ExperimentConfig& cfg) {
  ConfigBlock b(cfg.params, "params");
  const auto p = parse_hysteresis(b);
  b.finish();
  const auto rows = run_hysteresis(p, RngStream(cfg.seed, 0));
  CommandResult out;
  std::size_t flagged = 0;
  {
    CsvWriter csv(cfg.out("hysteresis.csv"), cfg.meta(),
                  {"angle_rad", "angle_deg", "matched_vth", "predicted_vth", "static_rate", "matched_rate",
                   "iterations", "status"});
    for (const auto& r : rows) {
      flagged += r.status == MatchStatus::NonBracketing;
      csv.row({format_number(r.angle_rad), format_number(degrees(r.angle_rad)), format_number(r.matched_threshold),
               format_number(r.predicted_threshold), format_number(r.static_rate), format_number(r.matched_rate),
               format_number(r.iterations), to_string(r.status)});
    }
  }
  out.artifacts = {cfg.out("hysteresis.csv")};
  out.summary.push_back(std::to_string(rows.size()) + " angles, endpoints " + format_number(rows.front().matched_threshold) +
                        " and " + format_number(rows.back().matched_threshold) + ", " + std::to_string(flagged) +
                        " non-bracketing");
  return out;
}

inline CommandResult cmd_train_ann(const ExperimentConfig& cfg) {
  ConfigBlock b(cfg.params, "params");
  nlohmann::json data_desc, ann_desc;
  const auto split = config::dataset(b.child("dataset"), cfg.base_dir, data_desc);
  if (b.has("weights")) throw ConfigError("params.weights is not accepted by train-ann");
  const RngStream rng(cfg.seed, 0);
  const auto net = config::ann(b, split.train, cfg.base_dir, rng.derive(0), ann_desc);
  b.finish();
  const double train_acc = accuracy(net, split.train), test_acc = accuracy(net, split.test);
  auto doc = network_to_json(net);
  doc["meta"] = cfg.meta().to_json();
  doc["meta"]["dataset"] = data_desc;
  doc["meta"]["training"] = ann_desc;
  write_json(cfg.out("weights.json"), doc);
  {
    CsvWriter csv(cfg.out("metrics.csv"), cfg.meta(), {"split", "samples", "accuracy"});
    csv.row({"train", format_number(split.train.size()), format_number(train_acc)});
    csv.row({"test", format_number(split.test.size()), format_number(test_acc)});
  }
  CommandResult out;
  out.artifacts = {cfg.out("weights.json"), cfg.out("metrics.csv")};
  out.summary.push_back("ANN accuracy train " + format_number(train_acc) + ", test " + format_number(test_acc));
  return out;
}

inline Variant variant_from_string(const std::string& s) {
  if (s == "baseline") return Variant::Baseline;
  if (s == "l4_adjusted") return Variant::L4Adjusted;
  throw ConfigError("variant must be \"baseline\" or \"l4_adjusted\", got \"" + s + "\"");
}

inline CommandResult cmd_convert(const ExperimentConfig& cfg) {
  ConfigBlock b(cfg.params, "params");
  nlohmann::json data_desc, ann_desc;
  const auto split = config::dataset(b.child("dataset"), cfg.base_dir, data_desc);
  const RngStream rng(cfg.seed, 0);
  const auto net = config::ann(b, split.train, cfg.base_dir, rng.derive(0), ann_desc);
  const auto conv = config::conversion(b.child("conversion"));
  std::vector<Variant> variants;
  for (const auto& v : b.get<std::vector<std::string>>("variants", {"baseline", "l4_adjusted"})) {
    variants.push_back(variant_from_string(v));
  }
  if (variants.empty()) throw ConfigError("params.variants must not be empty");
  const auto eval_trials = b.get<std::size_t>("eval_trials", 1);
  b.finish();

  const double ann_acc = accuracy(net, split.test);
  CommandResult out;
  CsvWriter sweep(cfg.out("sweep.csv"), cfg.meta(), {"variant", "factor", "smoothing", "accuracy"});
  CsvWriter eval(cfg.out("evaluation.csv"), cfg.meta(),
                 {"variant", "ann_accuracy", "snn_accuracy", "chosen_factor", "chosen_smoothing", "clamp_count",
                  "spikes_per_inference"});
  for (Variant v : variants) {
    const auto result = convert(net, split.train, conv, v, rng.derive(1));
    const auto ev = evaluate(result.network, split.test, eval_trials, rng.derive(2));
    for (const auto& e : result.report.sweep) {
      sweep.row({to_string(v), format_number(e.factor), format_number(e.smoothing), format_number(e.accuracy)});
    }
    const std::size_t clamps = result.report.adjustment ? result.report.adjustment->clamp_count : 0;
    eval.row({to_string(v), format_number(ann_acc), format_number(ev.accuracy), format_number(result.report.chosen_factor),
              format_number(result.report.chosen_smoothing), format_number(clamps),
              config::joined(ev.spikes_per_inference)});
    auto report = to_json(result.report);
    report["meta"] = cfg.meta().to_json();
    report["dataset"] = data_desc;
    report["ann"] = ann_desc;
    report["ann_test_accuracy"] = ann_acc;
    report["snn_test_accuracy"] = ev.accuracy;
    const auto path = cfg.out(std::string("conversion_") + to_string(v) + ".json");
    write_json(path, report);
    out.artifacts.push_back(path);
    out.summary.push_back(std::string(to_string(v)) + " accuracy " + format_number(ev.accuracy) + " (ANN " +
                          format_number(ann_acc) + ")");
  }
  out.artifacts.push_back(cfg.out("sweep.csv"));
  out.artifacts.push_back(cfg.out("evaluation.csv"));
  return out;
}

struct EndToEndSetup {
  EndToEndParams params;
  DatasetSplit split;
  nlohmann::json dataset;
  nlohmann::json ann;
};

inline EndToEndSetup parse_end_to_end(const ExperimentConfig& cfg) {
  ConfigBlock b(cfg.params, "params");
  EndToEndSetup setup;
  auto& ann_desc = setup.ann;
  setup.split = config::dataset(b.child("dataset"), cfg.base_dir, setup.dataset);
  EndToEndParams& p = setup.params;
  p.hidden = b.get("hidden", p.hidden);
  p.train = config::train(b.child("train"), p.train);
  p.conversion = config::conversion(b.child("conversion"));
  p.leaks = b.get("leaks", p.leaks);
  p.resets = config::resets(b, "resets", p.resets);
  p.seeds = b.get("seeds", p.seeds);
  p.eval_trials = b.get("eval_trials", p.eval_trials);
  if (const auto weights = b.get<std::string>("weights", ""); !weights.empty()) {
    fs::path w = weights;
    if (!w.is_absolute()) w = cfg.base_dir / w;
    auto loaded = load_weights(w.string());
    for (const auto& msg : loaded.warnings) std::cerr << "warning: " << msg << '\n';
    p.ann = std::move(loaded.network);
    ann_desc = {{"source", "file"}, {"weights", w.string()}};
  } else {
    ann_desc = {{"source", "trained"}, {"hidden", p.hidden}, {"epochs", p.train.epochs},
                {"learning_rate", p.train.learning_rate}};
  }
  b.finish();
  for (double leak : p.leaks) NeuronConfig{leak, 1.0, ResetMode::Soft, 1.0, std::nullopt}.validate();
  return setup;
}

inline CommandResult cmd_end_to_end(const ExperimentConfig& cfg) {
  const auto setup = parse_end_to_end(cfg);
  const auto& p = setup.params;
  const auto r = run_end_to_end(p, setup.split, RngStream(cfg.seed, 0));
  CommandResult out;
  {
    CsvWriter csv(cfg.out("cells.csv"), cfg.meta(),
                  {"leak", "reset", "seed", "ann_accuracy", "baseline_accuracy", "adjusted_accuracy", "baseline_factor",
                   "adjusted_factor", "adjusted_smoothing", "clamp_count"});
    for (const auto& c : r.cells) {
      csv.row({format_number(c.leak), to_string(c.reset), format_number(c.seed), format_number(c.ann_accuracy),
               format_number(c.baseline_accuracy), format_number(c.adjusted_accuracy), format_number(c.baseline_factor),
               format_number(c.adjusted_factor), format_number(c.adjusted_smoothing), format_number(c.clamp_count)});
    }
  }
  nlohmann::json summary = nlohmann::json::array();
  {
    CsvWriter csv(cfg.out("summary.csv"), cfg.meta(),
                  {"leak", "reset", "seeds", "ann_mean", "baseline_mean", "baseline_std", "adjusted_mean",
                   "adjusted_std", "adjusted_minus_baseline"});
    for (const auto& s : r.summary) {
      csv.row({format_number(s.leak), to_string(s.reset), format_number(s.seeds), format_number(s.ann_mean),
               format_number(s.baseline_mean), format_number(s.baseline_std), format_number(s.adjusted_mean),
               format_number(s.adjusted_std), format_number(s.adjusted_mean - s.baseline_mean)});
      summary.push_back({{"leak", s.leak},
                         {"reset", to_string(s.reset)},
                         {"seeds", s.seeds},
                         {"ann_mean", s.ann_mean},
                         {"baseline_mean", s.baseline_mean},
                         {"baseline_std", s.baseline_std},
                         {"adjusted_mean", s.adjusted_mean},
                         {"adjusted_std", s.adjusted_std}});
      out.summary.push_back("leak " + format_number(s.leak) + " " + to_string(s.reset) + ": baseline " +
                            format_number(s.baseline_mean) + ", adjusted " + format_number(s.adjusted_mean) +
                            ", ANN " + format_number(s.ann_mean));
    }
  }
  write_json(cfg.out("report.json"), {{"meta", cfg.meta().to_json()},
                                      {"dataset", setup.dataset},
                                      {"ann", setup.ann},
                                      {"conversion", to_json(p.conversion)},
                                      {"ann_train_accuracy", r.ann_train_accuracy},
                                      {"summary", summary}});
  out.artifacts = {cfg.out("cells.csv"), cfg.out("summary.csv"), cfg.out("report.json")};
  return out;
}

// ---- registry ----------------------------------------------------------------

using Command = std::function<CommandResult(const ExperimentConfig&)>;

inline const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> registry{
      {"validate-stats", cmd_validate_stats}, {"domination-map", cmd_domination_map},
      {"hysteresis", cmd_hysteresis},         {"hadamard-drift", cmd_hadamard_drift},
      {"train-ann", cmd_train_ann},           {"convert", cmd_convert},
      {"end-to-end", cmd_end_to_end}};
  return registry;
}

/// Runs a registered subcommand. The config's experiment id must name the same subcommand.
inline CommandResult run_command(const std::string& name, ExperimentConfig cfg) {
  const auto it = commands().find(name);
  if (it == commands().end()) throw ConfigError("unknown subcommand " + name);
  if (cfg.experiment != name) {
    throw ConfigError("config experiment \"" + cfg.experiment + "\" does not match subcommand " + name);
  }
  return it->second(cfg);
}

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitNumeric = 3 };

}  // namespace spikeforge
