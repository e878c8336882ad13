#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "spikeforge/ann.hpp"
#include "spikeforge/converter.hpp"
#include "spikeforge/dataset.hpp"
#include "spikeforge/error.hpp"
#include "spikeforge/lif.hpp"
#include "spikeforge/numerics.hpp"
#include "spikeforge/parallel.hpp"
#include "spikeforge/potential_stats.hpp"
#include "spikeforge/snn.hpp"

namespace spikeforge {

inline double degrees(double radians) { return radians * 180.0 / std::numbers::pi; }
inline double radians(double degrees) { return degrees * std::numbers::pi / 180.0; }

/// n evenly spaced values from lo to hi inclusive; n = 1 gives {lo}.
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  if (n > 1) out.back() = hi;
  return out;
}

// ---- potential statistics validation ----------------------------------------

struct StatsCase {
  std::vector<double> weights;
  std::vector<double> rates;
};

struct StatsParams {
  std::vector<StatsCase> cases{{{2.0}, {1.0}}, {{1.0}, {2.0}}};
  std::vector<double> taus{1.0};
  std::vector<double> times{0.0, 0.5, 1.0, 2.0, 10.0};
  double dt = 0.01;
  std::size_t trials = 10000;
  std::size_t histogram_bins = 40;
};

struct StatsRow {
  std::size_t case_index = 0;
  std::vector<double> weights;
  std::vector<double> rates;
  double tau = 1.0;
  double t = 0.0;
  double mean_analytic = 0.0;
  double mean_mc = 0.0;
  double var_analytic = 0.0;
  double var_mc = 0.0;
  std::size_t trials = 0;
  double dt = 0.0;
};

struct HistogramBin {
  std::size_t case_index = 0;
  double tau = 1.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double density = 0.0;
};

struct StatsResult {
  std::vector<StatsRow> rows;
  std::vector<HistogramBin> histogram;
};

inline std::size_t steps_for_time(double t, double dt) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("sample times must be finite and >= 0");
  const double steps = std::round(t / dt);
  if (std::fabs(steps * dt - t) > 1e-9 * std::max(1.0, t)) {
    throw ConfigError("sample time " + std::to_string(t) + " is not a multiple of dt");
  }
  return static_cast<std::size_t>(steps);
}

/// Monte-Carlo versus closed-form mean and variance for every (case, tau, t),
/// plus a histogram of the samples at the latest time of each (case, tau).
inline StatsResult run_validate_stats(const StatsParams& p, const RngStream& rng) {
  if (p.cases.empty() || p.taus.empty() || p.times.empty()) throw ConfigError("stats grid must not be empty");
  if (!(p.dt > 0.0)) throw ConfigError("dt must be > 0");
  if (p.trials < 2) throw ConfigError("trials must be >= 2");
  if (p.histogram_bins == 0) throw ConfigError("histogram_bins must be > 0");
  StatsResult result;
  std::size_t cell = 0;
  for (std::size_t c = 0; c < p.cases.size(); ++c) {
    const auto& sc = p.cases[c];
    require_same_size(sc.weights.size(), sc.rates.size(), "stats case");
    validate_rates(sc.rates);
    for (double tau : p.taus) {
      double latest = -1.0;
      std::vector<double> latest_samples;
      for (double t : p.times) {
        const std::size_t horizon = steps_for_time(t, p.dt);
        const auto samples = mc_potential_samples(sc.weights, sc.rates, tau, p.dt, horizon, p.trials, rng.derive(cell++));
        const auto s = sample_stats(samples);
        result.rows.push_back({c, sc.weights, sc.rates, tau, t, analytic_mean(sc.weights, sc.rates, tau, t), s.mean,
                               analytic_variance(sc.weights, sc.rates, tau, t), s.variance, p.trials, p.dt});
        if (t > latest) {
          latest = t;
          latest_samples = samples;
        }
      }
      double lo = latest_samples.front(), hi = lo;
      for (double v : latest_samples) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi == lo) hi = lo + 1.0;
      const double width = (hi - lo) / static_cast<double>(p.histogram_bins);
      std::vector<std::size_t> counts(p.histogram_bins, 0);
      for (double v : latest_samples) {
        auto b = static_cast<std::size_t>((v - lo) / width);
        counts[std::min(b, p.histogram_bins - 1)]++;
      }
      for (std::size_t b = 0; b < p.histogram_bins; ++b) {
        const double blo = lo + width * static_cast<double>(b);
        const double bhi = b + 1 == p.histogram_bins ? hi : blo + width;
        result.histogram.push_back(
            {c, tau, blo, bhi, counts[b], static_cast<double>(counts[b]) / (static_cast<double>(p.trials) * width)});
      }
    }
  }
  return result;
}

// ---- Hadamard angle drift -----------------------------------------------------

struct DriftRow {
  double angle_deg = 0.0;
  double squared_angle_deg = 0.0;
  double drift_deg = 0.0;
};

/// Angle of each 2-D unit vector before and after element-wise squaring.
inline std::vector<DriftRow> run_hadamard_drift(std::size_t points) {
  if (points == 0) throw ConfigError("hadamard drift needs at least one angle");
  std::vector<DriftRow> rows;
  for (double a : linspace(0.0, 90.0, points)) {
    const double th = radians(a);
    const std::vector<double> w{std::cos(th), std::sin(th)};
    const auto sq = hadamard_square(w);
    const double b = degrees(std::atan2(sq[1], sq[0]));
    rows.push_back({a, b, b - a});
  }
  return rows;
}

// ---- domination map -------------------------------------------------------------

struct DominationParams {
  std::vector<double> row_a{1.0, 0.0};
  std::vector<double> row_b{std::numbers::sqrt2 / 2.0, std::numbers::sqrt2 / 2.0};
  std::size_t angles = 19;
  double tau = 1.0;
  double dt = 0.05;
  double rate_max = 10.0;
  double threshold = 12.0;
  ResetMode reset = ResetMode::Hard;
  std::size_t steps = 400;
  std::size_t trials = 200;
  double smoothing = 1.0;
  double max_scalar = 2.0;
};

struct DominationCurve {
  std::vector<double> angle_deg;
  std::vector<double> count_a;
  std::vector<double> count_b;
  /// Mean of count_a - count_b over paired trials and its standard error.
  std::vector<double> diff;
  std::vector<double> diff_se;
  std::optional<double> crossover_deg;
};

struct DominationResult {
  double midpoint_deg = 0.0;
  double angle_a_deg = 0.0;
  double angle_b_deg = 0.0;
  double l4_a = 0.0;
  double l4_b = 0.0;
  DominationCurve before;
  DominationCurve after;
  AdjustmentRecord adjustment;

  std::optional<double> displacement_before() const {
    if (!before.crossover_deg) return std::nullopt;
    return *before.crossover_deg - midpoint_deg;
  }
  std::optional<double> displacement_after() const {
    if (!after.crossover_deg) return std::nullopt;
    return *after.crossover_deg - midpoint_deg;
  }
  /// Angle of the row with the smaller L4 norm.
  double lower_l4_angle_deg() const { return l4_a <= l4_b ? angle_a_deg : angle_b_deg; }
};

/// First sign change of diff, located by linear interpolation.
inline std::optional<double> crossover(const std::vector<double>& x, const std::vector<double>& diff) {
  for (std::size_t i = 0; i + 1 < diff.size(); ++i) {
    if (diff[i] == 0.0) return x[i];
    if ((diff[i] > 0.0) != (diff[i + 1] > 0.0)) {
      if (diff[i + 1] == 0.0) return x[i + 1];
      const double f = diff[i] / (diff[i] - diff[i + 1]);
      return x[i] + f * (x[i + 1] - x[i]);
    }
  }
  if (!diff.empty() && diff.back() == 0.0) return x.back();
  return std::nullopt;
}

inline DominationCurve domination_curve(const SpikingNetwork& snn, const std::vector<double>& angles_deg,
                                        std::size_t trials, const RngStream& rng) {
  DominationCurve c;
  c.angle_deg = angles_deg;
  const std::size_t n = angles_deg.size();
  c.count_a.assign(n, 0.0);
  c.count_b.assign(n, 0.0);
  c.diff.assign(n, 0.0);
  c.diff_se.assign(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    SpikingNetwork local = snn;
    const double th = radians(angles_deg[i]);
    const std::vector<double> x{std::cos(th), std::sin(th)};
    const RngStream angle_rng = rng.derive(i);
    std::vector<double> d(trials);
    double sa = 0.0, sb = 0.0;
    for (std::size_t k = 0; k < trials; ++k) {
      RngStream trial_rng = angle_rng.derive(k);
      const auto r = infer(local, x, trial_rng);
      sa += static_cast<double>(r.counts[0]);
      sb += static_cast<double>(r.counts[1]);
      d[k] = static_cast<double>(r.counts[0]) - static_cast<double>(r.counts[1]);
    }
    const auto s = sample_stats(d);
    c.count_a[i] = sa / static_cast<double>(trials);
    c.count_b[i] = sb / static_cast<double>(trials);
    c.diff[i] = s.mean;
    c.diff_se[i] = std::sqrt(s.variance / static_cast<double>(trials));
  });
  c.crossover_deg = crossover(c.angle_deg, c.diff);
  return c;
}

/// Two neurons with equal-L2 rows compete for unit inputs swept between the
/// row directions. Both neurons see the same input spikes in every trial,
/// before and after the first-layer L4 adjustment.
inline DominationResult run_domination_map(const DominationParams& p, const RngStream& rng) {
  if (p.row_a.size() != 2 || p.row_b.size() != 2) throw ConfigError("domination rows must be 2-D");
  for (double v : p.row_a) {
    if (!(v >= 0.0)) throw ConfigError("domination rows must have non-negative components");
  }
  for (double v : p.row_b) {
    if (!(v >= 0.0)) throw ConfigError("domination rows must have non-negative components");
  }
  const double na = l2_norm(p.row_a), nb = l2_norm(p.row_b);
  if (!(na > 0.0) || !(nb > 0.0)) throw ConfigError("domination rows must have non-zero norm");
  if (std::fabs(na - nb) > 1e-9 * std::max(na, nb)) throw ConfigError("domination rows must have equal L2 norms");
  if (p.angles < 2) throw ConfigError("domination map needs at least 2 angles");
  if (p.trials < 2) throw ConfigError("domination map needs at least 2 trials");

  DominationResult out;
  out.angle_a_deg = degrees(std::atan2(p.row_a[1], p.row_a[0]));
  out.angle_b_deg = degrees(std::atan2(p.row_b[1], p.row_b[0]));
  out.midpoint_deg = 0.5 * (out.angle_a_deg + out.angle_b_deg);
  out.l4_a = l4_norm(p.row_a);
  out.l4_b = l4_norm(p.row_b);

  DenseNetwork net;
  net.layers.push_back({WeightMatrix::from_rows({p.row_a, p.row_b}), {0.0, 0.0}});
  const SpikingNetwork snn = build(net, std::vector<double>{p.threshold},
                                   {leak_from_tau(p.tau, p.dt), p.reset, p.dt, p.steps, p.rate_max, std::nullopt});
  const auto angles = linspace(out.angle_a_deg, out.angle_b_deg, p.angles);
  std::vector<std::vector<double>> batch;
  for (double a : angles) batch.push_back({std::cos(radians(a)), std::sin(radians(a))});

  out.before = domination_curve(snn, angles, p.trials, rng.derive(0));
  auto adjusted = apply_l4_adjustment(snn, batch, p.smoothing, p.max_scalar, rng.derive(1));
  out.adjustment = adjusted.record;
  out.after = domination_curve(adjusted.network, angles, p.trials, rng.derive(0));
  return out;
}

// ---- hysteresis -------------------------------------------------------------------

struct HysteresisParams {
  double tau = 1.0;
  double dt = 0.01;
  /// Input magnitude in spikes per unit time along the midpoint direction.
  double input_rate = 1.5;
  double static_threshold = 2.0;
  ResetMode reset = ResetMode::Hard;
  std::size_t angles = 19;
  std::size_t trials = 200;
  std::size_t warmup = 200;
  std::size_t measure = 1000;
  double bracket_lo = 1.0;
  double bracket_hi = 3.0;
  double rate_tolerance = 0.01;
  double width_tolerance = 1e-3;
  std::size_t max_iterations = 40;
};

enum class MatchStatus { RateMatched, BracketCollapsed, MaxIterations, NonBracketing };

inline const char* to_string(MatchStatus s) {
  switch (s) {
    case MatchStatus::RateMatched: return "rate_matched";
    case MatchStatus::BracketCollapsed: return "bracket_collapsed";
    case MatchStatus::MaxIterations: return "max_iterations";
    case MatchStatus::NonBracketing: return "non_bracketing";
  }
  return "unknown";
}

struct HysteresisRow {
  double angle_rad = 0.0;
  double matched_threshold = 0.0;
  double predicted_threshold = 0.0;
  double static_rate = 0.0;
  double matched_rate = 0.0;
  std::size_t iterations = 0;
  MatchStatus status = MatchStatus::RateMatched;
};

namespace detail {

/// Paired input trains for one angle. Trials 2m and 2m+1 share two uniform
/// sequences with the channels swapped, so channels of equal rate deliver
/// identical spike totals over each pair.
inline std::vector<SpikeTrain> paired_inputs(const std::vector<double>& p, std::size_t steps, std::size_t trials,
                                             const RngStream& rng) {
  std::vector<SpikeTrain> trains(trials);
  parallel_for((trials + 1) / 2, [&](std::size_t m) {
    RngStream pair_rng = rng.derive(m);
    SpikeTrain a(steps, 2), b(steps, 2);
    for (std::size_t t = 0; t < steps; ++t) {
      const double u0 = pair_rng.uniform(), u1 = pair_rng.uniform();
      a.set(t, 0, u0 < p[0]);
      a.set(t, 1, u1 < p[1]);
      b.set(t, 0, u1 < p[0]);
      b.set(t, 1, u0 < p[1]);
    }
    trains[2 * m] = std::move(a);
    if (2 * m + 1 < trials) trains[2 * m + 1] = std::move(b);
  });
  return trains;
}

inline double mean_rate(const std::vector<double>& w, const NeuronConfig& cfg, const std::vector<SpikeTrain>& trains,
                        std::size_t warmup) {
  std::vector<double> counts(trains.size(), 0.0);
  parallel_for(trains.size(), [&](std::size_t k) {
    LifLayer layer(WeightMatrix(1, 2, w), cfg);
    std::uint8_t out = 0;
    std::size_t spikes = 0;
    const auto& train = trains[k];
    for (std::size_t t = 0; t < train.steps(); ++t) {
      layer.step(train.row(t), std::span<std::uint8_t>(&out, 1));
      if (t >= warmup) spikes += out;
    }
    counts[k] = static_cast<double>(spikes);
  });
  double total = 0.0;
  for (double c : counts) total += c;
  const double window = static_cast<double>(trains.front().steps() - warmup) * cfg.dt;
  return total / (static_cast<double>(trains.size()) * window);
}

}  // namespace detail

/// A unit weight vector sweeps from <1,0> to <0,1> while a static <1,0> neuron
/// keeps its threshold. Each angle presents the angular midpoint of the two
/// rows and bisects the sweeping neuron's threshold until its firing rate
/// matches the static neuron's.
inline std::vector<HysteresisRow> run_hysteresis(const HysteresisParams& p, const RngStream& rng) {
  if (p.angles < 2) throw ConfigError("hysteresis needs at least 2 angles");
  if (p.trials < 2) throw ConfigError("hysteresis needs at least 2 trials");
  if (p.measure == 0) throw ConfigError("hysteresis needs a non-empty measurement window");
  if (!(p.bracket_lo > 0.0) || !(p.bracket_hi > p.bracket_lo)) throw ConfigError("bisection bracket must satisfy 0 < lo < hi");
  if (!(p.rate_tolerance >= 0.0) || !(p.width_tolerance > 0.0)) throw ConfigError("bisection tolerances must be positive");
  const std::vector<double> static_w{1.0, 0.0};
  const double leak = leak_from_tau(p.tau, p.dt);
  const NeuronConfig static_cfg{leak, p.static_threshold, p.reset, p.dt, std::nullopt};
  const auto angles = linspace(0.0, std::numbers::pi / 2.0, p.angles);
  std::vector<HysteresisRow> rows(angles.size());
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const double phi = angles[i];
    const std::vector<double> sweep_w{std::cos(phi), std::sin(phi)};
    const std::vector<double> rates{p.input_rate * std::cos(phi / 2.0), p.input_rate * std::sin(phi / 2.0)};
    check_step_probabilities(rates, p.dt);
    const std::vector<double> prob{rates[0] * p.dt, rates[1] * p.dt};
    const auto trains = detail::paired_inputs(prob, p.warmup + p.measure, p.trials, rng.derive(i));

    HysteresisRow& row = rows[i];
    row.angle_rad = phi;
    row.static_rate = detail::mean_rate(static_w, static_cfg, trains, p.warmup);

    const auto s_static = steady_state_stats(static_w, rates, p.tau);
    const auto s_sweep = steady_state_stats(sweep_w, rates, p.tau);
    const double z = (p.static_threshold - s_static.mean) / std::sqrt(s_static.variance);
    row.predicted_threshold = s_sweep.mean + z * std::sqrt(s_sweep.variance);

    auto rate_at = [&](double v) {
      return detail::mean_rate(sweep_w, NeuronConfig{leak, v, p.reset, p.dt, std::nullopt}, trains, p.warmup);
    };
    const double tol = p.rate_tolerance * row.static_rate;
    double lo = p.bracket_lo, hi = p.bracket_hi;
    // The sweeping rate falls as its threshold rises.
    if (rate_at(lo) < row.static_rate - tol || rate_at(hi) > row.static_rate + tol) {
      row.status = MatchStatus::NonBracketing;
      row.matched_threshold = std::numeric_limits<double>::quiet_NaN();
      row.matched_rate = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    row.status = MatchStatus::MaxIterations;
    double mid = 0.5 * (lo + hi), rate = 0.0;
    for (std::size_t it = 0; it < p.max_iterations; ++it) {
      mid = 0.5 * (lo + hi);
      rate = rate_at(mid);
      row.iterations = it + 1;
      if (std::fabs(rate - row.static_rate) <= tol) {
        row.status = MatchStatus::RateMatched;
        break;
      }
      if (rate > row.static_rate) {
        lo = mid;
      } else {
        hi = mid;
      }
      if (hi - lo < p.width_tolerance) {
        mid = 0.5 * (lo + hi);
        rate = rate_at(mid);
        row.status = MatchStatus::BracketCollapsed;
        break;
      }
    }
    row.matched_threshold = mid;
    row.matched_rate = rate;
  }
  return rows;
}

// ---- end-to-end comparison ----------------------------------------------------------

struct EndToEndParams {
  SyntheticSpec data{};
  std::vector<std::size_t> hidden{32};
  TrainConfig train{};
  ConversionConfig conversion{};
  std::vector<double> leaks{0.99, 0.95};
  std::vector<ResetMode> resets{ResetMode::Hard};
  std::size_t seeds = 5;
  std::size_t eval_trials = 1;
  /// Pre-trained ANN shared by every replicate; trained per replicate when empty.
  std::optional<DenseNetwork> ann;
};

struct EndToEndCell {
  double leak = 1.0;
  ResetMode reset = ResetMode::Hard;
  std::size_t seed = 0;
  double ann_accuracy = 0.0;
  double baseline_accuracy = 0.0;
  double adjusted_accuracy = 0.0;
  double baseline_factor = 1.0;
  double adjusted_factor = 1.0;
  double adjusted_smoothing = 0.0;
  std::size_t clamp_count = 0;
};

struct EndToEndSummary {
  double leak = 1.0;
  ResetMode reset = ResetMode::Hard;
  std::size_t seeds = 0;
  double baseline_mean = 0.0;
  double baseline_std = 0.0;
  double adjusted_mean = 0.0;
  double adjusted_std = 0.0;
  double ann_mean = 0.0;
};

struct EndToEndResult {
  std::vector<EndToEndCell> cells;
  std::vector<EndToEndSummary> summary;
  std::vector<double> ann_train_accuracy;
};

inline DenseNetwork train_replicate(const EndToEndParams& p, const Dataset& train, const RngStream& rng) {
  std::vector<std::size_t> dims{train.dim()};
  dims.insert(dims.end(), p.hidden.begin(), p.hidden.end());
  dims.push_back(train.num_classes);
  RngStream train_rng = rng;
  auto net = make_network(dims, train_rng);
  return train_sgd(std::move(net), train, p.train, train_rng);
}

/// Baseline and L4-adjusted conversions for every (leak, reset) cell over
/// independent replicates. Replicate s trains its own ANN and converts and
/// evaluates both variants on the same spike streams.
inline EndToEndResult run_end_to_end(const EndToEndParams& p, const DatasetSplit& split, const RngStream& rng) {
  if (p.seeds == 0) throw ConfigError("end-to-end needs at least one seed");
  if (p.leaks.empty() || p.resets.empty()) throw ConfigError("end-to-end grid must not be empty");
  split.train.validate();
  split.test.validate();
  EndToEndResult out;
  std::vector<DenseNetwork> anns;
  for (std::size_t s = 0; s < p.seeds; ++s) {
    anns.push_back(p.ann ? *p.ann : train_replicate(p, split.train, rng.derive(s).derive(0)));
    out.ann_train_accuracy.push_back(accuracy(anns.back(), split.train));
  }
  for (double leak : p.leaks) {
    for (ResetMode reset : p.resets) {
      ConversionConfig cfg = p.conversion;
      cfg.leak = leak;
      cfg.reset = reset;
      EndToEndSummary sum{leak, reset, p.seeds, 0, 0, 0, 0, 0};
      std::vector<double> base_acc, adj_acc;
      for (std::size_t s = 0; s < p.seeds; ++s) {
        const RngStream rep = rng.derive(s);
        const auto base = convert(anns[s], split.train, cfg, Variant::Baseline, rep.derive(1));
        const auto adj = convert(anns[s], split.train, cfg, Variant::L4Adjusted, rep.derive(1));
        EndToEndCell cell;
        cell.leak = leak;
        cell.reset = reset;
        cell.seed = s;
        cell.ann_accuracy = accuracy(anns[s], split.test);
        cell.baseline_accuracy = evaluate(base.network, split.test, p.eval_trials, rep.derive(2)).accuracy;
        cell.adjusted_accuracy = evaluate(adj.network, split.test, p.eval_trials, rep.derive(2)).accuracy;
        cell.baseline_factor = base.report.chosen_factor;
        cell.adjusted_factor = adj.report.chosen_factor;
        cell.adjusted_smoothing = adj.report.chosen_smoothing;
        cell.clamp_count = adj.report.adjustment ? adj.report.adjustment->clamp_count : 0;
        out.cells.push_back(cell);
        base_acc.push_back(cell.baseline_accuracy);
        adj_acc.push_back(cell.adjusted_accuracy);
        sum.ann_mean += cell.ann_accuracy / static_cast<double>(p.seeds);
      }
      const auto bs = sample_stats(base_acc), as = sample_stats(adj_acc);
      sum.baseline_mean = bs.mean;
      sum.baseline_std = std::sqrt(bs.variance);
      sum.adjusted_mean = as.mean;
      sum.adjusted_std = std::sqrt(as.variance);
      out.summary.push_back(sum);
    }
  }
  return out;
}

inline EndToEndResult run_end_to_end(const EndToEndParams& p, const RngStream& rng) {
  return run_end_to_end(p, make_synthetic(p.data), rng);
}

}  // namespace spikeforge
