#pragma once

// Simulation scenarios, tolerance-based change-point matching and the study
// runners behind `svp bench`.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "svp/core.hpp"
#include "svp/costs.hpp"
#include "svp/engine.hpp"
#include "svp/validity.hpp"

namespace svp::bench {

// ---------------------------------------------------------------------------
// Counter-based random numbers. Every draw is a pure function of
// (seed, observation index, slot), so series are reproducible bit for bit
// regardless of platform RNGs or generation order.

inline std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Uniform draw in the open interval (0, 1).
inline double uniform01(std::uint64_t seed, std::uint64_t index, std::uint64_t slot) noexcept {
  const std::uint64_t bits = mix64(mix64(seed) ^ mix64(index * 64 + slot));
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Box-Muller standard normal from two uniforms of the given slot pair.
inline double standard_normal(std::uint64_t seed, std::uint64_t index, std::uint64_t pair) noexcept {
  const double u1 = uniform01(seed, index, 2 * pair);
  const double u2 = uniform01(seed, index, 2 * pair + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Student-t with integer `df`: Z / sqrt(chi2(df) / df).
inline double student_t(std::uint64_t seed, std::uint64_t index, int df) noexcept {
  const double z = standard_normal(seed, index, 0);
  double chi2 = 0.0;
  for (int m = 1; m <= df; ++m) {
    const double g = standard_normal(seed, index, static_cast<std::uint64_t>(m));
    chi2 += g * g;
  }
  return z / std::sqrt(chi2 / df);
}

// ---------------------------------------------------------------------------
// Scenarios

enum class ScenarioKind { none, up, step, updown };
enum class NoiseKind { gaussian, student_t };

inline std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::none: return "none";
    case ScenarioKind::up: return "up";
    case ScenarioKind::step: return "step";
    case ScenarioKind::updown: return "updown";
  }
  return "?";
}

inline ScenarioKind parse_scenario(std::string_view name) {
  if (name == "none") return ScenarioKind::none;
  if (name == "up") return ScenarioKind::up;
  if (name == "step") return ScenarioKind::step;
  if (name == "updown") return ScenarioKind::updown;
  throw std::invalid_argument("unknown scenario '" + std::string(name) + "'");
}

/// The step and updown shapes are reconstructions, not the published figures.
inline bool is_reconstructed(ScenarioKind kind) {
  return kind == ScenarioKind::step || kind == ScenarioKind::updown;
}

struct Noise {
  NoiseKind kind = NoiseKind::gaussian;
  double sigma = 1.0;
  int df = 2;  // student_t only

  std::string label() const {
    return kind == NoiseKind::gaussian ? "gauss" : "t" + std::to_string(df);
  }
};

/// Default change positions: quarters for up/updown, the midpoint for step.
inline std::vector<std::size_t> default_changes(ScenarioKind kind, std::size_t n) {
  switch (kind) {
    case ScenarioKind::none: return {};
    case ScenarioKind::step: return {n / 2};
    case ScenarioKind::up:
    case ScenarioKind::updown: return {n / 4, n / 2, 3 * n / 4};
  }
  return {};
}

struct Scenario {
  ScenarioKind kind = ScenarioKind::none;
  std::size_t n = 1000;
  double jump = 0.0;
  std::vector<std::size_t> true_changes;
  Noise noise;
  std::uint64_t seed = 1;

  static Scenario make(ScenarioKind kind, std::size_t n, double jump, Noise noise,
                       std::uint64_t seed) {
    return {kind, n, jump, default_changes(kind, n), noise, seed};
  }

  void validate() const {
    if (n < 1) throw std::invalid_argument("scenario length must be positive");
    if (!std::isfinite(jump)) throw std::invalid_argument("jump must be finite");
    if (!(noise.sigma >= 0.0) || !std::isfinite(noise.sigma)) {
      throw std::invalid_argument("sigma must be finite and nonnegative");
    }
    if (noise.kind == NoiseKind::student_t && noise.df < 1) {
      throw std::invalid_argument("student-t degrees of freedom must be a positive integer");
    }
    if (kind == ScenarioKind::none && !true_changes.empty()) {
      throw std::invalid_argument("the none scenario has no change points");
    }
    if (kind != ScenarioKind::none && true_changes.empty()) {
      throw std::invalid_argument("scenario needs at least one change point");
    }
    std::size_t prev = 0;
    for (std::size_t c : true_changes) {
      if (c <= prev || c >= n) {
        throw std::invalid_argument("change points must be strictly increasing inside (0, n)");
      }
      prev = c;
    }
  }

  std::size_t segment_count() const { return true_changes.size() + 1; }
};

/// Noise-free piecewise-constant mean.
inline std::vector<double> mean_signal(const Scenario& sc) {
  std::vector<double> mean(sc.n, 0.0);
  std::size_t seg = 0;
  for (std::size_t i = 0; i < sc.n; ++i) {
    while (seg < sc.true_changes.size() && i >= sc.true_changes[seg]) ++seg;
    switch (sc.kind) {
      case ScenarioKind::none: mean[i] = 0.0; break;
      case ScenarioKind::up: mean[i] = sc.jump * static_cast<double>(seg); break;
      case ScenarioKind::step:
      case ScenarioKind::updown: mean[i] = (seg % 2 == 1) ? sc.jump : 0.0; break;
    }
  }
  return mean;
}

inline std::vector<double> generate_values(const Scenario& sc) {
  sc.validate();
  std::vector<double> y = mean_signal(sc);
  if (sc.noise.sigma == 0.0) return y;
  for (std::size_t i = 0; i < sc.n; ++i) {
    const double e = sc.noise.kind == NoiseKind::gaussian
                         ? standard_normal(sc.seed, i, 0)
                         : student_t(sc.seed, i, sc.noise.df);
    y[i] += sc.noise.sigma * e;
  }
  return y;
}

inline TimeSeries generate(const Scenario& sc) { return TimeSeries(generate_values(sc)); }

// ---------------------------------------------------------------------------
// Metrics

struct MetricsReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<std::size_t> detected;
  std::vector<std::pair<std::size_t, std::size_t>> matched_pairs;  // (true, detected)
  double runtime = 0.0;

  std::size_t false_positives() const { return detected.size() - matched_pairs.size(); }
};

/// One-to-one matching within +-tolerance, closest pairs first (ties to the
/// earlier true change, then the earlier detection).
///
/// Empty detections give precision 1, an empty truth gives recall 1.
inline MetricsReport match_and_score(std::span<const std::size_t> true_changes,
                                     std::span<const std::size_t> detected, double tolerance) {
  MetricsReport report;
  std::vector<std::size_t> truth(true_changes.begin(), true_changes.end());
  report.detected.assign(detected.begin(), detected.end());
  std::sort(truth.begin(), truth.end());
  std::sort(report.detected.begin(), report.detected.end());

  struct Pair {
    double dist;
    std::size_t ti;
    std::size_t di;
  };
  std::vector<Pair> pairs;
  for (std::size_t ti = 0; ti < truth.size(); ++ti) {
    for (std::size_t di = 0; di < report.detected.size(); ++di) {
      const double d = std::abs(static_cast<double>(truth[ti]) -
                                static_cast<double>(report.detected[di]));
      if (d <= tolerance) pairs.push_back({d, ti, di});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(a.dist, a.ti, a.di) < std::tie(b.dist, b.ti, b.di);
  });
  std::vector<bool> t_used(truth.size(), false);
  std::vector<bool> d_used(report.detected.size(), false);
  for (const Pair& p : pairs) {
    if (t_used[p.ti] || d_used[p.di]) continue;
    t_used[p.ti] = d_used[p.di] = true;
    report.matched_pairs.emplace_back(truth[p.ti], report.detected[p.di]);
  }
  std::sort(report.matched_pairs.begin(), report.matched_pairs.end());

  const auto matches = static_cast<double>(report.matched_pairs.size());
  report.precision = report.detected.empty() ? 1.0 : matches / static_cast<double>(report.detected.size());
  report.recall = truth.empty() ? 1.0 : matches / static_cast<double>(truth.size());
  const double denom = report.precision + report.recall;
  report.f1 = denom > 0.0 ? 2.0 * report.precision * report.recall / denom : 0.0;
  return report;
}

// ---------------------------------------------------------------------------
// Methods

enum class Method { svp_glr, svp_glr_bic15, svp_glr_plain, pelt, op, svp_wilcoxon, svp_mood };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::svp_glr: return "svp-glr";
    case Method::svp_glr_bic15: return "svp-glr-bic15";
    case Method::svp_glr_plain: return "svp-glr-plain";
    case Method::pelt: return "pelt";
    case Method::op: return "op";
    case Method::svp_wilcoxon: return "svp-wilcoxon";
    case Method::svp_mood: return "svp-mood";
  }
  return "?";
}

inline Method parse_method(std::string_view name) {
  for (Method m : {Method::svp_glr, Method::svp_glr_bic15, Method::svp_glr_plain, Method::pelt,
                   Method::op, Method::svp_wilcoxon, Method::svp_mood}) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

inline double bic_penalty(std::size_t n) { return 2.0 * std::log(static_cast<double>(n)); }

/// Engine configuration used by the study for an SVP method.
///
/// `typical_len` feeds the Wilcoxon calibration (n / number of true segments).
inline EngineConfig method_config(Method m, std::size_t n, double typical_len) {
  EngineConfig cfg;
  cfg.cost = CostModel::gaussian();
  const double log_n = std::log(static_cast<double>(n));
  switch (m) {
    case Method::svp_glr:
      cfg.test = ValidityTest::make(TestKind::glr_gaussian_focus, 2.0 * log_n, true);
      break;
    case Method::svp_glr_bic15:
      cfg.test = ValidityTest::make(TestKind::glr_gaussian_focus, 1.5 * log_n, true);
      break;
    case Method::svp_glr_plain:
      cfg.test = ValidityTest::make(TestKind::glr_gaussian_focus, 2.0 * log_n, false);
      break;
    case Method::svp_wilcoxon:
      cfg.cost = CostModel::mad();
      cfg.test = ValidityTest::make(TestKind::wilcoxon, wilcoxon_threshold(typical_len), false);
      break;
    case Method::svp_mood:
      cfg.cost = CostModel::mad();
      cfg.test = ValidityTest::mood_sidak(0.01, n, false);
      break;
    case Method::pelt:
    case Method::op: throw std::invalid_argument("not an SVP method");
  }
  return cfg;
}

inline Segmentation run_method(Method m, const TimeSeries& series, double typical_len) {
  const std::size_t n = series.size();
  switch (m) {
    case Method::pelt: return op_pelt_run(series, CostModel::gaussian(), bic_penalty(n)).segmentation;
    case Method::op: return op_run(series, CostModel::gaussian(), bic_penalty(n), false).segmentation;
    default: return svp_run(series, method_config(m, n, typical_len)).segmentation;
  }
}

// ---------------------------------------------------------------------------
// Studies

struct StudyConfig {
  std::vector<ScenarioKind> scenarios{ScenarioKind::up};
  std::vector<double> jumps{1.0};
  std::vector<Method> methods{Method::svp_glr, Method::pelt};
  std::size_t replicates = 20;
  std::size_t n = 1000;
  Noise noise;
  std::uint64_t base_seed = 1;
  double tolerance = 2.5;
  unsigned threads = 1;
};

struct StudyRow {
  std::string scenario;
  std::string method;
  double jump = 0.0;
  std::size_t replicate = 0;
  std::size_t n = 0;
  MetricsReport metrics;
  std::size_t k_detected = 0;
  bool ok = true;
  std::string error;
};

/// Runs `task(i)` for i in [0, count) on up to `threads` workers.
template <class Task>
void parallel_for(std::size_t count, unsigned threads, Task&& task) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) task(i);
    });
  }
  for (auto& th : pool) th.join();
}

/// Grid of scenarios x jumps x replicates x methods. Replicate r uses seed
/// base_seed + r for every cell, so methods see identical data.
inline std::vector<StudyRow> run_study(const StudyConfig& cfg) {
  struct Cell {
    ScenarioKind scenario;
    double jump;
    std::size_t replicate;
  };
  std::vector<Cell> cells;
  for (ScenarioKind sc : cfg.scenarios) {
    const std::vector<double> jumps = sc == ScenarioKind::none ? std::vector<double>{0.0} : cfg.jumps;
    for (double jump : jumps) {
      for (std::size_t r = 0; r < cfg.replicates; ++r) cells.push_back({sc, jump, r});
    }
  }
  std::vector<StudyRow> rows(cells.size() * cfg.methods.size());
  parallel_for(cells.size(), cfg.threads, [&](std::size_t ci) {
    const Cell& cell = cells[ci];
    const Scenario sc =
        Scenario::make(cell.scenario, cfg.n, cell.jump, cfg.noise, cfg.base_seed + cell.replicate);
    std::optional<TimeSeries> series;
    std::string gen_error;
    try {
      series.emplace(generate(sc));
    } catch (const std::exception& e) {
      gen_error = e.what();
    }
    const double typical_len = static_cast<double>(sc.n) / static_cast<double>(sc.segment_count());
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
      StudyRow& row = rows[ci * cfg.methods.size() + mi];
      row.scenario = std::string(to_string(cell.scenario));
      row.method = std::string(to_string(cfg.methods[mi]));
      row.jump = cell.jump;
      row.replicate = cell.replicate;
      row.n = cfg.n;
      if (!series) {
        row.ok = false;
        row.error = gen_error;
        continue;
      }
      try {
        const auto start = std::chrono::steady_clock::now();
        const Segmentation seg = run_method(cfg.methods[mi], *series, typical_len);
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        const std::vector<std::size_t> detected = seg.change_points();
        row.metrics = match_and_score(sc.true_changes, detected, cfg.tolerance);
        row.metrics.runtime = elapsed.count();
        row.k_detected = seg.segment_count();
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
    }
  });
  return rows;
}

struct CellSummary {
  std::string scenario;
  std::string method;
  double jump = 0.0;
  std::size_t replicates = 0;
  std::size_t failures = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double false_positives = 0.0;
  double k_detected = 0.0;
  double runtime = 0.0;
};

/// Means per (scenario, method, jump) over successful replicates, in first-seen order.
inline std::vector<CellSummary> summarize(std::span<const StudyRow> rows) {
  std::vector<CellSummary> out;
  for (const StudyRow& row : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const CellSummary& c) {
      return c.scenario == row.scenario && c.method == row.method && c.jump == row.jump;
    });
    if (it == out.end()) {
      out.push_back({row.scenario, row.method, row.jump});
      it = out.end() - 1;
    }
    if (!row.ok) {
      ++it->failures;
      continue;
    }
    ++it->replicates;
    it->precision += row.metrics.precision;
    it->recall += row.metrics.recall;
    it->f1 += row.metrics.f1;
    it->false_positives += static_cast<double>(row.metrics.false_positives());
    it->k_detected += static_cast<double>(row.k_detected);
    it->runtime += row.metrics.runtime;
  }
  for (CellSummary& c : out) {
    if (c.replicates == 0) continue;
    const auto r = static_cast<double>(c.replicates);
    c.precision /= r;
    c.recall /= r;
    c.f1 /= r;
    c.false_positives /= r;
    c.k_detected /= r;
    c.runtime /= r;
  }
  return out;
}

/// Least-squares slope of log(seconds) against log(n).
inline double loglog_slope(std::span<const double> lengths, std::span<const double> seconds) {
  if (lengths.size() != seconds.size() || lengths.size() < 2) {
    throw std::invalid_argument("slope fit needs at least two (n, time) points");
  }
  const auto m = static_cast<double>(lengths.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const double x = std::log(lengths[i]);
    const double y = std::log(seconds[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

struct RuntimeConfig {
  std::vector<std::size_t> lengths{1000, 2000, 4000, 8000};
  std::vector<Method> methods{Method::svp_glr, Method::op};
  std::size_t replicates = 3;
  std::uint64_t base_seed = 1;
  double min_seconds = 0.05;  // repeat short runs until at least this long
};

struct RuntimeRow {
  std::string method;
  std::size_t n = 0;
  std::size_t replicate = 0;
  double seconds = 0.0;  // mean wall time of one run
  std::size_t k_detected = 0;
};

struct RuntimeSummary {
  std::string method;
  std::vector<double> lengths;
  std::vector<double> median_seconds;
  double slope = 0.0;
};

/// No-change Gaussian series of increasing length, timed per method.
inline std::vector<RuntimeRow> run_runtime_study(const RuntimeConfig& cfg) {
  std::vector<RuntimeRow> rows;
  for (std::size_t n : cfg.lengths) {
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
      const TimeSeries series =
          generate(Scenario::make(ScenarioKind::none, n, 0.0, Noise{}, cfg.base_seed + r));
      for (Method m : cfg.methods) {
        std::size_t runs = 0;
        std::size_t k = 0;
        const auto start = std::chrono::steady_clock::now();
        double elapsed = 0.0;
        do {
          k = run_method(m, series, static_cast<double>(n)).segment_count();
          ++runs;
          elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        } while (elapsed < cfg.min_seconds);
        rows.push_back({std::string(to_string(m)), n, r, elapsed / static_cast<double>(runs), k});
      }
    }
  }
  return rows;
}

inline std::vector<RuntimeSummary> summarize_runtime(std::span<const RuntimeRow> rows) {
  std::vector<RuntimeSummary> out;
  for (const RuntimeRow& row : rows) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const RuntimeSummary& s) { return s.method == row.method; });
    if (it == out.end()) {
      out.emplace_back();
      out.back().method = row.method;
      it = out.end() - 1;
    }
    if (std::find(it->lengths.begin(), it->lengths.end(), static_cast<double>(row.n)) ==
        it->lengths.end()) {
      it->lengths.push_back(static_cast<double>(row.n));
    }
  }
  for (RuntimeSummary& s : out) {
    for (double n : s.lengths) {
      std::vector<double> times;
      for (const RuntimeRow& row : rows) {
        if (row.method == s.method && static_cast<double>(row.n) == n) times.push_back(row.seconds);
      }
      std::sort(times.begin(), times.end());
      s.median_seconds.push_back(times[times.size() / 2]);
    }
    s.slope = s.lengths.size() >= 2 ? loglog_slope(s.lengths, s.median_seconds) : 0.0;
  }
  return out;
}

}  // namespace svp::bench
