#pragma once

// Smallest valid partitioning: exact lexicographic dynamic program over
// (segment count, total cost) with per-segment validity constraints, and the
// penalized optimal partitioning baseline.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <string>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "svp/core.hpp"
#include "svp/costs.hpp"
#include "svp/validity.hpp"

namespace svp {

struct Pruning {
  /// Drop starts whose gamma-stable validity has tripped.
  bool sticky_validity = true;
  /// Drop starts dominated within their segment-count group (PELT-like rule).
  bool pelt_rule = false;

  static Pruning none() { return {false, false}; }
  static Pruning all() { return {true, true}; }
};

struct EngineConfig {
  CostModel cost = CostModel::gaussian();
  ValidityTest test;
  std::size_t min_seg_len = 1;
  Pruning pruning;

  /// Throws config_error for combinations whose pruning would not be exact.
  void validate() const {
    if (min_seg_len < 1) throw config_error("min_seg_len must be at least 1");
    if (pruning.pelt_rule) {
      if (!is_superadditive(cost.kind)) {
        throw config_error("pelt_rule needs a superadditive cost (gauss, poisson or mad)");
      }
      // A sticky wrapper is not enough: a sticky-valid segment can have an
      // invalid suffix, e.g. GLR of (5,0,10) is 18.75 but of (0,10) is 25.
      if (!test.inverse_gamma_stable()) {
        throw config_error("pelt_rule needs an inverse-gamma-stable validity test (range)");
      }
      if (min_seg_len > 1) throw config_error("pelt_rule requires min_seg_len = 1");
    }
  }

  /// Every pruning rule that stays exact for this cost, test and min_seg_len.
  Pruning strongest_pruning() const {
    return {true, is_superadditive(cost.kind) && test.inverse_gamma_stable() && min_seg_len == 1};
  }
};

/// An accessible last change index s with its optimal bi-point R_s.
struct Candidate {
  std::size_t s = 0;
  BiPoint r_s;
  std::optional<ValidityState> state;  // created on first evaluation
};

/// Candidates bucketed by segment count K_s, each bucket in increasing s.
class CandidatePool {
 public:
  using Buckets = std::map<std::size_t, std::vector<Candidate>>;

  void add(Candidate c) {
    buckets_[c.r_s.k].push_back(std::move(c));
    ++size_;
  }

  Buckets& buckets() noexcept { return buckets_; }
  const Buckets& buckets() const noexcept { return buckets_; }
  std::size_t size() const noexcept { return size_; }

  template <class Pred>
  std::size_t remove_if(std::vector<Candidate>& bucket, Pred pred) {
    const auto it = std::remove_if(bucket.begin(), bucket.end(), pred);
    const auto removed = static_cast<std::size_t>(bucket.end() - it);
    bucket.erase(it, bucket.end());
    size_ -= removed;
    return removed;
  }

  void drop_empty_buckets() {
    std::erase_if(buckets_, [](const auto& kv) { return kv.second.empty(); });
  }

 private:
  Buckets buckets_;
  std::size_t size_ = 0;
};

struct StepResult {
  BiPoint r = BiPoint::infinite();
  std::size_t s = 0;
  /// Largest segment count whose bucket was examined; nullopt if none was.
  std::optional<std::size_t> last_visited_k;
};

/// One DP step at time t: scans buckets in increasing K_s and returns the
/// Q-minimum over the first bucket holding a valid candidate. Ties go to the
/// latest s.
///
/// `segment_cost_if_valid(candidate, t)` returns C(y_{s..t}) when y_{s..t} is
/// usable as a last segment and nullopt otherwise.
template <class Evaluate>
StepResult dp_step(std::size_t t, CandidatePool& pool, Evaluate&& segment_cost_if_valid) {
  StepResult result;
  for (auto& [k, bucket] : pool.buckets()) {
    if (bucket.empty()) continue;
    result.last_visited_k = k;
    bool found = false;
    for (Candidate& c : bucket) {
      const std::optional<double> segment_cost = segment_cost_if_valid(c, t);
      if (!segment_cost) continue;
      const BiPoint r = c.r_s.extended(*segment_cost);
      if (!found || r.q <= result.r.q) {
        result.r = r;
        result.s = c.s;
        found = true;
      }
    }
    if (found) return result;
  }
  return result;
}

struct PruneCounts {
  std::size_t sticky = 0;
  std::size_t pelt = 0;
};

/// Removes tripped candidates from the buckets examined at this step and, with
/// the PELT rule, candidates with K_s = K_t and Q_s + C(y_{s..t}) > Q_t.
template <class Cost>
PruneCounts prune_candidates(CandidatePool& pool, std::size_t t, const BiPoint& r_t,
                             Cost&& segment_cost, const Pruning& pruning,
                             std::optional<std::size_t> last_visited_k) {
  PruneCounts counts;
  if (pruning.sticky_validity && last_visited_k) {
    for (auto& [k, bucket] : pool.buckets()) {
      if (k > *last_visited_k) break;
      counts.sticky += pool.remove_if(
          bucket, [](const Candidate& c) { return c.state && c.state->tripped(); });
    }
  }
  if (pruning.pelt_rule && r_t.is_finite()) {
    auto it = pool.buckets().find(r_t.k);
    if (it != pool.buckets().end()) {
      counts.pelt += pool.remove_if(it->second, [&](const Candidate& c) {
        return c.r_s.q + segment_cost(c.s, t) > r_t.q;
      });
    }
  }
  if (counts.sticky + counts.pelt > 0) pool.drop_empty_buckets();
  return counts;
}

struct RunStats {
  std::size_t validity_updates = 0;
  std::size_t cost_evaluations = 0;
  std::size_t max_candidates = 0;
  std::size_t pruned_sticky = 0;
  std::size_t pruned_pelt = 0;
};

struct SvpResult {
  DpTable table;
  Segmentation segmentation;
  RunStats stats;
};

/// Called with (s, t, f(y_{s..t})) each time the engine evaluates a validity statistic.
using EvaluationObserver = std::function<void(std::size_t, std::size_t, double)>;

/// Solves min over valid partitions of (K, sum of segment costs) in lexicographic order.
inline SvpResult svp_run(const TimeSeries& series, const EngineConfig& config,
                         const EvaluationObserver& observer = {}) {
  config.validate();
  const std::size_t n = series.size();
  const std::span<const double> values = series.values();

  SvpResult out;
  out.table = DpTable(n);
  RunStats& stats = out.stats;

  auto segment_cost = [&](std::size_t s, std::size_t t) {
    ++stats.cost_evaluations;
    return cost(series, s, t, config.cost);
  };

  auto evaluate = [&](Candidate& c, std::size_t t) -> std::optional<double> {
    if (t - c.s < config.min_seg_len) return std::nullopt;
    if (!c.state) c.state.emplace(config.test, c.s);
    ValidityState& state = *c.state;
    if (state.tripped()) return std::nullopt;
    const std::size_t covered = c.s + state.length();
    if (covered < t) {
      state.extend(values.subspan(covered, t - covered));
      stats.validity_updates += t - covered;
    }
    if (observer) observer(c.s, t, state.statistic());
    if (!state.is_valid()) return std::nullopt;
    return segment_cost(c.s, t);
  };

  CandidatePool pool;
  pool.add(Candidate{0, out.table.r[0], std::nullopt});

  for (std::size_t t = 1; t <= n; ++t) {
    const StepResult step = dp_step(t, pool, evaluate);
    out.table.r[t] = step.r;
    out.table.s[t] = step.r.is_finite() ? step.s : 0;

    const PruneCounts pruned =
        prune_candidates(pool, t, step.r, segment_cost, config.pruning, step.last_visited_k);
    stats.pruned_sticky += pruned.sticky;
    stats.pruned_pelt += pruned.pelt;

    if (step.r.is_finite()) pool.add(Candidate{t, step.r, std::nullopt});
    stats.max_candidates = std::max(stats.max_candidates, pool.size());
  }

  if (!out.table.r[n].is_finite()) {
    throw infeasible("no valid partition of the series satisfies min_seg_len = " +
                     std::to_string(config.min_seg_len));
  }
  out.segmentation = backtrack(out.table);
  return out;
}

// ---------------------------------------------------------------------------
// Optimal partitioning baseline

struct OpResult {
  double penalized_cost = 0.0;
  Segmentation segmentation;
  std::size_t cost_evaluations = 0;
};

/// Minimizes sum_k {C(segment_k) + penalty}. With `prune`, applies the PELT
/// inequality F(s) + C(y_{s..t}) > F(t); the result is identical to the
/// unpruned recursion.
inline OpResult op_run(const TimeSeries& series, const CostModel& cost_model, double penalty,
                       bool prune) {
  if (prune && !is_superadditive(cost_model.kind)) {
    throw config_error("PELT pruning needs a superadditive cost");
  }
  const std::size_t n = series.size();
  std::vector<double> best(n + 1, 0.0);
  std::vector<std::size_t> last(n + 1, 0);
  std::vector<std::size_t> candidates{0};
  std::vector<double> seg_costs;
  OpResult out;

  for (std::size_t t = 1; t <= n; ++t) {
    seg_costs.resize(candidates.size());
    double f_t = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const std::size_t s = candidates[i];
      seg_costs[i] = cost(series, s, t, cost_model);
      const double total = best[s] + seg_costs[i] + penalty;
      if (total <= f_t) {
        f_t = total;
        arg = s;
      }
    }
    out.cost_evaluations += candidates.size();
    best[t] = f_t;
    last[t] = arg;
    if (prune) {
      std::size_t kept = 0;
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (best[candidates[i]] + seg_costs[i] <= f_t) candidates[kept++] = candidates[i];
      }
      candidates.resize(kept);
    }
    candidates.push_back(t);
  }

  std::vector<std::size_t> boundaries{n};
  for (std::size_t t = n; t > 0; t = last[t]) boundaries.push_back(last[t]);
  std::reverse(boundaries.begin(), boundaries.end());
  out.penalized_cost = best[n];
  out.segmentation = Segmentation(std::move(boundaries));
  return out;
}

inline OpResult op_pelt_run(const TimeSeries& series, const CostModel& cost_model, double penalty) {
  return op_run(series, cost_model, penalty, true);
}

}  // namespace svp
