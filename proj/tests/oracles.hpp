#pragma once

// Test-only reference implementations. Everything here is written from the
// definitions with direct loops and deliberately shares no code path with
// the library beyond the public types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "svp/core.hpp"
#include "svp/costs.hpp"
#include "svp/validity.hpp"

namespace oracle {

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double gaussian_cost(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return 0.5 * s;
}

inline double poisson_cost(std::span<const double> v) {
  const double m = mean(v);
  if (m == 0.0) return 0.0;
  return static_cast<double>(v.size()) * m * (1.0 - std::log(m));
}

inline double sorted_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double mad_cost(std::span<const double> v) {
  const double med = sorted_median({v.begin(), v.end()});
  double s = 0.0;
  for (double x : v) s += std::abs(x - med);
  return s;
}

inline double segment_cost(std::span<const double> v, svp::CostKind kind) {
  switch (kind) {
    case svp::CostKind::gaussian: return gaussian_cost(v);
    case svp::CostKind::poisson: return poisson_cost(v);
    case svp::CostKind::mad: return mad_cost(v);
    case svp::CostKind::quantile: break;
  }
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  return s.back() - s.front();
}

/// GLR by explicit means on both sides of every split.
inline double glr(std::span<const double> v) {
  double best = 0.0;
  const double full = gaussian_cost(v);
  for (std::size_t u = 1; u < v.size(); ++u) {
    best = std::max(best, full - gaussian_cost(v.first(u)) - gaussian_cost(v.subspan(u)));
  }
  return best;
}

/// Wilcoxon scan by summing every pair at every split.
inline double wilcoxon(std::span<const double> v) {
  double best = 0.0;
  for (std::size_t u = 1; u < v.size(); ++u) {
    double w = 0.0;
    for (std::size_t i = 0; i < u; ++i) {
      for (std::size_t j = u; j < v.size(); ++j) w += (v[i] <= v[j] ? 1.0 : 0.0) - 0.5;
    }
    best = std::max(best, std::abs(w));
  }
  return best;
}

/// Mood scan via the 2x2 closed form l (ad - bc)^2 / (row1 row2 col1 col2).
inline double mood(std::span<const double> v) {
  const std::size_t len = v.size();
  if (len < 2) return 0.0;
  const double med = sorted_median({v.begin(), v.end()});
  double best = 0.0;
  for (std::size_t u = 1; u < len; ++u) {
    double a = 0, b = 0, c = 0, d = 0;
    for (std::size_t i = 0; i < len; ++i) {
      const bool low = v[i] <= med;
      if (i < u) (low ? a : b) += 1;
      else (low ? c : d) += 1;
    }
    const double col_low = a + c, col_high = b + d;
    if (col_low == 0 || col_high == 0) continue;
    const double m = static_cast<double>(len) * (a * d - b * c) * (a * d - b * c) /
                     (static_cast<double>(u) * static_cast<double>(len - u) * col_low * col_high);
    best = std::max(best, m);
  }
  return best;
}

inline double range(std::span<const double> v) {
  return *std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end());
}

inline double statistic(std::span<const double> v, svp::TestKind kind) {
  switch (kind) {
    case svp::TestKind::glr_gaussian_naive:
    case svp::TestKind::glr_gaussian_focus: return glr(v);
    case svp::TestKind::wilcoxon: return wilcoxon(v);
    case svp::TestKind::mood: return mood(v);
    case svp::TestKind::range: return range(v);
  }
  return 0.0;
}

inline bool valid(std::span<const double> v, const svp::ValidityTest& test) {
  if (!test.sticky) return statistic(v, test.kind) <= test.threshold(v.size());
  for (std::size_t len = 1; len <= v.size(); ++len) {
    if (statistic(v.first(len), test.kind) > test.threshold(len)) return false;
  }
  return true;
}

/// Lexicographic minimum over all 2^(n-1) partitions with per-segment validity.
inline svp::BiPoint exhaustive_svp(std::span<const double> y, svp::CostKind cost,
                                   const svp::ValidityTest& test) {
  const std::size_t n = y.size();
  std::vector<std::vector<char>> ok(n + 1, std::vector<char>(n + 1, 0));
  std::vector<std::vector<double>> c(n + 1, std::vector<double>(n + 1, 0.0));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b <= n; ++b) {
      const auto seg = y.subspan(a, b - a);
      ok[a][b] = valid(seg, test) ? 1 : 0;
      c[a][b] = segment_cost(seg, cost);
    }
  }
  svp::BiPoint best = svp::BiPoint::infinite();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << (n - 1)); ++mask) {
    std::size_t prev = 0, k = 0;
    double q = 0.0;
    bool feasible = true;
    for (std::size_t pos = 1; pos <= n && feasible; ++pos) {
      if (pos == n || (mask >> (pos - 1)) & 1) {
        feasible = ok[prev][pos] != 0;
        q += c[prev][pos];
        ++k;
        prev = pos;
      }
    }
    if (!feasible) continue;
    const svp::BiPoint p{k, q};
    if (p < best) best = p;
  }
  return best;
}

/// Minimum of sum {C + penalty} over all partitions; returns (value, K).
inline std::pair<double, std::size_t> exhaustive_op(std::span<const double> y, double penalty) {
  const std::size_t n = y.size();
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_k = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << (n - 1)); ++mask) {
    std::size_t prev = 0, k = 0;
    double q = 0.0;
    for (std::size_t pos = 1; pos <= n; ++pos) {
      if (pos == n || (mask >> (pos - 1)) & 1) {
        q += gaussian_cost(y.subspan(prev, pos - prev)) + penalty;
        ++k;
        prev = pos;
      }
    }
    if (q < best) {
      best = q;
      best_k = k;
    }
  }
  return {best, best_k};
}

/// The literal double loop: every start s < t, validity recomputed from
/// scratch, update on R <= R* so the latest s wins ties.
inline svp::DpTable naive_double_loop(const svp::TimeSeries& series, svp::CostKind cost,
                                      const svp::ValidityTest& test, std::size_t min_seg_len = 1) {
  const std::size_t n = series.size();
  const auto y = series.values();
  svp::DpTable table(n);
  for (std::size_t t = 1; t <= n; ++t) {
    svp::BiPoint best = svp::BiPoint::infinite();
    std::size_t arg = 0;
    for (std::size_t s = 0; s < t; ++s) {
      if (t - s < min_seg_len || !table.r[s].is_finite()) continue;
      const auto seg = y.subspan(s, t - s);
      if (!valid(seg, test)) continue;
      const svp::BiPoint r = table.r[s].extended(segment_cost(seg, cost));
      if (r <= best) {
        best = r;
        arg = s;
      }
    }
    table.r[t] = best;
    table.s[t] = best.is_finite() ? arg : 0;
  }
  return table;
}

inline std::vector<double> gaussian_series(std::size_t n, std::uint64_t seed, double sigma = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, sigma);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

/// Piecewise-constant means plus Gaussian noise with a random number of changes.
inline std::vector<double> mixed_series(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_int_distribution<int> changes(0, 4);
  std::uniform_real_distribution<double> jump(-3.0, 3.0);
  const int k = changes(rng);
  std::vector<double> v(n);
  double level = 0.0;
  std::size_t seg_len = n / static_cast<std::size_t>(k + 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && seg_len > 0 && i % seg_len == 0) level += jump(rng);
    v[i] = level + noise(rng);
  }
  return v;
}

inline bool rel_close(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace oracle
