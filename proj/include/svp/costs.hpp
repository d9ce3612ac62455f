#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "svp/core.hpp"

namespace svp {

enum class CostKind { gaussian, poisson, mad, quantile };

struct CostModel {
  CostKind kind = CostKind::gaussian;
  double x = 0.0;  // quantile fraction, only read for CostKind::quantile

  static CostModel gaussian() { return {CostKind::gaussian, 0.0}; }
  static CostModel poisson() { return {CostKind::poisson, 0.0}; }
  static CostModel mad() { return {CostKind::mad, 0.0}; }
  static CostModel quantile(double x) {
    if (!(x >= 0.0 && x < 0.5)) {
      throw std::domain_error("quantile fraction must lie in [0, 0.5)");
    }
    return {CostKind::quantile, x};
  }
};

inline std::string_view to_string(CostKind kind) {
  switch (kind) {
    case CostKind::gaussian: return "gauss";
    case CostKind::poisson: return "poisson";
    case CostKind::mad: return "mad";
    case CostKind::quantile: return "quantile";
  }
  return "?";
}

/// Whether C(y_{s..u}) >= C(y_{s..t}) + C(y_{t..u}) holds for every split.
///
/// Costs that are a minimum over a shared location parameter have this
/// property; the quantile spread does not (see the counterexample in the
/// cost tests). The PELT-style pruning rules depend on it.
constexpr bool is_superadditive(CostKind kind) noexcept {
  return kind == CostKind::gaussian || kind == CostKind::poisson || kind == CostKind::mad;
}

namespace detail {

// Average of the two central order statistics for even lengths. Reorders `v`.
inline double median_inplace(std::vector<double>& v) {
  const std::size_t m = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + m, v.end());
  const double upper = v[m];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + m);
  return 0.5 * (lower + upper);
}

// Lower empirical quantile: order statistic ceil(p * len), 1-based, clamped to [1, len].
inline std::size_t lower_quantile_rank(double p, std::size_t len) {
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(len)));
  return std::clamp<std::size_t>(rank, 1, len);
}

}  // namespace detail

inline double median(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  return detail::median_inplace(v);
}

/// Gaussian cost 1/2 * sum (y_i - mean)^2 from cumulative sums.
inline double gaussian_cost(const TimeSeries& series, std::size_t a, std::size_t b) {
  const double len = static_cast<double>(b - a);
  const double s = series.sum(a, b);
  return std::max(0.0, 0.5 * (series.sum_sq(a, b) - s * s / len));
}

inline double poisson_cost(const TimeSeries& series, std::size_t a, std::size_t b) {
  if (series.has_negative(a, b)) {
    throw std::domain_error("poisson cost requires nonnegative values");
  }
  const double len = static_cast<double>(b - a);
  const double mean = series.sum(a, b) / len;
  if (mean <= 0.0) return 0.0;
  return len * mean * (1.0 - std::log(mean));
}

inline double mad_cost(std::span<const double> segment) {
  std::vector<double> v(segment.begin(), segment.end());
  const double med = detail::median_inplace(v);
  double total = 0.0;
  for (double y : segment) total += std::abs(y - med);
  return total;
}

inline double quantile_cost(std::span<const double> segment, double x) {
  std::vector<double> v(segment.begin(), segment.end());
  const std::size_t len = v.size();
  const std::size_t lo = detail::lower_quantile_rank(x, len) - 1;
  const std::size_t hi = detail::lower_quantile_rank(1.0 - x, len) - 1;
  std::nth_element(v.begin(), v.begin() + hi, v.end());
  const double q_hi = v[hi];
  std::nth_element(v.begin(), v.begin() + lo, v.begin() + hi + 1);
  return q_hi - v[lo];
}

/// Cost of segment y_{a..b}.
inline double cost(const TimeSeries& series, std::size_t a, std::size_t b, const CostModel& model) {
  series.check_range(a, b);
  switch (model.kind) {
    case CostKind::gaussian: return gaussian_cost(series, a, b);
    case CostKind::poisson: return poisson_cost(series, a, b);
    case CostKind::mad: return mad_cost(series.segment(a, b));
    case CostKind::quantile: return quantile_cost(series.segment(a, b), model.x);
  }
  throw std::logic_error("unknown cost kind");
}

}  // namespace svp
