#pragma once

// Domain types shared by every part of the library: the time series with its
// cumulative statistics, bi-points ordered lexicographically, segmentations
// and the dynamic-programming table.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace svp {

/// Raised when a half-open index range (a, b] is empty or out of bounds.
struct invalid_range : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// Raised when backtracking meets an s-link that does not strictly decrease.
struct corrupt_table : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when no admissible partition exists for some prefix.
struct infeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised for configurations the engine refuses to run.
struct config_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Univariate series y_1..y_n with prefix sums of y and y^2.
///
/// Index conventions follow the half-open segment notation y_{a..b} =
/// (y_{a+1}, ..., y_b); `values()[i]` holds y_{i+1}.
class TimeSeries {
 public:
  explicit TimeSeries(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) {
      throw std::invalid_argument("time series must contain at least one value");
    }
    cumsum_.assign(values_.size() + 1, 0.0);
    cumsum_sq_.assign(values_.size() + 1, 0.0);
    negatives_.assign(values_.size() + 1, 0);
    for (std::size_t i = 0; i < values_.size(); ++i) {
      const double y = values_[i];
      if (!std::isfinite(y)) {
        throw std::invalid_argument("time series values must be finite (index " +
                                    std::to_string(i) + ")");
      }
      cumsum_[i + 1] = cumsum_[i] + y;
      cumsum_sq_[i + 1] = cumsum_sq_[i] + y * y;
      negatives_[i + 1] = negatives_[i] + (y < 0.0 ? 1 : 0);
    }
  }

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> cumsum() const noexcept { return cumsum_; }
  std::span<const double> cumsum_sq() const noexcept { return cumsum_sq_; }

  /// Values of segment y_{a..b}.
  std::span<const double> segment(std::size_t a, std::size_t b) const {
    check_range(a, b);
    return std::span<const double>(values_).subspan(a, b - a);
  }

  double sum(std::size_t a, std::size_t b) const { return cumsum_[b] - cumsum_[a]; }
  double sum_sq(std::size_t a, std::size_t b) const { return cumsum_sq_[b] - cumsum_sq_[a]; }
  bool has_negative(std::size_t a, std::size_t b) const { return negatives_[b] != negatives_[a]; }

  void check_range(std::size_t a, std::size_t b) const {
    if (a >= b || b > values_.size()) {
      throw invalid_range("invalid segment range (" + std::to_string(a) + ", " +
                          std::to_string(b) + "] for series of length " +
                          std::to_string(values_.size()));
    }
  }

 private:
  std::vector<double> values_;
  std::vector<double> cumsum_;
  std::vector<double> cumsum_sq_;
  std::vector<std::size_t> negatives_;
};

/// (segment count, total cost), compared lexicographically.
struct BiPoint {
  std::size_t k = 0;
  double q = 0.0;

  static constexpr BiPoint infinite() noexcept {
    return {std::numeric_limits<std::size_t>::max(), std::numeric_limits<double>::infinity()};
  }

  constexpr bool is_finite() const noexcept {
    return k != std::numeric_limits<std::size_t>::max();
  }

  /// Extension by one segment of cost `segment_cost`; the infinite element absorbs.
  constexpr BiPoint extended(double segment_cost) const noexcept {
    if (!is_finite()) return infinite();
    return {k + 1, q + segment_cost};
  }

  friend constexpr bool operator==(const BiPoint&, const BiPoint&) = default;
  friend constexpr std::partial_ordering operator<=>(const BiPoint& a, const BiPoint& b) {
    if (auto c = a.k <=> b.k; c != 0) return c;
    return a.q <=> b.q;
  }
};

/// Lexicographic minimum; the infinite element for an empty range.
template <class Range>
BiPoint lex_min(const Range& candidates) {
  BiPoint best = BiPoint::infinite();
  for (const BiPoint& p : candidates) {
    if (p < best) best = p;
  }
  return best;
}

inline BiPoint lex_min(std::initializer_list<BiPoint> candidates) {
  return lex_min<std::initializer_list<BiPoint>>(candidates);
}

/// Boundaries 0 = tau_0 < tau_1 < ... < tau_K = n.
class Segmentation {
 public:
  Segmentation() = default;

  explicit Segmentation(std::vector<std::size_t> boundaries, std::size_t min_seg_len = 1)
      : boundaries_(std::move(boundaries)) {
    if (boundaries_.size() < 2 || boundaries_.front() != 0) {
      throw std::invalid_argument("segmentation must start at 0 and contain at least one segment");
    }
    for (std::size_t i = 1; i < boundaries_.size(); ++i) {
      if (boundaries_[i] <= boundaries_[i - 1] ||
          boundaries_[i] - boundaries_[i - 1] < min_seg_len) {
        throw std::invalid_argument("segmentation boundaries must increase by at least min_seg_len");
      }
    }
  }

  std::span<const std::size_t> boundaries() const noexcept { return boundaries_; }
  std::size_t segment_count() const noexcept {
    return boundaries_.empty() ? 0 : boundaries_.size() - 1;
  }
  std::size_t length() const noexcept { return boundaries_.empty() ? 0 : boundaries_.back(); }

  /// Interior boundaries, i.e. the detected change points.
  std::vector<std::size_t> change_points() const {
    if (boundaries_.size() <= 2) return {};
    return {boundaries_.begin() + 1, boundaries_.end() - 1};
  }

  std::pair<std::size_t, std::size_t> segment(std::size_t k) const {
    return {boundaries_.at(k), boundaries_.at(k + 1)};
  }

  friend bool operator==(const Segmentation&, const Segmentation&) = default;

 private:
  std::vector<std::size_t> boundaries_;
};

/// Per-index optimal bi-point R_t and last change index s_t.
struct DpTable {
  std::vector<BiPoint> r;
  std::vector<std::size_t> s;

  DpTable() = default;
  explicit DpTable(std::size_t n) : r(n + 1, BiPoint::infinite()), s(n + 1, 0) { r[0] = {0, 0.0}; }

  std::size_t length() const noexcept { return r.empty() ? 0 : r.size() - 1; }
};

/// Follows s-links from n back to 0.
inline Segmentation backtrack(const DpTable& table) {
  const std::size_t n = table.length();
  if (table.s.size() != table.r.size() || n == 0) {
    throw corrupt_table("DP table is empty or has mismatched columns");
  }
  if (!table.r[n].is_finite()) {
    throw infeasible("no admissible partition of the full series");
  }
  std::vector<std::size_t> boundaries{n};
  std::size_t t = n;
  while (t > 0) {
    const std::size_t prev = table.s[t];
    if (prev >= t) {
      throw corrupt_table("s-link at index " + std::to_string(t) + " does not decrease");
    }
    t = prev;
    boundaries.push_back(t);
  }
  std::reverse(boundaries.begin(), boundaries.end());
  if (boundaries.size() - 1 != table.r[n].k) {
    throw corrupt_table("backtracked segment count disagrees with R_n");
  }
  return Segmentation(std::move(boundaries));
}

}  // namespace svp
