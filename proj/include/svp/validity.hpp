#pragma once

// Validity tests f(y_{s..t}) <= gamma: full-scan statistics, incremental
// per-start detectors and threshold calibration helpers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

#include "svp/core.hpp"
#include "svp/costs.hpp"

namespace svp {

// ---------------------------------------------------------------------------
// Chi-square tail and thresholds

namespace detail {

// Regularized incomplete gamma: series for P(a, x), Lentz continued fraction for Q(a, x).
inline double gamma_p_series(double a, double x) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int i = 0; i < 10000; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

/// Upper regularized incomplete gamma Q(a, x).
inline double gamma_q(double a, double x) {
  if (x <= 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_fraction(a, x);
}

/// P(X > x) for X ~ chi-square with `df` degrees of freedom.
inline double chi_square_upper_tail(double x, double df) { return gamma_q(0.5 * df, 0.5 * x); }

/// x such that P(X > x) = upper_prob for X ~ chi-square(df).
///
/// Bisection on the monotone upper tail; the bracket is relative so the
/// result is accurate to ~1e-13 relative for tail probabilities down to 1e-300.
inline double chi_square_upper_quantile(double upper_prob, double df) {
  if (!(upper_prob > 0.0 && upper_prob < 1.0) || !(df > 0.0)) {
    throw std::domain_error("chi-square quantile needs 0 < p < 1 and df > 0");
  }
  double lo = 0.0;
  double hi = std::max(1.0, df);
  while (chi_square_upper_tail(hi, df) > upper_prob) hi *= 2.0;
  for (int i = 0; i < 400 && hi - lo > 1e-14 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (chi_square_upper_tail(mid, df) > upper_prob) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Dunn-Sidak per-split level for a family-wise level `alpha` over `num_splits` tests.
inline double sidak_split_level(std::size_t num_splits, double alpha) {
  if (num_splits < 1 || !(alpha > 0.0 && alpha < 1.0)) {
    throw std::domain_error("sidak correction needs num_splits >= 1 and 0 < alpha < 1");
  }
  return -std::expm1(std::log1p(-alpha) / static_cast<double>(num_splits));
}

/// Chi-square(1) critical value after a Dunn-Sidak correction over `num_splits` splits.
inline double sidak_threshold(std::size_t num_splits, double alpha) {
  return chi_square_upper_quantile(sidak_split_level(num_splits, alpha), 1.0);
}

/// Wilcoxon scan calibration 1.5 * sqrt(len^3 / 12) for a typical segment length.
inline double wilcoxon_threshold(double typical_len) {
  if (!(typical_len >= 0.0)) {
    throw std::domain_error("typical segment length must be nonnegative");
  }
  return 1.5 * std::sqrt(typical_len * typical_len * typical_len / 12.0);
}

// ---------------------------------------------------------------------------
// Full-scan statistics

/// max over tau in (a, b) of C(a..b) - C(a..tau) - C(tau..b) under the Gaussian cost.
/// Zero when the segment has no admissible split (b - a < 2).
inline double glr_scan_naive(const TimeSeries& series, std::size_t a, std::size_t b) {
  series.check_range(a, b);
  const double full = gaussian_cost(series, a, b);
  double best = 0.0;
  for (std::size_t tau = a + 1; tau < b; ++tau) {
    best = std::max(best, full - gaussian_cost(series, a, tau) - gaussian_cost(series, tau, b));
  }
  return best;
}

/// Doubled centered Wilcoxon scores 2 W_u for u = 1 .. len-1 (entry u-1).
///
/// Integer valued: each pair contributes +1 when y_i <= y_j and -1 otherwise.
/// O(len log len) by walking the split from left to right with a Fenwick tree
/// over value ranks.
inline std::vector<std::int64_t> wilcoxon_split_scores(std::span<const double> window) {
  const std::size_t len = window.size();
  if (len < 2) return {};
  std::vector<double> sorted(window.begin(), window.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<std::int64_t> fenwick(sorted.size() + 1, 0);
  auto add = [&](std::size_t rank) {
    for (std::size_t i = rank; i < fenwick.size(); i += i & (~i + 1)) ++fenwick[i];
  };
  auto prefix = [&](std::size_t rank) {
    std::int64_t total = 0;
    for (std::size_t i = rank; i > 0; i -= i & (~i + 1)) total += fenwick[i];
    return total;
  };
  // Global count of values >= y, from the full sorted window.
  std::vector<double> all(window.begin(), window.end());
  std::sort(all.begin(), all.end());

  std::vector<std::int64_t> scores;
  scores.reserve(len - 1);
  std::int64_t w2 = 0;
  for (std::size_t u = 1; u < len; ++u) {
    const double y = window[u - 1];
    const auto rank = static_cast<std::size_t>(
        std::lower_bound(sorted.begin(), sorted.end(), y) - sorted.begin() + 1);
    const auto left = static_cast<std::int64_t>(u - 1);
    const auto right = static_cast<std::int64_t>(len - u);
    const std::int64_t left_le = prefix(rank);
    const std::int64_t left_ge = left - prefix(rank - 1);
    const auto all_ge = static_cast<std::int64_t>(
        all.end() - std::lower_bound(all.begin(), all.end(), y));
    const std::int64_t right_ge = all_ge - left_ge - 1;
    // y moves from the right part to the left part.
    w2 += (2 * right_ge - right) - (2 * left_le - left);
    scores.push_back(w2);
    add(rank);
  }
  return scores;
}

/// max_u |W_u| over the window.
inline double wilcoxon_scan(std::span<const double> window) {
  std::int64_t best = 0;
  for (std::int64_t w2 : wilcoxon_split_scores(window)) best = std::max(best, w2 < 0 ? -w2 : w2);
  return 0.5 * static_cast<double>(best);
}

namespace detail {

// Pearson chi-square of the 2x2 split-by-median table; cells with zero expectation are skipped.
inline double mood_cells(double left, double right, double left_low, double total_low) {
  const double total = left + right;
  const double total_high = total - total_low;
  const double cells[4][2] = {
      {left_low, left * total_low / total},
      {left - left_low, left * total_high / total},
      {total_low - left_low, right * total_low / total},
      {right - (total_low - left_low), right * total_high / total},
  };
  double stat = 0.0;
  for (const auto& [observed, expected] : cells) {
    if (expected > 0.0) stat += (observed - expected) * (observed - expected) / expected;
  }
  return stat;
}

// Mood scan given the pooled median.
inline double mood_scan_with_median(std::span<const double> window, double pooled_median) {
  const std::size_t len = window.size();
  std::size_t total_low = 0;
  for (double y : window) total_low += (y <= pooled_median) ? 1 : 0;
  double best = 0.0;
  std::size_t left_low = 0;
  for (std::size_t u = 1; u < len; ++u) {
    left_low += (window[u - 1] <= pooled_median) ? 1 : 0;
    best = std::max(best, mood_cells(static_cast<double>(u), static_cast<double>(len - u),
                                     static_cast<double>(left_low),
                                     static_cast<double>(total_low)));
  }
  return best;
}

}  // namespace detail

/// max over splits u of Mood's median-test chi-square with the pooled median.
inline double mood_scan(std::span<const double> window) {
  if (window.size() < 2) return 0.0;
  return detail::mood_scan_with_median(window, median(window));
}

inline double range_statistic(std::span<const double> window) {
  if (window.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(window.begin(), window.end());
  return *hi - *lo;
}

// ---------------------------------------------------------------------------
// Test configuration

enum class TestKind { glr_gaussian_naive, glr_gaussian_focus, wilcoxon, mood, range };

inline std::string_view to_string(TestKind kind) {
  switch (kind) {
    case TestKind::glr_gaussian_naive: return "glr-naive";
    case TestKind::glr_gaussian_focus: return "glr";
    case TestKind::wilcoxon: return "wilcoxon";
    case TestKind::mood: return "mood";
    case TestKind::range: return "range";
  }
  return "?";
}

/// Validity test f <= gamma. With `sticky`, a start whose statistic has once
/// exceeded the threshold stays invalid for every later end point.
///
/// `length_thresholds`, when set, replaces the constant gamma by a per-length
/// threshold (entry len); used by the Sidak-calibrated Mood test.
struct ValidityTest {
  TestKind kind = TestKind::glr_gaussian_focus;
  double gamma = 0.0;
  bool sticky = false;
  std::shared_ptr<const std::vector<double>> length_thresholds;
  double sidak_alpha = 0.0;

  static ValidityTest make(TestKind kind, double gamma, bool sticky = false) {
    return {kind, gamma, sticky, nullptr, 0.0};
  }

  /// Mood test with threshold sidak_threshold(len - 1, alpha) for a segment of length len.
  static ValidityTest mood_sidak(double alpha, std::size_t max_len, bool sticky = false) {
    auto table = std::make_shared<std::vector<double>>(max_len + 1, 0.0);
    for (std::size_t len = 2; len <= max_len; ++len) (*table)[len] = sidak_threshold(len - 1, alpha);
    return {TestKind::mood, std::numeric_limits<double>::quiet_NaN(), sticky, std::move(table), alpha};
  }

  double threshold(std::size_t len) const {
    if (!length_thresholds) return gamma;
    if (len < length_thresholds->size()) return (*length_thresholds)[len];
    return len < 2 ? 0.0 : sidak_threshold(len - 1, sidak_alpha);
  }

  bool gamma_stable() const noexcept { return sticky || kind == TestKind::range; }
  bool inverse_gamma_stable() const noexcept { return kind == TestKind::range; }
};

// ---------------------------------------------------------------------------
// Incremental detectors

namespace detail {

struct RangeDetector {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  double push(double y) {
    lo = std::min(lo, y);
    hi = std::max(hi, y);
    return hi - lo;
  }
  std::size_t records() const noexcept { return 2; }
};

// Exact sequential max-GLR for a Gaussian mean change with both means unknown.
//
// With S_j the partial sums of the segment, the statistic at split j is
//   (len * S_j - j * S_len)^2 / (2 len j (len - j)).
// Its maximiser is always a vertex of the upper or lower convex hull of the
// points (j, S_j), so only hull vertices are kept as change candidates.
class FocusDetector {
 public:
  FocusDetector() {
    upper_.push_back({0, 0.0});
    lower_.push_back({0, 0.0});
  }

  double push(double y) {
    ++len_;
    total_ += y;
    const Point p{len_, total_};
    append(upper_, p, [](double cross) { return cross >= 0.0; });
    append(lower_, p, [](double cross) { return cross <= 0.0; });
    double best = 0.0;
    best = std::max(best, scan(upper_));
    best = std::max(best, scan(lower_));
    return best;
  }

  std::size_t records() const noexcept { return upper_.size() + lower_.size(); }

 private:
  struct Point {
    std::int64_t j;
    double s;
  };

  template <class Pop>
  static void append(std::vector<Point>& hull, const Point& p, Pop pop) {
    while (hull.size() >= 2) {
      const Point& o = hull[hull.size() - 2];
      const Point& a = hull.back();
      const double cross = static_cast<double>(a.j - o.j) * (p.s - o.s) -
                           (a.s - o.s) * static_cast<double>(p.j - o.j);
      if (!pop(cross)) break;
      hull.pop_back();
    }
    hull.push_back(p);
  }

  double scan(const std::vector<Point>& hull) const {
    const auto len = static_cast<double>(len_);
    double best = 0.0;
    for (std::size_t i = 1; i + 1 < hull.size(); ++i) {
      const auto j = static_cast<double>(hull[i].j);
      const double h = len * hull[i].s - j * total_;
      best = std::max(best, h * h / (2.0 * len * j * (len - j)));
    }
    return best;
  }

  std::int64_t len_ = 0;
  double total_ = 0.0;
  std::vector<Point> upper_;
  std::vector<Point> lower_;
};

// Full O(len) rescan of the Gaussian GLR using the segment's own partial sums.
class NaiveGlrDetector {
 public:
  double push(double y) {
    sums_.push_back(sums_.back() + y);
    sums_sq_.push_back(sums_sq_.back() + y * y);
    return rescan();
  }
  void append(double y) {
    sums_.push_back(sums_.back() + y);
    sums_sq_.push_back(sums_sq_.back() + y * y);
  }
  double rescan() const {
    const std::size_t len = sums_.size() - 1;
    auto c = [&](std::size_t a, std::size_t b) {
      const double s = sums_[b] - sums_[a];
      return std::max(0.0, 0.5 * (sums_sq_[b] - sums_sq_[a] - s * s / static_cast<double>(b - a)));
    };
    const double full = c(0, len);
    double best = 0.0;
    for (std::size_t tau = 1; tau < len; ++tau) best = std::max(best, full - c(0, tau) - c(tau, len));
    return best;
  }
  std::size_t records() const noexcept { return sums_.size(); }

 private:
  std::vector<double> sums_{0.0};
  std::vector<double> sums_sq_{0.0};
};

// Keeps every doubled score 2 W_u; a new point on the right adds
// sum_{i<=u} (2 I{y_i <= y_new} - 1) to each W_u in one prefix pass.
class WilcoxonDetector {
 public:
  double push(double y) {
    std::int64_t acc = 0;
    std::int64_t best = 0;
    const std::size_t old_len = values_.size();
    for (std::size_t i = 0; i < old_len; ++i) {
      acc += values_[i] <= y ? 1 : -1;
      std::int64_t& w = (i + 1 < old_len) ? scores_[i] : scores_.emplace_back(0);
      w += acc;
      best = std::max(best, w < 0 ? -w : w);
    }
    values_.push_back(y);
    return 0.5 * static_cast<double>(best);
  }
  void append(double y) { values_.push_back(y); }
  double rescan() {
    scores_ = wilcoxon_split_scores(values_);
    std::int64_t best = 0;
    for (std::int64_t w : scores_) best = std::max(best, w < 0 ? -w : w);
    return 0.5 * static_cast<double>(best);
  }
  std::size_t records() const noexcept { return values_.size(); }

 private:
  std::vector<double> values_;
  std::vector<std::int64_t> scores_;
};

class MoodDetector {
 public:
  double push(double y) {
    append(y);
    return rescan();
  }
  void append(double y) {
    values_.push_back(y);
    sorted_.insert(std::upper_bound(sorted_.begin(), sorted_.end(), y), y);
  }
  double rescan() const {
    const std::size_t len = sorted_.size();
    if (len < 2) return 0.0;
    const double med = len % 2 == 1 ? sorted_[len / 2]
                                     : 0.5 * (sorted_[len / 2 - 1] + sorted_[len / 2]);
    return mood_scan_with_median(values_, med);
  }
  std::size_t records() const noexcept { return values_.size(); }

 private:
  std::vector<double> values_;
  std::vector<double> sorted_;
};

}  // namespace detail

/// Incremental state of the validity test for segments starting at `start`.
class ValidityState {
 public:
  ValidityState(const ValidityTest& test, std::size_t start) : test_(test), start_(start) {
    switch (test.kind) {
      case TestKind::range: detector_.emplace<detail::RangeDetector>(); break;
      case TestKind::glr_gaussian_focus: detector_.emplace<detail::FocusDetector>(); break;
      case TestKind::glr_gaussian_naive: detector_.emplace<detail::NaiveGlrDetector>(); break;
      case TestKind::wilcoxon: detector_.emplace<detail::WilcoxonDetector>(); break;
      case TestKind::mood: detector_.emplace<detail::MoodDetector>(); break;
    }
  }

  /// Extends the segment by one value and returns the updated statistic.
  double push(double y) {
    statistic_ = std::visit([y](auto& d) { return d.push(y); }, detector_);
    ++length_;
    if (test_.gamma_stable() && statistic_ > test_.threshold(length_)) tripped_ = true;
    return statistic_;
  }

  /// Extends by several values. Only the final statistic is computed when
  /// intermediate ones cannot matter (non-sticky tests with a full rescan).
  void extend(std::span<const double> ys) {
    if (ys.empty()) return;
    const bool bulk = !test_.gamma_stable() && ys.size() > 1 &&
                      (test_.kind == TestKind::mood || test_.kind == TestKind::glr_gaussian_naive ||
                       (test_.kind == TestKind::wilcoxon && ys.size() > 8));
    if (!bulk) {
      for (double y : ys) push(y);
      return;
    }
    std::visit(
        [&](auto& d) {
          using D = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<D, detail::MoodDetector> ||
                        std::is_same_v<D, detail::NaiveGlrDetector> ||
                        std::is_same_v<D, detail::WilcoxonDetector>) {
            for (double y : ys) d.append(y);
            statistic_ = d.rescan();
          }
        },
        detector_);
    length_ += ys.size();
  }

  std::size_t start() const noexcept { return start_; }
  std::size_t length() const noexcept { return length_; }
  double statistic() const noexcept { return statistic_; }
  bool tripped() const noexcept { return tripped_; }
  bool is_valid() const { return !tripped_ && statistic_ <= test_.threshold(length_); }
  const ValidityTest& test() const noexcept { return test_; }

  /// Number of retained detector records (hull vertices for FOCuS).
  std::size_t detector_records() const {
    return std::visit([](const auto& d) { return d.records(); }, detector_);
  }

 private:
  ValidityTest test_;
  std::size_t start_ = 0;
  std::size_t length_ = 0;
  double statistic_ = 0.0;
  bool tripped_ = false;
  std::variant<detail::RangeDetector, detail::FocusDetector, detail::NaiveGlrDetector,
               detail::WilcoxonDetector, detail::MoodDetector>
      detector_;
};

/// Naive full-scan statistic of the given test kind on y_{a..b}.
inline double validity_statistic(const TimeSeries& series, std::size_t a, std::size_t b,
                                 TestKind kind) {
  series.check_range(a, b);
  switch (kind) {
    case TestKind::glr_gaussian_naive:
    case TestKind::glr_gaussian_focus: return glr_scan_naive(series, a, b);
    case TestKind::wilcoxon: return wilcoxon_scan(series.segment(a, b));
    case TestKind::mood: return mood_scan(series.segment(a, b));
    case TestKind::range: return range_statistic(series.segment(a, b));
  }
  throw std::logic_error("unknown test kind");
}

/// Whether y_{a..b} passes the test, recomputed from scratch. For gamma-stable
/// tests every prefix y_{a..b'} must pass as well.
inline bool segment_is_valid(const TimeSeries& series, std::size_t a, std::size_t b,
                             const ValidityTest& test) {
  if (!test.gamma_stable() || test.kind == TestKind::range) {
    return validity_statistic(series, a, b, test.kind) <= test.threshold(b - a);
  }
  for (std::size_t end = a + 1; end <= b; ++end) {
    if (validity_statistic(series, a, end, test.kind) > test.threshold(end - a)) return false;
  }
  return true;
}

}  // namespace svp
