#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "svp/engine.hpp"

namespace {

using svp::BiPoint;
using svp::Candidate;
using svp::CandidatePool;
using svp::CostKind;
using svp::CostModel;
using svp::EngineConfig;
using svp::Pruning;
using svp::TestKind;
using svp::TimeSeries;
using svp::ValidityTest;

EngineConfig make_config(CostKind cost, ValidityTest test, Pruning pruning = {}) {
  EngineConfig cfg;
  cfg.cost = CostModel{cost, 0.0};
  cfg.test = std::move(test);
  cfg.pruning = pruning;
  return cfg;
}

std::vector<std::size_t> bounds(const svp::Segmentation& seg) {
  return {seg.boundaries().begin(), seg.boundaries().end()};
}

TEST(SvpRun, ToySeriesRange) {
  const std::vector<double> y{0, 0, 10, 10};
  const ValidityTest test = ValidityTest::make(TestKind::range, 1.0);
  const auto result = svp::svp_run(TimeSeries(y), make_config(CostKind::gaussian, test));
  EXPECT_EQ(result.table.r[4], (BiPoint{2, 0.0}));
  EXPECT_EQ(bounds(result.segmentation), (std::vector<std::size_t>{0, 2, 4}));
  EXPECT_EQ(oracle::exhaustive_svp(y, CostKind::gaussian, test), (BiPoint{2, 0.0}));
}

TEST(SvpRun, ConstantSeriesIsOneSegment) {
  const std::vector<double> y(37, 4.25);
  for (TestKind kind : {TestKind::range, TestKind::glr_gaussian_focus, TestKind::glr_gaussian_naive,
                        TestKind::wilcoxon, TestKind::mood}) {
    // the tied Wilcoxon scan on constant data is l^2/8, so it needs a larger gamma
    const double gamma = kind == TestKind::wilcoxon ? 200.0 : 0.0;
    const auto result = svp::svp_run(TimeSeries(y),
                                     make_config(CostKind::gaussian, ValidityTest::make(kind, gamma)));
    EXPECT_EQ(result.table.r[37], (BiPoint{1, 0.0})) << svp::to_string(kind);
    EXPECT_EQ(bounds(result.segmentation), (std::vector<std::size_t>{0, 37}));
  }
}

TEST(SvpRun, GlrStickyMatchesEnumeration) {
  const double gamma = 2.0 * std::log(10.0);
  const ValidityTest test = ValidityTest::make(TestKind::glr_gaussian_focus, gamma, true);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::vector<double> y = oracle::gaussian_series(10, 1000 + seed);
    const auto result = svp::svp_run(TimeSeries(y), make_config(CostKind::gaussian, test));
    const BiPoint want = oracle::exhaustive_svp(y, CostKind::gaussian, test);
    EXPECT_EQ(result.table.r[10].k, want.k) << seed;
    EXPECT_TRUE(oracle::rel_close(result.table.r[10].q, want.q, 1e-9)) << seed;
  }
}

TEST(SvpRun, ScaledStepsMatchEnumeration) {
  // Larger signal so that the optimum has several segments.
  for (TestKind kind : {TestKind::glr_gaussian_focus, TestKind::mood, TestKind::wilcoxon}) {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
      std::vector<double> y = oracle::mixed_series(11, 70 + seed);
      for (double& v : y) v *= 3.0;
      const double gamma = kind == TestKind::wilcoxon ? 3.0 : (kind == TestKind::mood ? 2.5 : 4.0);
      const ValidityTest test = ValidityTest::make(kind, gamma, false);
      for (CostKind cost : {CostKind::gaussian, CostKind::mad}) {
        const auto result = svp::svp_run(TimeSeries(y), make_config(cost, test));
        const BiPoint want = oracle::exhaustive_svp(y, cost, test);
        EXPECT_EQ(result.table.r[11].k, want.k);
        EXPECT_TRUE(oracle::rel_close(result.table.r[11].q, want.q, 1e-9));
      }
    }
  }
}

TEST(DpStep, LowerSegmentCountWins) {
  CandidatePool pool;
  pool.add(Candidate{0, BiPoint{0, 0.0}, std::nullopt});
  pool.add(Candidate{1, BiPoint{1, 0.0}, std::nullopt});
  const auto step = svp::dp_step(2, pool, [](Candidate& c, std::size_t) -> std::optional<double> {
    return c.s == 0 ? 100.0 : 0.0;
  });
  EXPECT_EQ(step.r, (BiPoint{1, 100.0}));
  EXPECT_EQ(step.s, 0u);
  EXPECT_EQ(step.last_visited_k, std::optional<std::size_t>{0});
}

TEST(DpStep, CostMinimumWithinGroup) {
  CandidatePool pool;
  pool.add(Candidate{0, BiPoint{1, 0.0}, std::nullopt});
  pool.add(Candidate{1, BiPoint{1, 2.0}, std::nullopt});
  pool.add(Candidate{2, BiPoint{1, 1.0}, std::nullopt});
  const auto step = svp::dp_step(3, pool, [](Candidate& c, std::size_t) -> std::optional<double> {
    if (c.s == 0) return std::nullopt;  // invalid
    return c.s == 1 ? 5.0 : 2.0;        // totals 7 and 3
  });
  EXPECT_EQ(step.r, (BiPoint{2, 3.0}));
  EXPECT_EQ(step.s, 2u);
}

TEST(DpStep, TiesGoToLatestStart) {
  CandidatePool pool;
  pool.add(Candidate{0, BiPoint{1, 1.0}, std::nullopt});
  pool.add(Candidate{1, BiPoint{1, 1.0}, std::nullopt});
  const auto step =
      svp::dp_step(2, pool, [](Candidate&, std::size_t) -> std::optional<double> { return 0.0; });
  EXPECT_EQ(step.s, 1u);
}

TEST(DpStep, EmptyValidSetIsInfinite) {
  CandidatePool pool;
  pool.add(Candidate{0, BiPoint{0, 0.0}, std::nullopt});
  const auto step = svp::dp_step(
      1, pool, [](Candidate&, std::size_t) -> std::optional<double> { return std::nullopt; });
  EXPECT_FALSE(step.r.is_finite());
}

TEST(PruneCandidates, StickyRemovesTripped) {
  const ValidityTest test = ValidityTest::make(TestKind::range, 1.0, true);
  CandidatePool pool;
  Candidate tripped{0, BiPoint{0, 0.0}, svp::ValidityState(test, 0)};
  tripped.state->push(0.0);
  tripped.state->push(5.0);
  ASSERT_TRUE(tripped.state->tripped());
  pool.add(std::move(tripped));
  pool.add(Candidate{1, BiPoint{1, 0.0}, std::nullopt});
  auto no_cost = [](std::size_t, std::size_t) { return 0.0; };
  const auto counts = svp::prune_candidates(pool, 2, BiPoint{1, 0.0}, no_cost, Pruning{true, false},
                                            std::size_t{0});
  EXPECT_EQ(counts.sticky, 1u);
  EXPECT_EQ(pool.size(), 1u);
}

TEST(PruneCandidates, PeltRuleInequality) {
  CandidatePool pool;
  pool.add(Candidate{3, BiPoint{2, 10.0}, std::nullopt});  // 10 + 5 > 12: pruned
  pool.add(Candidate{4, BiPoint{2, 6.0}, std::nullopt});   // 6 + 5 <= 12: kept
  pool.add(Candidate{1, BiPoint{1, 0.0}, std::nullopt});   // other group untouched
  auto five = [](std::size_t, std::size_t) { return 5.0; };
  const auto counts =
      svp::prune_candidates(pool, 6, BiPoint{2, 12.0}, five, Pruning{false, true}, std::nullopt);
  EXPECT_EQ(counts.pelt, 1u);
  EXPECT_EQ(pool.size(), 2u);
  EXPECT_EQ(pool.buckets().at(2).front().s, 4u);
}

void expect_same_table(const svp::DpTable& got, const svp::DpTable& want, const char* label) {
  ASSERT_EQ(got.r.size(), want.r.size());
  for (std::size_t t = 0; t < got.r.size(); ++t) {
    ASSERT_EQ(got.r[t].k, want.r[t].k) << label << " t=" << t;
    if (want.r[t].is_finite()) {
      ASSERT_TRUE(oracle::rel_close(got.r[t].q, want.r[t].q, 1e-9)) << label << " t=" << t;
      ASSERT_EQ(got.s[t], want.s[t]) << label << " t=" << t;
    }
  }
}

TEST(SvpRun, MatchesNaiveDoubleLoop) {
  struct Case {
    TestKind kind;
    double gamma;
    bool sticky;
  };
  const std::vector<Case> cases{{TestKind::range, 2.5, false},
                                {TestKind::glr_gaussian_focus, 3.0, true},
                                {TestKind::glr_gaussian_focus, 3.0, false},
                                {TestKind::glr_gaussian_naive, 3.0, true},
                                {TestKind::wilcoxon, 40.0, false},
                                {TestKind::wilcoxon, 40.0, true},
                                {TestKind::mood, 6.0, false},
                                {TestKind::mood, 6.0, true}};
  for (const Case& c : cases) {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      const TimeSeries ts(oracle::mixed_series(60, 5000 + seed));
      const ValidityTest test = ValidityTest::make(c.kind, c.gamma, c.sticky);
      for (CostKind cost : {CostKind::gaussian, CostKind::mad}) {
        const auto got = svp::svp_run(ts, make_config(cost, test));
        const auto want = oracle::naive_double_loop(ts, cost, test);
        expect_same_table(got.table, want, svp::to_string(c.kind).data());
      }
    }
  }
}

TEST(SvpRun, MoodSidakMatchesNaiveDoubleLoop) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    std::vector<double> y = oracle::mixed_series(80, 600 + seed);
    for (double& v : y) v *= 2.0;
    const TimeSeries ts(y);
    const ValidityTest test = ValidityTest::mood_sidak(0.05, y.size());
    const auto got = svp::svp_run(ts, make_config(CostKind::gaussian, test));
    expect_same_table(got.table, oracle::naive_double_loop(ts, CostKind::gaussian, test), "mood");
  }
}

TEST(SvpRun, MinSegmentLength) {
  std::size_t feasible = 0;
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const TimeSeries ts(oracle::mixed_series(50, 800 + seed));
    const ValidityTest test = ValidityTest::make(TestKind::glr_gaussian_focus, 2.0 + 0.5 * seed, true);
    EngineConfig cfg = make_config(CostKind::gaussian, test);
    cfg.min_seg_len = 4;
    const auto want = oracle::naive_double_loop(ts, CostKind::gaussian, test, 4);
    if (!want.r[50].is_finite()) {
      // short valid pieces are no longer allowed, so some series have no feasible partition
      EXPECT_THROW(svp::svp_run(ts, cfg), svp::infeasible);
      continue;
    }
    ++feasible;
    const auto got = svp::svp_run(ts, cfg);
    expect_same_table(got.table, want, "minlen");
    for (std::size_t k = 0; k < got.segmentation.segment_count(); ++k) {
      const auto [a, b] = got.segmentation.segment(k);
      EXPECT_GE(b - a, 4u);
    }
  }
  EXPECT_GE(feasible, 6u);
}

TEST(SvpRun, InfeasibleMinSegmentLength) {
  EngineConfig cfg = make_config(CostKind::gaussian, ValidityTest::make(TestKind::range, 1.0));
  cfg.min_seg_len = 5;
  EXPECT_THROW(svp::svp_run(TimeSeries({1, 2, 3}), cfg), svp::infeasible);
}

TEST(SvpRun, ConfigValidation) {
  EXPECT_THROW(svp::svp_run(TimeSeries({1, 2}),
                            make_config(CostKind::quantile, ValidityTest::make(TestKind::range, 1.0),
                                        Pruning::all())),
               svp::config_error);
  EXPECT_THROW(
      svp::svp_run(TimeSeries({1, 2}),
                   make_config(CostKind::gaussian,
                               ValidityTest::make(TestKind::glr_gaussian_focus, 1.0, false),
                               Pruning::all())),
      svp::config_error);
  // sticky is gamma-stable but not inverse-gamma-stable, so the inequality rule stays off
  EXPECT_THROW(
      svp::svp_run(TimeSeries({1, 2}),
                   make_config(CostKind::gaussian,
                               ValidityTest::make(TestKind::glr_gaussian_focus, 1.0, true),
                               Pruning::all())),
      svp::config_error);
  EngineConfig cfg = make_config(CostKind::gaussian, ValidityTest::make(TestKind::range, 1.0),
                                 Pruning::all());
  cfg.min_seg_len = 2;
  EXPECT_THROW(svp::svp_run(TimeSeries({1, 2}), cfg), svp::config_error);
}

TEST(SvpRun, PruningDoesNotChangeResult) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> len(20, 200);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const TimeSeries ts(oracle::mixed_series(len(rng), 9000 + seed));
    for (const ValidityTest& test : {ValidityTest::make(TestKind::range, 3.0),
                                     ValidityTest::make(TestKind::glr_gaussian_focus, 8.0, true)}) {
      const auto off = svp::svp_run(ts, make_config(CostKind::gaussian, test, Pruning::none()));
      EngineConfig pruned = make_config(CostKind::gaussian, test);
      pruned.pruning = pruned.strongest_pruning();
      const auto on = svp::svp_run(ts, pruned);
      EXPECT_EQ(on.segmentation, off.segmentation) << seed;
      for (std::size_t t = 0; t < on.table.r.size(); ++t) {
        ASSERT_EQ(on.table.r[t], off.table.r[t]);
        ASSERT_EQ(on.table.s[t], off.table.s[t]);
      }
    }
  }
}

TEST(SvpRun, StickyValidityIsNotSuffixClosed) {
  const TimeSeries ts({5.0, 0.0, 10.0});
  const ValidityTest test = ValidityTest::make(TestKind::glr_gaussian_focus, 20.0, true);
  EXPECT_TRUE(svp::segment_is_valid(ts, 0, 3, test));
  EXPECT_FALSE(svp::segment_is_valid(ts, 1, 3, test));
  EngineConfig cfg = make_config(CostKind::gaussian, test);
  EXPECT_FALSE(cfg.strongest_pruning().pelt_rule);
  cfg.test = ValidityTest::make(TestKind::range, 20.0);
  EXPECT_TRUE(cfg.strongest_pruning().pelt_rule);
}

TEST(SvpRun, ObserverSeesExactStatistics) {
  const TimeSeries ts(oracle::mixed_series(150, 4));
  const ValidityTest test = ValidityTest::make(TestKind::glr_gaussian_focus, 6.0, true);
  std::size_t calls = 0;
  svp::svp_run(ts, make_config(CostKind::gaussian, test), [&](std::size_t s, std::size_t t, double f) {
    ++calls;
    ASSERT_TRUE(oracle::rel_close(f, svp::glr_scan_naive(ts, s, t), 1e-9));
  });
  EXPECT_GT(calls, 150u);
}

TEST(SvpRun, LemmaOneAndSegmentValidity) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const TimeSeries ts(oracle::mixed_series(120, 300 + seed));
    for (const ValidityTest& test : {ValidityTest::make(TestKind::range, 4.0),
                                     ValidityTest::make(TestKind::glr_gaussian_focus, 5.0, true),
                                     ValidityTest::make(TestKind::wilcoxon, 60.0, true)}) {
      const auto result = svp::svp_run(ts, make_config(CostKind::gaussian, test));
      for (std::size_t t = 2; t < result.table.r.size(); ++t) {
        EXPECT_GE(result.table.r[t].k, result.table.r[t - 1].k);
      }
      for (std::size_t k = 0; k < result.segmentation.segment_count(); ++k) {
        const auto [a, b] = result.segmentation.segment(k);
        EXPECT_TRUE(svp::segment_is_valid(ts, a, b, test));
      }
    }
  }
}

TEST(OpRun, ConstantSeries) {
  const auto res = svp::op_pelt_run(TimeSeries(std::vector<double>(30, 2.0)), CostModel::gaussian(), 0.1);
  EXPECT_EQ(res.segmentation.segment_count(), 1u);
}

TEST(OpRun, CleanStep) {
  std::vector<double> y(40, 0.0);
  for (std::size_t i = 20; i < 40; ++i) y[i] = 5.0;
  const double pen = 2.0 * std::log(40.0);
  const auto pruned = svp::op_pelt_run(TimeSeries(y), CostModel::gaussian(), pen);
  const auto full = svp::op_run(TimeSeries(y), CostModel::gaussian(), pen, false);
  EXPECT_EQ(bounds(pruned.segmentation), (std::vector<std::size_t>{0, 20, 40}));
  EXPECT_EQ(pruned.segmentation, full.segmentation);
}

TEST(OpRun, MatchesEnumerationAndUnpruned) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    std::vector<double> y = oracle::mixed_series(12, 40 + seed);
    const double pen = 2.0 * std::log(12.0);
    const auto res = svp::op_pelt_run(TimeSeries(y), CostModel::gaussian(), pen);
    const auto [value, k] = oracle::exhaustive_op(y, pen);
    EXPECT_TRUE(oracle::rel_close(res.penalized_cost, value, 1e-9));
    EXPECT_EQ(res.segmentation.segment_count(), k);
  }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const TimeSeries ts(oracle::mixed_series(300, 70 + seed));
    const double pen = 2.0 * std::log(300.0);
    const auto a = svp::op_pelt_run(ts, CostModel::gaussian(), pen);
    const auto b = svp::op_run(ts, CostModel::gaussian(), pen, false);
    EXPECT_EQ(a.segmentation, b.segmentation);
    EXPECT_EQ(a.penalized_cost, b.penalized_cost);
    EXPECT_LE(a.cost_evaluations, b.cost_evaluations);
  }
  EXPECT_THROW(svp::op_pelt_run(TimeSeries({1, 2}), CostModel::quantile(0.0), 1.0), svp::config_error);
}

TEST(OpRun, SvpNeverHasMoreSegments) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const TimeSeries ts(oracle::mixed_series(150, 2000 + seed));
    const double gamma = 2.0 * std::log(150.0);
    const auto op = svp::op_pelt_run(ts, CostModel::gaussian(), gamma);
    const auto sv = svp::svp_run(
        ts, make_config(CostKind::gaussian, ValidityTest::make(TestKind::glr_gaussian_focus, gamma)));
    EXPECT_LE(sv.segmentation.segment_count(), op.segmentation.segment_count()) << seed;
  }
}

}  // namespace
