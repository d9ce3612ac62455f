#pragma once

// Implementation of the `svp` subcommands. main() in svp.cpp only wires
// CLI11 options to these functions and maps exceptions to exit codes.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "svp/bench.hpp"
#include "svp/costs.hpp"
#include "svp/engine.hpp"
#include "svp/io.hpp"
#include "svp/validity.hpp"

namespace svp::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* version = "1.0.0";

enum exit_code : int {
  ok = 0,
  failure = 1,
  unreadable_input = 2,
  bad_cell = 3,
  bad_flags = 4,
  crashed_cell = 5,
};

/// Flag misuse that CLI11 cannot see on its own.
struct usage_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline std::string shell_quote(const std::string& arg) {
  if (!arg.empty() && arg.find_first_of(" \t\n'\"\\$`*?;&|<>(){}[]!#~") == std::string::npos) {
    return arg;
  }
  std::string out = "'";
  for (char c : arg) {
    if (c == '\'') out += "'\\''";
    else out.push_back(c);
  }
  return out + "'";
}

inline std::string command_echo(const std::vector<std::string>& argv) {
  std::string out;
  for (const std::string& a : argv) {
    if (!out.empty()) out.push_back(' ');
    out += shell_quote(a);
  }
  return out;
}

inline json version_info() {
  return {{"svp", version}, {"compiler", __VERSION__}, {"cplusplus", __cplusplus}};
}

/// Writes to `path`, or stdout for "" and "-".
inline void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

/// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// detect

struct DetectOptions {
  std::string input;
  std::string column;
  std::string header = "auto";
  std::string cost = "gauss";
  std::optional<double> quantile_x;
  std::string test = "glr";
  bool sticky = false;
  std::optional<double> gamma;
  std::optional<std::string> gamma_rule;
  std::size_t min_seg_len = 1;
  bool prune = false;
  std::string method = "svp";
  std::optional<std::string> standardize;
  std::string output;
  std::string points;
  std::string manifest;
  std::vector<std::string> argv;
};

inline CostKind parse_cost(const std::string& name) {
  if (name == "gauss" || name == "gaussian") return CostKind::gaussian;
  if (name == "poisson") return CostKind::poisson;
  if (name == "mad") return CostKind::mad;
  if (name == "quantile") return CostKind::quantile;
  throw usage_error("unknown cost '" + name + "'");
}

inline TestKind parse_test(const std::string& name) {
  if (name == "glr") return TestKind::glr_gaussian_focus;
  if (name == "glr-naive") return TestKind::glr_gaussian_naive;
  if (name == "wilcoxon") return TestKind::wilcoxon;
  if (name == "mood") return TestKind::mood;
  if (name == "range") return TestKind::range;
  throw usage_error("unknown test '" + name + "'");
}

struct ResolvedDetect {
  EngineConfig engine;
  std::optional<double> gamma;  // empty for the length-dependent mood rule
  std::string gamma_source;     // "explicit" or the rule text
};

inline ResolvedDetect resolve_detect(const DetectOptions& opt, std::size_t n) {
  ResolvedDetect r;
  const CostKind cost = parse_cost(opt.cost);
  if (opt.quantile_x && cost != CostKind::quantile) throw usage_error("--quantile-x needs --cost quantile");
  try {
    r.engine.cost = cost == CostKind::quantile ? CostModel::quantile(opt.quantile_x.value_or(0.0))
                                               : CostModel{cost, 0.0};
  } catch (const std::domain_error& e) {
    throw usage_error(e.what());
  }
  const TestKind test = parse_test(opt.test);
  if (opt.gamma && opt.gamma_rule) throw usage_error("give either --gamma or --gamma-rule, not both");
  if (opt.min_seg_len < 1) throw usage_error("--min-seg-len must be at least 1");
  r.engine.min_seg_len = opt.min_seg_len;
  r.engine.pruning = Pruning{true, opt.prune};

  if (opt.gamma) {
    if (!std::isfinite(*opt.gamma) || *opt.gamma < 0.0) throw usage_error("--gamma must be finite and >= 0");
    r.gamma = *opt.gamma;
    r.gamma_source = "explicit";
    r.engine.test = ValidityTest::make(test, *opt.gamma, opt.sticky);
    return r;
  }
  const std::string rule_text = opt.gamma_rule.value_or("bic");
  io::GammaRule rule;
  try {
    rule = io::parse_gamma_rule(rule_text);
  } catch (const std::invalid_argument& e) {
    throw usage_error(e.what());
  }
  r.gamma_source = rule_text;
  if (rule.kind == io::GammaRule::Kind::mood) {
    if (test != TestKind::mood) throw usage_error("the mood:<alpha> rule needs --test mood");
    r.engine.test = ValidityTest::mood_sidak(rule.param, n, opt.sticky);
    return r;
  }
  if (rule.kind == io::GammaRule::Kind::wilcoxon && test != TestKind::wilcoxon) {
    throw usage_error("the wilcoxon:<len> rule needs --test wilcoxon");
  }
  r.gamma = io::resolve_gamma(rule, n);
  r.engine.test = ValidityTest::make(test, *r.gamma, opt.sticky);
  return r;
}

inline json engine_config_json(const DetectOptions& opt, const ResolvedDetect& r) {
  json cfg;
  cfg["method"] = opt.method;
  cfg["cost"] = std::string(to_string(r.engine.cost.kind));
  if (r.engine.cost.kind == CostKind::quantile) cfg["quantile_x"] = r.engine.cost.x;
  cfg["test"] = std::string(to_string(r.engine.test.kind));
  cfg["sticky"] = r.engine.test.sticky;
  cfg["gamma"] = r.gamma ? json(*r.gamma) : json(nullptr);
  cfg["gamma_rule"] = r.gamma_source;
  if (r.engine.test.length_thresholds) cfg["sidak_alpha"] = r.engine.test.sidak_alpha;
  cfg["min_seg_len"] = r.engine.min_seg_len;
  cfg["prune"] = opt.prune;
  return cfg;
}

inline int cmd_detect(const DetectOptions& opt) {
  const auto started = std::chrono::steady_clock::now();
  const std::string bytes = io::read_file(opt.input);
  const io::Column column = io::read_column(bytes, opt.column, io::parse_header_mode(opt.header));
  const std::size_t n = column.values.size();

  std::vector<double> values = column.values;
  std::optional<double> scale;
  if (opt.standardize) {
    if (*opt.standardize != "mad-diff") throw usage_error("--standardize only supports mad-diff");
    double s = 0.0;
    values = io::standardize_mad_diff(std::move(values), s);
    scale = s;
  }
  const TimeSeries series(values);
  const ResolvedDetect resolved = resolve_detect(opt, n);

  std::optional<Segmentation> seg;
  double q = 0.0;
  std::optional<double> penalized;
  json stats;
  if (opt.method == "svp") {
    SvpResult res = svp_run(series, resolved.engine);
    seg = std::move(res.segmentation);
    q = res.table.r[n].q;
    stats = {{"validity_updates", res.stats.validity_updates},
             {"cost_evaluations", res.stats.cost_evaluations},
             {"pruned_sticky", res.stats.pruned_sticky},
             {"pruned_pelt", res.stats.pruned_pelt},
             {"max_candidates", res.stats.max_candidates}};
  } else if (opt.method == "pelt") {
    if (!resolved.gamma) throw usage_error("--method pelt needs a single gamma, not the mood rule");
    if (opt.min_seg_len != 1) throw usage_error("--method pelt does not support --min-seg-len");
    OpResult res = op_pelt_run(series, resolved.engine.cost, *resolved.gamma);
    seg = std::move(res.segmentation);
    penalized = res.penalized_cost;
    stats = {{"cost_evaluations", res.cost_evaluations}};
  } else {
    throw usage_error("unknown method '" + opt.method + "'");
  }

  json per_segment = json::array();
  std::vector<double> centers;
  const bool use_median = resolved.engine.cost.kind == CostKind::mad ||
                          resolved.engine.cost.kind == CostKind::quantile;
  for (std::size_t k = 0; k < seg->segment_count(); ++k) {
    const auto [a, b] = seg->segment(k);
    const double c = cost(series, a, b, resolved.engine.cost);
    if (opt.method == "pelt") q += c;
    per_segment.push_back({{"start", a},
                           {"end", b},
                           {"cost", c},
                           {"validity_stat", validity_statistic(series, a, b, resolved.engine.test.kind)}});
    const auto part = series.segment(a, b);
    centers.push_back(use_median ? median(part) : series.sum(a, b) / static_cast<double>(b - a));
  }

  const std::vector<std::size_t> boundaries(seg->boundaries().begin(), seg->boundaries().end());
  json config = engine_config_json(opt, resolved);
  if (scale) config["standardize"] = {{"method", "mad-diff"}, {"scale", *scale}};
  else config["standardize"] = nullptr;

  json manifest;
  manifest["command"] = command_echo(opt.argv);
  manifest["config"] = config;
  manifest["input"] = {{"path", opt.input},
                       {"column", column.index},
                       {"column_name", column.name},
                       {"header", column.had_header},
                       {"length", n},
                       {"bytes", bytes.size()},
                       {"fnv1a64", io::fnv1a_hex(bytes)}};
  json outputs = {{"boundaries", boundaries}, {"k", seg->segment_count()}, {"q", q}};
  if (penalized) outputs["penalized_cost"] = *penalized;
  outputs["per_segment_cost"] = json::array();
  for (const auto& s : per_segment) outputs["per_segment_cost"].push_back(s["cost"]);
  manifest["outputs"] = outputs;
  manifest["stats"] = stats;
  manifest["versions"] = version_info();
  manifest["wall_time_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  json doc;
  doc["boundaries"] = boundaries;
  doc["k"] = seg->segment_count();
  doc["q"] = q;
  if (penalized) doc["penalized_cost"] = *penalized;
  doc["per_segment"] = per_segment;
  doc["manifest"] = manifest;
  write_text(opt.output, doc.dump(2) + "\n");
  if (!opt.manifest.empty()) write_text(opt.manifest, manifest.dump(2) + "\n");

  if (!opt.points.empty()) {
    std::ostringstream os;
    os << "index,value,segment_id," << (use_median ? "segment_median" : "segment_mean") << "\n";
    for (std::size_t k = 0; k < seg->segment_count(); ++k) {
      const auto [a, b] = seg->segment(k);
      for (std::size_t i = a; i < b; ++i) {
        os << i << ',' << format_double(values[i]) << ',' << k << ',' << format_double(centers[k]) << '\n';
      }
    }
    write_text(opt.points, os.str());
  }
  return ok;
}

// ---------------------------------------------------------------------------
// simulate

inline bench::Noise parse_noise(const std::string& text, double sigma) {
  bench::Noise noise;
  noise.sigma = sigma;
  if (text == "gauss" || text == "gaussian") return noise;
  if (text.size() >= 2 && text[0] == 't') {
    const auto df = io::parse_number(std::string_view(text).substr(1));
    if (df && *df >= 1.0 && *df == std::floor(*df) && *df <= 1000.0) {
      noise.kind = bench::NoiseKind::student_t;
      noise.df = static_cast<int>(*df);
      return noise;
    }
  }
  throw usage_error("noise must be gauss or t<df> with a positive integer df");
}

struct SimulateOptions {
  std::string scenario;
  std::size_t n = 1000;
  double jump = 1.0;
  double sigma = 1.0;
  std::string noise = "gauss";
  std::optional<std::vector<std::size_t>> changes;
  std::uint64_t seed = 1;
  std::string output;
  std::string truth;
};

inline int cmd_simulate(const SimulateOptions& opt) {
  bench::ScenarioKind kind;
  try {
    kind = bench::parse_scenario(opt.scenario);
  } catch (const std::invalid_argument& e) {
    throw usage_error(e.what());
  }
  bench::Scenario sc = bench::Scenario::make(kind, opt.n, opt.jump, parse_noise(opt.noise, opt.sigma), opt.seed);
  if (opt.changes) sc.true_changes = *opt.changes;
  try {
    sc.validate();
  } catch (const std::invalid_argument& e) {
    throw usage_error(e.what());
  }
  const std::vector<double> y = bench::generate_values(sc);

  std::ostringstream os;
  os << "value\n";
  for (double v : y) os << format_double(v) << '\n';
  write_text(opt.output, os.str());

  if (!opt.truth.empty()) {
    std::vector<std::size_t> boundaries{0};
    boundaries.insert(boundaries.end(), sc.true_changes.begin(), sc.true_changes.end());
    boundaries.push_back(sc.n);
    json truth = {{"scenario", std::string(to_string(kind))},
                  {"reconstructed", bench::is_reconstructed(kind)},
                  {"n", sc.n},
                  {"jump", sc.jump},
                  {"noise", sc.noise.label()},
                  {"sigma", sc.noise.sigma},
                  {"seed", sc.seed},
                  {"true_changes", sc.true_changes},
                  {"boundaries", boundaries}};
    if (sc.noise.kind == bench::NoiseKind::student_t) truth["df"] = sc.noise.df;
    write_text(opt.truth, truth.dump(2) + "\n");
  }
  return ok;
}

// ---------------------------------------------------------------------------
// bench

struct BenchOptions {
  std::string study;  // empty: from --config, else f1
  std::optional<std::vector<std::string>> scenarios;
  std::optional<std::vector<double>> jumps;
  std::optional<std::vector<std::string>> methods;
  std::optional<std::vector<std::size_t>> lengths;
  std::optional<std::size_t> n;
  std::optional<std::size_t> replicates;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> noise;
  std::optional<double> sigma;
  std::optional<double> tolerance;
  std::optional<std::string> baseline;
  std::optional<std::size_t> threads;
  std::string output;
  std::string summary;
  std::string config;
};

/// Worker count: requested (or hardware) threads, capped by SVP_THREADS.
inline unsigned worker_threads(std::optional<std::size_t> requested) {
  unsigned threads = requested ? static_cast<unsigned>(*requested)
                               : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SVP_THREADS")) {
    const auto cap = io::parse_number(env);
    if (cap && *cap >= 1.0) threads = std::min(threads, static_cast<unsigned>(*cap));
  }
  return std::max(1u, threads);
}

/// Fills unset options from a JSON config file whose keys mirror the flags.
inline void merge_config_file(BenchOptions& opt, const std::string& path) {
  json cfg;
  try {
    cfg = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw io::parse_error("config '" + path + "': " + e.what());
  }
  if (!cfg.is_object()) throw io::parse_error("config '" + path + "' must be a JSON object");
  static const std::vector<std::string> known{"study", "scenarios", "jumps", "methods", "lengths",
                                              "n", "replicates", "seed", "noise", "sigma",
                                              "tolerance", "baseline", "threads"};
  try {
    if (opt.study.empty() && cfg.contains("study")) opt.study = cfg["study"].get<std::string>();
    for (const auto& [key, value] : cfg.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        throw usage_error("unknown config key '" + key + "'");
      }
    }
    auto fill = [&](const char* key, auto& slot) {
      using T = typename std::decay_t<decltype(slot)>::value_type;
      if (!slot && cfg.contains(key)) slot = cfg[key].template get<T>();
    };
    fill("scenarios", opt.scenarios);
    fill("jumps", opt.jumps);
    fill("methods", opt.methods);
    fill("lengths", opt.lengths);
    fill("n", opt.n);
    fill("replicates", opt.replicates);
    fill("seed", opt.seed);
    fill("noise", opt.noise);
    fill("sigma", opt.sigma);
    fill("tolerance", opt.tolerance);
    fill("baseline", opt.baseline);
    fill("threads", opt.threads);
  } catch (const json::exception& e) {
    throw usage_error("config '" + path + "': " + e.what());
  }
}

inline std::vector<bench::Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<bench::Method> out;
  for (const std::string& name : names) {
    try {
      out.push_back(bench::parse_method(name));
    } catch (const std::invalid_argument& e) {
      throw usage_error(e.what());
    }
  }
  return out;
}

inline bench::StudyConfig study_config(const BenchOptions& opt) {
  using bench::Method;
  using bench::ScenarioKind;
  bench::StudyConfig cfg;
  std::vector<Method> default_methods;
  std::string default_noise = "gauss";
  if (opt.study == "f1") {
    cfg.scenarios = {ScenarioKind::none, ScenarioKind::up};
    cfg.jumps = {0.5, 1.0, 1.5};
    default_methods = {Method::svp_glr, Method::svp_glr_bic15};
  } else if (opt.study == "robust") {
    cfg.scenarios = {ScenarioKind::up};
    cfg.jumps = {2.0};
    default_methods = {Method::svp_wilcoxon, Method::svp_mood};
    default_noise = "t2";
  } else if (opt.study == "prop2") {
    cfg.scenarios = {ScenarioKind::none, ScenarioKind::up, ScenarioKind::step, ScenarioKind::updown};
    cfg.jumps = {0.5, 1.0};
    default_methods = {Method::svp_glr_plain, Method::pelt};
  } else {
    throw usage_error("unknown study '" + opt.study + "'");
  }
  if (opt.scenarios) {
    cfg.scenarios.clear();
    for (const std::string& s : *opt.scenarios) {
      try {
        cfg.scenarios.push_back(bench::parse_scenario(s));
      } catch (const std::invalid_argument& e) {
        throw usage_error(e.what());
      }
    }
  }
  if (opt.jumps) cfg.jumps = *opt.jumps;
  cfg.methods = opt.methods ? parse_methods(*opt.methods) : default_methods;
  if (opt.baseline) {
    if (*opt.baseline != "pelt") throw usage_error("--baseline only supports pelt");
    if (std::find(cfg.methods.begin(), cfg.methods.end(), Method::pelt) == cfg.methods.end()) {
      cfg.methods.push_back(Method::pelt);
    }
  }
  if (opt.study == "prop2") {
    auto has = [&](Method m) { return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end(); };
    if (!has(Method::pelt) && !has(Method::op)) throw usage_error("the prop2 audit needs pelt or op in the grid");
    if (!has(Method::svp_glr_plain)) throw usage_error("the prop2 audit needs svp-glr-plain in the grid");
  }
  cfg.n = opt.n.value_or(1000);
  cfg.replicates = opt.replicates.value_or(20);
  cfg.base_seed = opt.seed.value_or(1);
  cfg.noise = parse_noise(opt.noise.value_or(default_noise), opt.sigma.value_or(1.0));
  cfg.tolerance = opt.tolerance.value_or(2.5);
  cfg.threads = worker_threads(opt.threads);
  if (cfg.n < 2) throw usage_error("--n must be at least 2");
  if (cfg.replicates < 1) throw usage_error("--replicates must be at least 1");
  if (cfg.scenarios.empty() || cfg.methods.empty()) throw usage_error("empty study grid");
  if (!(cfg.tolerance >= 0.0)) throw usage_error("--tolerance must be >= 0");
  for (double j : cfg.jumps) {
    if (!std::isfinite(j)) throw usage_error("jumps must be finite");
  }
  if (!(cfg.noise.sigma >= 0.0)) throw usage_error("--sigma must be >= 0");
  return cfg;
}

inline json study_config_json(const bench::StudyConfig& cfg, const std::string& study) {
  json j;
  j["study"] = study;
  j["scenarios"] = json::array();
  j["reconstructed_scenarios"] = json::array();
  for (auto s : cfg.scenarios) {
    j["scenarios"].push_back(std::string(to_string(s)));
    if (bench::is_reconstructed(s)) j["reconstructed_scenarios"].push_back(std::string(to_string(s)));
  }
  j["jumps"] = cfg.jumps;
  j["methods"] = json::array();
  for (auto m : cfg.methods) j["methods"].push_back(std::string(to_string(m)));
  j["n"] = cfg.n;
  j["replicates"] = cfg.replicates;
  j["seed"] = cfg.base_seed;
  j["noise"] = cfg.noise.label();
  j["sigma"] = cfg.noise.sigma;
  j["tolerance"] = cfg.tolerance;
  j["threads"] = cfg.threads;
  return j;
}

inline int run_grid_study(const BenchOptions& opt) {
  const auto started = std::chrono::steady_clock::now();
  const bench::StudyConfig cfg = study_config(opt);
  const std::vector<bench::StudyRow> rows = bench::run_study(cfg);

  std::ostringstream csv;
  csv << "scenario,method,jump,replicate,precision,recall,f1,k_detected,runtime_s,n,status\n";
  std::size_t crashed = 0;
  for (const auto& r : rows) {
    if (!r.ok) ++crashed;
    csv << r.scenario << ',' << r.method << ',' << r.jump << ',' << r.replicate << ',';
    if (r.ok) {
      csv << format_double(r.metrics.precision) << ',' << format_double(r.metrics.recall) << ','
          << format_double(r.metrics.f1) << ',' << r.k_detected << ',' << r.metrics.runtime;
    } else {
      csv << ",,,,";
    }
    csv << ',' << r.n << ',' << (r.ok ? "ok" : "failed") << '\n';
  }
  write_text(opt.output, csv.str());

  json summary;
  summary["config"] = study_config_json(cfg, opt.study);
  summary["cells"] = json::array();
  const auto cells = bench::summarize(rows);
  for (const auto& c : cells) {
    summary["cells"].push_back({{"scenario", c.scenario},
                                {"method", c.method},
                                {"jump", c.jump},
                                {"replicates", c.replicates},
                                {"failures", c.failures},
                                {"precision", c.precision},
                                {"recall", c.recall},
                                {"f1", c.f1},
                                {"false_positives", c.false_positives},
                                {"k_detected", c.k_detected},
                                {"runtime_s", c.runtime}});
  }

  // mean F1 should not drop as the jump grows
  json monotone = json::array();
  for (auto sc : cfg.scenarios) {
    if (sc == bench::ScenarioKind::none) continue;
    for (auto m : cfg.methods) {
      std::vector<std::pair<double, double>> curve;
      for (const auto& c : cells) {
        if (c.scenario == to_string(sc) && c.method == to_string(m)) curve.emplace_back(c.jump, c.f1);
      }
      std::sort(curve.begin(), curve.end());
      bool mono = true;
      for (std::size_t i = 1; i < curve.size(); ++i) mono = mono && curve[i].second >= curve[i - 1].second;
      monotone.push_back({{"scenario", std::string(to_string(sc))}, {"method", std::string(to_string(m))},
                          {"f1_non_decreasing", mono}});
    }
  }
  summary["f1_monotonicity"] = monotone;

  int code = ok;
  if (opt.study == "prop2") {
    const std::string op_name = std::find(cfg.methods.begin(), cfg.methods.end(), bench::Method::pelt) !=
                                        cfg.methods.end()
                                    ? "pelt"
                                    : "op";
    std::map<std::tuple<std::string, double, std::size_t>, std::pair<std::size_t, std::size_t>> ks;
    for (const auto& r : rows) {
      if (!r.ok) continue;
      auto& slot = ks[{r.scenario, r.jump, r.replicate}];
      if (r.method == "svp-glr-plain") slot.first = r.k_detected;
      if (r.method == op_name) slot.second = r.k_detected;
    }
    json violations = json::array();
    for (const auto& [key, k] : ks) {
      if (k.first == 0 || k.second == 0) continue;
      if (k.first > k.second) {
        violations.push_back({{"scenario", std::get<0>(key)},
                              {"jump", std::get<1>(key)},
                              {"replicate", std::get<2>(key)},
                              {"k_svp", k.first},
                              {"k_op", k.second}});
      }
    }
    summary["prop2"] = {{"compared", ks.size()}, {"violations", violations}};
    if (!violations.empty()) {
      std::cerr << "prop2 audit: " << violations.size() << " replicate(s) with K_svp > K_op\n";
      code = failure;
    }
  }
  summary["failed_rows"] = crashed;
  summary["versions"] = version_info();
  summary["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (!opt.summary.empty()) write_text(opt.summary, summary.dump(2) + "\n");
  if (crashed > 0) {
    std::cerr << crashed << " study row(s) failed; see the status column\n";
    return crashed_cell;
  }
  return code;
}

inline int run_runtime_study(const BenchOptions& opt) {
  const auto started = std::chrono::steady_clock::now();
  bench::RuntimeConfig cfg;
  if (opt.lengths) cfg.lengths = *opt.lengths;
  if (opt.methods) cfg.methods = parse_methods(*opt.methods);
  if (opt.baseline) {
    if (*opt.baseline != "pelt") throw usage_error("--baseline only supports pelt");
    if (std::find(cfg.methods.begin(), cfg.methods.end(), bench::Method::pelt) == cfg.methods.end()) {
      cfg.methods.push_back(bench::Method::pelt);
    }
  }
  cfg.replicates = opt.replicates.value_or(3);
  cfg.base_seed = opt.seed.value_or(1);
  if (cfg.lengths.size() < 2) throw usage_error("the runtime study needs at least two lengths");
  for (std::size_t n : cfg.lengths) {
    if (n < 2) throw usage_error("lengths must be at least 2");
  }
  if (cfg.replicates < 1) throw usage_error("--replicates must be at least 1");

  std::vector<bench::RuntimeRow> rows;
  std::size_t crashed = 0;
  try {
    rows = bench::run_runtime_study(cfg);
  } catch (const std::exception& e) {
    std::cerr << "runtime study failed: " << e.what() << '\n';
    ++crashed;
  }
  std::ostringstream csv;
  csv << "method,n,replicate,runtime_s,k_detected\n";
  for (const auto& r : rows) csv << r.method << ',' << r.n << ',' << r.replicate << ',' << r.seconds << ',' << r.k_detected << '\n';
  write_text(opt.output, csv.str());

  json summary;
  summary["config"] = {{"study", "runtime"},
                       {"lengths", cfg.lengths},
                       {"replicates", cfg.replicates},
                       {"seed", cfg.base_seed}};
  summary["methods"] = json::array();
  for (const auto& s : bench::summarize_runtime(rows)) {
    summary["methods"].push_back({{"method", s.method},
                                  {"lengths", s.lengths},
                                  {"median_seconds", s.median_seconds},
                                  {"loglog_slope", s.slope}});
  }
  summary["failed_rows"] = crashed;
  summary["versions"] = version_info();
  summary["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (!opt.summary.empty()) write_text(opt.summary, summary.dump(2) + "\n");
  return crashed > 0 ? crashed_cell : ok;
}

inline int cmd_bench(BenchOptions opt) {
  if (!opt.config.empty()) merge_config_file(opt, opt.config);
  if (opt.study.empty()) opt.study = "f1";
  if (opt.study == "runtime") return run_runtime_study(opt);
  return run_grid_study(opt);
}

}  // namespace svp::cli
