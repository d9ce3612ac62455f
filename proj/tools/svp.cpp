// svp: command-line front end (detect, simulate, bench).

#include <CLI11.hpp>

#include "cli_commands.hpp"

namespace {

using namespace svp::cli;

template <class T>
void set_if(const CLI::Option* opt, std::optional<T>& slot, const T& value) {
  if (opt->count() > 0) slot = value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smallest valid partitioning change-point detection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version);

  // detect
  DetectOptions d;
  double d_gamma = 0.0, d_qx = 0.0;
  std::string d_rule, d_std;
  auto* detect = app.add_subcommand("detect", "Segment one numeric CSV column");
  detect->add_option("--input,-i", d.input, "Input CSV file")->required();
  detect->add_option("--column", d.column, "0-based column index or header name (default: first numeric)");
  detect->add_option("--header", d.header, "auto|yes|no")->check(CLI::IsMember({"auto", "yes", "no"}));
  detect->add_option("--cost", d.cost, "gauss|poisson|mad|quantile");
  auto* qx = detect->add_option("--quantile-x", d_qx, "Trimmed fraction for the quantile cost, 0 <= x < 0.5");
  detect->add_option("--test", d.test, "glr|glr-naive|wilcoxon|mood|range");
  detect->add_flag("--sticky", d.sticky, "Once a segment start turns invalid it stays invalid");
  auto* g = detect->add_option("--gamma", d_gamma, "Validity threshold");
  auto* gr = detect->add_option("--gamma-rule", d_rule, "bic|bic15|wilcoxon:<len>|mood:<alpha> (default bic)");
  detect->add_option("--min-seg-len", d.min_seg_len, "Minimum segment length");
  detect->add_flag("--prune", d.prune, "Enable the inequality pruning rule");
  detect->add_option("--method", d.method, "svp|pelt")->check(CLI::IsMember({"svp", "pelt"}));
  auto* st = detect->add_option("--standardize", d_std, "mad-diff: divide by a robust noise scale first");
  detect->add_option("--output,-o", d.output, "Segmentation JSON (default stdout)");
  detect->add_option("--points", d.points, "Per-point CSV output");
  detect->add_option("--manifest", d.manifest, "Separate manifest JSON output");

  // simulate
  SimulateOptions s;
  std::vector<std::size_t> s_changes;
  auto* simulate = app.add_subcommand("simulate", "Generate a scenario series");
  simulate->add_option("--scenario", s.scenario, "none|up|step|updown")->required();
  simulate->add_option("--n", s.n, "Series length");
  simulate->add_option("--jump", s.jump, "Jump size");
  simulate->add_option("--sigma", s.sigma, "Noise scale");
  simulate->add_option("--noise", s.noise, "gauss|t<df>");
  auto* ch = simulate->add_option("--changes", s_changes, "Override change positions, comma separated")
                 ->delimiter(',');
  simulate->add_option("--seed", s.seed, "Random seed");
  simulate->add_option("--output,-o", s.output, "Series CSV (default stdout)");
  simulate->add_option("--truth", s.truth, "Truth JSON output");

  // bench
  BenchOptions b;
  std::vector<std::string> b_scen, b_meth;
  std::vector<double> b_jumps;
  std::vector<std::size_t> b_lengths;
  std::size_t b_n = 0, b_reps = 0, b_threads = 0;
  std::uint64_t b_seed = 0;
  std::string b_noise, b_base;
  double b_sigma = 0.0, b_tol = 0.0;
  auto* bench = app.add_subcommand("bench", "Run a simulation or runtime study");
  bench->add_option("--study", b.study, "f1|robust|runtime|prop2")
      ->check(CLI::IsMember({"f1", "robust", "runtime", "prop2"}));
  auto* o_scen = bench->add_option("--scenarios", b_scen, "Scenario list")->delimiter(',');
  auto* o_jumps = bench->add_option("--jumps", b_jumps, "Jump list")->delimiter(',');
  auto* o_meth = bench->add_option("--methods", b_meth, "Method list")->delimiter(',');
  auto* o_len = bench->add_option("--lengths", b_lengths, "Series lengths (runtime study)")->delimiter(',');
  auto* o_n = bench->add_option("--n", b_n, "Series length");
  auto* o_reps = bench->add_option("--replicates", b_reps, "Replicates per cell (default 20)");
  auto* o_seed = bench->add_option("--seed", b_seed, "Base seed; replicate r uses seed + r");
  auto* o_noise = bench->add_option("--noise", b_noise, "gauss|t<df>");
  auto* o_sigma = bench->add_option("--sigma", b_sigma, "Noise scale");
  auto* o_tol = bench->add_option("--tolerance", b_tol, "Matching tolerance (default 2.5)");
  auto* o_base = bench->add_option("--baseline", b_base, "Add a baseline method (pelt)");
  auto* o_thr = bench->add_option("--threads", b_threads, "Worker threads (capped by SVP_THREADS)");
  bench->add_option("--output,-o", b.output, "Per-row CSV (default stdout)");
  bench->add_option("--summary", b.summary, "Summary JSON");
  bench->add_option("--config", b.config, "JSON file with the same keys as the flags");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : bad_flags;
  }

  try {
    if (*detect) {
      d.argv.assign(argv, argv + argc);
      set_if(g, d.gamma, d_gamma);
      set_if(qx, d.quantile_x, d_qx);
      set_if(gr, d.gamma_rule, d_rule);
      set_if(st, d.standardize, d_std);
      return cmd_detect(d);
    }
    if (*simulate) {
      if (ch->count() > 0) s.changes = s_changes;
      return cmd_simulate(s);
    }
    set_if(o_scen, b.scenarios, b_scen);
    set_if(o_jumps, b.jumps, b_jumps);
    set_if(o_meth, b.methods, b_meth);
    set_if(o_len, b.lengths, b_lengths);
    set_if(o_n, b.n, b_n);
    set_if(o_reps, b.replicates, b_reps);
    set_if(o_seed, b.seed, b_seed);
    set_if(o_noise, b.noise, b_noise);
    set_if(o_sigma, b.sigma, b_sigma);
    set_if(o_tol, b.tolerance, b_tol);
    set_if(o_base, b.baseline, b_base);
    set_if(o_thr, b.threads, b_threads);
    return cmd_bench(b);
  } catch (const svp::io::read_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return unreadable_input;
  } catch (const svp::io::parse_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return bad_cell;
  } catch (const svp::infeasible& e) {
    std::cerr << "error: " << e.what() << '\n';
    return bad_flags;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return bad_flags;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return bad_flags;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return failure;
  }
}
