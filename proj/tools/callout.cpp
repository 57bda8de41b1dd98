// callout: generate scenarios, learn duals, simulate policies, sweep
// baselines and run validation suites.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "callout/harness.hpp"
#include "suites.hpp"

namespace {

using namespace callout;
using callout::cli::Suite;
using callout::cli::validation_suites;

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

int default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Name conversions throw std::invalid_argument; report them as config errors.
template <typename F>
auto parse_field(const std::string& field, F&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(field, e.what());
  }
}

void require_positive(const std::string& field, double x) {
  if (!(x > 0.0)) throw ConfigError(field, "must be positive");
}

void require_path(const std::string& field, const std::string& path) {
  if (path.empty()) throw ConfigError(field, "path required");
}

struct GenerateArgs {
  std::string kind = "gaussian";
  std::uint64_t seed = 1;
  std::string objective = "sales";
  int networks = 32;
  double min_price_lo = 0.2;
  double min_price_hi = 1.0;
  double perturbation = 0.0;
  std::vector<double> slots{1.0};
  std::string out;
};

struct PolicyArgs {
  std::string policy = "lp-val";
  int k = 1;
  double threshold = 1.0;
  double delta = 0.25;
  std::string score_rule = "gross";
};

struct RunArgs {
  std::string scenario;
  std::string duals;
  std::int64_t explore = 500;
  std::int64_t impressions = 2000;
  int reps = 10;
  std::uint64_t seed = 1;
  double shrink = 0.0;
  std::string gating = "decision";
  std::string constraint_mode;
  double bucket_size = 0.0;
  bool exclude_warmup = false;
  double noise = 0.0;
  int threads = default_threads();
  std::string out;
  std::string summary;
};

struct SweepArgs {
  std::string family = "set";
  std::string grid = "default";
  std::string kind = "gaussian";
  double min_price_lo = 0.2;
  std::uint64_t scenario_seed = 1;
};

struct LearnArgs {
  std::string scenario;
  std::int64_t samples = 500;
  std::uint64_t seed = 1;
  double shrink = 0.0;
  std::string method = "auto";
  std::string out;
};

struct ValidateArgs {
  std::vector<std::string> suites;
  std::uint64_t seed = 1;
  std::string duals;
  std::string scenario;
  bool list = false;
};

PolicyParams to_params(const PolicyArgs& a) {
  PolicyParams p;
  p.kind = parse_field("policy", [&] { return policy_kind_from_string(a.policy); });
  p.score_rule = parse_field("score-rule", [&] { return score_rule_from_string(a.score_rule); });
  if (a.k < 1) throw ConfigError("k", "must be positive");
  require_positive("threshold", a.threshold);
  if (!(a.delta > 0.0 && a.delta <= 1.0)) throw ConfigError("delta", "must lie in (0, 1]");
  p.k = a.k;
  p.threshold = a.threshold;
  p.delta = a.delta;
  return p;
}

SimOptions to_options(const RunArgs& a) {
  SimOptions o;
  if (a.explore < 0) throw ConfigError("explore", "must be non-negative");
  if (a.impressions < 1) throw ConfigError("impressions", "must be positive");
  if (a.reps < 1) throw ConfigError("reps", "must be positive");
  if (a.threads < 1) throw ConfigError("threads", "must be positive");
  if (!(a.shrink >= 0.0 && a.shrink < 1.0)) throw ConfigError("shrink", "must lie in [0, 1)");
  if (a.noise < 0.0) throw ConfigError("noise", "must be non-negative");
  o.explore = a.explore;
  o.exploit = a.impressions;
  o.replications = a.reps;
  o.seed = a.seed;
  o.shrink = a.shrink;
  o.threads = a.threads;
  o.noise = a.noise;
  o.exclude_warmup = a.exclude_warmup;
  if (a.gating == "decision") {
    o.gating = Gating::kDecision;
  } else if (a.gating == "convert") {
    o.gating = Gating::kConvert;
  } else {
    throw ConfigError("gating", "expected decision or convert, got " + a.gating);
  }
  if (!a.constraint_mode.empty()) {
    o.constraint_mode = parse_field("constraint-mode", [&] { return constraint_mode_from_string(a.constraint_mode); });
  }
  if (a.bucket_size != 0.0) {
    if (a.bucket_size < 1.0) throw ConfigError("bucket-size", "must be at least 1");
    o.bucket_size = a.bucket_size;
  }
  return o;
}

void add_run_flags(CLI::App* cmd, RunArgs& a, bool scenario_required) {
  auto* scenario = cmd->add_option("--scenario", a.scenario, "Scenario file")->envname("CALLOUT_SCENARIO");
  if (scenario_required) scenario->required();
  cmd->add_option("--duals", a.duals, "Duals file shared by every replication (default: learn per replication)")
      ->envname("CALLOUT_DUALS");
  cmd->add_option("--explore", a.explore, "Exploration impressions per replication")->envname("CALLOUT_EXPLORE");
  cmd->add_option("--impressions", a.impressions, "Exploitation impressions per replication")
      ->envname("CALLOUT_IMPRESSIONS");
  cmd->add_option("--reps", a.reps, "Replications")->envname("CALLOUT_REPS");
  cmd->add_option("--seed", a.seed, "Simulation seed")->envname("CALLOUT_SEED");
  cmd->add_option("--shrink", a.shrink, "Shrink the sampled LP's rate limits by this fraction")
      ->envname("CALLOUT_SHRINK");
  cmd->add_option("--gating", a.gating, "decision | convert")->envname("CALLOUT_GATING");
  cmd->add_option("--constraint-mode", a.constraint_mode, "time-average | token-bucket | unlimited")
      ->envname("CALLOUT_CONSTRAINT_MODE");
  cmd->add_option("--bucket-size", a.bucket_size, "Override every token-bucket size")
      ->envname("CALLOUT_BUCKET_SIZE");
  cmd->add_flag("--exclude-warmup", a.exclude_warmup, "Drop bucket warm-up impressions from the metrics")
      ->envname("CALLOUT_EXCLUDE_WARMUP");
  cmd->add_option("--noise", a.noise, "Std of noise on the policy's survival estimates")->envname("CALLOUT_NOISE");
  cmd->add_option("--threads", a.threads, "Replication workers")->envname("CALLOUT_THREADS");
  cmd->add_option("--out", a.out, "Per-replication CSV (stdout when omitted)")->envname("CALLOUT_OUT");
  cmd->add_option("--summary", a.summary, "Summary CSV")->envname("CALLOUT_SUMMARY");
}

void add_policy_flags(CLI::App* cmd, PolicyArgs& a) {
  cmd->add_option("--policy", a.policy, "Policy name")->envname("CALLOUT_POLICY");
  cmd->add_option("--k", a.k, "Set size for set-based baselines")->envname("CALLOUT_K");
  cmd->add_option("--threshold", a.threshold, "Multiple of the rate for threshold baselines")
      ->envname("CALLOUT_THRESHOLD");
  cmd->add_option("--delta", a.delta, "Smallest cutoff for adv-cutoff")->envname("CALLOUT_DELTA");
  cmd->add_option("--score-rule", a.score_rule, "gross | reduced")->envname("CALLOUT_SCORE_RULE");
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text_file(path, text);
  }
}

std::shared_ptr<const std::vector<DualSolution>> load_shared_duals(const std::string& path, const Scenario& s) {
  if (path.empty()) return nullptr;
  DualSolution d = load_duals(path);
  if (d.lambda.size() != s.num_networks()) throw ConfigError("duals.lambda", "one multiplier per network required");
  if (d.tau.size() != s.types.size()) throw ConfigError("duals.tau", "one row per impression type required");
  return std::make_shared<const std::vector<DualSolution>>(std::vector<DualSolution>{std::move(d)});
}

std::string describe(const Summary& s) {
  return format_number(s.mean) + " +/- " + format_number(s.half_width);
}

int cmd_generate(const GenerateArgs& a) {
  require_path("out", a.out);
  BenchmarkOptions o;
  o.seed = a.seed;
  o.kind = parse_field("kind", [&] { return distribution_kind_from_string(a.kind); });
  o.objective = parse_field("objective", [&] { return objective_from_string(a.objective); });
  if (a.networks < 1) throw ConfigError("networks", "must be positive");
  o.networks = a.networks;
  o.min_price_lo = a.min_price_lo;
  o.min_price_hi = a.min_price_hi;
  o.perturbation = a.perturbation;
  o.slots = a.slots;
  const Scenario s = generate_benchmark(o);
  save_scenario(s, a.out);
  std::cout << "wrote " << a.out << ": " << s.num_networks() << " networks, " << s.types.size() << " types\n";
  return 0;
}

int cmd_learn(const LearnArgs& a) {
  require_path("scenario", a.scenario);
  require_path("out", a.out);
  if (a.samples < 1) throw ConfigError("samples", "must be positive");
  if (!(a.shrink >= 0.0 && a.shrink < 1.0)) throw ConfigError("shrink", "must lie in [0, 1)");
  const Scenario s = load_scenario(a.scenario);
  SimOptions o;
  o.explore = a.samples;
  o.replications = 1;
  o.seed = a.seed;
  o.shrink = a.shrink;
  if (a.method == "direct") {
    o.solve.method = SolveMethod::kDirect;
  } else if (a.method == "decomposed") {
    o.solve.method = SolveMethod::kDecomposed;
  } else if (a.method != "auto") {
    throw ConfigError("method", "expected auto, direct or decomposed, got " + a.method);
  }
  const DualSolution d = learn_replication_duals(s, o).front();
  save_duals(d, a.out);
  const auto issues = check_dual_invariants(d, s.slots);
  std::cout << "wrote " << a.out << ": method " << d.method << ", objective " << format_number(d.objective)
            << ", residual " << format_number(d.residual) << "\n";
  std::cout << "validation tau/discount monotone and strong duality: " << (issues.empty() ? "ok" : "FAILED") << "\n";
  for (const auto& issue : issues) std::cout << "  " << issue << "\n";
  return issues.empty() ? 0 : kExitFailure;
}

int cmd_simulate(const RunArgs& r, const PolicyArgs& p) {
  require_path("scenario", r.scenario);
  const Scenario s = load_scenario(r.scenario);
  SimOptions o = to_options(r);
  o.policy = to_params(p);
  o.duals = load_shared_duals(r.duals, s);
  SimReport report = run_two_phase(s, o);
  report.opt_ub = compute_opt_ub(s, o.solve);
  emit(r.out, replications_csv({report}));
  if (!r.summary.empty()) write_text_file(r.summary, summary_csv({report}));
  std::cerr << report.policy << " " << to_string(s.objective) << " per impression " << describe(report.metric_summary())
            << " (opt-ub " << format_number(report.opt_ub) << ")\n";
  return 0;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  if (text == "default") return grid;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      grid.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("grid", "expected 'default' or comma-separated numbers, got " + text);
    }
  }
  if (grid.empty()) throw ConfigError("grid", "empty grid");
  return grid;
}

int cmd_sweep(const SweepArgs& w, const RunArgs& r, const PolicyArgs& p) {
  const SweepFamily family = parse_field("family", [&] { return sweep_family_from_string(w.family); });
  Scenario s;
  if (r.scenario.empty()) {
    BenchmarkOptions b;
    b.seed = w.scenario_seed;
    b.kind = parse_field("kind", [&] { return distribution_kind_from_string(w.kind); });
    b.min_price_lo = w.min_price_lo;
    s = generate_benchmark(b);
  } else {
    s = load_scenario(r.scenario);
  }
  SimOptions o = to_options(r);
  o.duals = load_shared_duals(r.duals, s);
  std::vector<PolicyParams> policies;
  if (family == SweepFamily::kBucket) policies.push_back(to_params(p));
  const SweepResult result = sweep(s, family, o, parse_grid(w.grid), policies);
  emit(r.out, replications_csv(result.reports));
  if (!r.summary.empty()) write_text_file(r.summary, summary_csv(result.reports));
  for (const auto& [policy, index] : result.peaks) {
    const SimReport& best = result.reports[index];
    std::cerr << "peak " << policy << " at " << format_number(best.parameter) << ": "
              << describe(best.metric_summary()) << "\n";
  }
  return 0;
}

int cmd_validate(const ValidateArgs& a) {
  const auto& suites = validation_suites();
  if (a.list) {
    for (const auto& s : suites) std::cout << s.name << "  " << s.description << "\n";
    return 0;
  }
  for (const auto& name : a.suites) {
    const bool known = std::any_of(suites.begin(), suites.end(), [&](const Suite& s) { return s.name == name; });
    if (!known) throw ConfigError("suite", "unknown suite " + name);
  }
  bool ok = true;
  if (!a.duals.empty()) {
    if (a.scenario.empty()) throw ConfigError("scenario", "required with --duals");
    const Scenario s = load_scenario(a.scenario);
    const DualSolution d = load_duals(a.duals);
    const auto issues = check_dual_invariants(d, s.slots);
    std::cout << (issues.empty() ? "PASS" : "FAIL") << " duals-file " << a.duals << "\n";
    for (const auto& issue : issues) std::cout << "  " << issue << "\n";
    ok = issues.empty();
    if (a.suites.empty()) return ok ? 0 : kExitFailure;
  }
  for (const auto& suite : suites) {
    if (!a.suites.empty() && std::find(a.suites.begin(), a.suites.end(), suite.name) == a.suites.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::string> failures;
    try {
      failures = suite.run(a.seed);
    } catch (const std::exception& e) {
      failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char timing[32];
    std::snprintf(timing, sizeof timing, "%.3fs", secs);
    std::cout << (failures.empty() ? "PASS" : "FAIL") << " " << suite.name << " (" << timing << ")\n";
    const std::size_t shown = std::min<std::size_t>(failures.size(), 10);
    for (std::size_t i = 0; i < shown; ++i) std::cout << "  " << failures[i] << "\n";
    if (failures.size() > shown) std::cout << "  ... " << failures.size() - shown << " more\n";
    ok = ok && failures.empty();
  }
  return ok ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selective call-out simulator"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a benchmark scenario");
  generate->add_option("--kind", gen.kind, "gaussian | pareto")->envname("CALLOUT_KIND");
  generate->add_option("--seed", gen.seed, "Generator seed")->envname("CALLOUT_SEED");
  generate->add_option("--objective", gen.objective, "value | gsp | posted | sales")->envname("CALLOUT_OBJECTIVE");
  generate->add_option("--networks", gen.networks, "Number of ad networks")->envname("CALLOUT_NETWORKS");
  generate->add_option("--min-price-lo", gen.min_price_lo, "Lowest minimum price, as a fraction of R")
      ->envname("CALLOUT_MIN_PRICE_LO");
  generate->add_option("--min-price-hi", gen.min_price_hi, "Highest minimum price, as a fraction of R")
      ->envname("CALLOUT_MIN_PRICE_HI");
  generate->add_option("--perturbation", gen.perturbation, "General-position jitter on bid masses")
      ->envname("CALLOUT_PERTURBATION");
  generate->add_option("--slots", gen.slots, "Slot discounts, highest first")
      ->delimiter(',')
      ->envname("CALLOUT_SLOTS");
  generate->add_option("--out", gen.out, "Scenario file")->envname("CALLOUT_OUT")->required();

  LearnArgs learn_args;
  auto* learn = app.add_subcommand("learn", "Learn duals from sampled impressions");
  learn->add_option("--scenario", learn_args.scenario, "Scenario file")->envname("CALLOUT_SCENARIO")->required();
  learn->add_option("--samples", learn_args.samples, "Exploration impressions")->envname("CALLOUT_SAMPLES");
  learn->add_option("--seed", learn_args.seed, "Sampling seed (matches simulate replication 0)")
      ->envname("CALLOUT_SEED");
  learn->add_option("--shrink", learn_args.shrink, "Shrink the rate limits by this fraction")
      ->envname("CALLOUT_SHRINK");
  learn->add_option("--method", learn_args.method, "auto | direct | decomposed")->envname("CALLOUT_METHOD");
  learn->add_option("--out", learn_args.out, "Duals file")->envname("CALLOUT_OUT")->required();

  RunArgs sim_run;
  PolicyArgs sim_policy;
  auto* simulate = app.add_subcommand("simulate", "Run a policy over replications and write CSV");
  add_run_flags(simulate, sim_run, true);
  add_policy_flags(simulate, sim_policy);

  RunArgs sweep_run;
  PolicyArgs sweep_policy;
  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a baseline family over its parameter grid");
  add_run_flags(sweep_cmd, sweep_run, false);
  add_policy_flags(sweep_cmd, sweep_policy);
  sweep_cmd->add_option("--family", sweep_args.family, "set | threshold | bucket")->envname("CALLOUT_FAMILY");
  sweep_cmd->add_option("--grid", sweep_args.grid, "'default' or comma-separated values")->envname("CALLOUT_GRID");
  sweep_cmd->add_option("--kind", sweep_args.kind, "Benchmark kind when no scenario is given")
      ->envname("CALLOUT_KIND");
  sweep_cmd->add_option("--min-price-lo", sweep_args.min_price_lo, "Benchmark lowest minimum price")
      ->envname("CALLOUT_MIN_PRICE_LO");
  sweep_cmd->add_option("--scenario-seed", sweep_args.scenario_seed, "Benchmark generator seed")
      ->envname("CALLOUT_SCENARIO_SEED");

  ValidateArgs val;
  auto* validate = app.add_subcommand("validate", "Run invariant suites");
  validate->add_option("--suite", val.suites, "Suite name (repeatable; default all)")->envname("CALLOUT_SUITE");
  validate->add_option("--seed", val.seed, "Suite seed")->envname("CALLOUT_SEED");
  validate->add_option("--duals", val.duals, "Check a duals file against --scenario")->envname("CALLOUT_DUALS");
  validate->add_option("--scenario", val.scenario, "Scenario the duals file belongs to")
      ->envname("CALLOUT_SCENARIO");
  validate->add_flag("--list", val.list, "List suites and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*generate) return cmd_generate(gen);
    if (*learn) return cmd_learn(learn_args);
    if (*simulate) return cmd_simulate(sim_run, sim_policy);
    if (*sweep_cmd) return cmd_sweep(sweep_args, sweep_run, sweep_policy);
    if (*validate) return cmd_validate(val);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
