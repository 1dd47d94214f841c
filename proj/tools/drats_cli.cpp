// Command-line front end: run, sweep, oracle, plot, schedule, suite.
//
// Exit codes: 0 success; 1 a run failed or an oracle check failed; 2 bad
// arguments or configuration.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drats/drats.hpp"

namespace fs = std::filesystem;
using namespace drats;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

void print_thresholds(const SweepSummary& s, double target) {
  std::printf("%-28s %14s %24s %9s\n", "method", "steps_to_target", "95% CI", "reached");
  for (const auto& t : s.thresholds)
    std::printf("%-28s %14.0f   [%9.0f, %9.0f] %4zu/%-4zu\n", t.method.c_str(), t.mean_steps, t.ci.low, t.ci.high,
                t.reached, t.n_runs);
  std::printf("(target mean exact success %.2f; runs that never reach it count as the full budget)\n", target);
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<std::string> out) {
  RunConfig cfg = load_run_config(config_path);
  if (seed) cfg.seed = *seed;
  if (out) cfg.output_dir = *out;
  if (cfg.run_id.empty()) cfg.run_id = cfg.label() + "-s" + std::to_string(cfg.seed);
  const RunResult r = run_training(cfg);
  const fs::path dir = fs::path(cfg.output_dir) / cfg.run_id;
  fs::create_directories(dir);
  write_records_file((dir / "records.csv").string(), {r});
  save_checkpoint(r.params, (dir / "params.txt").string());
  {
    std::ofstream cj(dir / "config.json");
    cj << to_json(cfg).dump(2) << '\n';
  }
  const RunCurve curve = curve_of(r);
  {
    Series s{cfg.label(), {}, {}, {}};
    for (std::size_t i = 0; i < curve.env_steps.size(); ++i) {
      s.x.push_back(static_cast<double>(curve.env_steps[i]));
      s.y.push_back(curve.mean_success[i]);
    }
    ChartOptions opt;
    opt.title = cfg.run_id;
    if (!s.x.empty()) write_svg((dir / "curve.svg").string(), {s}, opt);
  }
  const auto reached = steps_to_threshold(r.records, 0.95);
  std::printf("run %s: %zu iterations, %zu env steps, final mean success %.4f, steps to 0.95: %s\n",
              cfg.run_id.c_str(), r.records.size(), r.records.empty() ? 0 : r.records.back().env_steps,
              r.records.empty() ? 0.0 : r.records.back().mean_eval_success(),
              reached ? std::to_string(*reached).c_str() : "not reached");
  std::printf("outputs in %s\n", dir.string().c_str());
  if (r.failed) {
    std::fprintf(stderr, "run failed: %s\n", r.error.c_str());
    return kExitFailure;
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<std::size_t> n_seeds,
              std::optional<std::string> out, std::optional<int> parallelism) {
  SweepConfig sweep = load_sweep_config(config_path);
  if (seed) sweep.seeds = {*seed};
  if (n_seeds) {
    sweep.seeds.clear();
    for (std::uint64_t i = 0; i < *n_seeds; ++i) sweep.seeds.push_back(i);
  }
  if (out) sweep.output_dir = *out;
  if (parallelism) sweep.parallelism = *parallelism;
  require(sweep.parallelism >= 1, "--parallelism must be positive");
  std::printf("sweep: %zu methods x %zu seeds, parallelism %d\n", sweep.methods.size(), sweep.seeds.size(),
              sweep.parallelism);
  const SweepOutcome o = run_sweep(sweep);
  write_sweep_outputs(sweep.output_dir, o, fs::path(config_path).stem().string());
  print_thresholds(o.summary, sweep.success_target);
  std::printf("outputs in %s\n", sweep.output_dir.c_str());
  if (o.failures() > 0) {
    std::fprintf(stderr, "%zu run(s) failed; see %s/failures.txt\n", o.failures(), sweep.output_dir.c_str());
    return kExitFailure;
  }
  return 0;
}

int cmd_oracle(std::uint64_t seed, bool skip_convergence) {
  const auto checks = oracle::run_all_checks(seed, !skip_convergence);
  bool all = true;
  for (const auto& c : checks) {
    std::printf("%s  %-82s worst=%.3g tol=%.3g n=%zu (%.1fs)%s%s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                c.worst, c.tolerance, c.instances, c.seconds, c.detail.empty() ? "" : "  ", c.detail.c_str());
    all = all && c.passed;
  }
  return all ? 0 : kExitFailure;
}

int cmd_plot(const std::string& csv, const std::string& out, double target, std::optional<std::size_t> budget,
             const std::string& title) {
  const auto curves = read_curves(csv);
  require(!curves.empty(), "no runs in " + csv);
  std::size_t b = 0;
  for (const auto& c : curves)
    if (!c.env_steps.empty()) b = std::max(b, c.env_steps.back());
  if (budget) b = *budget;
  const auto summary = summarize(curves, b, target);
  ChartOptions opt;
  opt.title = title;
  write_svg(out, summary_series(summary), opt);
  print_thresholds(summary, target);
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

int cmd_schedule(double epsilon, std::size_t k, double M, double C, std::optional<std::size_t> T) {
  const auto s = theory_schedule(epsilon, k, M, C);
  std::printf("epsilon %.6g\nk       %zu\nM       %.6g\nC       %.6g\neta     %.10g\nG       %.10g\nT_min   %zu\n",
              s.epsilon, s.k, s.gap_bound, s.regret_constant, s.eta, s.lipschitz, s.t_min);
  std::printf("alpha   %.10g  (at T = T_min)\n", s.alpha);
  if (T) std::printf("alpha   %.10g  (at T = %zu)\n", s.alpha_for(*T), *T);
  return 0;
}

int cmd_suite(const std::vector<int>& profile, const std::string& out) {
  const GridSuite suite = build_gridworld_suite(profile);
  if (out.empty()) {
    std::cout << format_suite(suite);
  } else {
    save_suite(suite, out);
    std::printf("wrote %s\n", out.c_str());
  }
  for (std::size_t i = 0; i < suite.size(); ++i)
    std::fprintf(stderr, "task %zu: shortest path %d\n", i, shortest_path_length(suite.tasks[i]));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributionally robust adaptive task sampling lab"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_seeds;
  std::optional<std::string> out;
  std::optional<int> parallelism;

  auto* run = app.add_subcommand("run", "train one configuration");
  run->add_option("config", config, "run config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "override the seed");
  run->add_option("--out", out, "override the output directory");

  auto* sweep = app.add_subcommand("sweep", "train a method x seed matrix and summarize");
  sweep->add_option("config", config, "sweep config (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--seed", seed, "run only this seed");
  sweep->add_option("--seeds", n_seeds, "run seeds 0..N-1");
  sweep->add_option("--out", out, "override the output directory");
  sweep->add_option("--parallelism", parallelism, "worker threads");

  std::uint64_t oracle_seed = 1;
  bool skip_convergence = false;
  auto* orc = app.add_subcommand("oracle", "run the oracle check suites");
  orc->add_option("--seed", oracle_seed, "instance-generator seed");
  orc->add_flag("--skip-convergence", skip_convergence, "skip the synthetic convergence suite");

  std::string csv, svg_out, title;
  double target = 0.95;
  std::optional<std::size_t> budget;
  auto* plot = app.add_subcommand("plot", "re-render a summary chart from a records CSV");
  plot->add_option("csv", csv, "records CSV")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", svg_out, "output SVG")->required();
  plot->add_option("--target", target, "success target for the steps table");
  plot->add_option("--budget", budget, "env-step range of the chart");
  plot->add_option("--title", title, "chart title");

  double epsilon = 0.25, M = 1.0, C = 1.0;
  std::size_t k = 4;
  std::optional<std::size_t> T;
  auto* sched = app.add_subcommand("schedule", "print the theoretical step-size schedule");
  sched->add_option("--epsilon", epsilon, "target error")->required();
  sched->add_option("--k", k, "number of tasks")->required();
  sched->add_option("--M", M, "gap bound")->required();
  sched->add_option("--C", C, "parameter-player regret constant")->required();
  sched->add_option("--T", T, "also report alpha at this horizon");

  std::vector<int> profile{3, 6, 9, 12};
  std::string suite_out;
  auto* suite = app.add_subcommand("suite", "generate an open-board suite from a path-length profile");
  suite->add_option("--profile", profile, "shortest-path lengths")->delimiter(',');
  suite->add_option("--out", suite_out, "output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) return cmd_run(config, seed, out);
    if (*sweep) return cmd_sweep(config, seed, n_seeds, out, parallelism);
    if (*orc) return cmd_oracle(oracle_seed, skip_convergence);
    if (*plot) return cmd_plot(csv, svg_out, target, budget, title);
    if (*sched) return cmd_schedule(epsilon, k, M, C, T);
    if (*suite) return cmd_suite(profile, suite_out);
  } catch (const InvalidInput& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}
