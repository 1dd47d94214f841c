#pragma once

// Multi-run sweeps: runs are independent, so they are spread over a worker
// pool and stored by index; outputs never depend on the worker count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "drats/config.hpp"
#include "drats/csv.hpp"
#include "drats/metrics.hpp"
#include "drats/rng.hpp"
#include "drats/svg.hpp"
#include "drats/training.hpp"

namespace drats {

// Runs every config; a throwing run is recorded as failed and the rest go on.
inline std::vector<RunResult> run_all(const std::vector<RunConfig>& configs, int parallelism) {
  require(parallelism >= 1, "run_all: parallelism must be positive");
  std::vector<RunResult> results(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        results[i] = run_training(configs[i]);
      } catch (const std::exception& e) {
        results[i].config = configs[i];
        results[i].failed = true;
        results[i].error = e.what();
      }
    }
  };
  const auto n = static_cast<std::size_t>(parallelism);
  if (n == 1 || configs.size() <= 1) {
    worker();
    return results;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(n, configs.size()); ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return results;
}

// Value of a step-function curve at `x`: the last point with env_steps <= x,
// or the first point when x precedes the curve.
inline double curve_value_at(const RunCurve& c, std::size_t x) {
  require(!c.env_steps.empty(), "curve_value_at: empty curve");
  const auto it = std::upper_bound(c.env_steps.begin(), c.env_steps.end(), x);
  const std::size_t i = it == c.env_steps.begin() ? 0 : static_cast<std::size_t>(it - c.env_steps.begin()) - 1;
  return c.mean_success[i];
}

inline std::optional<std::size_t> curve_steps_to(const RunCurve& c, double target) {
  for (std::size_t i = 0; i < c.env_steps.size(); ++i)
    if (c.mean_success[i] >= target) return c.env_steps[i];
  return std::nullopt;
}

struct CurveSummary {
  std::string method;
  std::vector<std::size_t> grid;
  std::vector<double> mean;
  std::vector<Interval> ci;
  std::size_t n_runs = 0;
};

struct ThresholdSummary {
  std::string method;
  double mean_steps = 0.0;  // unreached runs count as the budget
  Interval ci;
  std::size_t reached = 0;
  std::size_t n_runs = 0;
};

struct SweepSummary {
  std::vector<CurveSummary> curves;
  std::vector<ThresholdSummary> thresholds;
};

inline std::vector<std::string> methods_in_order(const std::vector<RunCurve>& curves) {
  std::vector<std::string> out;
  for (const auto& c : curves)
    if (std::find(out.begin(), out.end(), c.method) == out.end()) out.push_back(c.method);
  return out;
}

// Per-method mean success curves on a shared env-step grid with bootstrap
// intervals, plus steps-to-target statistics. Bootstrap streams are keyed by
// (method index, grid index), so the summary is a pure function of the curves.
inline SweepSummary summarize(const std::vector<RunCurve>& curves, std::size_t budget, double target,
                              double ci_level = 0.95, std::size_t resamples = 10000, std::size_t grid_points = 50) {
  SweepSummary out;
  const auto methods = methods_in_order(curves);
  std::vector<std::size_t> grid(grid_points);
  for (std::size_t g = 0; g < grid_points; ++g) grid[g] = budget * (g + 1) / grid_points;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    std::vector<const RunCurve*> mine;
    for (const auto& c : curves)
      if (c.method == methods[m] && !c.env_steps.empty()) mine.push_back(&c);
    CurveSummary cs;
    cs.method = methods[m];
    cs.grid = grid;
    cs.n_runs = mine.size();
    ThresholdSummary ts;
    ts.method = methods[m];
    ts.n_runs = mine.size();
    if (mine.empty()) {
      out.curves.push_back(cs);
      out.thresholds.push_back(ts);
      continue;
    }
    for (std::size_t g = 0; g < grid.size(); ++g) {
      std::vector<double> v;
      for (const auto* c : mine) v.push_back(curve_value_at(*c, grid[g]));
      cs.mean.push_back(mean(v));
      if (v.size() >= 2) {
        Engine rng = make_stream(0, Purpose::Bootstrap, m, g);
        cs.ci.push_back(bootstrap_ci(v, ci_level, resamples, rng));
      } else {
        cs.ci.push_back({v[0], v[0]});
      }
    }
    std::vector<double> steps;
    for (const auto* c : mine) {
      const auto s = curve_steps_to(*c, target);
      ts.reached += s.has_value();
      steps.push_back(static_cast<double>(s.value_or(budget)));
    }
    ts.mean_steps = mean(steps);
    if (steps.size() >= 2) {
      Engine rng = make_stream(0, Purpose::Bootstrap, m, 0xFFFF);
      ts.ci = bootstrap_ci(steps, ci_level, resamples, rng);
    } else {
      ts.ci = {steps[0], steps[0]};
    }
    out.curves.push_back(std::move(cs));
    out.thresholds.push_back(ts);
  }
  return out;
}

inline void write_summary_csv(const std::string& path, const SweepSummary& s) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), "cannot write " + path);
  os << "method,env_steps,mean_success,ci_low,ci_high,n_runs\n";
  for (const auto& c : s.curves)
    for (std::size_t g = 0; g < c.mean.size(); ++g)
      os << c.method << ',' << c.grid[g] << ',' << format_double(c.mean[g]) << ',' << format_double(c.ci[g].low) << ','
         << format_double(c.ci[g].high) << ',' << c.n_runs << '\n';
}

inline void write_threshold_csv(const std::string& path, const SweepSummary& s) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), "cannot write " + path);
  os << "method,mean_steps,ci_low,ci_high,reached,n_runs\n";
  for (const auto& t : s.thresholds)
    os << t.method << ',' << format_double(t.mean_steps) << ',' << format_double(t.ci.low) << ','
       << format_double(t.ci.high) << ',' << t.reached << ',' << t.n_runs << '\n';
}

struct SweepOutcome {
  std::vector<RunResult> runs;
  SweepSummary summary;
  std::size_t budget = 0;

  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [](const RunResult& r) { return r.failed; }));
  }
};

inline SweepOutcome run_sweep(const SweepConfig& sweep) {
  const auto configs = sweep.expand();
  SweepOutcome out;
  out.runs = run_all(configs, sweep.parallelism);
  std::vector<RunCurve> curves;
  for (const auto& r : out.runs) {
    out.budget = std::max(out.budget, r.config.total_env_steps);
    curves.push_back(curve_of(r));
  }
  out.summary = summarize(curves, out.budget, sweep.success_target, sweep.ci_level, sweep.bootstrap_resamples);
  return out;
}

inline std::vector<Series> summary_series(const SweepSummary& s) {
  std::vector<Series> out;
  for (const auto& c : s.curves) {
    Series ser;
    ser.label = c.method;
    for (std::size_t g = 0; g < c.mean.size(); ++g) {
      ser.x.push_back(static_cast<double>(c.grid[g]));
      ser.y.push_back(c.mean[g]);
    }
    ser.band = c.ci;
    out.push_back(std::move(ser));
  }
  return out;
}

// records.csv, summary.csv, thresholds.csv, curves.svg and, when any run
// failed, failures.txt.
inline void write_sweep_outputs(const std::string& dir, const SweepOutcome& o, const std::string& title = "") {
  std::filesystem::create_directories(dir);
  const std::filesystem::path d(dir);
  write_records_file((d / "records.csv").string(), o.runs);
  write_summary_csv((d / "summary.csv").string(), o.summary);
  write_threshold_csv((d / "thresholds.csv").string(), o.summary);
  ChartOptions opt;
  opt.title = title;
  write_svg((d / "curves.svg").string(), summary_series(o.summary), opt);
  const auto failures_path = d / "failures.txt";
  if (o.failures() > 0) {
    std::ofstream f(failures_path);
    for (const auto& r : o.runs)
      if (r.failed) f << r.config.run_id << ": " << r.error << '\n';
  } else {
    std::filesystem::remove(failures_path);
  }
}

}  // namespace drats
