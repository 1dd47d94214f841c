#pragma once

// Long-format run-record tables: one row per (iteration, task).

#include <charconv>
#include <cstddef>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "drats/error.hpp"
#include "drats/training.hpp"

namespace drats {

inline constexpr const char* kRecordHeader =
    "run_id,seed,method,iteration,env_steps,task,return_mean,success_rate,q,gap,j_ref,episodes,eval_success,eval_return";

// Shortest round-trip decimal form, independent of locale.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  require(res.ec == std::errc(), "format_double: conversion failed");
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  require(res.ec == std::errc() && res.ptr == s.data() + s.size(), "malformed number '" + s + "'");
  return v;
}

inline void write_records(std::ostream& os, const RunResult& run) {
  const auto& c = run.config;
  const std::string prefix = c.run_id + "," + std::to_string(c.seed) + "," + c.label() + ",";
  for (const auto& r : run.records) {
    for (std::size_t i = 0; i < r.q.size(); ++i) {
      os << prefix << r.iteration << ',' << r.env_steps << ',' << i << ',' << format_double(r.return_mean[i]) << ','
         << format_double(r.success_rate[i]) << ',' << format_double(r.q[i]) << ',' << format_double(r.gap[i]) << ','
         << format_double(r.j_ref[i]) << ',' << r.episodes[i] << ',' << format_double(r.eval_success[i]) << ','
         << format_double(r.eval_return[i]) << '\n';
    }
  }
}

inline void write_records_file(const std::string& path, const std::vector<RunResult>& runs) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), "cannot write " + path);
  os << kRecordHeader << '\n';
  for (const auto& run : runs) write_records(os, run);
}

// Per-run curve of mean exact success across tasks, as read back from a CSV.
struct RunCurve {
  std::string run_id;
  std::string method;
  std::uint64_t seed = 0;
  std::vector<std::size_t> env_steps;
  std::vector<double> mean_success;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::vector<RunCurve> read_curves(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "empty CSV " + path);
  const auto header = split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* need : {"run_id", "seed", "method", "iteration", "env_steps", "task", "eval_success"})
    require(col.count(need) > 0, std::string("CSV is missing column ") + need);

  std::vector<RunCurve> curves;
  std::map<std::string, std::size_t> index;
  // (run, iteration) -> running sum and count of eval_success
  std::vector<std::vector<std::pair<double, int>>> sums;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    require(f.size() == header.size(), path + ":" + std::to_string(line_no) + ": wrong number of fields");
    const std::string& id = f[col["run_id"]];
    auto it = index.find(id);
    if (it == index.end()) {
      it = index.emplace(id, curves.size()).first;
      RunCurve c;
      c.run_id = id;
      c.method = f[col["method"]];
      c.seed = std::stoull(f[col["seed"]]);
      curves.push_back(std::move(c));
      sums.emplace_back();
    }
    RunCurve& c = curves[it->second];
    auto& s = sums[it->second];
    const auto iter = static_cast<std::size_t>(std::stoull(f[col["iteration"]]));
    if (iter >= s.size()) {
      s.resize(iter + 1, {0.0, 0});
      c.env_steps.resize(iter + 1, 0);
    }
    c.env_steps[iter] = static_cast<std::size_t>(std::stoull(f[col["env_steps"]]));
    s[iter].first += parse_double(f[col["eval_success"]]);
    ++s[iter].second;
  }
  for (std::size_t r = 0; r < curves.size(); ++r) {
    curves[r].mean_success.resize(sums[r].size());
    for (std::size_t i = 0; i < sums[r].size(); ++i)
      curves[r].mean_success[i] = sums[r][i].second ? sums[r][i].first / sums[r][i].second : 0.0;
  }
  return curves;
}

inline RunCurve curve_of(const RunResult& run) {
  RunCurve c;
  c.run_id = run.config.run_id;
  c.method = run.config.label();
  c.seed = run.config.seed;
  for (const auto& r : run.records) {
    c.env_steps.push_back(r.env_steps);
    c.mean_success.push_back(r.mean_eval_success());
  }
  return c;
}

}  // namespace drats
