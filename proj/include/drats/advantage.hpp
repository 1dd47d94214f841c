#pragma once

// Returns-to-go, the per-(cell, task) value baseline, and advantage
// normalization (per task or global).

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "drats/error.hpp"
#include "drats/gridworld.hpp"

namespace drats {

inline std::vector<double> returns_to_go(const Trajectory& traj, double gamma) {
  std::vector<double> g(traj.length());
  double acc = 0.0;
  for (std::size_t t = traj.length(); t-- > 0;) {
    acc = traj.steps[t].reward + gamma * acc;
    g[t] = acc;
  }
  return g;
}

// Tabular state-value estimates per (cell, task), regressed toward Monte Carlo
// returns-to-go.
class ValueBaseline {
 public:
  ValueBaseline() = default;
  ValueBaseline(int n_cells, int n_tasks, double learning_rate)
      : n_cells_(n_cells), n_tasks_(n_tasks), lr_(learning_rate),
        values_(static_cast<std::size_t>(n_cells) * static_cast<std::size_t>(n_tasks), 0.0) {
    require(n_cells >= 1 && n_tasks >= 1, "ValueBaseline: empty table");
    require(learning_rate >= 0.0 && learning_rate <= 1.0, "ValueBaseline: learning rate outside [0,1]");
  }

  double value(int cell, int task) const { return values_[index(cell, task)]; }
  void set_value(int cell, int task, double v) { values_[index(cell, task)] = v; }
  double learning_rate() const { return lr_; }
  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const ValueBaseline&, const ValueBaseline&) = default;

  // Moves every visited (cell, task) toward the batch mean of its
  // returns-to-go by the learning rate.
  ValueBaseline updated(std::span<const Trajectory> batch, double gamma) const {
    require(!batch.empty(), "value_baseline_update: empty batch");
    std::vector<double> sum(values_.size(), 0.0);
    std::vector<std::size_t> count(values_.size(), 0);
    for (const auto& traj : batch) {
      const auto g = returns_to_go(traj, gamma);
      for (std::size_t t = 0; t < traj.length(); ++t) {
        const std::size_t i = index(traj.steps[t].state, traj.task);
        sum[i] += g[t];
        ++count[i];
      }
    }
    ValueBaseline next = *this;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (count[i] == 0) continue;
      const double target = sum[i] / static_cast<double>(count[i]);
      next.values_[i] += lr_ * (target - values_[i]);
    }
    return next;
  }

 private:
  std::size_t index(int cell, int task) const {
    require(cell >= 0 && cell < n_cells_ && task >= 0 && task < n_tasks_, "ValueBaseline: index out of range");
    return static_cast<std::size_t>(task) * static_cast<std::size_t>(n_cells_) + static_cast<std::size_t>(cell);
  }

  int n_cells_ = 0;
  int n_tasks_ = 0;
  double lr_ = 0.1;
  std::vector<double> values_;
};

inline ValueBaseline value_baseline_update(const ValueBaseline& baseline, std::span<const Trajectory> batch,
                                           double gamma) {
  return baseline.updated(batch, gamma);
}

// Per-transition advantages, one vector per trajectory, plus the statistics
// used to normalize each group.
struct AdvantageBatch {
  std::vector<std::vector<double>> values;
  std::vector<double> group_mean;
  std::vector<double> group_std;
};

inline constexpr double kAdvantageStdFloor = 1e-8;

namespace detail {

inline AdvantageBatch normalize_groups(std::span<const std::vector<double>> raw, std::span<const int> group_of,
                                       int n_groups) {
  require(raw.size() == group_of.size(), "advantage normalization: one group id per trajectory required");
  const auto G = static_cast<std::size_t>(n_groups);
  std::vector<double> sum(G, 0.0), sq(G, 0.0);
  std::vector<std::size_t> count(G, 0);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const int g = group_of[i];
    require(g >= 0 && g < n_groups, "advantage normalization: group id out of range");
    for (double a : raw[i]) {
      sum[static_cast<std::size_t>(g)] += a;
      ++count[static_cast<std::size_t>(g)];
    }
  }
  AdvantageBatch out;
  out.group_mean.assign(G, 0.0);
  out.group_std.assign(G, 0.0);
  for (std::size_t g = 0; g < G; ++g)
    if (count[g] > 0) out.group_mean[g] = sum[g] / static_cast<double>(count[g]);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto g = static_cast<std::size_t>(group_of[i]);
    for (double a : raw[i]) sq[g] += (a - out.group_mean[g]) * (a - out.group_mean[g]);
  }
  for (std::size_t g = 0; g < G; ++g)
    if (count[g] > 0) out.group_std[g] = std::sqrt(sq[g] / static_cast<double>(count[g]));
  out.values.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto g = static_cast<std::size_t>(group_of[i]);
    auto& dst = out.values[i];
    dst.resize(raw[i].size());
    if (out.group_std[g] < kAdvantageStdFloor) {
      std::fill(dst.begin(), dst.end(), 0.0);
      continue;
    }
    for (std::size_t t = 0; t < raw[i].size(); ++t)
      dst[t] = (raw[i][t] - out.group_mean[g]) / (out.group_std[g] + kAdvantageStdFloor);
  }
  return out;
}

}  // namespace detail

// Standardizes advantages within each task's transitions.
inline AdvantageBatch per_task_advantage_normalize(std::span<const std::vector<double>> raw,
                                                   std::span<const int> task_of, int n_tasks) {
  return detail::normalize_groups(raw, task_of, n_tasks);
}

// Standardizes advantages over the whole batch.
inline AdvantageBatch global_advantage_normalize(std::span<const std::vector<double>> raw) {
  const std::vector<int> zeros(raw.size(), 0);
  return detail::normalize_groups(raw, zeros, 1);
}

}  // namespace drats
