#pragma once

// Task-conditioned softmax policies over gridworld cells.
//
//  * SharedMlp: one tanh hidden layer over one-hot(cell) ++ one-hot(task);
//    every task shares all weights.
//  * SeparateTabular: an independent logit table per task, so tasks share
//    nothing.
//
// Gradients are expressed through "logit gradients": for a fixed (cell, task)
// the parameter gradient is linear in d(objective)/d(logits), so callers
// accumulate logit gradients per (cell, task) and backpropagate each pair once.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "drats/error.hpp"
#include "drats/gridworld.hpp"
#include "drats/rng.hpp"

namespace drats {

enum class Architecture { SharedMlp, SeparateTabular };

inline const char* to_string(Architecture a) {
  return a == Architecture::SharedMlp ? "shared_mlp" : "separate_tabular";
}

inline Architecture parse_architecture(const std::string& s) {
  if (s == "shared" || s == "shared_mlp") return Architecture::SharedMlp;
  if (s == "separate" || s == "separate_tabular") return Architecture::SeparateTabular;
  throw InvalidInput("unknown architecture '" + s + "'");
}

using ActionProbs = std::array<double, kNumActions>;

class PolicyParams {
 public:
  PolicyParams() = default;

  PolicyParams(Architecture arch, int n_cells, int n_tasks, int hidden = 64)
      : arch_(arch), n_cells_(n_cells), n_tasks_(n_tasks), hidden_(arch == Architecture::SharedMlp ? hidden : 0) {
    require(n_cells >= 1 && n_tasks >= 1, "PolicyParams: empty state or task space");
    require(arch == Architecture::SeparateTabular || hidden >= 1, "PolicyParams: hidden width must be positive");
    weights_.assign(size_for(arch_, n_cells_, n_tasks_, hidden_), 0.0);
  }

  // Zero output layer (uniform initial policy) and hidden weights drawn from
  // uniform(-init_scale, init_scale).
  static PolicyParams initialized(Architecture arch, int n_cells, int n_tasks, int hidden, std::uint64_t seed,
                                  double init_scale = 0.05) {
    PolicyParams p(arch, n_cells, n_tasks, hidden);
    if (arch == Architecture::SharedMlp) {
      Engine rng = make_stream(seed, Purpose::Init);
      const std::size_t n_w1 = static_cast<std::size_t>(p.hidden_) * static_cast<std::size_t>(p.inputs());
      for (std::size_t i = 0; i < n_w1; ++i) p.weights_[i] = init_scale * (2.0 * uniform01(rng) - 1.0);
    }
    return p;
  }

  Architecture architecture() const { return arch_; }
  int n_cells() const { return n_cells_; }
  int n_tasks() const { return n_tasks_; }
  int hidden() const { return hidden_; }
  std::size_t size() const { return weights_.size(); }
  std::span<double> weights() { return weights_; }
  std::span<const double> weights() const { return weights_; }

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;

  std::array<double, kNumActions> logits(int cell, int task) const {
    check_ids(cell, task);
    std::array<double, kNumActions> z{};
    if (arch_ == Architecture::SeparateTabular) {
      const std::size_t base = tabular_offset(cell, task);
      for (int a = 0; a < kNumActions; ++a) z[static_cast<std::size_t>(a)] = weights_[base + static_cast<std::size_t>(a)];
      return z;
    }
    std::vector<double> h(static_cast<std::size_t>(hidden_));
    hidden_activations(cell, task, h);
    const double* w2 = &weights_[w2_offset()];
    const double* b2 = &weights_[b2_offset()];
    for (int a = 0; a < kNumActions; ++a) {
      double acc = b2[a];
      const double* row = w2 + static_cast<std::size_t>(a) * static_cast<std::size_t>(hidden_);
      for (int j = 0; j < hidden_; ++j) acc += row[j] * h[static_cast<std::size_t>(j)];
      z[static_cast<std::size_t>(a)] = acc;
    }
    return z;
  }

  // Softmax over action logits. Non-finite logits are a fault.
  ActionProbs action_probs(int cell, int task) const {
    const auto z = logits(cell, task);
    for (double v : z) {
      if (!std::isfinite(v))
        throw NumericFault("action_probs: non-finite logit at cell " + std::to_string(cell) + ", task " +
                           std::to_string(task));
    }
    return softmax(z);
  }

  static ActionProbs softmax(const std::array<double, kNumActions>& z) {
    const double top = *std::max_element(z.begin(), z.end());
    ActionProbs p{};
    double total = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a) {
      p[a] = std::exp(z[a] - top);
      total += p[a];
    }
    for (double& v : p) v /= total;
    return p;
  }

  // grad += J^T dlogits for the given (cell, task).
  void backprop(int cell, int task, const std::array<double, kNumActions>& dlogits, std::span<double> grad) const {
    check_ids(cell, task);
    require(grad.size() == weights_.size(), "backprop: gradient has the wrong size");
    if (arch_ == Architecture::SeparateTabular) {
      const std::size_t base = tabular_offset(cell, task);
      for (int a = 0; a < kNumActions; ++a) grad[base + static_cast<std::size_t>(a)] += dlogits[static_cast<std::size_t>(a)];
      return;
    }
    const auto H = static_cast<std::size_t>(hidden_);
    std::vector<double> h(H);
    hidden_activations(cell, task, h);
    double* gw2 = &grad[w2_offset()];
    double* gb2 = &grad[b2_offset()];
    const double* w2 = &weights_[w2_offset()];
    std::vector<double> dpre(H, 0.0);
    for (int a = 0; a < kNumActions; ++a) {
      const double d = dlogits[static_cast<std::size_t>(a)];
      if (d == 0.0) continue;
      gb2[a] += d;
      double* grow = gw2 + static_cast<std::size_t>(a) * H;
      const double* wrow = w2 + static_cast<std::size_t>(a) * H;
      for (std::size_t j = 0; j < H; ++j) {
        grow[j] += d * h[j];
        dpre[j] += d * wrow[j];
      }
    }
    const auto in = static_cast<std::size_t>(inputs());
    double* gw1 = &grad[0];
    double* gb1 = &grad[b1_offset()];
    const auto cell_col = static_cast<std::size_t>(cell);
    const auto task_col = static_cast<std::size_t>(n_cells_ + task);
    for (std::size_t j = 0; j < H; ++j) {
      const double g = dpre[j] * (1.0 - h[j] * h[j]);
      gw1[j * in + cell_col] += g;
      gw1[j * in + task_col] += g;
      gb1[j] += g;
    }
  }

  // Index range of the parameters that only task `task` uses (SeparateTabular).
  std::pair<std::size_t, std::size_t> task_block(int task) const {
    require(arch_ == Architecture::SeparateTabular, "task_block: only separate parameters have task blocks");
    const std::size_t block = static_cast<std::size_t>(n_cells_) * kNumActions;
    return {static_cast<std::size_t>(task) * block, static_cast<std::size_t>(task + 1) * block};
  }

 private:
  static std::size_t size_for(Architecture arch, int n_cells, int n_tasks, int hidden) {
    if (arch == Architecture::SeparateTabular)
      return static_cast<std::size_t>(n_tasks) * static_cast<std::size_t>(n_cells) * kNumActions;
    const auto H = static_cast<std::size_t>(hidden);
    const auto in = static_cast<std::size_t>(n_cells + n_tasks);
    return H * in + H + kNumActions * H + kNumActions;
  }

  int inputs() const { return n_cells_ + n_tasks_; }
  std::size_t b1_offset() const { return static_cast<std::size_t>(hidden_) * static_cast<std::size_t>(inputs()); }
  std::size_t w2_offset() const { return b1_offset() + static_cast<std::size_t>(hidden_); }
  std::size_t b2_offset() const { return w2_offset() + kNumActions * static_cast<std::size_t>(hidden_); }
  std::size_t tabular_offset(int cell, int task) const {
    return (static_cast<std::size_t>(task) * static_cast<std::size_t>(n_cells_) + static_cast<std::size_t>(cell)) *
           kNumActions;
  }

  void check_ids(int cell, int task) const {
    if (cell < 0 || cell >= n_cells_ || task < 0 || task >= n_tasks_)
      throw InvalidInput("policy: cell " + std::to_string(cell) + " / task " + std::to_string(task) + " out of range");
  }

  void hidden_activations(int cell, int task, std::span<double> h) const {
    const auto in = static_cast<std::size_t>(inputs());
    const double* w1 = &weights_[0];
    const double* b1 = &weights_[b1_offset()];
    const auto cell_col = static_cast<std::size_t>(cell);
    const auto task_col = static_cast<std::size_t>(n_cells_ + task);
    for (std::size_t j = 0; j < h.size(); ++j) h[j] = std::tanh(w1[j * in + cell_col] + w1[j * in + task_col] + b1[j]);
  }

  Architecture arch_ = Architecture::SharedMlp;
  int n_cells_ = 0;
  int n_tasks_ = 0;
  int hidden_ = 0;
  std::vector<double> weights_;
};

// Action probabilities for every (task, cell), laid out [task][cell][action].
// The policy is frozen during rollout collection, so one table serves a
// whole batch.
class ActionTable {
 public:
  explicit ActionTable(const PolicyParams& params)
      : n_cells_(params.n_cells()), probs_(static_cast<std::size_t>(params.n_tasks() * params.n_cells()) * kNumActions) {
    for (int task = 0; task < params.n_tasks(); ++task) {
      for (int cell = 0; cell < params.n_cells(); ++cell) {
        const auto p = params.action_probs(cell, task);
        std::copy(p.begin(), p.end(), &probs_[offset(cell, task)]);
      }
    }
  }

  const double* row(int cell, int task) const { return &probs_[offset(cell, task)]; }

 private:
  std::size_t offset(int cell, int task) const {
    return (static_cast<std::size_t>(task) * static_cast<std::size_t>(n_cells_) + static_cast<std::size_t>(cell)) *
           kNumActions;
  }
  int n_cells_;
  std::vector<double> probs_;
};

// ---------------------------------------------------------------------------
// Checkpoints: a versioned text artifact.
//
//   drats-policy 1
//   architecture shared_mlp
//   cells 49
//   tasks 4
//   hidden 64
//   weights 3460
//   <one weight per line, 17 significant digits>

inline std::string format_checkpoint(const PolicyParams& p) {
  std::ostringstream os;
  os << "drats-policy 1\n";
  os << "architecture " << to_string(p.architecture()) << "\n";
  os << "cells " << p.n_cells() << "\n";
  os << "tasks " << p.n_tasks() << "\n";
  os << "hidden " << p.hidden() << "\n";
  os << "weights " << p.size() << "\n";
  os << std::setprecision(17);
  for (double w : p.weights()) os << w << "\n";
  return os.str();
}

inline PolicyParams parse_checkpoint(const std::string& text) {
  std::istringstream is(text);
  std::string tag, arch_name;
  int version = 0, cells = 0, tasks = 0, hidden = 0;
  std::size_t n = 0;
  auto expect = [&](const char* key) {
    std::string k;
    is >> k;
    if (k != key) throw InvalidInput(std::string("checkpoint: expected '") + key + "', got '" + k + "'");
  };
  is >> tag >> version;
  require(tag == "drats-policy" && version == 1, "checkpoint: bad header");
  expect("architecture");
  is >> arch_name;
  expect("cells");
  is >> cells;
  expect("tasks");
  is >> tasks;
  expect("hidden");
  is >> hidden;
  expect("weights");
  is >> n;
  const Architecture arch = parse_architecture(arch_name);
  PolicyParams p(arch, cells, tasks, arch == Architecture::SharedMlp ? hidden : 1);
  require(n == p.size(), "checkpoint: weight count does not match the architecture");
  for (double& w : p.weights()) {
    require(static_cast<bool>(is >> w), "checkpoint: truncated weight list");
  }
  return p;
}

inline void save_checkpoint(const PolicyParams& p, const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot write checkpoint '" + path + "'");
  out << format_checkpoint(p);
}

inline PolicyParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open checkpoint '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

}  // namespace drats
