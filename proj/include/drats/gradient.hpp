#pragma once

// Policy-gradient estimators and their exact counterparts:
//  * reinforce_gradient: analytic gradient of the surrogate
//      (1/N) sum_episodes sum_t A_t log pi(a_t | s_t, task)
//  * exact_policy_gradient: grad J by finite-horizon dynamic programming
//  * gradient_cosine_accuracy: cosine between Monte Carlo and exact gradients

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "drats/error.hpp"
#include "drats/gridworld.hpp"
#include "drats/policy.hpp"
#include "drats/rng.hpp"
#include "drats/tabular.hpp"

namespace drats {

// Accumulates d(objective)/d(logits) per (task, cell), then backpropagates
// each touched pair once.
class LogitGradientTable {
 public:
  LogitGradientTable(int n_cells, int n_tasks)
      : n_cells_(n_cells), table_(static_cast<std::size_t>(n_cells) * static_cast<std::size_t>(n_tasks)),
        touched_(table_.size(), false) {}

  std::array<double, kNumActions>& at(int cell, int task) {
    const std::size_t i = static_cast<std::size_t>(task) * static_cast<std::size_t>(n_cells_) + static_cast<std::size_t>(cell);
    touched_[i] = true;
    return table_[i];
  }

  std::vector<double> backprop(const PolicyParams& params, double scale = 1.0) const {
    std::vector<double> grad(params.size(), 0.0);
    for (std::size_t i = 0; i < table_.size(); ++i) {
      if (!touched_[i]) continue;
      auto d = table_[i];
      for (double& v : d) v *= scale;
      params.backprop(static_cast<int>(i % static_cast<std::size_t>(n_cells_)),
                      static_cast<int>(i / static_cast<std::size_t>(n_cells_)), d, grad);
    }
    return grad;
  }

  void clear() {
    std::fill(table_.begin(), table_.end(), std::array<double, kNumActions>{});
    std::fill(touched_.begin(), touched_.end(), false);
  }

 private:
  int n_cells_;
  std::vector<std::array<double, kNumActions>> table_;
  std::vector<bool> touched_;
};

namespace detail {

inline double entropy(const ActionProbs& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

inline void check_alignment(std::span<const Trajectory> batch, std::span<const std::vector<double>> advantages) {
  require(batch.size() == advantages.size(), "reinforce_gradient: one advantage vector per trajectory required");
  for (std::size_t i = 0; i < batch.size(); ++i)
    require(batch[i].length() == advantages[i].size(), "reinforce_gradient: advantages not aligned to transitions");
}

}  // namespace detail

// (1/N) sum_i sum_t [A_t log pi(a_t|s_t) + entropy_coef * H(pi(.|s_t))]
inline double reinforce_surrogate(const PolicyParams& params, std::span<const Trajectory> batch,
                                  std::span<const std::vector<double>> advantages, double entropy_coef = 0.0) {
  detail::check_alignment(batch, advantages);
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t t = 0; t < batch[i].length(); ++t) {
      const auto& tr = batch[i].steps[t];
      const auto p = params.action_probs(tr.state, batch[i].task);
      total += advantages[i][t] * std::log(p[static_cast<std::size_t>(tr.action)]);
      if (entropy_coef != 0.0) total += entropy_coef * detail::entropy(p);
    }
  }
  return total / static_cast<double>(batch.size());
}

// Analytic gradient of reinforce_surrogate with respect to the parameters.
inline std::vector<double> reinforce_gradient(const PolicyParams& params, std::span<const Trajectory> batch,
                                              std::span<const std::vector<double>> advantages,
                                              double entropy_coef = 0.0) {
  detail::check_alignment(batch, advantages);
  std::vector<double> zero(params.size(), 0.0);
  if (batch.empty()) return zero;
  LogitGradientTable table(params.n_cells(), params.n_tasks());
  const ActionTable probs(params);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const int task = batch[i].task;
    for (std::size_t t = 0; t < batch[i].length(); ++t) {
      const auto& tr = batch[i].steps[t];
      const double* p = probs.row(tr.state, task);
      const double adv = advantages[i][t];
      if (adv == 0.0 && entropy_coef == 0.0) continue;
      auto& d = table.at(tr.state, task);
      for (int a = 0; a < kNumActions; ++a) d[static_cast<std::size_t>(a)] -= adv * p[a];
      d[static_cast<std::size_t>(tr.action)] += adv;
      if (entropy_coef != 0.0) {
        double h = 0.0;
        for (int a = 0; a < kNumActions; ++a)
          if (p[a] > 0.0) h -= p[a] * std::log(p[a]);
        for (int a = 0; a < kNumActions; ++a)
          if (p[a] > 0.0) d[static_cast<std::size_t>(a)] -= entropy_coef * p[a] * (std::log(p[a]) + h);
      }
    }
  }
  return table.backprop(params, 1.0 / static_cast<double>(batch.size()));
}

// Per-MDP-state action distribution of `task` under `params`.
inline TabularPolicy tabular_policy(const TabularMDP& mdp, const PolicyParams& params, int task) {
  TabularPolicy pol(static_cast<std::size_t>(mdp.n_states));
  for (int s = 0; s < mdp.n_states; ++s) {
    const auto p = params.action_probs(mdp.state_cell[static_cast<std::size_t>(s)], task);
    pol[static_cast<std::size_t>(s)].assign(p.begin(), p.end());
  }
  return pol;
}

// grad_theta J_task(theta) for the finite-horizon discounted return:
//   sum_t gamma^t sum_s d_t(s) sum_a pi(a|s) (Q_t(s,a) - V_t(s)) grad log pi(a|s)
inline std::vector<double> exact_policy_gradient(const TabularMDP& mdp, const PolicyParams& params, int task,
                                                 int horizon) {
  require(mdp.n_actions == kNumActions, "exact_policy_gradient: action count mismatch");
  require(horizon >= 0, "exact_policy_gradient: negative horizon");
  std::vector<double> grad(params.size(), 0.0);
  if (horizon == 0) return grad;
  const TabularPolicy pol = tabular_policy(mdp, params, task);
  const auto vals = backward_induction(mdp, pol, horizon, mdp.gamma);
  const auto occ = state_occupancy(mdp, pol, horizon);
  const auto A = static_cast<std::size_t>(mdp.n_actions);
  LogitGradientTable table(params.n_cells(), params.n_tasks());
  double discount = 1.0;
  for (int t = 0; t < horizon; ++t, discount *= mdp.gamma) {
    for (int s = 0; s < mdp.n_states; ++s) {
      const auto su = static_cast<std::size_t>(s);
      const double w = discount * occ[static_cast<std::size_t>(t)][su];
      if (w == 0.0 || mdp.terminal[su]) continue;
      const double v = vals.value[static_cast<std::size_t>(t)][su];
      auto& d = table.at(mdp.state_cell[su], task);
      for (std::size_t a = 0; a < A; ++a) d[a] += w * pol[su][a] * (vals.q[static_cast<std::size_t>(t)][su * A + a] - v);
    }
  }
  return table.backprop(params);
}

// One episode sampled directly from the tabular MDP. States are reported as
// grid cells so trajectories are interchangeable with gridworld rollouts.
inline Trajectory rollout_tabular(const TabularMDP& mdp, const TabularPolicy& policy, int task, int horizon,
                                  Engine& rng) {
  Trajectory traj;
  traj.task = task;
  int s = sample_index(mdp.initial_dist.data(), mdp.n_states, rng);
  for (int t = 0; t < horizon; ++t) {
    if (mdp.terminal[static_cast<std::size_t>(s)]) break;
    const int a = sample_index(policy[static_cast<std::size_t>(s)].data(), mdp.n_actions, rng);
    const auto& succ = mdp.successors[static_cast<std::size_t>(s) * static_cast<std::size_t>(mdp.n_actions) + static_cast<std::size_t>(a)];
    int s2 = succ.front().first;
    if (succ.size() > 1) {
      const double u = uniform01(rng);
      double acc = 0.0;
      for (const auto& [cand, p] : succ) {
        acc += p;
        s2 = cand;
        if (u < acc) break;
      }
    }
    traj.steps.push_back({mdp.state_cell[static_cast<std::size_t>(s)], a, mdp.r(s, a)});
    s = s2;
    if (mdp.terminal[static_cast<std::size_t>(s)]) {
      traj.terminated = traj.success = true;
      break;
    }
  }
  if (!traj.terminated) traj.truncated = !traj.steps.empty();
  traj.final_state = mdp.state_cell[static_cast<std::size_t>(s)];
  return traj;
}

// Per-step weights gamma^t G_t: with these as advantages, reinforce_gradient
// is an unbiased estimate of the exact gradient.
inline std::vector<double> discounted_returns_weights(const Trajectory& traj, double gamma) {
  std::vector<double> w(traj.length());
  double acc = 0.0;
  for (std::size_t t = traj.length(); t-- > 0;) {
    acc = traj.steps[t].reward + gamma * acc;
    w[t] = acc;
  }
  double discount = 1.0;
  for (double& v : w) {
    v *= discount;
    discount *= gamma;
  }
  return w;
}

inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "cosine_similarity: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

struct AccuracyPoint {
  std::size_t n_episodes = 0;
  double mean_cosine = 0.0;
  std::vector<double> cosines;  // one per repeat, in repeat order
};

// For each sample size n, the cosine between the n-episode Monte Carlo
// REINFORCE gradient and the exact gradient, averaged over `repeats`. Within a
// repeat the n-episode estimates are nested prefixes of one episode stream.
inline std::vector<AccuracyPoint> gradient_cosine_accuracy(const TabularMDP& mdp, const PolicyParams& params, int task,
                                                           std::vector<std::size_t> sample_sizes, int repeats,
                                                           std::uint64_t seed) {
  require(!sample_sizes.empty(), "gradient_cosine_accuracy: no sample sizes");
  require(repeats >= 1, "gradient_cosine_accuracy: repeats must be positive");
  for (std::size_t n : sample_sizes)
    if (n == 0) throw Undefined("gradient_cosine_accuracy: cosine similarity undefined for zero episodes");
  std::sort(sample_sizes.begin(), sample_sizes.end());
  const auto exact = exact_policy_gradient(mdp, params, task, mdp.horizon);
  if (std::all_of(exact.begin(), exact.end(), [](double v) { return v == 0.0; }))
    throw Undefined("gradient_cosine_accuracy: exact gradient is zero");

  const TabularPolicy pol = tabular_policy(mdp, params, task);
  std::vector<AccuracyPoint> curve(sample_sizes.size());
  for (std::size_t j = 0; j < sample_sizes.size(); ++j) curve[j].n_episodes = sample_sizes[j];

  LogitGradientTable table(params.n_cells(), params.n_tasks());
  for (int rep = 0; rep < repeats; ++rep) {
    table.clear();
    Engine rng = make_stream(seed, Purpose::Gradient, static_cast<std::uint64_t>(task), static_cast<std::uint64_t>(rep));
    std::size_t drawn = 0;
    for (std::size_t j = 0; j < sample_sizes.size(); ++j) {
      for (; drawn < sample_sizes[j]; ++drawn) {
        const Trajectory traj = rollout_tabular(mdp, pol, task, mdp.horizon, rng);
        const auto w = discounted_returns_weights(traj, mdp.gamma);
        for (std::size_t t = 0; t < traj.length(); ++t) {
          const auto& tr = traj.steps[t];
          const int s = mdp.cell_state[static_cast<std::size_t>(tr.state)];
          const auto& p = pol[static_cast<std::size_t>(s)];
          auto& d = table.at(tr.state, task);
          for (int a = 0; a < kNumActions; ++a) d[static_cast<std::size_t>(a)] -= w[t] * p[static_cast<std::size_t>(a)];
          d[static_cast<std::size_t>(tr.action)] += w[t];
        }
      }
      const auto mc = table.backprop(params, 1.0 / static_cast<double>(drawn));
      const double c = cosine_similarity(mc, exact);
      curve[j].cosines.push_back(c);
      curve[j].mean_cosine += c / static_cast<double>(repeats);
    }
  }
  return curve;
}

}  // namespace drats
