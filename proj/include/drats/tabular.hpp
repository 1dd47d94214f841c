#pragma once

// Exact finite MDPs extracted from gridworld specs, with finite-horizon
// backward induction. These are the ground-truth oracles for Monte Carlo
// return estimates and policy gradients.

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "drats/error.hpp"
#include "drats/gridworld.hpp"

namespace drats {

struct TabularMDP {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> transitions;  // [s][a][s'] flattened
  std::vector<double> rewards;      // [s][a]
  std::vector<double> initial_dist;
  std::vector<bool> terminal;       // absorbing states with zero reward
  std::vector<int> state_cell;      // MDP state -> grid cell index
  std::vector<int> cell_state;      // grid cell index -> MDP state (-1 for walls)
  // Sparse view of `transitions`: successors[s * A + a] lists (s', p) with p > 0.
  std::vector<std::vector<std::pair<int, double>>> successors;
  double gamma = 0.99;
  int horizon = 0;

  double p(int s, int a, int s2) const {
    return transitions[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
  }
  double r(int s, int a) const { return rewards[static_cast<std::size_t>(s) * n_actions + a]; }

  void build_successors() {
    const auto S = static_cast<std::size_t>(n_states);
    const auto A = static_cast<std::size_t>(n_actions);
    successors.assign(S * A, {});
    for (std::size_t sa = 0; sa < S * A; ++sa)
      for (std::size_t s2 = 0; s2 < S; ++s2)
        if (transitions[sa * S + s2] != 0.0) successors[sa].emplace_back(static_cast<int>(s2), transitions[sa * S + s2]);
  }
};

// Policy over MDP states: row s holds n_actions probabilities.
using TabularPolicy = std::vector<std::vector<double>>;

inline TabularMDP to_tabular(const GridworldSpec& spec, double gamma) {
  validate(spec);
  TabularMDP m;
  m.gamma = gamma;
  m.horizon = spec.max_steps;
  m.n_actions = kNumActions;
  m.cell_state.assign(static_cast<std::size_t>(spec.n_cells()), -1);
  for (int i = 0; i < spec.n_cells(); ++i) {
    if (spec.walls[static_cast<std::size_t>(i)]) continue;
    m.cell_state[static_cast<std::size_t>(i)] = m.n_states++;
    m.state_cell.push_back(i);
  }
  const auto S = static_cast<std::size_t>(m.n_states);
  const auto A = static_cast<std::size_t>(m.n_actions);
  m.transitions.assign(S * A * S, 0.0);
  m.rewards.assign(S * A, 0.0);
  m.initial_dist.assign(S, 0.0);
  m.terminal.assign(S, false);
  const int goal_state = m.cell_state[static_cast<std::size_t>(spec.index(spec.goal))];
  m.terminal[static_cast<std::size_t>(goal_state)] = true;
  m.initial_dist[static_cast<std::size_t>(m.cell_state[static_cast<std::size_t>(spec.index(spec.start))])] = 1.0;
  for (int s = 0; s < m.n_states; ++s) {
    for (int a = 0; a < m.n_actions; ++a) {
      const std::size_t sa = static_cast<std::size_t>(s) * A + static_cast<std::size_t>(a);
      if (s == goal_state) {
        m.transitions[sa * S + static_cast<std::size_t>(s)] = 1.0;
        continue;
      }
      const Cell c = spec.cell(m.state_cell[static_cast<std::size_t>(s)]);
      // step_index 0 never truncates for max_steps > 1; truncation is the horizon.
      const StepResult res = step(spec, c, static_cast<Action>(a), 0);
      const int s2 = m.cell_state[static_cast<std::size_t>(spec.index(res.next))];
      m.transitions[sa * S + static_cast<std::size_t>(s2)] = 1.0;
      m.rewards[sa] = res.reward;
    }
  }
  m.build_successors();
  return m;
}

inline void validate_policy(const TabularMDP& mdp, const TabularPolicy& policy) {
  require(policy.size() == static_cast<std::size_t>(mdp.n_states), "tabular policy: wrong number of states");
  for (const auto& row : policy) {
    require(row.size() == static_cast<std::size_t>(mdp.n_actions), "tabular policy: wrong number of actions");
    double total = 0.0;
    for (double p : row) {
      require(p >= 0.0, "tabular policy: negative probability");
      total += p;
    }
    require(std::abs(total - 1.0) < 1e-9, "tabular policy: row does not sum to 1");
  }
}

// Backward induction tables: value[t][s] is the expected discounted return
// from state s with t steps already taken. value[horizon] = 0.
struct FiniteHorizonValues {
  std::vector<std::vector<double>> value;
  std::vector<std::vector<double>> q;  // q[t][s * A + a]
};

inline FiniteHorizonValues backward_induction(const TabularMDP& mdp, const TabularPolicy& policy, int horizon,
                                              double gamma) {
  const auto S = static_cast<std::size_t>(mdp.n_states);
  const auto A = static_cast<std::size_t>(mdp.n_actions);
  FiniteHorizonValues out;
  out.value.assign(static_cast<std::size_t>(horizon) + 1, std::vector<double>(S, 0.0));
  out.q.assign(static_cast<std::size_t>(horizon), std::vector<double>(S * A, 0.0));
  for (int t = horizon - 1; t >= 0; --t) {
    const auto& next = out.value[static_cast<std::size_t>(t) + 1];
    auto& qt = out.q[static_cast<std::size_t>(t)];
    auto& vt = out.value[static_cast<std::size_t>(t)];
    for (std::size_t s = 0; s < S; ++s) {
      if (mdp.terminal[s]) continue;
      double v = 0.0;
      for (std::size_t a = 0; a < A; ++a) {
        double cont = 0.0;
        for (const auto& [s2, p] : mdp.successors[s * A + a]) cont += p * next[static_cast<std::size_t>(s2)];
        const double qa = mdp.rewards[s * A + a] + gamma * cont;
        qt[s * A + a] = qa;
        v += policy[s][a] * qa;
      }
      vt[s] = v;
    }
  }
  return out;
}

inline double exact_return(const TabularMDP& mdp, const TabularPolicy& policy, int horizon, double gamma) {
  validate_policy(mdp, policy);
  require(horizon >= 0, "exact_return: negative horizon");
  if (horizon == 0) return 0.0;
  const auto vals = backward_induction(mdp, policy, horizon, gamma);
  double j = 0.0;
  for (int s = 0; s < mdp.n_states; ++s) j += mdp.initial_dist[static_cast<std::size_t>(s)] * vals.value[0][static_cast<std::size_t>(s)];
  return j;
}

// Expected discounted return with the MDP's own discount.
inline double exact_return(const TabularMDP& mdp, const TabularPolicy& policy, int horizon) {
  return exact_return(mdp, policy, horizon, mdp.gamma);
}

// State-occupancy of non-terminal states: occ[t][s] = P(s_t = s, not yet terminated).
inline std::vector<std::vector<double>> state_occupancy(const TabularMDP& mdp, const TabularPolicy& policy,
                                                        int horizon) {
  const auto S = static_cast<std::size_t>(mdp.n_states);
  const auto A = static_cast<std::size_t>(mdp.n_actions);
  std::vector<std::vector<double>> occ(static_cast<std::size_t>(horizon), std::vector<double>(S, 0.0));
  std::vector<double> cur = mdp.initial_dist;
  for (std::size_t s = 0; s < S; ++s)
    if (mdp.terminal[s]) cur[s] = 0.0;
  for (int t = 0; t < horizon; ++t) {
    occ[static_cast<std::size_t>(t)] = cur;
    std::vector<double> nxt(S, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
      if (cur[s] == 0.0) continue;
      for (std::size_t a = 0; a < A; ++a) {
        const double w = cur[s] * policy[s][a];
        if (w == 0.0) continue;
        for (const auto& [s2, p] : mdp.successors[s * A + a])
          if (!mdp.terminal[static_cast<std::size_t>(s2)]) nxt[static_cast<std::size_t>(s2)] += w * p;
      }
    }
    cur = std::move(nxt);
  }
  return occ;
}

// Probability of reaching a terminal (goal) state within the horizon.
inline double exact_success_probability(const TabularMDP& mdp, const TabularPolicy& policy, int horizon) {
  const auto occ = state_occupancy(mdp, policy, horizon);
  double alive_end = 0.0;
  // Mass that is still non-terminal after the final step.
  const auto S = static_cast<std::size_t>(mdp.n_states);
  const auto A = static_cast<std::size_t>(mdp.n_actions);
  if (horizon == 0) return 0.0;
  const auto& last = occ.back();
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      const double w = last[s] * policy[s][a];
      for (const auto& [s2, p] : mdp.successors[s * A + a])
        if (!mdp.terminal[static_cast<std::size_t>(s2)]) alive_end += w * p;
    }
  }
  double start_alive = 0.0;
  for (std::size_t s = 0; s < S; ++s)
    if (!mdp.terminal[s]) start_alive += mdp.initial_dist[s];
  return start_alive - alive_end;
}

inline TabularPolicy uniform_policy(const TabularMDP& mdp) {
  return TabularPolicy(static_cast<std::size_t>(mdp.n_states),
                       std::vector<double>(static_cast<std::size_t>(mdp.n_actions), 1.0 / mdp.n_actions));
}

}  // namespace drats
