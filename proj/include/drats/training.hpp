#pragma once

// The training loop: draw tasks from q, roll out episodes, estimate returns,
// update references and gaps, update the sampler, then take one REINFORCE
// step with per-task advantage normalization.

#include <algorithm>
#include <chrono>
#include <limits>
#include <cstddef>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drats/advantage.hpp"
#include "drats/config.hpp"
#include "drats/error.hpp"
#include "drats/gap.hpp"
#include "drats/gradient.hpp"
#include "drats/gridworld.hpp"
#include "drats/policy.hpp"
#include "drats/rng.hpp"
#include "drats/samplers.hpp"
#include "drats/simplex.hpp"
#include "drats/tabular.hpp"

namespace drats {

struct RunRecord {
  std::size_t iteration = 0;
  std::size_t env_steps = 0;  // cumulative
  std::vector<double> return_mean;   // batch Monte Carlo estimate (carried forward when absent)
  std::vector<double> success_rate;  // batch success fraction (carried forward when absent)
  std::vector<double> q;             // distribution used to draw this batch's tasks
  std::vector<double> gap;
  std::vector<double> j_ref;
  std::vector<std::size_t> episodes;
  std::vector<double> eval_success;  // exact success probability after the update
  std::vector<double> eval_return;   // exact undiscounted return after the update
  double wall_clock_s = 0.0;

  double mean_eval_success() const {
    return std::accumulate(eval_success.begin(), eval_success.end(), 0.0) / static_cast<double>(eval_success.size());
  }
};

struct RunResult {
  RunConfig config;
  std::vector<RunRecord> records;
  PolicyParams params;
  std::vector<double> j_rand;
  bool failed = false;
  std::string error;
};

inline GridSuite resolve_suite(const RunConfig& cfg) {
  GridSuite suite = cfg.suite_path.empty() ? build_gridworld_suite(cfg.profile, cfg.suite_options)
                                           : load_suite(cfg.suite_path);
  validate(suite);
  return suite;
}

// Undiscounted exact return of the uniform policy, per task.
inline std::vector<double> random_policy_returns(const GridSuite& suite) {
  std::vector<double> out;
  for (const auto& spec : suite.tasks) {
    const TabularMDP mdp = to_tabular(spec, suite.gamma);
    out.push_back(exact_return(mdp, uniform_policy(mdp), spec.max_steps, 1.0));
  }
  return out;
}

// Easy First default ranking: ascending shortest-path length, ties by index.
inline std::vector<int> difficulty_ranking(const GridSuite& suite) {
  std::vector<int> order(suite.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> len;
  for (const auto& t : suite.tasks) len.push_back(shortest_path_length(t));
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return len[static_cast<std::size_t>(a)] < len[static_cast<std::size_t>(b)];
  });
  return order;
}

inline std::unique_ptr<TaskSampler> make_sampler(const RunConfig& cfg, const GridSuite& suite) {
  const std::size_t k = suite.size();
  const MirrorParams mp{cfg.sampler.eta, cfg.sampler.effective_alpha(), cfg.sampler.eps_min};
  switch (cfg.sampler.kind) {
    case SamplerKind::Uniform:
      return std::make_unique<UniformSampler>(k);
    case SamplerKind::Drats:
      return std::make_unique<DratsSampler>(k, mp);
    case SamplerKind::LearningProgress:
      return std::make_unique<LearningProgressSampler>(k, mp);
    case SamplerKind::LearningPotential:
      return std::make_unique<LearningPotentialSampler>(k, mp);
    case SamplerKind::HardFirst: {
      HardFirstConfig hc;
      hc.active_size = cfg.sampler.active_size;
      hc.b1_fraction = cfg.sampler.b1_fraction;
      hc.solved_threshold.assign(k, cfg.sampler.solved_threshold);
      hc.unsolvable_threshold.assign(k, cfg.sampler.unsolvable_threshold);
      hc.task_step_budget = cfg.sampler.task_step_budget;
      hc.eps_min = cfg.sampler.eps_min;
      return std::make_unique<HardFirstSampler>(k, std::move(hc));
    }
    case SamplerKind::EasyFirst: {
      EasyFirstConfig ec;
      ec.ranking = cfg.sampler.ranking.empty() ? difficulty_ranking(suite) : cfg.sampler.ranking;
      ec.advance_threshold = cfg.sampler.advance_threshold;
      ec.eps_min = cfg.sampler.eps_min;
      return std::make_unique<EasyFirstSampler>(k, std::move(ec));
    }
  }
  throw InvalidInput("make_sampler: unknown sampler kind");
}

// Runs one configuration to its env-step budget. With `reweighted` set, tasks
// are drawn uniformly, q is updated exactly as DRATS would, and each task's
// normalized advantages are scaled by k * q_i.
inline RunResult run_training(const RunConfig& cfg) {
  const GridSuite suite = resolve_suite(cfg);
  const std::size_t k = suite.size();
  validate(cfg, k);

  RunResult result;
  result.config = cfg;
  const int n_cells = suite.n_cells();
  const auto ki = static_cast<int>(k);
  const double gamma = suite.gamma;

  std::vector<TabularMDP> mdps;
  for (const auto& spec : suite.tasks) mdps.push_back(to_tabular(spec, gamma));
  result.j_rand = random_policy_returns(suite);

  const double j_ref0 = cfg.j_ref.value_or(suite.tasks.front().goal_reward);
  ReferenceState refs(std::vector<double>(k, j_ref0), result.j_rand, std::vector<ReferenceMode>(k, cfg.reference_mode),
                      cfg.success_threshold);

  result.params = PolicyParams::initialized(cfg.learner.architecture, n_cells, ki, cfg.learner.hidden, cfg.seed,
                                            cfg.learner.init_scale);
  PolicyParams& params = result.params;
  ValueBaseline baseline(n_cells, ki, cfg.learner.value_learning_rate);

  // A single task leaves nothing to sample: q = (1) throughout.
  RunConfig sampler_cfg = cfg;
  if (cfg.reweighted) sampler_cfg.sampler.kind = SamplerKind::Drats;
  std::unique_ptr<TaskSampler> sampler = k >= 2 ? make_sampler(sampler_cfg, suite) : nullptr;
  auto current_q = [&]() -> std::vector<double> {
    if (!sampler) return {1.0};
    return sampler->distribution().vec();
  };

  std::vector<double> j_hat = result.j_rand;
  std::vector<double> prev_j_hat = j_hat;
  std::vector<double> success(k, 0.0);
  std::vector<double> potential_raw(k, 0.0);
  std::vector<std::size_t> task_steps(k, 0);
  std::size_t env_steps = 0;
  const auto t0 = std::chrono::steady_clock::now();
  const auto E = static_cast<std::size_t>(cfg.episodes_per_iteration);

  try {
    for (std::size_t it = 0; env_steps < cfg.total_env_steps; ++it) {
      // Fill the buffer.
      const std::vector<double> q_used = current_q();
      const std::vector<double> q_draw =
          cfg.reweighted ? std::vector<double>(k, 1.0 / static_cast<double>(k)) : q_used;
      const ActionTable table(params);
      std::vector<Trajectory> batch(E);
      for (std::size_t e = 0; e < E; ++e) {
        Engine draw = make_stream(cfg.seed, Purpose::TaskDraw, it, e);
        const int task = k >= 2 ? sample_index(q_draw.data(), ki, draw) : 0;
        Engine ep = make_stream(cfg.seed, Purpose::Episode, it, e);
        batch[e] = rollout(suite.tasks[static_cast<std::size_t>(task)], task,
                           [&](int cell) { return table.row(cell, task); }, ep);
        env_steps += batch[e].length();
        task_steps[static_cast<std::size_t>(task)] += batch[e].length();
      }

      // Per-task Monte Carlo returns.
      ReturnEstimate est;
      est.mean_return.assign(k, 0.0);
      est.max_return.assign(k, -std::numeric_limits<double>::infinity());
      est.success_rate.assign(k, 0.0);
      est.n_episodes.assign(k, 0);
      std::vector<double> potential_sum(k, 0.0);
      for (const auto& traj : batch) {
        const auto i = static_cast<std::size_t>(traj.task);
        const double r = traj.total_return();
        est.mean_return[i] += r;
        est.max_return[i] = std::max(est.max_return[i], r);
        est.success_rate[i] += traj.success ? 1.0 : 0.0;
        ++est.n_episodes[i];
        const auto td = td_errors(traj, [&](int cell, int task) { return baseline.value(cell, task); }, gamma);
        potential_sum[i] += learning_potential_score(td, gamma * cfg.learner.gae_lambda);
      }
      prev_j_hat = j_hat;
      for (std::size_t i = 0; i < k; ++i) {
        const auto n = static_cast<double>(est.n_episodes[i]);
        if (est.n_episodes[i] > 0) {
          est.mean_return[i] /= n;
          est.success_rate[i] /= n;
          j_hat[i] = est.mean_return[i];
          success[i] = est.success_rate[i];
          potential_raw[i] = potential_sum[i] / n;
        } else if (cfg.stale_return_policy == StaleReturnPolicy::Zero) {
          j_hat[i] = 0.0;
        }
      }

      // References and normalized gaps.
      refs = refs.updated(est);
      std::vector<double> gaps(k);
      for (std::size_t i = 0; i < k; ++i) gaps[i] = refs.gap(i, j_hat[i]);

      // Sampler update.
      if (sampler) {
        SamplerObservation obs;
        obs.gaps = gaps;
        obs.return_means = j_hat;
        obs.prev_return_means = prev_j_hat;
        obs.has_prev = it > 0;
        obs.return_scale.resize(k);
        for (std::size_t i = 0; i < k; ++i) obs.return_scale[i] = refs.j_ref()[i] - refs.j_rand()[i];
        obs.success_rates = success;
        obs.value_loss_scores = potential_raw;
        obs.task_env_steps = task_steps;
        obs.env_steps_elapsed = env_steps;
        obs.total_budget = cfg.total_env_steps;
        sampler->update(obs);
      }

      // Policy update.
      std::vector<std::vector<double>> raw(E);
      std::vector<int> task_of(E);
      for (std::size_t e = 0; e < E; ++e) {
        const auto g = returns_to_go(batch[e], gamma);
        raw[e].resize(g.size());
        for (std::size_t t = 0; t < g.size(); ++t) raw[e][t] = g[t] - baseline.value(batch[e].steps[t].state, batch[e].task);
        task_of[e] = batch[e].task;
      }
      AdvantageBatch adv = cfg.learner.per_task_normalization ? per_task_advantage_normalize(raw, task_of, ki)
                                                              : global_advantage_normalize(raw);
      if (cfg.reweighted) {
        const std::vector<double> qn = current_q();
        for (std::size_t e = 0; e < E; ++e) {
          const double w = static_cast<double>(k) * qn[static_cast<std::size_t>(task_of[e])];
          for (double& a : adv.values[e]) a *= w;
        }
      }
      const auto grad = reinforce_gradient(params, batch, adv.values, cfg.learner.entropy_coef);
      auto w = params.weights();
      for (std::size_t j = 0; j < w.size(); ++j) w[j] += cfg.learner.learning_rate * grad[j];
      baseline = baseline.updated(batch, gamma);

      RunRecord rec;
      rec.iteration = it;
      rec.env_steps = env_steps;
      rec.return_mean = j_hat;
      rec.success_rate = success;
      rec.q = q_used;
      rec.gap = gaps;
      rec.j_ref = refs.j_ref();
      rec.episodes = est.n_episodes;
      for (std::size_t i = 0; i < k; ++i) {
        const TabularPolicy pol = tabular_policy(mdps[i], params, static_cast<int>(i));
        const int horizon = suite.tasks[i].max_steps;
        rec.eval_success.push_back(exact_success_probability(mdps[i], pol, horizon));
        rec.eval_return.push_back(exact_return(mdps[i], pol, horizon, 1.0));
      }
      rec.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      result.records.push_back(std::move(rec));
      if (cfg.stop_at_success && result.records.back().mean_eval_success() >= *cfg.stop_at_success) break;
    }
  } catch (const NumericFault& e) {
    result.failed = true;
    result.error = e.what();
  }
  return result;
}

inline RunResult run_training_reweighted(RunConfig cfg) {
  cfg.reweighted = true;
  return run_training(cfg);
}

// First cumulative env-step count at which the mean exact success across
// tasks reaches `target`; empty if never reached.
inline std::optional<std::size_t> steps_to_threshold(std::span<const RunRecord> records, double target) {
  for (const auto& r : records)
    if (r.mean_eval_success() >= target) return r.env_steps;
  return std::nullopt;
}

}  // namespace drats
