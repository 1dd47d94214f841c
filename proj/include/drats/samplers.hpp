#pragma once

// Task samplers. Every sampler observes per-task statistics once per
// iteration, updates its state, and exposes a distribution over tasks.
//
// DRATS, Learning Progress and Learning Potential share one pipeline
// (mirror ascent toward softmax(eta * score), then the minimum-probability
// projection) and differ only in the score vector.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "drats/error.hpp"
#include "drats/gridworld.hpp"
#include "drats/rng.hpp"
#include "drats/simplex.hpp"

namespace drats {

struct SamplerObservation {
  std::vector<double> gaps;               // normalized return gaps in [0, 1]
  std::vector<double> return_means;       // current per-task return estimates
  std::vector<double> prev_return_means;  // previous iteration's estimates
  bool has_prev = false;
  std::vector<double> return_scale;       // j_ref - j_rand per task
  std::vector<double> success_rates;
  std::vector<double> value_loss_scores;  // raw learning-potential scores (empty without a value baseline)
  std::vector<std::size_t> task_env_steps;  // cumulative env steps collected per task
  std::size_t env_steps_elapsed = 0;
  std::size_t total_budget = 0;

  std::size_t size() const { return gaps.size(); }
};

enum class SamplerKind { Uniform, Drats, LearningProgress, LearningPotential, HardFirst, EasyFirst };

inline const char* to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::Uniform: return "uniform";
    case SamplerKind::Drats: return "drats";
    case SamplerKind::LearningProgress: return "learning_progress";
    case SamplerKind::LearningPotential: return "learning_potential";
    case SamplerKind::HardFirst: return "hard_first";
    case SamplerKind::EasyFirst: return "easy_first";
  }
  return "?";
}

inline SamplerKind parse_sampler_kind(const std::string& s) {
  for (auto k : {SamplerKind::Uniform, SamplerKind::Drats, SamplerKind::LearningProgress,
                 SamplerKind::LearningPotential, SamplerKind::HardFirst, SamplerKind::EasyFirst})
    if (s == to_string(k)) return k;
  throw InvalidInput("unknown sampler '" + s + "'");
}

// ---------------------------------------------------------------------------
// Shared mirror-ascent pipeline

// Mirror ascent from q toward softmax(eta * scores) (uniform base), then the
// KL projection onto {q >= eps_min}. eps_min = 0 skips the projection.
inline TaskDistribution drats_update(const TaskDistribution& q, std::span<const double> scores, double eta,
                                     double alpha, double eps_min) {
  require(eps_min >= 0.0, "drats_update: eps_min must be non-negative");
  const TaskDistribution stepped = mirror_ascent_step(q, scores, eta, alpha, TaskDistribution::uniform(q.size()));
  if (eps_min == 0.0) return stepped;
  return kl_projection_min_prob(stepped, eps_min);
}

// z_i = |J_t,i - J_t-1,i| / (j_ref_i - j_rand_i), clamped to [0, 1]; zero
// before a previous estimate exists.
inline std::vector<double> learning_progress_scores(const SamplerObservation& obs) {
  const std::size_t k = obs.size();
  std::vector<double> z(k, 0.0);
  if (!obs.has_prev) return z;
  require(obs.return_means.size() == k && obs.prev_return_means.size() == k && obs.return_scale.size() == k,
          "learning_progress: observation vectors have the wrong length");
  for (std::size_t i = 0; i < k; ++i) {
    require(obs.return_scale[i] > 0.0, "learning_progress: non-positive return scale");
    z[i] = std::clamp(std::abs(obs.return_means[i] - obs.prev_return_means[i]) / obs.return_scale[i], 0.0, 1.0);
  }
  return z;
}

inline TaskDistribution learning_progress_update(const TaskDistribution& q, const SamplerObservation& obs,
                                                 double eta, double alpha, double eps_min) {
  return drats_update(q, learning_progress_scores(obs), eta, alpha, eps_min);
}

// Mean absolute GAE-style value loss of one trajectory:
//   (1/T) sum_t | sum_{k>=t} (gamma*lambda)^(k-t) delta_k |
inline double learning_potential_score(std::span<const double> td_errors, double gamma_lambda) {
  require(!td_errors.empty(), "learning_potential_score: empty trajectory");
  double acc = 0.0;
  double total = 0.0;
  for (std::size_t t = td_errors.size(); t-- > 0;) {
    acc = td_errors[t] + gamma_lambda * acc;
    total += std::abs(acc);
  }
  return total / static_cast<double>(td_errors.size());
}

// TD errors delta_k = r_k + gamma V(s_k+1) - V(s_k). The value after the last
// step is 0 on termination and V(final state) on truncation.
template <class ValueFn>
std::vector<double> td_errors(const Trajectory& traj, ValueFn&& value, double gamma) {
  std::vector<double> delta(traj.length());
  for (std::size_t t = 0; t < traj.length(); ++t) {
    const auto& tr = traj.steps[t];
    double next_v = 0.0;
    if (t + 1 < traj.length()) {
      next_v = value(traj.steps[t + 1].state, traj.task);
    } else if (!traj.terminated) {
      next_v = value(traj.final_state, traj.task);
    }
    delta[t] = tr.reward + gamma * next_v - value(tr.state, traj.task);
  }
  return delta;
}

// Min-max scaling across tasks into [0, 1]; all-equal scores map to zero.
inline std::vector<double> min_max_scale(std::span<const double> raw) {
  std::vector<double> out(raw.size(), 0.0);
  if (raw.empty()) return out;
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  const double span = *hi - *lo;
  if (!(span > 0.0)) return out;
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - *lo) / span;
  return out;
}

// Categorical draw from q with a single uniform variate.
inline int sample_task(const TaskDistribution& q, Engine& rng) {
  return sample_index(q.probs().data(), static_cast<int>(q.size()), rng);
}

// Uniform over `members` (or over all tasks when empty), then floored at eps_min.
inline TaskDistribution floored_uniform_over(const std::set<int>& members, std::size_t k, double eps_min) {
  std::vector<double> w(k, 0.0);
  if (members.empty()) {
    std::fill(w.begin(), w.end(), 1.0);
  } else {
    for (int i : members) w[static_cast<std::size_t>(i)] = 1.0;
  }
  TaskDistribution q = TaskDistribution::normalized(std::move(w));
  return eps_min > 0.0 ? kl_projection_min_prob(q, eps_min) : q;
}

// ---------------------------------------------------------------------------
// Hard First (active set over the K lowest-return unsolved tasks)

struct HardFirstConfig {
  std::size_t active_size = 3;           // K
  double b1_fraction = 0.8;              // stage switch, as a fraction of the budget
  std::vector<double> solved_threshold;  // M_i
  std::vector<double> unsolvable_threshold;  // m_i
  std::optional<std::size_t> task_step_budget;  // default: total_budget * b1_fraction / k
  double eps_min = 0.02;
};

struct HardFirstState {
  std::set<int> active;
  std::set<int> solved;
  std::set<int> unsolvable;
  bool stage_two = false;

  friend bool operator==(const HardFirstState&, const HardFirstState&) = default;
};

inline void check_partition(const HardFirstState& s, std::size_t k, std::size_t K) {
  for (int i : s.active) require(!s.solved.count(i) && !s.unsolvable.count(i), "hard_first: active overlaps another pool");
  for (int i : s.solved) require(!s.unsolvable.count(i), "hard_first: solved overlaps unsolvable");
  for (const auto* pool : {&s.active, &s.solved, &s.unsolvable})
    for (int i : *pool) require(i >= 0 && static_cast<std::size_t>(i) < k, "hard_first: task id out of range");
  const std::size_t unsolved = k - s.solved.size() - s.unsolvable.size();
  require(s.active.size() == std::min(K, unsolved), "hard_first: active set has the wrong size");
}

inline std::pair<HardFirstState, TaskDistribution> hard_first_update(const HardFirstState& state,
                                                                    const HardFirstConfig& cfg,
                                                                    const SamplerObservation& obs) {
  const std::size_t k = obs.size();
  require(obs.return_means.size() == k && obs.task_env_steps.size() == k, "hard_first: observation size mismatch");
  require(cfg.solved_threshold.size() == k && cfg.unsolvable_threshold.size() == k, "hard_first: threshold size mismatch");
  for (std::size_t i = 0; i < k; ++i)
    require(cfg.unsolvable_threshold[i] < cfg.solved_threshold[i], "hard_first: need m_i < M_i");
  require(cfg.active_size >= 1, "hard_first: K must be positive");

  const std::size_t step_budget =
      cfg.task_step_budget.value_or(static_cast<std::size_t>(static_cast<double>(obs.total_budget) * cfg.b1_fraction /
                                                             static_cast<double>(k)));
  HardFirstState next = state;
  for (std::size_t ui = 0; ui < k; ++ui) {
    const int i = static_cast<int>(ui);
    const double r = obs.return_means[ui];
    if (next.unsolvable.count(i)) continue;
    if (next.solved.count(i)) {
      if (r < cfg.solved_threshold[ui]) next.solved.erase(i);
      continue;
    }
    if (r > cfg.solved_threshold[ui]) {
      next.solved.insert(i);
      next.active.erase(i);
    } else if (next.active.count(i) && obs.task_env_steps[ui] >= step_budget && r <= cfg.unsolvable_threshold[ui]) {
      next.unsolvable.insert(i);
      next.active.erase(i);
    }
  }

  // Active set: the K unsolved tasks with the smallest current return.
  std::vector<int> unsolved;
  for (int i = 0; i < static_cast<int>(k); ++i)
    if (!next.solved.count(i) && !next.unsolvable.count(i)) unsolved.push_back(i);
  std::stable_sort(unsolved.begin(), unsolved.end(), [&](int a, int b) {
    return obs.return_means[static_cast<std::size_t>(a)] < obs.return_means[static_cast<std::size_t>(b)];
  });
  next.active.clear();
  for (std::size_t j = 0; j < std::min(cfg.active_size, unsolved.size()); ++j) next.active.insert(unsolved[j]);

  next.stage_two = static_cast<double>(obs.env_steps_elapsed) >= cfg.b1_fraction * static_cast<double>(obs.total_budget);
  const auto& pool = next.stage_two ? next.unsolvable : next.active;
  return {next, floored_uniform_over(pool, k, cfg.eps_min)};
}

// ---------------------------------------------------------------------------
// Easy First (fixed difficulty ranking, advance at a success-rate threshold)

struct EasyFirstConfig {
  std::vector<int> ranking;  // task ids from easiest to hardest
  double advance_threshold = 0.9;
  double eps_min = 0.02;
};

struct EasyFirstState {
  std::size_t position = 0;  // index into the ranking; == ranking.size() once exhausted

  friend bool operator==(const EasyFirstState&, const EasyFirstState&) = default;
};

inline void validate(const EasyFirstConfig& cfg, std::size_t k) {
  require(cfg.ranking.size() == k, "easy_first: ranking must list every task exactly once");
  std::vector<int> sorted = cfg.ranking;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < k; ++i) require(sorted[i] == static_cast<int>(i), "easy_first: ranking is not a permutation");
}

inline TaskDistribution easy_first_distribution(const EasyFirstState& state, const EasyFirstConfig& cfg, std::size_t k) {
  if (state.position >= cfg.ranking.size()) return TaskDistribution::uniform(k);
  return floored_uniform_over({cfg.ranking[state.position]}, k, cfg.eps_min);
}

inline std::pair<EasyFirstState, TaskDistribution> easy_first_update(const EasyFirstState& state,
                                                                    const EasyFirstConfig& cfg,
                                                                    const SamplerObservation& obs) {
  const std::size_t k = obs.size();
  validate(cfg, k);
  require(obs.success_rates.size() == k, "easy_first: observation size mismatch");
  EasyFirstState next = state;
  while (next.position < cfg.ranking.size() &&
         obs.success_rates[static_cast<std::size_t>(cfg.ranking[next.position])] >= cfg.advance_threshold)
    ++next.position;
  return {next, easy_first_distribution(next, cfg, k)};
}

// ---------------------------------------------------------------------------
// Sampler objects

class TaskSampler {
 public:
  virtual ~TaskSampler() = default;
  virtual SamplerKind kind() const = 0;
  virtual void update(const SamplerObservation& obs) = 0;
  const TaskDistribution& distribution() const { return q_; }

 protected:
  explicit TaskSampler(TaskDistribution q) : q_(std::move(q)) {}
  TaskDistribution q_;
};

class UniformSampler final : public TaskSampler {
 public:
  explicit UniformSampler(std::size_t k) : TaskSampler(TaskDistribution::uniform(k)) {}
  SamplerKind kind() const override { return SamplerKind::Uniform; }
  void update(const SamplerObservation&) override {}
};

struct MirrorParams {
  double eta = 8.0;
  double alpha = 4.0;
  double eps_min = 0.02;
};

class DratsSampler final : public TaskSampler {
 public:
  DratsSampler(std::size_t k, MirrorParams p) : TaskSampler(TaskDistribution::uniform(k)), p_(p) {}
  SamplerKind kind() const override { return SamplerKind::Drats; }
  void update(const SamplerObservation& obs) override { q_ = drats_update(q_, obs.gaps, p_.eta, p_.alpha, p_.eps_min); }

 private:
  MirrorParams p_;
};

class LearningProgressSampler final : public TaskSampler {
 public:
  LearningProgressSampler(std::size_t k, MirrorParams p) : TaskSampler(TaskDistribution::uniform(k)), p_(p) {}
  SamplerKind kind() const override { return SamplerKind::LearningProgress; }
  void update(const SamplerObservation& obs) override {
    q_ = learning_progress_update(q_, obs, p_.eta, p_.alpha, p_.eps_min);
  }

 private:
  MirrorParams p_;
};

class LearningPotentialSampler final : public TaskSampler {
 public:
  LearningPotentialSampler(std::size_t k, MirrorParams p) : TaskSampler(TaskDistribution::uniform(k)), p_(p) {}
  SamplerKind kind() const override { return SamplerKind::LearningPotential; }
  void update(const SamplerObservation& obs) override {
    require(obs.value_loss_scores.size() == obs.size(), "learning_potential: value-loss scores missing");
    q_ = drats_update(q_, min_max_scale(obs.value_loss_scores), p_.eta, p_.alpha, p_.eps_min);
  }

 private:
  MirrorParams p_;
};

class HardFirstSampler final : public TaskSampler {
 public:
  HardFirstSampler(std::size_t k, HardFirstConfig cfg)
      : TaskSampler(TaskDistribution::uniform(k)), cfg_(std::move(cfg)) {
    require(cfg_.solved_threshold.size() == k && cfg_.unsolvable_threshold.size() == k,
            "hard_first: one threshold per task required");
    require(cfg_.b1_fraction > 0.0 && cfg_.b1_fraction <= 1.0, "hard_first: b1 fraction outside (0, 1]");
  }
  SamplerKind kind() const override { return SamplerKind::HardFirst; }
  void update(const SamplerObservation& obs) override {
    auto [s, q] = hard_first_update(state_, cfg_, obs);
    state_ = std::move(s);
    q_ = std::move(q);
  }
  const HardFirstState& state() const { return state_; }
  const HardFirstConfig& config() const { return cfg_; }

 private:
  HardFirstConfig cfg_;
  HardFirstState state_;
};

class EasyFirstSampler final : public TaskSampler {
 public:
  EasyFirstSampler(std::size_t k, EasyFirstConfig cfg)
      : TaskSampler(TaskDistribution::uniform(k)), cfg_((validate(cfg, k), std::move(cfg))) {
    q_ = easy_first_distribution(state_, cfg_, k);
  }
  SamplerKind kind() const override { return SamplerKind::EasyFirst; }
  void update(const SamplerObservation& obs) override {
    auto [s, q] = easy_first_update(state_, cfg_, obs);
    state_ = s;
    q_ = std::move(q);
  }
  const EasyFirstState& state() const { return state_; }

 private:
  EasyFirstConfig cfg_;
  EasyFirstState state_;
};

}  // namespace drats
