#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "drats/oracles.hpp"
#include "drats/samplers.hpp"

using namespace drats;

namespace {

SamplerObservation observation(std::vector<double> gaps) {
  SamplerObservation o;
  const std::size_t k = gaps.size();
  o.gaps = std::move(gaps);
  o.return_means.assign(k, 0.0);
  o.prev_return_means.assign(k, 0.0);
  o.return_scale.assign(k, 1.0);
  o.success_rates.assign(k, 0.0);
  o.value_loss_scores.assign(k, 0.0);
  o.task_env_steps.assign(k, 0);
  o.total_budget = 1000;
  return o;
}

HardFirstConfig hard_first_config(std::size_t k, double solved = 0.9, double unsolvable = 0.0) {
  HardFirstConfig c;
  c.active_size = 3;
  c.solved_threshold.assign(k, solved);
  c.unsolvable_threshold.assign(k, unsolvable);
  return c;
}

}  // namespace

TEST(DratsUpdate, WorkedExampleWithProjection) {
  const std::vector<double> g{1.0, 0.0, 0.0, 0.0};
  const auto q0 = TaskDistribution::uniform(4);
  const auto raw = drats_update(q0, g, 8.0, 4.0, 0.0);
  EXPECT_NEAR(raw[0], 0.947914993827515604, 1e-14);
  EXPECT_NEAR(raw[1], (1.0 - 0.947914993827515604) / 3.0, 1e-14);
  const auto q = drats_update(q0, g, 8.0, 4.0, 0.02);
  EXPECT_NEAR(q[0], 0.94, 1e-14);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_NEAR(q[i], 0.02, 1e-14);
}

TEST(DratsUpdate, InvariantsOnRandomGaps) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t k = 2 + rep % 7;
    TaskDistribution q = TaskDistribution::uniform(k);
    const double eta = 0.5 + 15.0 * u(rng), alpha = eta * (0.05 + 0.95 * u(rng));
    const double eps = 0.9 / static_cast<double>(k) * u(rng) + 1e-4;
    for (int t = 0; t < 5; ++t) {
      std::vector<double> g(k);
      for (double& x : g) x = u(rng);
      const auto next = drats_update(q, g, eta, alpha, eps);
      double total = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        EXPECT_GE(next[i], eps * (1.0 - 1e-12));
        total += next[i];
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
      // From uniform, larger gaps get no less mass.
      if (t == 0)
        for (std::size_t i = 0; i < k; ++i)
          for (std::size_t j = 0; j < k; ++j)
            if (g[i] > g[j]) {
              EXPECT_GE(next[i], next[j] - 1e-15);
            }
      q = next;
    }
  }
}

TEST(DratsUpdate, EqualGapsKeepUniform) {
  const auto q = drats_update(TaskDistribution::uniform(5), std::vector<double>(5, 0.3), 8.0, 4.0, 0.02);
  for (double p : q.probs()) EXPECT_NEAR(p, 0.2, 1e-15);
}

TEST(DratsUpdate, ConvergesToProjectedBestResponseUnderFixedGaps) {
  const std::vector<double> g{0.9, 0.5, 0.1};
  TaskDistribution q = TaskDistribution::uniform(3);
  for (int t = 0; t < 200; ++t) q = drats_update(q, g, 4.0, 1.0, 0.0);
  const auto star = softmax_best_response(g, 4.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(q[i], star[i], 1e-12);
}

TEST(LearningProgress, WorkedExample) {
  auto obs = observation({0.0, 0.0, 0.0, 0.0});
  obs.has_prev = true;
  obs.prev_return_means = {0.0, 0.5, 0.2, 0.2};
  obs.return_means = {0.3, 0.4, 0.2, 0.2};
  const auto z = learning_progress_scores(obs);
  EXPECT_NEAR(z[0], 0.3, 1e-15);
  EXPECT_NEAR(z[1], 0.1, 1e-15);
  EXPECT_EQ(z[2], 0.0);
  const auto q = learning_progress_update(TaskDistribution::uniform(4), obs, 12.0, 6.0, 0.02);
  EXPECT_NEAR(q[0], 0.612823207330405074, 1e-14);
  EXPECT_NEAR(q[1], 0.184578802973389375, 1e-14);
  EXPECT_NEAR(q[2], 0.101298994848102776, 1e-14);
  EXPECT_NEAR(q[3], 0.101298994848102776, 1e-14);
}

TEST(LearningProgress, NoHistoryMeansZeroScores) {
  const auto obs = observation({0.5, 0.5});
  for (double z : learning_progress_scores(obs)) EXPECT_EQ(z, 0.0);
}

TEST(LearningProgress, ScoresAreClampedAndScaled) {
  auto obs = observation({0.0, 0.0});
  obs.has_prev = true;
  obs.return_scale = {2.0, 0.5};
  obs.prev_return_means = {0.0, 0.0};
  obs.return_means = {1.0, -1.0};
  const auto z = learning_progress_scores(obs);
  EXPECT_NEAR(z[0], 0.5, 1e-15);
  EXPECT_EQ(z[1], 1.0);
}

TEST(LearningPotential, WorkedExampleMatchesNestedOracle) {
  const std::vector<double> delta{1.0, -1.0, 0.5};
  EXPECT_NEAR(learning_potential_score(delta, 0.5), 0.625, 1e-15);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> d(1 + rep % 20);
    for (double& x : d) x = n01(rng);
    const double gl = 0.01 * (rep % 100);
    EXPECT_NEAR(learning_potential_score(d, gl), oracle::learning_potential_nested(d, gl), 1e-12);
  }
  EXPECT_THROW(learning_potential_score(std::vector<double>{}, 0.5), InvalidInput);
}

TEST(LearningPotential, TdErrorsUseBootstrapOnlyOnTruncation) {
  Trajectory t;
  t.task = 0;
  t.steps = {{0, 0, -0.1}, {1, 0, 1.0}};
  t.final_state = 2;
  t.terminated = true;
  auto value = [](int cell, int) { return static_cast<double>(cell); };
  auto d = td_errors(t, value, 0.5);
  EXPECT_NEAR(d[0], -0.1 + 0.5 * 1.0 - 0.0, 1e-15);
  EXPECT_NEAR(d[1], 1.0 + 0.0 - 1.0, 1e-15);
  t.terminated = false;
  t.truncated = true;
  d = td_errors(t, value, 0.5);
  EXPECT_NEAR(d[1], 1.0 + 0.5 * 2.0 - 1.0, 1e-15);
}

TEST(MinMaxScale, EdgeCases) {
  EXPECT_EQ(min_max_scale(std::vector<double>{2.0, 2.0, 2.0}), std::vector<double>(3, 0.0));
  const auto s = min_max_scale(std::vector<double>{1.0, 3.0, 2.0});
  EXPECT_DOUBLE_EQ(s[0], 0.0);
  EXPECT_DOUBLE_EQ(s[1], 1.0);
  EXPECT_DOUBLE_EQ(s[2], 0.5);
}

TEST(HardFirst, WorkedExampleActiveSet) {
  const auto cfg = hard_first_config(4);
  auto obs = observation({0, 0, 0, 0});
  obs.return_means = {0.9, 0.2, 0.1, 0.0};
  const auto [state, q] = hard_first_update({}, cfg, obs);
  EXPECT_EQ(state.active, (std::set<int>{1, 2, 3}));
  EXPECT_TRUE(state.solved.empty());
  EXPECT_NEAR(q[0], 0.02, 1e-15);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_NEAR(q[i], 0.98 / 3.0, 1e-15);
  check_partition(state, 4, 3);
}

TEST(HardFirst, SolvedTasksLeaveAndReturn) {
  const auto cfg = hard_first_config(4, 0.5);
  auto obs = observation({0, 0, 0, 0});
  obs.return_means = {0.9, 0.8, 0.1, 0.0};
  auto [s1, q1] = hard_first_update({}, cfg, obs);
  EXPECT_EQ(s1.solved, (std::set<int>{0, 1}));
  EXPECT_EQ(s1.active, (std::set<int>{2, 3}));
  check_partition(s1, 4, 3);
  obs.return_means = {0.9, 0.3, 0.1, 0.0};
  auto [s2, q2] = hard_first_update(s1, cfg, obs);
  EXPECT_EQ(s2.solved, (std::set<int>{0}));
  EXPECT_EQ(s2.active, (std::set<int>{1, 2, 3}));
  check_partition(s2, 4, 3);
}

TEST(HardFirst, UnsolvableAfterBudgetAndStageTwo) {
  auto cfg = hard_first_config(3, 0.9, 0.05);
  cfg.active_size = 2;
  cfg.task_step_budget = 100;
  auto obs = observation({0, 0, 0});
  obs.return_means = {0.5, 0.0, 0.01};
  obs.task_env_steps = {50, 50, 50};
  auto [s1, q1] = hard_first_update({}, cfg, obs);
  EXPECT_EQ(s1.active, (std::set<int>{1, 2}));
  obs.task_env_steps = {50, 150, 150};
  auto [s2, q2] = hard_first_update(s1, cfg, obs);
  EXPECT_EQ(s2.unsolvable, (std::set<int>{1, 2}));
  EXPECT_EQ(s2.active, (std::set<int>{0}));
  EXPECT_FALSE(s2.stage_two);
  EXPECT_GT(q2[0], q2[1]);
  obs.env_steps_elapsed = 900;
  auto [s3, q3] = hard_first_update(s2, cfg, obs);
  EXPECT_TRUE(s3.stage_two);
  EXPECT_NEAR(q3[1], q3[2], 1e-15);
  EXPECT_GT(q3[1], q3[0]);
}

TEST(HardFirst, RejectsInvertedThresholds) {
  const auto cfg = hard_first_config(2, 0.1, 0.5);
  EXPECT_THROW(hard_first_update({}, cfg, observation({0, 0})), InvalidInput);
}

TEST(EasyFirst, AdvancesThroughRanking) {
  EasyFirstConfig cfg;
  cfg.ranking = {2, 0, 1};
  EasyFirstSampler s(3, cfg);
  EXPECT_GT(s.distribution()[2], 0.9);
  auto obs = observation({0, 0, 0});
  obs.success_rates = {0.95, 0.1, 0.95};
  s.update(obs);
  EXPECT_EQ(s.state().position, 2u);
  EXPECT_GT(s.distribution()[1], 0.9);
  obs.success_rates = {0.95, 0.95, 0.95};
  s.update(obs);
  for (double p : s.distribution().probs()) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
}

TEST(EasyFirst, RejectsBadRanking) {
  EasyFirstConfig cfg;
  cfg.ranking = {0, 0, 1};
  EXPECT_THROW(EasyFirstSampler(3, cfg), InvalidInput);
}

TEST(Samplers, ObjectsMatchFreeFunctions) {
  const MirrorParams p{8.0, 4.0, 0.02};
  DratsSampler d(4, p);
  const auto obs = observation({0.9, 0.1, 0.4, 0.0});
  d.update(obs);
  const auto expect = drats_update(TaskDistribution::uniform(4), obs.gaps, 8.0, 4.0, 0.02);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(d.distribution()[i], expect[i]);
  UniformSampler u(4);
  u.update(obs);
  for (double q : u.distribution().probs()) EXPECT_EQ(q, 0.25);
}

TEST(Samplers, ParseKinds) {
  for (auto k : {SamplerKind::Uniform, SamplerKind::Drats, SamplerKind::LearningProgress, SamplerKind::LearningPotential,
                 SamplerKind::HardFirst, SamplerKind::EasyFirst})
    EXPECT_EQ(parse_sampler_kind(to_string(k)), k);
  EXPECT_THROW(parse_sampler_kind("thompson"), InvalidInput);
}

TEST(SampleTask, FrequenciesMatchDistribution) {
  const TaskDistribution q({0.1, 0.2, 0.3, 0.4});
  Engine rng = make_stream(8, Purpose::Test);
  const int n = 200000;
  std::vector<int> counts(4, 0);
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(sample_task(q, rng))];
  for (std::size_t i = 0; i < 4; ++i) {
    const double sd = std::sqrt(q[i] * (1.0 - q[i]) / n);
    EXPECT_NEAR(counts[i] / static_cast<double>(n), q[i], 4.0 * sd);
  }
}

// Drawing tasks uniformly and weighting by k q_i has the same expectation as
// drawing from q.
TEST(Reweighting, SameExpectationAsResampling) {
  const TaskDistribution q({0.55, 0.25, 0.15, 0.05});
  const std::vector<double> grad{1.0, -2.0, 0.5, 4.0};
  const std::size_t k = 4;
  const auto uni = TaskDistribution::uniform(k);
  Engine rng = make_stream(9, Purpose::Test);
  const int batches = 200000, per_batch = 8;
  double sr = 0, sr2 = 0, sw = 0, sw2 = 0;
  for (int b = 0; b < batches; ++b) {
    double r = 0, w = 0;
    for (int e = 0; e < per_batch; ++e) {
      r += grad[static_cast<std::size_t>(sample_task(q, rng))];
      const auto i = static_cast<std::size_t>(sample_task(uni, rng));
      w += static_cast<double>(k) * q[i] * grad[i];
    }
    r /= per_batch;
    w /= per_batch;
    sr += r, sr2 += r * r, sw += w, sw2 += w * w;
  }
  const double mr = sr / batches, mw = sw / batches;
  const double vr = sr2 / batches - mr * mr, vw = sw2 / batches - mw * mw;
  double exact = 0.0;
  for (std::size_t i = 0; i < k; ++i) exact += q[i] * grad[i];
  const double se = std::sqrt(vr / batches + vw / batches);
  EXPECT_LT(std::abs(mr - mw), 3.0 * se);
  EXPECT_NEAR(mr, exact, 3.0 * std::sqrt(vr / batches));
  EXPECT_NEAR(mw, exact, 3.0 * std::sqrt(vw / batches));
  // Batch-mean variances against their closed forms.
  double er2 = 0.0, ew2 = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    er2 += q[i] * grad[i] * grad[i];
    ew2 += std::pow(static_cast<double>(k) * q[i] * grad[i], 2) / static_cast<double>(k);
  }
  const double var_r = (er2 - exact * exact) / per_batch, var_w = (ew2 - exact * exact) / per_batch;
  EXPECT_NEAR(vr, var_r, 0.03 * var_r);
  EXPECT_NEAR(vw, var_w, 0.03 * var_w);
}

TEST(Reweighting, VarianceDiffersWhenGradientsAgree) {
  // Identical per-task gradients (all 1): resampling has zero spread, reweighting does not.
  const TaskDistribution q({0.7, 0.1, 0.1, 0.1});
  Engine rng = make_stream(10, Purpose::Test);
  double s = 0.0, s2 = 0.0;
  const int n = 100000;
  for (int e = 0; e < n; ++e) {
    const auto i = static_cast<std::size_t>(sample_task(TaskDistribution::uniform(4), rng));
    const double w = 4.0 * q[i];
    s += w, s2 += w * w;
  }
  const double m = s / n, v = s2 / n - m * m;
  EXPECT_NEAR(m, 1.0, 0.02);
  // Exact: mean of (4 q_i)^2 minus 1 = (7.84 + 3 * 0.16) / 4 - 1 = 1.08.
  EXPECT_NEAR(v, 1.08, 0.03);
}
