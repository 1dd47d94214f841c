#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "drats/advantage.hpp"
#include "drats/gradient.hpp"
#include "drats/oracles.hpp"
#include "drats/policy.hpp"

using namespace drats;

namespace {

double norm(const std::vector<double>& v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

Trajectory make_traj(int task, std::vector<Transition> steps, bool terminated = true) {
  Trajectory t;
  t.task = task;
  t.steps = std::move(steps);
  t.terminated = t.success = terminated;
  t.truncated = !terminated;
  return t;
}

GridworldSpec two_by_two() {
  GridworldSpec s;
  s.width = s.height = 2;
  s.walls.assign(4, false);
  s.start = {0, 0};
  s.goal = {1, 1};
  s.max_steps = 4;
  return s;
}

}  // namespace

TEST(Policy, ZeroWeightsGiveUniformActions) {
  for (auto arch : {Architecture::SharedMlp, Architecture::SeparateTabular}) {
    const PolicyParams p(arch, 5, 3, 8);
    for (int c = 0; c < 5; ++c)
      for (int t = 0; t < 3; ++t)
        for (double v : p.action_probs(c, t)) EXPECT_DOUBLE_EQ(v, 0.25);
  }
}

TEST(Policy, InitializedHasUniformPolicyAndSmallHiddenWeights) {
  const auto p = PolicyParams::initialized(Architecture::SharedMlp, 49, 4, 64, 7, 0.05);
  for (double v : p.action_probs(10, 2)) EXPECT_DOUBLE_EQ(v, 0.25);
  double biggest = 0.0;
  for (double w : p.weights()) biggest = std::max(biggest, std::abs(w));
  EXPECT_LE(biggest, 0.05);
  EXPECT_GT(biggest, 0.0);
  EXPECT_EQ(p, PolicyParams::initialized(Architecture::SharedMlp, 49, 4, 64, 7, 0.05));
}

TEST(Policy, SoftmaxShiftInvariance) {
  const std::array<double, kNumActions> z{0.3, -1.2, 2.0, 0.0};
  auto shifted = z;
  for (double& v : shifted) v += 123.0;
  const auto a = PolicyParams::softmax(z), b = PolicyParams::softmax(shifted);
  for (std::size_t i = 0; i < kNumActions; ++i) EXPECT_NEAR(a[i], b[i], 1e-15);
}

TEST(Policy, NonFiniteLogitsFault) {
  PolicyParams p(Architecture::SeparateTabular, 2, 1);
  p.weights()[0] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(p.action_probs(0, 0), NumericFault);
  EXPECT_THROW(p.action_probs(5, 0), InvalidInput);
}

TEST(Policy, SeparateParametersAreDisjoint) {
  std::mt19937_64 rng(1);
  PolicyParams p(Architecture::SeparateTabular, 6, 3);
  oracle::randomize(p, rng, 1.0);
  const auto before = p.action_probs(2, 1);
  const auto [lo, hi] = p.task_block(0);
  for (std::size_t i = lo; i < hi; ++i) p.weights()[i] += 3.0;
  const auto after = p.action_probs(2, 1);
  for (std::size_t a = 0; a < kNumActions; ++a) EXPECT_EQ(before[a], after[a]);
  EXPECT_THROW(PolicyParams(Architecture::SharedMlp, 4, 2, 3).task_block(0), InvalidInput);
}

TEST(Policy, SeparateGradientTouchesOnlyVisitedTask) {
  std::mt19937_64 rng(2);
  PolicyParams p(Architecture::SeparateTabular, 6, 3);
  oracle::randomize(p, rng, 0.5);
  const std::vector<Trajectory> batch{make_traj(1, {{0, 1, 0.0}, {3, 2, 1.0}})};
  const std::vector<std::vector<double>> adv{{0.7, -0.4}};
  const auto g = reinforce_gradient(p, batch, adv);
  const auto [lo, hi] = p.task_block(1);
  double inside = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i >= lo && i < hi) inside += std::abs(g[i]);
    else EXPECT_EQ(g[i], 0.0);
  }
  EXPECT_GT(inside, 0.0);
}

TEST(Policy, CheckpointRoundTrip) {
  std::mt19937_64 rng(3);
  for (auto arch : {Architecture::SharedMlp, Architecture::SeparateTabular}) {
    PolicyParams p(arch, 9, 4, 5);
    oracle::randomize(p, rng, 1.0);
    const auto back = parse_checkpoint(format_checkpoint(p));
    EXPECT_EQ(back, p);
    const auto path = (std::filesystem::temp_directory_path() / "drats_ckpt_roundtrip.txt").string();
    save_checkpoint(p, path);
    EXPECT_EQ(load_checkpoint(path), p);
    std::filesystem::remove(path);
  }
  EXPECT_THROW(parse_checkpoint("drats-policy 2\n"), InvalidInput);
  PolicyParams p(Architecture::SeparateTabular, 2, 1);
  auto text = format_checkpoint(p);
  text.resize(text.size() - 4);
  EXPECT_THROW(parse_checkpoint(text), InvalidInput);
}

TEST(Policy, ParseArchitectureAliases) {
  EXPECT_EQ(parse_architecture("shared"), Architecture::SharedMlp);
  EXPECT_EQ(parse_architecture("shared_mlp"), Architecture::SharedMlp);
  EXPECT_EQ(parse_architecture("separate"), Architecture::SeparateTabular);
  EXPECT_EQ(parse_architecture("separate_tabular"), Architecture::SeparateTabular);
  EXPECT_THROW(parse_architecture("transformer"), InvalidInput);
}

TEST(Reinforce, ZeroAdvantagesGiveZeroGradient) {
  std::mt19937_64 rng(4);
  PolicyParams p(Architecture::SharedMlp, 4, 2, 3);
  oracle::randomize(p, rng, 1.0);
  const std::vector<Trajectory> batch{make_traj(0, {{0, 1, 0.0}, {1, 3, 0.0}})};
  const std::vector<std::vector<double>> adv{{0.0, 0.0}};
  for (double v : reinforce_gradient(p, batch, adv)) EXPECT_EQ(v, 0.0);
  const std::vector<std::vector<double>> bad{{0.0}};
  EXPECT_THROW(reinforce_gradient(p, batch, bad), InvalidInput);
}

TEST(Reinforce, MatchesFiniteDifferences) {
  const auto r = oracle::check_reinforce_gradient(21, 12);
  EXPECT_TRUE(r.passed) << r.worst;
}

TEST(Reinforce, AveragesOverEpisodes) {
  std::mt19937_64 rng(5);
  PolicyParams p(Architecture::SeparateTabular, 4, 1);
  oracle::randomize(p, rng, 1.0);
  const auto t = make_traj(0, {{0, 1, 0.0}, {2, 0, 0.0}});
  const std::vector<std::vector<double>> one_adv{{1.0, -0.5}}, two_adv{{1.0, -0.5}, {1.0, -0.5}};
  const std::vector<Trajectory> one{t}, two{t, t};
  const auto g1 = reinforce_gradient(p, one, one_adv), g2 = reinforce_gradient(p, two, two_adv);
  for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_NEAR(g1[i], g2[i], 1e-15);
}

TEST(ExactGradient, MatchesFiniteDifferences) {
  const auto r = oracle::check_exact_gradient(22, 4);
  EXPECT_TRUE(r.passed) << r.worst;
}

TEST(ExactGradient, VanishesAtSaturation) {
  const auto spec = build_gridworld_suite({4}).tasks[0];
  const auto m = to_tabular(spec, 0.99);
  double prev = 1e300;
  for (double scale : {1.0, 5.0, 10.0, 20.0}) {
    PolicyParams p(Architecture::SeparateTabular, spec.n_cells(), 1);
    for (int c = 0; c < spec.n_cells(); ++c) {
      const Cell cell = spec.cell(c);
      // Prefer Down, then Right: both shorten the path on an open board.
      const int a = cell.y < spec.goal.y ? 1 : 3;
      p.weights()[static_cast<std::size_t>(c) * kNumActions + static_cast<std::size_t>(a)] = scale;
    }
    const double n = norm(exact_policy_gradient(m, p, 0, m.horizon));
    EXPECT_LT(n, prev);
    prev = n;
  }
  EXPECT_LT(prev, 1e-6);
}

TEST(ExactGradient, AgreesWithLargeMonteCarlo) {
  const auto spec = two_by_two();
  const auto m = to_tabular(spec, 0.9);
  std::mt19937_64 init(6);
  PolicyParams p(Architecture::SeparateTabular, 4, 1);
  oracle::randomize(p, init, 0.5);
  const auto exact = exact_policy_gradient(m, p, 0, m.horizon);
  const auto pol = tabular_policy(m, p, 0);
  Engine rng = make_stream(6, Purpose::Test);
  const int n = 1000000;
  std::vector<double> sum(p.size(), 0.0), sq(p.size(), 0.0);
  const ActionTable probs(p);
  std::vector<double> g(p.size());
  for (int e = 0; e < n; ++e) {
    const auto traj = rollout_tabular(m, pol, 0, m.horizon, rng);
    const auto w = discounted_returns_weights(traj, m.gamma);
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t t = 0; t < traj.length(); ++t) {
      const auto& tr = traj.steps[t];
      const double* pr = probs.row(tr.state, 0);
      for (int a = 0; a < kNumActions; ++a)
        g[static_cast<std::size_t>(tr.state) * kNumActions + static_cast<std::size_t>(a)] +=
            w[t] * ((a == tr.action ? 1.0 : 0.0) - pr[a]);
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      sum[i] += g[i];
      sq[i] += g[i] * g[i];
    }
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double mean = sum[i] / n;
    const double se = std::sqrt(std::max(sq[i] / n - mean * mean, 0.0) / n);
    EXPECT_NEAR(mean, exact[i], 3.0 * se + 1e-12) << "coordinate " << i;
  }
}

TEST(CosineAccuracy, ApproachesOneAndRejectsDegenerateCases) {
  const auto spec = build_gridworld_suite({2}, [] {
                      SuiteOptions o;
                      o.width = o.height = 3;
                      o.max_steps = 6;
                      return o;
                    }()).tasks[0];
  const auto m = to_tabular(spec, 0.99);
  const PolicyParams p(Architecture::SeparateTabular, spec.n_cells(), 1);
  const auto curve = gradient_cosine_accuracy(m, p, 0, {10, 100, 1000, 20000}, 4, 3);
  EXPECT_GT(curve.back().mean_cosine, 0.95);
  EXPECT_LT(curve.front().mean_cosine, curve.back().mean_cosine);
  for (const auto& pt : curve) {
    ASSERT_EQ(pt.cosines.size(), 4u);
    double s = 0.0;
    for (double c : pt.cosines) s += c;
    EXPECT_NEAR(pt.mean_cosine, s / 4.0, 1e-12);
  }
  EXPECT_THROW(gradient_cosine_accuracy(m, p, 0, {0, 10}, 2, 1), Undefined);
  // A horizon too short to reach the goal makes every action equivalent.
  auto short_spec = spec;
  short_spec.max_steps = 1;
  const auto ms = to_tabular(short_spec, 0.99);
  EXPECT_THROW(gradient_cosine_accuracy(ms, p, 0, {10}, 1, 1), Undefined);
}

TEST(Advantage, ReturnsToGo) {
  const auto t = make_traj(0, {{0, 0, -0.1}, {1, 0, -0.1}, {2, 0, 1.0}});
  const auto g = returns_to_go(t, 0.5);
  EXPECT_NEAR(g[2], 1.0, 1e-15);
  EXPECT_NEAR(g[1], -0.1 + 0.5, 1e-15);
  EXPECT_NEAR(g[0], -0.1 + 0.5 * 0.4, 1e-15);
}

TEST(Advantage, TwoScaleBatchFailureMode) {
  // Five transitions per task: task 0 near 10, task 1 near 0.1.
  const std::vector<std::vector<double>> raw{{10.2, 9.9, 10.1}, {9.8, 10.0}, {0.12, 0.09}, {0.1, 0.08, 0.11}};
  const std::vector<int> task_of{0, 0, 1, 1};
  const auto per = per_task_advantage_normalize(raw, task_of, 2);
  const auto glob = global_advantage_normalize(raw);
  for (int task = 0; task < 2; ++task) {
    double s = 0, s2 = 0;
    int n = 0;
    for (std::size_t i = 0; i < raw.size(); ++i)
      if (task_of[i] == task)
        for (double a : per.values[i]) s += a, s2 += a * a, ++n;
    EXPECT_LT(std::abs(s / n), 1e-6);
    EXPECT_NEAR(std::sqrt(s2 / n - (s / n) * (s / n)), 1.0, 1e-6);
  }
  for (std::size_t i = 2; i < 4; ++i)
    for (double a : glob.values[i]) EXPECT_LT(a, 0.0);
}

TEST(Advantage, SingleTaskEqualsGlobal) {
  const std::vector<std::vector<double>> raw{{1.0, 2.0}, {-3.0}};
  const std::vector<int> task_of{0, 0};
  const auto a = per_task_advantage_normalize(raw, task_of, 1), b = global_advantage_normalize(raw);
  for (std::size_t i = 0; i < raw.size(); ++i)
    for (std::size_t t = 0; t < raw[i].size(); ++t) EXPECT_EQ(a.values[i][t], b.values[i][t]);
}

TEST(Advantage, ConstantGroupIsZeroed) {
  const std::vector<std::vector<double>> raw{{0.5, 0.5}, {0.5}, {1.0, 2.0}};
  const std::vector<int> task_of{0, 0, 1};
  const auto a = per_task_advantage_normalize(raw, task_of, 2);
  for (std::size_t i = 0; i < 2; ++i)
    for (double v : a.values[i]) EXPECT_EQ(v, 0.0);
  EXPECT_NEAR(a.values[2][0], -1.0, 1e-6);
}

TEST(Advantage, NormalizationAbsorbsScale) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<std::vector<double>> raw(6);
  std::vector<int> task_of{0, 1, 2, 0, 1, 2};
  for (auto& r : raw) {
    r.resize(3);
    for (double& v : r) v = n01(rng);
  }
  auto scaled = raw;
  for (auto& r : scaled)
    for (double& v : r) v *= 250.0;
  const auto a = per_task_advantage_normalize(raw, task_of, 3), b = per_task_advantage_normalize(scaled, task_of, 3);
  for (std::size_t i = 0; i < raw.size(); ++i)
    for (std::size_t t = 0; t < 3; ++t) EXPECT_NEAR(a.values[i][t], b.values[i][t], 1e-6);
}

TEST(ValueBaseline, FullAndZeroSteps) {
  const std::vector<Trajectory> batch{make_traj(0, {{0, 0, 1.0}, {1, 0, 2.0}}), make_traj(0, {{0, 0, 3.0}})};
  const ValueBaseline zero(2, 1, 0.0), full(2, 1, 1.0);
  EXPECT_EQ(value_baseline_update(zero, batch, 1.0), zero);
  const auto v = value_baseline_update(full, batch, 1.0);
  EXPECT_DOUBLE_EQ(v.value(0, 0), (3.0 + 3.0) / 2.0);
  EXPECT_DOUBLE_EQ(v.value(1, 0), 2.0);
  EXPECT_THROW(value_baseline_update(full, std::vector<Trajectory>{}, 1.0), InvalidInput);
  EXPECT_THROW(ValueBaseline(2, 1, 1.5), InvalidInput);
}

TEST(ValueBaseline, GeometricConvergence) {
  const std::vector<Trajectory> batch{make_traj(0, {{0, 0, 4.0}})};
  ValueBaseline v(1, 1, 0.5);
  for (int n = 1; n <= 20; ++n) {
    v = value_baseline_update(v, batch, 0.9);
    EXPECT_NEAR(v.value(0, 0), 4.0 * (1.0 - std::pow(0.5, n)), 1e-12);
  }
}
