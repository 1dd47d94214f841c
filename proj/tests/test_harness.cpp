#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "drats/drats.hpp"

using namespace drats;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("drats_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

RunConfig tiny_config(SamplerKind kind = SamplerKind::Drats) {
  RunConfig c;
  c.profile = {2, 3, 4};
  c.suite_options.width = c.suite_options.height = 3;
  c.suite_options.max_steps = 8;
  c.sampler.kind = kind;
  c.learner.hidden = 8;
  c.learner.learning_rate = 0.3;
  c.total_env_steps = 3000;
  c.episodes_per_iteration = 10;
  c.seed = 4;
  c.run_id = "tiny";
  return c;
}

Json tiny_sweep_json(const std::string& out) {
  return Json{{"base",
               {{"profile", {2, 3, 4}},
                {"suite_options", {{"width", 3}, {"height", 3}, {"max_steps", 8}}},
                {"learner", {{"hidden", 8}, {"learning_rate", 0.3}}},
                {"total_env_steps", 1500},
                {"episodes_per_iteration", 10}}},
              {"methods", {"drats", "uniform", Json{{"name", "reweighted"}, {"config", {{"reweighted", true}}}}}},
              {"seeds", 3},
              {"bootstrap_resamples", 500},
              {"output_dir", out}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Theory

TEST(Theory, ScheduleWorkedExample) {
  const auto s = theory_schedule(0.5, 4, 1.0, 1.0);
  EXPECT_NEAR(s.eta, 5.54517744447956248, 1e-13);
  EXPECT_NEAR(s.lipschitz, 2.18033688011112043, 1e-13);
  EXPECT_EQ(s.t_min, 344u);
  EXPECT_NEAR(s.alpha, 0.0411755969379692512, 1e-14);
  EXPECT_NEAR(s.alpha_for(4 * 344), s.alpha / 2.0, 1e-15);
}

TEST(Theory, ScheduleSingleTaskAndErrors) {
  const auto s = theory_schedule(0.5, 1, 1.0, 1.0);
  EXPECT_EQ(s.eta, 0.0);
  EXPECT_EQ(s.alpha, 0.0);
  EXPECT_EQ(s.t_min, 16u);
  EXPECT_THROW(theory_schedule(0.0, 3, 1.0, 1.0), InvalidInput);
  EXPECT_THROW(theory_schedule(0.1, 0, 1.0, 1.0), InvalidInput);
}

TEST(Theory, ScheduleShrinksWithEpsilon) {
  std::size_t prev = 0;
  for (double eps : {1.0, 0.5, 0.25, 0.1}) {
    const auto s = theory_schedule(eps, 3, 1.0, 1.0);
    EXPECT_GT(s.t_min, prev);
    prev = s.t_min;
  }
}

TEST(Theory, QuadraticGameMinMax) {
  const auto game = oracle::reference_quadratic_game();
  const auto mm = grid_minmax(game);
  EXPECT_NEAR(mm.value, 1.0, 1e-6);
  EXPECT_TRUE(probe_convexity(game, 1));
}

TEST(Theory, ConvergenceOneSeed) {
  const auto rep = synthetic_convergence_experiment(oracle::reference_quadratic_game(), 0.5, 3);
  EXPECT_TRUE(rep.convexity_verified);
  EXPECT_TRUE(rep.bound_holds);
  EXPECT_LE(rep.max_average_gap, rep.minmax_value + 0.5);
  EXPECT_GE(rep.rounds, rep.schedule.t_min);
}

// ---------------------------------------------------------------------------
// Config

TEST(Config, ParsesAndRejectsUnknownKeys) {
  const auto c = run_config_from_json(Json::parse(R"({"profile":[3,6],"sampler":{"kind":"hard_first","eta":4},
      "learner":{"architecture":"separate","learning_rate":0.5},"reweighted":false,"seed":9})"));
  EXPECT_EQ(c.sampler.kind, SamplerKind::HardFirst);
  EXPECT_DOUBLE_EQ(c.sampler.effective_alpha(), 2.0);
  EXPECT_EQ(c.learner.architecture, Architecture::SeparateTabular);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_THROW(run_config_from_json(Json::parse(R"({"profil":[3]})")), InvalidInput);
  EXPECT_THROW(run_config_from_json(Json::parse(R"({"sampler":{"temperature":1}})")), InvalidInput);
  // to_json round trip.
  const auto back = run_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
}

TEST(Config, ValidationRejectsBadValues) {
  auto c = tiny_config();
  c.sampler.alpha = 2.0 * c.sampler.eta;
  EXPECT_THROW(run_training(c), InvalidInput);
  c = tiny_config();
  c.sampler.eps_min = 0.5;
  EXPECT_THROW(run_training(c), InvalidInput);
  c = tiny_config();
  c.episodes_per_iteration = 0;
  EXPECT_THROW(run_training(c), InvalidInput);
}

TEST(Config, RelativeSuitePathResolvesAgainstConfigFile) {
  const auto dir = fresh_dir("relpath");
  fs::create_directories(dir / "sub");
  save_suite(build_gridworld_suite({2, 3}), (dir / "sub" / "s.suite").string());
  {
    std::ofstream(dir / "run.json") << R"({"suite":"sub/s.suite"})";
  }
  const auto c = load_run_config((dir / "run.json").string());
  EXPECT_EQ(fs::path(c.suite_path), dir / "sub" / "s.suite");
  EXPECT_EQ(resolve_suite(c).size(), 2u);
  fs::remove_all(dir);
}

TEST(Config, SweepExpandsMethodMajor) {
  const auto s = sweep_config_from_json(tiny_sweep_json("x"));
  const auto runs = s.expand();
  ASSERT_EQ(runs.size(), 9u);
  EXPECT_EQ(runs[0].run_id, "drats-s0");
  EXPECT_EQ(runs[4].run_id, "uniform-s1");
  EXPECT_TRUE(runs[8].reweighted);
  EXPECT_EQ(runs[8].label(), "reweighted");
  EXPECT_THROW(sweep_config_from_json(Json{{"methods", Json::array()}, {"seeds", 1}}), InvalidInput);
}

// ---------------------------------------------------------------------------
// Training

TEST(Training, DeterministicForAFixedSeed) {
  const auto a = run_training(tiny_config()), b = run_training(tiny_config());
  ASSERT_FALSE(a.failed) << a.error;
  std::ostringstream sa, sb;
  write_records(sa, a);
  write_records(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(a.params, b.params);
  auto c = tiny_config();
  c.seed = 5;
  std::ostringstream sc;
  write_records(sc, run_training(c));
  EXPECT_NE(sa.str(), sc.str());
}

TEST(Training, RecordsAreWellFormed) {
  for (auto kind : {SamplerKind::Uniform, SamplerKind::Drats, SamplerKind::LearningProgress,
                    SamplerKind::LearningPotential, SamplerKind::HardFirst, SamplerKind::EasyFirst}) {
    const auto r = run_training(tiny_config(kind));
    ASSERT_FALSE(r.failed) << r.error;
    ASSERT_FALSE(r.records.empty());
    std::size_t prev = 0;
    for (const auto& rec : r.records) {
      EXPECT_GT(rec.env_steps, prev);
      prev = rec.env_steps;
      double total = 0.0;
      for (std::size_t i = 0; i < rec.q.size(); ++i) {
        total += rec.q[i];
        EXPECT_GE(rec.gap[i], 0.0);
        EXPECT_LE(rec.gap[i], 1.0);
        EXPECT_GE(rec.eval_success[i], -1e-12);
        EXPECT_LE(rec.eval_success[i], 1.0 + 1e-12);
        if (kind != SamplerKind::Uniform) EXPECT_GE(rec.q[i], 0.02 - 1e-12);
        else EXPECT_DOUBLE_EQ(rec.q[i], 1.0 / 3.0);
      }
      EXPECT_NEAR(total, 1.0, 1e-9);
    }
    EXPECT_GE(r.records.back().env_steps, 3000u);
  }
}

TEST(Training, LearnsTheTinySuite) {
  auto c = tiny_config(SamplerKind::Uniform);
  c.total_env_steps = 20000;
  const auto r = run_training(c);
  ASSERT_FALSE(r.failed) << r.error;
  EXPECT_GT(r.records.back().mean_eval_success(), 0.9);
  EXPECT_LT(r.records.front().mean_eval_success(), 0.9);
}

TEST(Training, StopAtSuccessEndsEarly) {
  auto c = tiny_config(SamplerKind::Uniform);
  c.total_env_steps = 50000;
  c.stop_at_success = 0.9;
  const auto r = run_training(c);
  ASSERT_FALSE(r.failed) << r.error;
  EXPECT_GE(r.records.back().mean_eval_success(), 0.9);
  EXPECT_LT(r.records.back().env_steps, 50000u);
  EXPECT_EQ(steps_to_threshold(r.records, 0.9), r.records.back().env_steps);
}

TEST(Training, SingleTaskRuns) {
  auto c = tiny_config();
  c.profile = {3};
  const auto r = run_training(c);
  ASSERT_FALSE(r.failed) << r.error;
  for (const auto& rec : r.records) EXPECT_EQ(rec.q, std::vector<double>{1.0});
}

TEST(Training, ReweightedDrawsUniformlyButTracksQ) {
  auto c = tiny_config();
  c.reweighted = true;
  const auto r = run_training(c);
  ASSERT_FALSE(r.failed) << r.error;
  std::vector<std::size_t> counts(3, 0);
  bool q_moved = false;
  for (const auto& rec : r.records) {
    for (std::size_t i = 0; i < 3; ++i) counts[i] += rec.episodes[i];
    q_moved = q_moved || std::abs(rec.q[0] - 1.0 / 3.0) > 1e-3;
  }
  EXPECT_TRUE(q_moved);
  const double n = static_cast<double>(counts[0] + counts[1] + counts[2]);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(counts[i] / n, 1.0 / 3.0, 4.0 * std::sqrt(2.0 / 9.0 / n));
}

TEST(Training, RandomPolicyReturnIsExactUniformReturn) {
  const auto suite = build_gridworld_suite({1});
  const auto j = random_policy_returns(suite);
  ASSERT_EQ(j.size(), 1u);
  EXPECT_LT(j[0], 1.0);
  EXPECT_GT(j[0], -0.015);
}

// ---------------------------------------------------------------------------
// CSV, summaries, sweeps

TEST(Csv, RecordsRoundTripThroughCurves) {
  const auto dir = fresh_dir("csv");
  const auto a = run_training(tiny_config());
  auto c2 = tiny_config(SamplerKind::Uniform);
  c2.run_id = "tiny-u";
  const auto b = run_training(c2);
  const auto path = (dir / "records.csv").string();
  write_records_file(path, {a, b});
  const auto curves = read_curves(path);
  ASSERT_EQ(curves.size(), 2u);
  const RunCurve expect[] = {curve_of(a), curve_of(b)};
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_EQ(curves[r].run_id, expect[r].run_id);
    EXPECT_EQ(curves[r].method, expect[r].method);
    EXPECT_EQ(curves[r].env_steps, expect[r].env_steps);
    ASSERT_EQ(curves[r].mean_success.size(), expect[r].mean_success.size());
    for (std::size_t i = 0; i < curves[r].mean_success.size(); ++i)
      EXPECT_NEAR(curves[r].mean_success[i], expect[r].mean_success[i], 1e-15);
  }
  EXPECT_EQ(slurp(path).substr(0, std::string(kRecordHeader).size()), kRecordHeader);
  fs::remove_all(dir);
}

TEST(Csv, NumbersRoundTripExactly) {
  for (double v : {0.1, 1.0 / 3.0, -0.015, 1e-300, 123456.789}) EXPECT_EQ(parse_double(format_double(v)), v);
  EXPECT_THROW(parse_double("1.0x"), InvalidInput);
}

TEST(Summary, StepFunctionAndThresholds) {
  RunCurve c{"r", "m", 0, {100, 200, 300}, {0.1, 0.6, 0.97}};
  EXPECT_DOUBLE_EQ(curve_value_at(c, 50), 0.1);
  EXPECT_DOUBLE_EQ(curve_value_at(c, 250), 0.6);
  EXPECT_DOUBLE_EQ(curve_value_at(c, 1000), 0.97);
  EXPECT_EQ(curve_steps_to(c, 0.95), 300u);
  EXPECT_FALSE(curve_steps_to(c, 0.99).has_value());

  RunCurve d{"r2", "m", 1, {100, 400}, {0.2, 0.5}};
  const auto s = summarize({c, d}, 500, 0.95, 0.95, 200, 5);
  ASSERT_EQ(s.thresholds.size(), 1u);
  EXPECT_EQ(s.thresholds[0].reached, 1u);
  EXPECT_DOUBLE_EQ(s.thresholds[0].mean_steps, (300.0 + 500.0) / 2.0);
  ASSERT_EQ(s.curves[0].grid.size(), 5u);
  EXPECT_EQ(s.curves[0].grid.back(), 500u);
  EXPECT_DOUBLE_EQ(s.curves[0].mean.back(), (0.97 + 0.5) / 2.0);
}

TEST(Sweep, OutputsIndependentOfParallelism) {
  const auto d1 = fresh_dir("sweep_p1"), d3 = fresh_dir("sweep_p3");
  auto s1 = sweep_config_from_json(tiny_sweep_json(d1.string()));
  auto s3 = sweep_config_from_json(tiny_sweep_json(d3.string()));
  s1.parallelism = 1;
  s3.parallelism = 3;
  write_sweep_outputs(d1.string(), run_sweep(s1));
  write_sweep_outputs(d3.string(), run_sweep(s3));
  for (const char* f : {"records.csv", "summary.csv", "thresholds.csv", "curves.svg"}) {
    const auto a = slurp(d1 / f);
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, slurp(d3 / f)) << f;
  }
  EXPECT_FALSE(fs::exists(d1 / "failures.txt"));
  fs::remove_all(d1);
  fs::remove_all(d3);
}

TEST(Sweep, FailedRunsAreRecordedNotFatal) {
  auto good = tiny_config();
  good.total_env_steps = 200;
  auto bad = good;
  bad.suite_path = "/nonexistent/suite.txt";
  bad.run_id = "bad";
  const auto results = run_all({good, bad}, 2);
  EXPECT_FALSE(results[0].failed);
  EXPECT_TRUE(results[1].failed);
  EXPECT_FALSE(results[1].error.empty());
}

TEST(Svg, RendersSeriesAndRejectsEmpty) {
  Series s{"drats", {0, 1, 2}, {0.1, 0.5, 0.9}, {{0.0, 0.2}, {0.4, 0.6}, {0.8, 1.0}}};
  const auto svg = render_svg({s}, ChartOptions{"t <1>", "x", "y", 400, 300, 0.0, 1.0});
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  EXPECT_NE(svg.find("<polygon"), std::string::npos);
  EXPECT_NE(svg.find("t &lt;1&gt;"), std::string::npos);
  EXPECT_THROW(render_svg({}), InvalidInput);
  Series bad{"x", {0, 1}, {0.5}, {}};
  EXPECT_THROW(render_svg({bad}), InvalidInput);
}
