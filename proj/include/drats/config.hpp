#pragma once

// Run configuration and its JSON form. Every field has a default, so a config
// file only lists what it changes.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "drats/error.hpp"
#include "drats/gap.hpp"
#include "drats/gridworld.hpp"
#include "drats/policy.hpp"
#include "drats/samplers.hpp"

namespace drats {

enum class StaleReturnPolicy { CarryForward, Zero };

inline const char* to_string(StaleReturnPolicy p) { return p == StaleReturnPolicy::Zero ? "zero" : "carry_forward"; }

inline StaleReturnPolicy parse_stale_policy(const std::string& s) {
  if (s == "carry_forward") return StaleReturnPolicy::CarryForward;
  if (s == "zero") return StaleReturnPolicy::Zero;
  throw InvalidInput("unknown stale_return_policy '" + s + "'");
}

struct SamplerConfig {
  SamplerKind kind = SamplerKind::Drats;
  double eta = 8.0;
  std::optional<double> alpha;  // default 0.5 * eta
  double eps_min = 0.02;
  // Hard First
  std::size_t active_size = 3;
  double b1_fraction = 0.8;
  double solved_threshold = 0.9;      // return units, every task
  double unsolvable_threshold = 0.0;  // return units, every task
  std::optional<std::size_t> task_step_budget;
  // Easy First; empty = order tasks by shortest-path length
  std::vector<int> ranking;
  double advance_threshold = 0.9;

  double effective_alpha() const { return alpha.value_or(0.5 * eta); }
};

struct LearnerConfig {
  Architecture architecture = Architecture::SharedMlp;
  int hidden = 64;
  double learning_rate = 0.05;
  double entropy_coef = 0.0;
  double value_learning_rate = 0.1;
  double gae_lambda = 0.95;
  double init_scale = 0.05;
  bool per_task_normalization = true;
};

struct RunConfig {
  std::string run_id;
  std::string method;      // label written to the CSV; defaults to the sampler name
  std::string suite_path;  // empty: build from `profile`
  std::vector<int> profile{3, 6, 9, 12};
  SuiteOptions suite_options;
  SamplerConfig sampler;
  LearnerConfig learner;
  bool reweighted = false;  // uniform draws, advantages scaled by k * q_i
  std::size_t total_env_steps = 40000;
  int episodes_per_iteration = 40;
  std::uint64_t seed = 0;
  StaleReturnPolicy stale_return_policy = StaleReturnPolicy::CarryForward;
  ReferenceMode reference_mode = ReferenceMode::FixedKnown;
  std::optional<double> j_ref;  // default: goal reward
  double success_threshold = 0.5;
  std::optional<double> stop_at_success;  // end the run once mean exact success reaches this
  std::string output_dir = "out";

  std::string label() const {
    if (!method.empty()) return method;
    return reweighted ? std::string("uniform_reweighted") : std::string(to_string(sampler.kind));
  }
};

inline void validate(const RunConfig& c, std::size_t k) {
  require(c.total_env_steps > 0, "config: total_env_steps must be positive");
  require(c.episodes_per_iteration >= 1, "config: episodes_per_iteration must be positive");
  require(c.sampler.eta > 0.0, "config: eta must be positive");
  const double alpha = c.sampler.effective_alpha();
  require(alpha > 0.0 && alpha <= c.sampler.eta, "config: alpha must lie in (0, eta]");
  require(c.sampler.eps_min >= 0.0, "config: eps_min must be non-negative");
  require(k < 2 || c.sampler.eps_min * static_cast<double>(k) < 1.0, "config: eps_min * k must be below 1");
  require(c.learner.learning_rate > 0.0, "config: learning_rate must be positive");
  require(c.learner.hidden >= 1, "config: hidden width must be positive");
  require(c.learner.gae_lambda >= 0.0 && c.learner.gae_lambda <= 1.0, "config: gae_lambda outside [0, 1]");
  require(c.sampler.b1_fraction > 0.0 && c.sampler.b1_fraction <= 1.0, "config: b1_fraction outside (0, 1]");
  require(c.sampler.unsolvable_threshold < c.sampler.solved_threshold, "config: need unsolvable < solved threshold");
}

// ---------------------------------------------------------------------------
// JSON

using Json = nlohmann::json;

namespace detail {

template <class T>
void read(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void reject_unknown(const Json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    require(ok, "config: unknown key '" + key + "' in " + where);
  }
}

}  // namespace detail

inline SamplerConfig sampler_config_from_json(const Json& j) {
  detail::reject_unknown(j, {"kind", "eta", "alpha", "eps_min", "active_size", "b1_fraction", "solved_threshold",
                             "unsolvable_threshold", "task_step_budget", "ranking", "advance_threshold"},
                         "sampler");
  SamplerConfig s;
  if (j.contains("kind")) s.kind = parse_sampler_kind(j.at("kind").get<std::string>());
  detail::read(j, "eta", s.eta);
  if (j.contains("alpha") && !j.at("alpha").is_null()) s.alpha = j.at("alpha").get<double>();
  detail::read(j, "eps_min", s.eps_min);
  detail::read(j, "active_size", s.active_size);
  detail::read(j, "b1_fraction", s.b1_fraction);
  detail::read(j, "solved_threshold", s.solved_threshold);
  detail::read(j, "unsolvable_threshold", s.unsolvable_threshold);
  if (j.contains("task_step_budget") && !j.at("task_step_budget").is_null())
    s.task_step_budget = j.at("task_step_budget").get<std::size_t>();
  detail::read(j, "ranking", s.ranking);
  detail::read(j, "advance_threshold", s.advance_threshold);
  return s;
}

inline LearnerConfig learner_config_from_json(const Json& j) {
  detail::reject_unknown(j, {"architecture", "hidden", "learning_rate", "entropy_coef", "value_learning_rate",
                             "gae_lambda", "init_scale", "per_task_normalization"},
                         "learner");
  LearnerConfig l;
  if (j.contains("architecture")) l.architecture = parse_architecture(j.at("architecture").get<std::string>());
  detail::read(j, "hidden", l.hidden);
  detail::read(j, "learning_rate", l.learning_rate);
  detail::read(j, "entropy_coef", l.entropy_coef);
  detail::read(j, "value_learning_rate", l.value_learning_rate);
  detail::read(j, "gae_lambda", l.gae_lambda);
  detail::read(j, "init_scale", l.init_scale);
  detail::read(j, "per_task_normalization", l.per_task_normalization);
  return l;
}

inline RunConfig run_config_from_json(const Json& j) {
  detail::reject_unknown(j, {"run_id", "method", "suite", "profile", "suite_options", "sampler", "learner", "reweighted",
                             "total_env_steps", "episodes_per_iteration", "seed", "stale_return_policy",
                             "reference_mode", "j_ref", "success_threshold", "stop_at_success", "output_dir"},
                         "run config");
  RunConfig c;
  detail::read(j, "run_id", c.run_id);
  detail::read(j, "method", c.method);
  detail::read(j, "suite", c.suite_path);
  detail::read(j, "profile", c.profile);
  if (j.contains("suite_options")) {
    const Json& o = j.at("suite_options");
    detail::reject_unknown(o, {"width", "height", "max_steps", "step_reward", "goal_reward", "gamma"}, "suite_options");
    detail::read(o, "width", c.suite_options.width);
    detail::read(o, "height", c.suite_options.height);
    detail::read(o, "max_steps", c.suite_options.max_steps);
    detail::read(o, "step_reward", c.suite_options.step_reward);
    detail::read(o, "goal_reward", c.suite_options.goal_reward);
    detail::read(o, "gamma", c.suite_options.gamma);
  }
  if (j.contains("sampler")) c.sampler = sampler_config_from_json(j.at("sampler"));
  if (j.contains("learner")) c.learner = learner_config_from_json(j.at("learner"));
  detail::read(j, "reweighted", c.reweighted);
  detail::read(j, "total_env_steps", c.total_env_steps);
  detail::read(j, "episodes_per_iteration", c.episodes_per_iteration);
  detail::read(j, "seed", c.seed);
  if (j.contains("stale_return_policy"))
    c.stale_return_policy = parse_stale_policy(j.at("stale_return_policy").get<std::string>());
  if (j.contains("reference_mode")) c.reference_mode = parse_reference_mode(j.at("reference_mode").get<std::string>());
  if (j.contains("j_ref") && !j.at("j_ref").is_null()) c.j_ref = j.at("j_ref").get<double>();
  detail::read(j, "success_threshold", c.success_threshold);
  if (j.contains("stop_at_success") && !j.at("stop_at_success").is_null())
    c.stop_at_success = j.at("stop_at_success").get<double>();
  detail::read(j, "output_dir", c.output_dir);
  return c;
}

inline Json to_json(const RunConfig& c) {
  Json s = {{"kind", to_string(c.sampler.kind)},
            {"eta", c.sampler.eta},
            {"alpha", c.sampler.effective_alpha()},
            {"eps_min", c.sampler.eps_min},
            {"active_size", c.sampler.active_size},
            {"b1_fraction", c.sampler.b1_fraction},
            {"solved_threshold", c.sampler.solved_threshold},
            {"unsolvable_threshold", c.sampler.unsolvable_threshold},
            {"ranking", c.sampler.ranking},
            {"advance_threshold", c.sampler.advance_threshold}};
  if (c.sampler.task_step_budget) s["task_step_budget"] = *c.sampler.task_step_budget;
  Json l = {{"architecture", to_string(c.learner.architecture)},
            {"hidden", c.learner.hidden},
            {"learning_rate", c.learner.learning_rate},
            {"entropy_coef", c.learner.entropy_coef},
            {"value_learning_rate", c.learner.value_learning_rate},
            {"gae_lambda", c.learner.gae_lambda},
            {"init_scale", c.learner.init_scale},
            {"per_task_normalization", c.learner.per_task_normalization}};
  Json o = {{"width", c.suite_options.width},         {"height", c.suite_options.height},
            {"max_steps", c.suite_options.max_steps}, {"step_reward", c.suite_options.step_reward},
            {"goal_reward", c.suite_options.goal_reward}, {"gamma", c.suite_options.gamma}};
  Json j = {{"run_id", c.run_id},
            {"method", c.method},
            {"suite", c.suite_path},
            {"profile", c.profile},
            {"suite_options", o},
            {"sampler", s},
            {"learner", l},
            {"reweighted", c.reweighted},
            {"total_env_steps", c.total_env_steps},
            {"episodes_per_iteration", c.episodes_per_iteration},
            {"seed", c.seed},
            {"stale_return_policy", to_string(c.stale_return_policy)},
            {"reference_mode", to_string(c.reference_mode)},
            {"success_threshold", c.success_threshold},
            {"output_dir", c.output_dir}};
  if (c.j_ref) j["j_ref"] = *c.j_ref;
  if (c.stop_at_success) j["stop_at_success"] = *c.stop_at_success;
  return j;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open config file " + path);
  try {
    return Json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const Json::exception& e) {
    throw InvalidInput("malformed config " + path + ": " + e.what());
  }
}

// Relative suite paths in a config file are taken relative to that file.
inline void resolve_suite_path(Json& j, const std::string& config_path) {
  if (!j.is_object() || !j.contains("suite") || !j.at("suite").is_string()) return;
  const std::filesystem::path suite = j.at("suite").get<std::string>();
  if (suite.is_absolute()) return;
  j["suite"] = (std::filesystem::path(config_path).parent_path() / suite).lexically_normal().string();
}

inline RunConfig load_run_config(const std::string& path) {
  try {
    Json j = read_json_file(path);
    resolve_suite_path(j, path);
    return run_config_from_json(j);
  } catch (const Json::exception& e) {
    throw InvalidInput("bad value in config " + path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Sweeps: a base config, a list of methods (each a JSON merge patch applied to
// the base) and a seed list.

struct SweepMethod {
  std::string name;
  Json patch;
};

struct SweepConfig {
  Json base = Json::object();
  std::vector<SweepMethod> methods;
  std::vector<std::uint64_t> seeds;
  int parallelism = 1;
  std::string output_dir = "out";
  double ci_level = 0.95;
  std::size_t bootstrap_resamples = 10000;
  double success_target = 0.95;

  // One config per (method, seed), method-major.
  std::vector<RunConfig> expand() const {
    std::vector<RunConfig> out;
    for (const auto& m : methods) {
      Json merged = base;
      merged.merge_patch(m.patch);
      for (auto seed : seeds) {
        RunConfig c = run_config_from_json(merged);
        c.method = m.name;
        c.seed = seed;
        c.run_id = m.name + "-s" + std::to_string(seed);
        c.output_dir = output_dir;
        out.push_back(std::move(c));
      }
    }
    return out;
  }
};

inline SweepConfig sweep_config_from_json(const Json& j) {
  detail::reject_unknown(j, {"base", "methods", "seeds", "parallelism", "output_dir", "ci_level",
                             "bootstrap_resamples", "success_target"},
                         "sweep config");
  SweepConfig s;
  if (j.contains("base")) s.base = j.at("base");
  require(j.contains("methods") && j.at("methods").is_array() && !j.at("methods").empty(),
          "sweep config: 'methods' must be a non-empty list");
  for (const auto& m : j.at("methods")) {
    if (m.is_string()) {
      const auto name = m.get<std::string>();
      s.methods.push_back({name, Json{{"sampler", {{"kind", name}}}}});
    } else {
      require(m.contains("name"), "sweep config: every method needs a name");
      Json patch = m.contains("config") ? m.at("config") : Json::object();
      s.methods.push_back({m.at("name").get<std::string>(), patch});
    }
  }
  require(j.contains("seeds"), "sweep config: 'seeds' is required");
  const Json& seeds = j.at("seeds");
  if (seeds.is_number_integer()) {
    for (std::uint64_t i = 0; i < seeds.get<std::uint64_t>(); ++i) s.seeds.push_back(i);
  } else {
    s.seeds = seeds.get<std::vector<std::uint64_t>>();
  }
  require(!s.seeds.empty(), "sweep config: no seeds");
  detail::read(j, "parallelism", s.parallelism);
  detail::read(j, "output_dir", s.output_dir);
  detail::read(j, "ci_level", s.ci_level);
  detail::read(j, "bootstrap_resamples", s.bootstrap_resamples);
  detail::read(j, "success_target", s.success_target);
  require(s.parallelism >= 1, "sweep config: parallelism must be positive");
  return s;
}

inline SweepConfig load_sweep_config(const std::string& path) {
  try {
    Json j = read_json_file(path);
    if (j.contains("base")) resolve_suite_path(j["base"], path);
    if (j.contains("methods") && j.at("methods").is_array())
      for (auto& m : j["methods"])
        if (m.is_object() && m.contains("config")) resolve_suite_path(m["config"], path);
    return sweep_config_from_json(j);
  } catch (const Json::exception& e) {
    throw InvalidInput("bad value in sweep config " + path + ": " + e.what());
  }
}

}  // namespace drats
