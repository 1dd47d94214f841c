#pragma once

// Independent reference computations and the oracle check suites run by the
// CLI and the acceptance binary. Every oracle here avoids the code path it
// checks: brute-force optimization instead of closed forms, plain-domain
// arithmetic instead of log-domain, finite differences instead of backprop.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "drats/gradient.hpp"
#include "drats/gridworld.hpp"
#include "drats/policy.hpp"
#include "drats/rng.hpp"
#include "drats/simplex.hpp"
#include "drats/tabular.hpp"
#include "drats/theory.hpp"

namespace drats::oracle {

// q_i^(1 - alpha/eta) exp(alpha g_i), normalized in plain arithmetic.
inline std::vector<double> mirror_step_power_form(const std::vector<double>& q, const std::vector<double>& g,
                                                  double eta, double alpha) {
  std::vector<double> w(q.size());
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    w[i] = std::pow(q[i], 1.0 - alpha / eta) * std::exp(alpha * g[i]);
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

// argmin KL(q || q_hat) over {q >= eps, sum q = 1}, by exponentiated-gradient
// descent on w in the simplex with q = eps + (1 - k eps) w.
inline std::vector<double> kl_projection_bruteforce(const std::vector<double>& q_hat, double eps, int iterations = 20000) {
  const std::size_t k = q_hat.size();
  const double free = 1.0 - eps * static_cast<double>(k);
  std::vector<double> w(k, 1.0 / static_cast<double>(k)), q(k);
  for (int it = 0; it < iterations; ++it) {
    const double lr = 2.0 / std::sqrt(1.0 + it / 50.0);
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      q[i] = eps + free * w[i];
      const double grad = free * (std::log(q[i] / q_hat[i]) + 1.0);
      w[i] *= std::exp(-lr * grad);
      total += w[i];
    }
    for (double& v : w) v /= total;
  }
  for (std::size_t i = 0; i < k; ++i) q[i] = eps + free * w[i];
  return q;
}

// argmax <q, g> - (1/eta) KL(q || uniform) over the simplex, by
// exponentiated-gradient ascent.
inline std::vector<double> entropic_best_response_bruteforce(const std::vector<double>& g, double eta,
                                                            int iterations = 20000) {
  const std::size_t k = g.size();
  std::vector<double> q(k, 1.0 / static_cast<double>(k));
  for (int it = 0; it < iterations; ++it) {
    const double lr = 0.5 / eta;
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double grad = g[i] - (std::log(q[i] * static_cast<double>(k)) + 1.0) / eta;
      q[i] *= std::exp(lr * grad);
      total += q[i];
    }
    for (double& v : q) v /= total;
  }
  return q;
}

// (1/T) sum_t |sum_{j>=t} (gamma lambda)^(j-t) delta_j| with an explicit
// double loop.
inline double learning_potential_nested(const std::vector<double>& delta, double gamma_lambda) {
  double total = 0.0;
  for (std::size_t t = 0; t < delta.size(); ++t) {
    double acc = 0.0;
    for (std::size_t j = t; j < delta.size(); ++j) acc += std::pow(gamma_lambda, static_cast<double>(j - t)) * delta[j];
    total += std::abs(acc);
  }
  return total / static_cast<double>(delta.size());
}

inline std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                              std::vector<double> x, double h = 1e-5) {
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double up = f(x);
    x[i] = x0 - h;
    const double down = f(x);
    x[i] = x0;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

// ||a - b|| / max(||a||, ||b||); 0 when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

// ---------------------------------------------------------------------------
// Random instances

inline std::vector<double> random_simplex_point(std::size_t k, std::mt19937_64& rng, double spread = 3.0) {
  std::normal_distribution<double> n(0.0, spread);
  std::vector<double> z(k);
  for (double& v : z) v = n(rng);
  return drats::detail::normalize_log_weights(z);
}

inline void randomize(PolicyParams& p, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  for (double& w : p.weights()) w = n(rng);
}

// A small board with random walls and a goal reachable within the horizon.
inline GridworldSpec random_small_gridworld(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> side(2, 4), steps(3, 8);
  std::bernoulli_distribution wall(0.2);
  for (;;) {
    GridworldSpec s;
    s.width = side(rng);
    s.height = side(rng);
    s.max_steps = steps(rng);
    s.walls.assign(static_cast<std::size_t>(s.n_cells()), false);
    for (std::size_t i = 0; i < s.walls.size(); ++i) s.walls[i] = wall(rng);
    std::uniform_int_distribution<int> cell(0, s.n_cells() - 1);
    s.start = s.cell(cell(rng));
    s.goal = s.cell(cell(rng));
    if (s.start == s.goal || s.is_wall(s.start) || s.is_wall(s.goal)) continue;
    const int d = shortest_path_length(s);
    if (d <= 0 || d > s.max_steps) continue;
    return s;
  }
}

// ---------------------------------------------------------------------------
// Check suites

struct CheckResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;      // worst observed error (or margin) across instances
  double tolerance = 0.0;
  std::size_t instances = 0;
  double seconds = 0.0;
  std::string detail;
};

namespace detail {
using Clock = std::chrono::steady_clock;
inline double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }
}  // namespace detail

inline CheckResult check_mirror_equivalence(std::uint64_t seed, std::size_t instances = 1000, double tol = 1e-12) {
  const auto t0 = detail::Clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> kdist(2, 8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CheckResult r{"mirror_ascent_step == geometric_mean_update(q, softmax(eta g), alpha/eta)", true, 0.0, tol, instances, 0.0, {}};
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t k = kdist(rng);
    const TaskDistribution q(random_simplex_point(k, rng, 1.0));
    std::vector<double> g(k);
    for (double& v : g) v = u(rng);
    const double eta = 0.5 + 15.5 * u(rng);
    const double alpha = eta * (0.01 + 0.99 * u(rng));
    const auto a = mirror_ascent_step(q, g, eta, alpha, TaskDistribution::uniform(k));
    const auto b = geometric_mean_update(q, softmax_best_response(g, eta), alpha / eta);
    const auto c = mirror_step_power_form(q.vec(), g, eta, alpha);
    for (std::size_t i = 0; i < k; ++i) r.worst = std::max({r.worst, std::abs(a[i] - b[i]), std::abs(a[i] - c[i])});
  }
  r.passed = r.worst <= tol;
  r.seconds = detail::since(t0);
  return r;
}

inline CheckResult check_kl_projection(std::uint64_t seed, std::size_t instances = 200, double tol = 1e-6) {
  const auto t0 = detail::Clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> kdist(2, 5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CheckResult r{"kl_projection_min_prob vs brute-force convex solver (KL gap)", true, 0.0, tol, instances, 0.0, {}};
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t k = kdist(rng);
    const TaskDistribution q_hat(random_simplex_point(k, rng, 3.0));
    const double eps = (0.05 + 0.9 * u(rng)) / static_cast<double>(k);
    const auto fast = kl_projection_min_prob(q_hat, eps);
    const auto slow = kl_projection_bruteforce(q_hat.vec(), eps);
    bool feasible = true;
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      feasible = feasible && fast[i] >= eps - 1e-12;
      total += fast[i];
    }
    feasible = feasible && std::abs(total - 1.0) < 1e-12;
    const double kl_fast = kl_divergence(fast.vec(), q_hat.vec());
    const double kl_slow = kl_divergence(slow, q_hat.vec());
    // The closed form may only be better than the iterative solver.
    const double err = std::max(kl_fast - kl_slow, 0.0);
    r.worst = std::max(r.worst, feasible ? err : std::numeric_limits<double>::infinity());
  }
  r.passed = r.worst <= tol;
  r.seconds = detail::since(t0);
  return r;
}

// Shift invariance and monotonicity in eta of softmax_best_response, plus
// agreement with a brute-force maximizer of the KL-regularized objective.
inline CheckResult check_softmax_properties(std::uint64_t seed, std::size_t instances = 200, double tol = 1e-9) {
  const auto t0 = detail::Clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> kdist(2, 8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CheckResult r{"softmax_best_response shift invariance, eta monotonicity, brute-force optimum", true, 0.0, tol,
                instances, 0.0, {}};
  std::ostringstream why;
  double brute_worst = 0.0;
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t k = kdist(rng);
    std::vector<double> g(k), shifted(k);
    const double c = 10.0 * (u(rng) - 0.5);
    for (std::size_t i = 0; i < k; ++i) {
      g[i] = u(rng);
      shifted[i] = g[i] + c;
    }
    const double eta = 0.5 + 10.0 * u(rng);
    const auto a = softmax_best_response(g, eta);
    const auto b = softmax_best_response(shifted, eta);
    for (std::size_t i = 0; i < k; ++i) r.worst = std::max(r.worst, std::abs(a[i] - b[i]));

    const std::size_t top = static_cast<std::size_t>(std::max_element(g.begin(), g.end()) - g.begin());
    const auto sharper = softmax_best_response(g, 2.0 * eta);
    if (sharper[top] < a[top] - tol) {
      r.passed = false;
      why << "mass on argmax decreased with eta; ";
    }
    double mean_a = 0.0, mean_s = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      mean_a += a[i] * g[i];
      mean_s += sharper[i] * g[i];
    }
    if (mean_s < mean_a - tol) {
      r.passed = false;
      why << "expected gap decreased with eta; ";
    }

    const auto brute = entropic_best_response_bruteforce(g, eta);
    for (std::size_t i = 0; i < k; ++i) brute_worst = std::max(brute_worst, std::abs(a[i] - brute[i]));
  }
  r.passed = r.passed && r.worst <= tol && brute_worst <= 1e-6;
  why << "shift error " << r.worst << ", brute-force optimum error " << brute_worst;
  r.detail = why.str();
  r.seconds = detail::since(t0);
  return r;
}

// A 5-transition batch on a tiny shared MLP (or tabular) with random
// advantages; analytic gradient vs central differences of the surrogate.
inline CheckResult check_reinforce_gradient(std::uint64_t seed, std::size_t instances = 100, double tol = 1e-4) {
  const auto t0 = detail::Clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> cells(2, 6), tasks(1, 3), hidden(1, 5), action(0, kNumActions - 1);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  CheckResult r{"reinforce_gradient vs central differences (h=1e-5)", true, 0.0, tol, instances, 0.0, {}};
  for (std::size_t n = 0; n < instances; ++n) {
    const int n_cells = cells(rng), n_tasks = tasks(rng);
    const auto arch = n % 4 == 3 ? Architecture::SeparateTabular : Architecture::SharedMlp;
    PolicyParams params(arch, n_cells, n_tasks, hidden(rng));
    randomize(params, rng, 0.7);
    std::vector<Trajectory> batch;
    std::vector<std::vector<double>> adv;
    std::uniform_int_distribution<int> cell(0, n_cells - 1), task(0, n_tasks - 1);
    for (int left = 5; left > 0;) {
      const int len = std::min(left, 1 + static_cast<int>(rng() % 3));
      Trajectory t;
      t.task = task(rng);
      std::vector<double> a;
      for (int s = 0; s < len; ++s) {
        t.steps.push_back({cell(rng), action(rng), 0.0});
        a.push_back(n01(rng));
      }
      batch.push_back(std::move(t));
      adv.push_back(std::move(a));
      left -= len;
    }
    const double entropy_coef = coin(rng) ? 0.0 : 0.1 * std::abs(n01(rng));
    const auto analytic = reinforce_gradient(params, batch, adv, entropy_coef);
    const auto fd = central_difference(
        [&](const std::vector<double>& w) {
          PolicyParams p = params;
          std::copy(w.begin(), w.end(), p.weights().begin());
          return reinforce_surrogate(p, batch, adv, entropy_coef);
        },
        std::vector<double>(params.weights().begin(), params.weights().end()));
    r.worst = std::max(r.worst, relative_error(analytic, fd));
  }
  r.passed = r.worst < tol;
  r.seconds = detail::since(t0);
  return r;
}

inline CheckResult check_exact_gradient(std::uint64_t seed, std::size_t instances = 20, double tol = 1e-6) {
  const auto t0 = detail::Clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> gam(0.8, 0.999);
  CheckResult r{"exact_policy_gradient vs central differences of exact_return", true, 0.0, tol, instances, 0.0, {}};
  for (std::size_t n = 0; n < instances; ++n) {
    const GridworldSpec spec = random_small_gridworld(rng);
    const TabularMDP mdp = to_tabular(spec, gam(rng));
    const auto arch = n % 2 == 0 ? Architecture::SeparateTabular : Architecture::SharedMlp;
    const int n_tasks = 2, task = static_cast<int>(n % 2);
    PolicyParams params(arch, spec.n_cells(), n_tasks, 4);
    randomize(params, rng, 0.8);
    const auto analytic = exact_policy_gradient(mdp, params, task, mdp.horizon);
    const auto fd = central_difference(
        [&](const std::vector<double>& w) {
          PolicyParams p = params;
          std::copy(w.begin(), w.end(), p.weights().begin());
          return exact_return(mdp, tabular_policy(mdp, p, task), mdp.horizon);
        },
        std::vector<double>(params.weights().begin(), params.weights().end()));
    r.worst = std::max(r.worst, relative_error(analytic, fd));
  }
  r.passed = r.worst < tol;
  r.seconds = detail::since(t0);
  return r;
}

// The three-task quadratic game with centers (-1, 0, 1) on [-2, 2], gap
// bound M = 9 (the largest squared distance on the box, so the clamp never
// binds and every g_i stays convex).
inline ConvexGame reference_quadratic_game() { return quadratic_game({-1.0, 0.0, 1.0}, -2.0, 2.0, 9.0); }

inline CheckResult check_convergence(std::size_t n_seeds = 20, double epsilon = 0.25) {
  const auto t0 = detail::Clock::now();
  const ConvexGame game = reference_quadratic_game();
  CheckResult r{"averaged max gap <= min-max value + eps on the quadratic game", true, -1e300, 0.0, n_seeds, 0.0, {}};
  std::ostringstream why;
  std::size_t held = 0;
  for (std::size_t s = 0; s < n_seeds; ++s) {
    const auto rep = synthetic_convergence_experiment(game, epsilon, s);
    const double slack = rep.max_average_gap - rep.minmax_value - epsilon;  // must be <= 0
    r.worst = std::max(r.worst, slack);
    held += rep.bound_holds;
    if (s == 0)
      why << "T=" << rep.rounds << " eta=" << rep.schedule.eta << " alpha=" << rep.schedule.alpha
          << " minmax=" << rep.minmax_value << "; ";
  }
  why << held << "/" << n_seeds << " seeds hold";
  r.passed = held == n_seeds;
  r.detail = why.str();
  r.seconds = detail::since(t0);
  return r;
}

inline std::vector<CheckResult> run_all_checks(std::uint64_t seed, bool include_convergence = true) {
  std::vector<CheckResult> out;
  out.push_back(check_mirror_equivalence(seed));
  out.push_back(check_kl_projection(seed + 1));
  out.push_back(check_softmax_properties(seed + 2));
  out.push_back(check_reinforce_gradient(seed + 3));
  out.push_back(check_exact_gradient(seed + 4));
  if (include_convergence) out.push_back(check_convergence());
  return out;
}

}  // namespace drats::oracle
