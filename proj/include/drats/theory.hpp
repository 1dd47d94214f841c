#pragma once

// The convergence schedule for the two-player game between the task
// distribution (mirror ascent) and a C-low-regret parameter player, and a
// synthetic experiment that checks the averaged-gap guarantee on convex games.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "drats/error.hpp"
#include "drats/rng.hpp"
#include "drats/simplex.hpp"

namespace drats {

struct TheorySchedule {
  double epsilon = 0.0;
  std::size_t k = 0;
  double gap_bound = 0.0;        // M
  double regret_constant = 0.0;  // C
  double eta = 0.0;
  double lipschitz = 0.0;        // G
  double alpha = 0.0;            // evaluated at T = t_min
  std::size_t t_min = 0;

  // Step size for an arbitrary horizon T.
  double alpha_for(std::size_t T) const {
    if (k < 2) return 0.0;
    return std::sqrt(2.0 * std::log(static_cast<double>(k))) / (lipschitz * std::sqrt(static_cast<double>(T)));
  }
};

// eta = 2 log k / eps,  G = M + (1 + max(eta M, log k)) / eta,
// T_min = ceil(4 (G sqrt(2 log k) + C)^2 / eps^2),  alpha = sqrt(2 log k) / (G sqrt(T_min)).
// With a single task there is no distribution to learn: eta and alpha are 0,
// G = M and only the parameter player's regret term remains.
inline TheorySchedule theory_schedule(double epsilon, std::size_t k, double gap_bound, double regret_constant) {
  require(epsilon > 0.0 && std::isfinite(epsilon), "theory_schedule: epsilon must be positive");
  require(k >= 1, "theory_schedule: need at least one task");
  require(gap_bound >= 0.0 && regret_constant >= 0.0, "theory_schedule: M and C must be non-negative");
  TheorySchedule s;
  s.epsilon = epsilon;
  s.k = k;
  s.gap_bound = gap_bound;
  s.regret_constant = regret_constant;
  const double log_k = std::log(static_cast<double>(k));
  if (k == 1) {
    s.lipschitz = gap_bound;
    s.t_min = static_cast<std::size_t>(std::ceil(4.0 * regret_constant * regret_constant / (epsilon * epsilon)));
    s.t_min = std::max<std::size_t>(s.t_min, 1);
    return s;
  }
  s.eta = 2.0 * log_k / epsilon;
  s.lipschitz = gap_bound + (1.0 + std::max(s.eta * gap_bound, log_k)) / s.eta;
  const double root = s.lipschitz * std::sqrt(2.0 * log_k) + regret_constant;
  s.t_min = static_cast<std::size_t>(std::ceil(4.0 * root * root / (epsilon * epsilon)));
  s.t_min = std::max<std::size_t>(s.t_min, 1);
  s.alpha = s.alpha_for(s.t_min);
  return s;
}

// k gap functions over a box in R^dim (dim 1 or 2), each bounded in [0, M],
// with subgradients and a bound on subgradient norms.
struct ConvexGame {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::function<double(std::span<const double>)>> gaps;
  std::vector<std::function<void(std::span<const double>, std::span<double>)>> subgradients;
  double gap_bound = 1.0;         // M
  double subgradient_bound = 1.0;  // max ||grad g_i|| over the box

  std::size_t dim() const { return lower.size(); }
  std::size_t k() const { return gaps.size(); }

  double diameter() const {
    double s = 0.0;
    for (std::size_t d = 0; d < dim(); ++d) s += (upper[d] - lower[d]) * (upper[d] - lower[d]);
    return std::sqrt(s);
  }
  double max_gap(std::span<const double> theta) const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& g : gaps) m = std::max(m, g(theta));
    return m;
  }
};

// g_i(theta) = min(M, (theta - c_i)^2) on [lo, hi]. With M at least the largest
// squared distance inside the box the cap is inactive and every g_i is convex.
inline ConvexGame quadratic_game(std::vector<double> centers, double lo, double hi, double gap_bound) {
  require(!centers.empty() && lo < hi, "quadratic_game: bad arguments");
  ConvexGame game;
  game.lower = {lo};
  game.upper = {hi};
  game.gap_bound = gap_bound;
  double max_slope = 0.0;
  for (double c : centers) {
    game.gaps.push_back([c, gap_bound](std::span<const double> th) { return std::min(gap_bound, (th[0] - c) * (th[0] - c)); });
    game.subgradients.push_back([c, gap_bound](std::span<const double> th, std::span<double> out) {
      const double d = th[0] - c;
      out[0] = d * d >= gap_bound ? 0.0 : 2.0 * d;
    });
    max_slope = std::max({max_slope, 2.0 * std::abs(hi - c), 2.0 * std::abs(lo - c)});
  }
  game.subgradient_bound = max_slope;
  return game;
}

// Regret constant of projected online gradient descent with steps
// D / (L sqrt(t)): regret <= 1.5 D L sqrt(T).
inline double ogd_regret_constant(const ConvexGame& game) {
  return 1.5 * game.diameter() * game.subgradient_bound;
}

struct MinMaxSolution {
  double value = 0.0;
  std::vector<double> argmin;
};

// min over the box of max_i g_i, by dense grid search. In 2-D a 1e-2 grid is
// refined to `resolution` around the best coarse point.
inline MinMaxSolution grid_minmax(const ConvexGame& game, double resolution = 1e-4) {
  require(game.dim() == 1 || game.dim() == 2, "grid_minmax: only 1-D and 2-D boxes are supported");
  require(resolution > 0.0, "grid_minmax: resolution must be positive");
  MinMaxSolution best{std::numeric_limits<double>::infinity(), {}};
  auto scan = [&](const std::vector<double>& lo, const std::vector<double>& hi, double res) {
    std::vector<std::size_t> n(game.dim());
    for (std::size_t d = 0; d < game.dim(); ++d)
      n[d] = static_cast<std::size_t>(std::floor((hi[d] - lo[d]) / res + 1e-9)) + 1;
    std::vector<double> th(game.dim());
    const std::size_t ny = game.dim() == 2 ? n[1] : 1;
    for (std::size_t i = 0; i < n[0]; ++i) {
      th[0] = std::min(lo[0] + static_cast<double>(i) * res, hi[0]);
      for (std::size_t j = 0; j < ny; ++j) {
        if (game.dim() == 2) th[1] = std::min(lo[1] + static_cast<double>(j) * res, hi[1]);
        const double v = game.max_gap(th);
        if (v < best.value) best = {v, th};
      }
    }
  };
  if (game.dim() == 1) {
    scan(game.lower, game.upper, resolution);
    return best;
  }
  const double coarse = std::max(resolution, 1e-2);
  scan(game.lower, game.upper, coarse);
  std::vector<double> lo(2), hi(2);
  for (std::size_t d = 0; d < 2; ++d) {
    lo[d] = std::max(game.lower[d], best.argmin[d] - 2 * coarse);
    hi[d] = std::min(game.upper[d], best.argmin[d] + 2 * coarse);
  }
  scan(lo, hi, resolution);
  return best;
}

// Midpoint-convexity probe on random pairs; false means the guarantee is void.
inline bool probe_convexity(const ConvexGame& game, std::uint64_t seed, int trials = 2000) {
  Engine rng = make_stream(seed, Purpose::Convergence, 0xC0);
  std::vector<double> a(game.dim()), b(game.dim()), m(game.dim());
  for (int t = 0; t < trials; ++t) {
    for (std::size_t d = 0; d < game.dim(); ++d) {
      a[d] = game.lower[d] + uniform01(rng) * (game.upper[d] - game.lower[d]);
      b[d] = game.lower[d] + uniform01(rng) * (game.upper[d] - game.lower[d]);
      m[d] = 0.5 * (a[d] + b[d]);
    }
    for (const auto& g : game.gaps)
      if (g(m) > 0.5 * (g(a) + g(b)) + 1e-9) return false;
  }
  return true;
}

struct ConvergenceReport {
  TheorySchedule schedule;
  std::size_t rounds = 0;
  std::vector<double> average_gaps;  // (1/T) sum_t g_i(theta_t)
  double max_average_gap = 0.0;
  double minmax_value = 0.0;
  bool bound_holds = false;
  bool convexity_verified = true;
  std::string warning;
  std::vector<double> final_q;
};

// Runs mirror ascent (schedule eta, alpha) against projected online gradient
// descent for `rounds` >= T_min rounds from a seeded random start and checks
//   max_i (1/T) sum_t g_i(theta_t) <= min_theta max_i g_i(theta) + eps.
inline ConvergenceReport synthetic_convergence_experiment(const ConvexGame& game, double epsilon, std::uint64_t seed,
                                                          std::size_t rounds = 0, double minmax_resolution = 1e-4) {
  require(game.k() >= 1 && game.subgradients.size() == game.k(), "convergence: one subgradient per gap required");
  require(game.dim() >= 1 && game.upper.size() == game.dim(), "convergence: malformed box");
  ConvergenceReport rep;
  rep.convexity_verified = probe_convexity(game, seed);
  if (!rep.convexity_verified) rep.warning = "gap functions failed a convexity probe; the guarantee does not apply";
  const double C = ogd_regret_constant(game);
  rep.schedule = theory_schedule(epsilon, game.k(), game.gap_bound, C);
  const std::size_t T = std::max(rounds, rep.schedule.t_min);
  rep.rounds = T;
  const double alpha = rep.schedule.alpha_for(T);

  const std::size_t k = game.k();
  const std::size_t dim = game.dim();
  Engine rng = make_stream(seed, Purpose::Convergence);
  std::vector<double> theta(dim);
  for (std::size_t d = 0; d < dim; ++d) theta[d] = game.lower[d] + uniform01(rng) * (game.upper[d] - game.lower[d]);

  std::vector<double> q(k, 1.0 / static_cast<double>(k));
  std::vector<double> sums(k, 0.0), g(k), grad(dim), gi(dim);
  const double D = game.diameter();
  const double L = std::max(game.subgradient_bound, 1e-12);
  const TaskDistribution p0 = k >= 2 ? TaskDistribution::uniform(k) : TaskDistribution();
  for (std::size_t t = 1; t <= T; ++t) {
    for (std::size_t i = 0; i < k; ++i) {
      g[i] = game.gaps[i](theta);
      sums[i] += g[i];
    }
    // Parameter player: one projected subgradient step on <q_t, g(theta)>.
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      game.subgradients[i](theta, gi);
      for (std::size_t d = 0; d < dim; ++d) grad[d] += q[i] * gi[d];
    }
    const double step = D / (L * std::sqrt(static_cast<double>(t)));
    for (std::size_t d = 0; d < dim; ++d)
      theta[d] = std::clamp(theta[d] - step * grad[d], game.lower[d], game.upper[d]);
    // Distribution player: mirror ascent on the observed gaps.
    if (k >= 2) q = mirror_ascent_step(TaskDistribution(q), g, rep.schedule.eta, alpha, p0).vec();
  }
  rep.average_gaps.resize(k);
  rep.max_average_gap = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    rep.average_gaps[i] = sums[i] / static_cast<double>(T);
    rep.max_average_gap = std::max(rep.max_average_gap, rep.average_gaps[i]);
  }
  rep.minmax_value = grid_minmax(game, minmax_resolution).value;
  rep.bound_holds = rep.max_average_gap <= rep.minmax_value + epsilon;
  rep.final_q = q;
  return rep;
}

}  // namespace drats
