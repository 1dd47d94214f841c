#pragma once

// Geometry of the probability simplex used by the task samplers: softmax
// best responses, entropic mirror-ascent steps, KL divergences and the KL
// projection onto {q : q_i >= eps}.
//
// All routines work in the log domain with max-subtraction and renormalize
// by the exact sum on output.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "drats/error.hpp"

namespace drats {

inline constexpr double kSimplexTolerance = 1e-9;

// A point on the k-simplex, k >= 2.
class TaskDistribution {
 public:
  TaskDistribution() = default;

  explicit TaskDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
    require(probs_.size() >= 2, "TaskDistribution: need at least two tasks");
    double total = 0.0;
    for (double p : probs_) {
      require(std::isfinite(p) && p >= 0.0, "TaskDistribution: entries must be finite and non-negative");
      total += p;
    }
    require(std::abs(total - 1.0) <= kSimplexTolerance,
            "TaskDistribution: entries must sum to 1 (got " + std::to_string(total) + ")");
  }

  static TaskDistribution uniform(std::size_t k) {
    require(k >= 2, "TaskDistribution: need at least two tasks");
    return TaskDistribution(std::vector<double>(k, 1.0 / static_cast<double>(k)));
  }

  // Builds a distribution from non-negative weights by dividing by their sum.
  static TaskDistribution normalized(std::vector<double> weights) {
    double total = 0.0;
    for (double w : weights) {
      require(std::isfinite(w) && w >= 0.0, "TaskDistribution: weights must be finite and non-negative");
      total += w;
    }
    require(total > 0.0, "TaskDistribution: weights sum to zero");
    for (double& w : weights) w /= total;
    return TaskDistribution(std::move(weights));
  }

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }
  const std::vector<double>& vec() const { return probs_; }

  bool strictly_positive() const {
    return std::all_of(probs_.begin(), probs_.end(), [](double p) { return p > 0.0; });
  }

  friend bool operator==(const TaskDistribution&, const TaskDistribution&) = default;

 private:
  std::vector<double> probs_;
};

// Per-task return gaps bounded in [0, bound].
class GapVector {
 public:
  GapVector() = default;
  GapVector(std::vector<double> gaps, double bound) : gaps_(std::move(gaps)), bound_(bound) {
    require(std::isfinite(bound_) && bound_ >= 0.0, "GapVector: bound must be finite and non-negative");
    for (double g : gaps_) {
      require(std::isfinite(g), "GapVector: non-finite gap");
      require(g >= 0.0 && g <= bound_, "GapVector: gap outside [0, bound]");
    }
  }

  std::size_t size() const { return gaps_.size(); }
  double operator[](std::size_t i) const { return gaps_[i]; }
  double bound() const { return bound_; }
  std::span<const double> values() const { return gaps_; }

 private:
  std::vector<double> gaps_;
  double bound_ = 1.0;
};

namespace detail {

// exp(log_weights) normalized, with max-subtraction.
inline std::vector<double> normalize_log_weights(std::vector<double> log_w) {
  const double top = *std::max_element(log_w.begin(), log_w.end());
  double total = 0.0;
  for (double& v : log_w) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : log_w) v /= total;
  return log_w;
}

inline void require_finite(std::span<const double> xs, const char* what) {
  for (double x : xs) require(std::isfinite(x), std::string(what) + ": non-finite entry");
}

}  // namespace detail

// q*_i proportional to exp(eta * g_i).
inline TaskDistribution softmax_best_response(std::span<const double> gaps, double eta) {
  require(gaps.size() >= 2, "softmax_best_response: need at least two tasks");
  require(std::isfinite(eta) && eta > 0.0, "softmax_best_response: eta must be positive");
  detail::require_finite(gaps, "softmax_best_response");
  std::vector<double> log_w(gaps.size());
  for (std::size_t i = 0; i < gaps.size(); ++i) log_w[i] = eta * gaps[i];
  return TaskDistribution(detail::normalize_log_weights(std::move(log_w)));
}

// One exponentiated-gradient ascent step on
//   L(q) = <q, g> - (1/eta) KL(q || p0)
// with gradient h_i = g_i - (1/eta)(log(q_i / p0_i) + 1).
inline TaskDistribution mirror_ascent_step(const TaskDistribution& q, std::span<const double> gaps, double eta,
                                           double alpha, const TaskDistribution& p0) {
  const std::size_t k = q.size();
  require(gaps.size() == k && p0.size() == k, "mirror_ascent_step: dimension mismatch");
  require(std::isfinite(eta) && eta > 0.0, "mirror_ascent_step: eta must be positive");
  require(alpha > 0.0, "mirror_ascent_step: alpha must be positive");
  require(alpha <= eta, "mirror_ascent_step: alpha must not exceed eta");
  require(q.strictly_positive(), "mirror_ascent_step: q has a zero entry (log undefined)");
  require(p0.strictly_positive(), "mirror_ascent_step: p0 has a zero entry");
  detail::require_finite(gaps, "mirror_ascent_step");

  std::vector<double> log_w(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double log_q = std::log(q[i]);
    const double h = gaps[i] - (log_q - std::log(p0[i]) + 1.0) / eta;
    log_w[i] = log_q + alpha * h;
  }
  return TaskDistribution(detail::normalize_log_weights(std::move(log_w)));
}

// Weighted geometric mean q'_i proportional to q_i^(1-mix) * q*_i^mix.
inline TaskDistribution geometric_mean_update(const TaskDistribution& q, const TaskDistribution& q_star, double mix) {
  const std::size_t k = q.size();
  require(q_star.size() == k, "geometric_mean_update: dimension mismatch");
  require(mix > 0.0 && mix <= 1.0, "geometric_mean_update: mix must lie in (0, 1]");
  require(q.strictly_positive() && q_star.strictly_positive(), "geometric_mean_update: zero entries");
  std::vector<double> log_w(k);
  for (std::size_t i = 0; i < k; ++i) log_w[i] = (1.0 - mix) * std::log(q[i]) + mix * std::log(q_star[i]);
  return TaskDistribution(detail::normalize_log_weights(std::move(log_w)));
}

// argmin_{q in simplex, q >= eps} KL(q || q_hat).
//
// The KKT conditions give q_i = max(eps, c * q_hat_i) for a scalar c. Entries
// are clamped to eps in increasing order of q_hat until the rescaled remainder
// clears the floor; at most k passes.
inline TaskDistribution kl_projection_min_prob(const TaskDistribution& q_hat, double eps) {
  const std::size_t k = q_hat.size();
  require(eps > 0.0, "kl_projection_min_prob: eps must be positive");
  require(eps * static_cast<double>(k) < 1.0, "kl_projection_min_prob: eps * k >= 1 (infeasible)");

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return q_hat[a] < q_hat[b]; });

  std::size_t n_clamped = 0;
  double free_mass = 1.0;  // sum of q_hat over unclamped entries
  double scale = 1.0;
  for (std::size_t pass = 0; pass <= k; ++pass) {
    scale = (1.0 - eps * static_cast<double>(n_clamped)) / free_mass;
    std::size_t next = n_clamped;
    while (next < k && scale * q_hat[order[next]] < eps) ++next;
    if (next == n_clamped) break;
    for (std::size_t j = n_clamped; j < next; ++j) free_mass -= q_hat[order[j]];
    n_clamped = next;
    if (free_mass <= 0.0) {
      // Remaining q_hat mass is zero; recompute it directly to avoid drift.
      free_mass = 0.0;
      for (std::size_t j = n_clamped; j < k; ++j) free_mass += q_hat[order[j]];
    }
  }

  if (n_clamped == 0) return q_hat;
  std::vector<double> out(k);
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t i = order[j];
    out[i] = j < n_clamped ? eps : scale * q_hat[i];
  }
  // Renormalize the free entries so the total is exactly 1 up to rounding.
  double free_total = 0.0;
  for (std::size_t j = n_clamped; j < k; ++j) free_total += out[order[j]];
  const double target = 1.0 - eps * static_cast<double>(n_clamped);
  for (std::size_t j = n_clamped; j < k; ++j) out[order[j]] *= target / free_total;
  return TaskDistribution(std::move(out));
}

// KL(q || p) = sum_i q_i log(q_i / p_i), with 0 log 0 = 0. Returns +infinity
// when q puts mass where p has none.
inline double kl_divergence(std::span<const double> q, std::span<const double> p) {
  require(q.size() == p.size(), "kl_divergence: dimension mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] == 0.0) continue;
    if (p[i] == 0.0) return std::numeric_limits<double>::infinity();
    total += q[i] * std::log(q[i] / p[i]);
  }
  return std::max(total, 0.0);
}

inline double kl_divergence(const TaskDistribution& q, const TaskDistribution& p) {
  return kl_divergence(q.probs(), p.probs());
}

}  // namespace drats
