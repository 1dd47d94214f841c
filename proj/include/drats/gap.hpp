#pragma once

// Return gaps, their normalization, and online management of per-task
// reference returns.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "drats/error.hpp"

namespace drats {

// max(j_ref - j_hat, 0)
inline double return_gap(double j_ref, double j_hat) { return std::max(j_ref - j_hat, 0.0); }

// clamp((j_ref - j_hat) / (j_ref - j_rand), 0, 1)
inline double normalized_gap(double j_ref, double j_hat, double j_rand) {
  require(std::isfinite(j_ref) && std::isfinite(j_hat) && std::isfinite(j_rand), "normalized_gap: non-finite input");
  require(j_ref > j_rand, "normalized_gap: reference return must exceed the random-policy return");
  return std::clamp((j_ref - j_hat) / (j_ref - j_rand), 0.0, 1.0);
}

enum class ReferenceMode {
  FixedKnown,     // j_ref never changes
  SuccessGated,   // j_ref follows the observed maximum once success clears a gate
  MaxObserved,    // j_ref always follows the observed maximum
};

inline const char* to_string(ReferenceMode m) {
  switch (m) {
    case ReferenceMode::FixedKnown: return "fixed";
    case ReferenceMode::SuccessGated: return "success_gated";
    case ReferenceMode::MaxObserved: return "max_observed";
  }
  return "?";
}

inline ReferenceMode parse_reference_mode(const std::string& s) {
  if (s == "fixed" || s == "fixed_known") return ReferenceMode::FixedKnown;
  if (s == "success_gated") return ReferenceMode::SuccessGated;
  if (s == "max_observed") return ReferenceMode::MaxObserved;
  throw InvalidInput("unknown reference mode '" + s + "'");
}

// Per-task Monte Carlo statistics from one batch.
struct ReturnEstimate {
  std::vector<double> mean_return;
  std::vector<double> max_return;
  std::vector<double> success_rate;  // meaningful only where n_episodes > 0
  std::vector<std::size_t> n_episodes;

  std::size_t size() const { return mean_return.size(); }
};

class ReferenceState {
 public:
  ReferenceState() = default;

  ReferenceState(std::vector<double> j_ref, std::vector<double> j_rand, std::vector<ReferenceMode> modes,
                 double success_threshold = 0.5)
      : j_ref_(std::move(j_ref)),
        j_rand_(std::move(j_rand)),
        max_observed_(j_ref_.size(), -std::numeric_limits<double>::infinity()),
        modes_(std::move(modes)),
        gate_open_(j_ref_.size(), false),
        success_threshold_(success_threshold) {
    require(j_rand_.size() == j_ref_.size() && modes_.size() == j_ref_.size(), "ReferenceState: size mismatch");
    require(success_threshold_ >= 0.0 && success_threshold_ <= 1.0, "ReferenceState: success threshold outside [0,1]");
    for (std::size_t i = 0; i < j_ref_.size(); ++i) {
      require(std::isfinite(j_ref_[i]) && std::isfinite(j_rand_[i]), "ReferenceState: non-finite return");
      require(j_ref_[i] > j_rand_[i], "ReferenceState: j_ref must exceed j_rand for task " + std::to_string(i));
    }
  }

  std::size_t size() const { return j_ref_.size(); }
  const std::vector<double>& j_ref() const { return j_ref_; }
  const std::vector<double>& j_rand() const { return j_rand_; }
  const std::vector<double>& max_observed() const { return max_observed_; }
  const std::vector<ReferenceMode>& modes() const { return modes_; }
  const std::vector<bool>& gate_open() const { return gate_open_; }
  double success_threshold() const { return success_threshold_; }

  double gap(std::size_t task, double j_hat) const { return normalized_gap(j_ref_[task], j_hat, j_rand_[task]); }

  friend bool operator==(const ReferenceState&, const ReferenceState&) = default;

  // Folds one batch of estimates into the state. Tasks without episodes keep
  // their prior values. A candidate reference that would not exceed j_rand is
  // ignored so the gap normalizer stays positive.
  ReferenceState updated(const ReturnEstimate& est) const {
    require(est.size() == size() && est.max_return.size() == size() && est.success_rate.size() == size() &&
                est.n_episodes.size() == size(),
            "update_reference: estimate does not cover every task");
    ReferenceState next = *this;
    for (std::size_t i = 0; i < size(); ++i) {
      if (est.n_episodes[i] == 0) continue;
      next.max_observed_[i] = std::max(next.max_observed_[i], est.max_return[i]);
      switch (modes_[i]) {
        case ReferenceMode::FixedKnown:
          break;
        case ReferenceMode::SuccessGated:
          if (est.success_rate[i] > success_threshold_) next.gate_open_[i] = true;
          if (next.gate_open_[i]) next.adopt_max(i);
          break;
        case ReferenceMode::MaxObserved:
          next.adopt_max(i);
          break;
      }
    }
    return next;
  }

 private:
  void adopt_max(std::size_t i) {
    if (max_observed_[i] > j_rand_[i]) j_ref_[i] = max_observed_[i];
  }

  std::vector<double> j_ref_;
  std::vector<double> j_rand_;
  std::vector<double> max_observed_;
  std::vector<ReferenceMode> modes_;
  std::vector<bool> gate_open_;
  double success_threshold_ = 0.5;
};

inline ReferenceState update_reference(const ReferenceState& state, const ReturnEstimate& est) {
  return state.updated(est);
}

}  // namespace drats
