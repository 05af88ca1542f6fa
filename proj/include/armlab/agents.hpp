#pragma once

#include <cmath>
#include <cstdio>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "armlab/bandit.hpp"
#include "armlab/errors.hpp"
#include "armlab/rng.hpp"

namespace armlab {

struct ArmStats {
  std::size_t pulls = 0;
  std::size_t successes = 0;

  std::optional<double> mean() const {
    if (pulls == 0) return std::nullopt;
    return static_cast<double>(successes) / static_cast<double>(pulls);
  }

  bool operator==(const ArmStats&) const = default;
};

enum class BaselineType { kUcb, kThompson, kGreedy, kEpsGreedy };

struct BaselineParams {
  BaselineType type = BaselineType::kUcb;
  double ucb_c = 1.0;
  double epsilon = 0.0;
  // Beta prior; (1, 1) is the uniform prior on [0, 1].
  double prior_alpha = 1.0;
  double prior_beta = 1.0;
};

/// Per-replicate summary every baseline consumes. At the start of round t
/// the pulls sum to t - 1.
struct AgentState {
  std::vector<ArmStats> arms;
  std::size_t round = 1;

  explicit AgentState(std::size_t num_arms) : arms(num_arms) {}

  std::size_t num_arms() const { return arms.size(); }

  void update(ArmIndex arm, int reward) {
    if (arm >= arms.size()) throw UsageError("update: arm out of range");
    if (reward != 0 && reward != 1) throw UsageError("update: reward must be 0 or 1");
    ++arms[arm].pulls;
    arms[arm].successes += static_cast<std::size_t>(reward);
    ++round;
  }
};

namespace detail {

/// Index of a maximal entry, ties broken uniformly. Draws from `rng` only
/// when there is an actual tie.
template <typename Score>
ArmIndex argmax_uniform_ties(std::size_t n, Score&& score, SeededRng& rng) {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<ArmIndex> ties;
  for (ArmIndex a = 0; a < n; ++a) {
    const double s = score(a);
    if (s > best) {
      best = s;
      ties.assign(1, a);
    } else if (s == best) {
      ties.push_back(a);
    }
  }
  if (ties.size() == 1) return ties.front();
  return ties[rng.below(ties.size())];
}

}  // namespace detail

inline double ucb_index(const ArmStats& s, double c) {
  if (s.pulls == 0) return std::numeric_limits<double>::infinity();
  return *s.mean() + std::sqrt(c / static_cast<double>(s.pulls));
}

/// argmax of mean + sqrt(C / n); unplayed arms have infinite index.
inline ArmIndex ucb_select(const AgentState& state, SeededRng& rng, double c = 1.0) {
  return detail::argmax_uniform_ties(
      state.num_arms(), [&](ArmIndex a) { return ucb_index(state.arms[a], c); }, rng);
}

/// Samples theta_a ~ Beta(alpha + s_a, beta + n_a - s_a) and plays the argmax.
inline ArmIndex ts_select(const AgentState& state, SeededRng& rng, double prior_alpha = 1.0,
                          double prior_beta = 1.0) {
  std::vector<double> theta(state.num_arms());
  for (ArmIndex a = 0; a < state.num_arms(); ++a) {
    const auto& s = state.arms[a];
    theta[a] = rng.beta(prior_alpha + static_cast<double>(s.successes),
                        prior_beta + static_cast<double>(s.pulls - s.successes));
  }
  return detail::argmax_uniform_ties(state.num_arms(), [&](ArmIndex a) { return theta[a]; }, rng);
}

/// One initial sample per arm in index order, then the best empirical mean.
inline ArmIndex greedy_select(const AgentState& state, SeededRng& rng) {
  for (ArmIndex a = 0; a < state.num_arms(); ++a) {
    if (state.arms[a].pulls == 0) return a;
  }
  return detail::argmax_uniform_ties(
      state.num_arms(), [&](ArmIndex a) { return *state.arms[a].mean(); }, rng);
}

inline void validate_epsilon(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
}

/// With probability epsilon a uniform arm, otherwise exactly greedy_select.
/// No coin is drawn at epsilon = 0, so the stream matches plain greedy.
inline ArmIndex eps_greedy_select(const AgentState& state, double epsilon, SeededRng& rng) {
  validate_epsilon(epsilon);
  if (epsilon > 0.0 && rng.uniform() < epsilon) return rng.below(state.num_arms());
  return greedy_select(state, rng);
}

inline ArmIndex select_arm(const BaselineParams& p, const AgentState& state, SeededRng& rng) {
  switch (p.type) {
    case BaselineType::kUcb:
      return ucb_select(state, rng, p.ucb_c);
    case BaselineType::kThompson:
      return ts_select(state, rng, p.prior_alpha, p.prior_beta);
    case BaselineType::kGreedy:
      return greedy_select(state, rng);
    case BaselineType::kEpsGreedy:
      return eps_greedy_select(state, p.epsilon, rng);
  }
  throw ConfigError("unknown baseline type");
}

inline std::string baseline_name(BaselineType t) {
  switch (t) {
    case BaselineType::kUcb:
      return "ucb";
    case BaselineType::kThompson:
      return "ts";
    case BaselineType::kGreedy:
      return "greedy";
    case BaselineType::kEpsGreedy:
      return "eps_greedy";
  }
  return "unknown";
}

inline BaselineType parse_baseline_type(const std::string& name) {
  if (name == "ucb") return BaselineType::kUcb;
  if (name == "ts") return BaselineType::kThompson;
  if (name == "greedy") return BaselineType::kGreedy;
  if (name == "eps_greedy") return BaselineType::kEpsGreedy;
  throw ConfigError("unknown baseline: " + name);
}

/// Display label used in logs and reports, e.g. "ucb" or "eps_greedy(0.1)".
inline std::string baseline_label(const BaselineParams& p) {
  if (p.type != BaselineType::kEpsGreedy) return baseline_name(p.type);
  char buf[64];
  std::snprintf(buf, sizeof buf, "eps_greedy(%g)", p.epsilon);
  return buf;
}

/// True when `arm` attains the largest empirical mean among played arms.
/// False when nothing has been played or `arm` itself is unplayed.
inline bool is_greedy_choice(const std::vector<ArmStats>& arms, ArmIndex arm) {
  std::optional<double> best;
  for (const auto& s : arms) {
    if (auto m = s.mean(); m && (!best || *m > *best)) best = m;
  }
  if (!best || arm >= arms.size()) return false;
  const auto m = arms[arm].mean();
  return m && *m == *best;
}

/// True when `arm` has the minimum pull count (unplayed arms count 0).
inline bool is_least_chosen(const std::vector<ArmStats>& arms, ArmIndex arm) {
  if (arm >= arms.size()) return false;
  std::size_t least = std::numeric_limits<std::size_t>::max();
  for (const auto& s : arms) least = std::min(least, s.pulls);
  return arms[arm].pulls == least;
}

}  // namespace armlab
