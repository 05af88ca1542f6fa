#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "armlab/errors.hpp"
#include "armlab/rng.hpp"

namespace armlab {

using ArmIndex = std::size_t;

/// A Bernoulli bandit. `means` is in presented order: agents and logs see
/// arm i with mean `means[i]`. `permutation[c]` is the presented index of
/// canonical arm c, where canonical arm 0 is the best arm.
struct MabInstance {
  std::string label;
  double delta = 0.0;
  std::size_t horizon = 1;
  std::vector<double> means;
  std::vector<ArmIndex> permutation;

  std::size_t num_arms() const { return means.size(); }

  bool operator==(const MabInstance&) const = default;
};

enum class InstanceKind { kHard, kEasy };

inline MabInstance make_instance(std::size_t num_arms, double delta, std::size_t horizon,
                                 std::string label = "custom") {
  if (num_arms < 2) throw ConfigError("instance needs at least 2 arms");
  if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("gap must lie in (0, 1]");
  if (horizon < 1) throw ConfigError("horizon must be at least 1");
  MabInstance inst;
  inst.label = std::move(label);
  inst.delta = delta;
  inst.horizon = horizon;
  inst.means.assign(num_arms, 0.5 - delta / 2.0);
  inst.means[0] = 0.5 + delta / 2.0;
  inst.permutation.resize(num_arms);
  std::iota(inst.permutation.begin(), inst.permutation.end(), ArmIndex{0});
  return inst;
}

inline MabInstance make_instance(InstanceKind kind, std::size_t horizon = 100) {
  switch (kind) {
    case InstanceKind::kHard:
      return make_instance(5, 0.2, horizon, "hard");
    case InstanceKind::kEasy:
      return make_instance(4, 0.5, horizon, "easy");
  }
  throw ConfigError("unknown instance kind");
}

inline InstanceKind parse_instance_kind(const std::string& name) {
  if (name == "hard") return InstanceKind::kHard;
  if (name == "easy") return InstanceKind::kEasy;
  throw ConfigError("unknown instance kind: " + name);
}

/// Relabels arms so canonical arm c is presented at `perm[c]`.
inline MabInstance permute(const MabInstance& base, const std::vector<ArmIndex>& perm) {
  const std::size_t k = base.num_arms();
  if (perm.size() != k) throw ConfigError("permutation size does not match arm count");
  std::vector<bool> seen(k, false);
  for (ArmIndex p : perm) {
    if (p >= k || seen[p]) throw ConfigError("not a permutation");
    seen[p] = true;
  }
  MabInstance out = base;
  for (std::size_t c = 0; c < k; ++c) {
    // base may itself be permuted; compose through its canonical order
    out.means[perm[c]] = base.means[base.permutation[c]];
    out.permutation[c] = perm[c];
  }
  return out;
}

/// Uniformly random relabeling (Fisher-Yates on the seeded stream).
inline MabInstance shuffle_arms(const MabInstance& base, SeededRng& rng) {
  std::vector<ArmIndex> perm(base.num_arms());
  std::iota(perm.begin(), perm.end(), ArmIndex{0});
  for (std::size_t i = perm.size(); i > 1; --i) {
    std::swap(perm[i - 1], perm[rng.below(i)]);
  }
  return permute(base, perm);
}

/// Draws one Bernoulli reward; consumes exactly one value from `rng`.
inline int pull(const MabInstance& inst, ArmIndex arm, SeededRng& rng) {
  if (arm >= inst.num_arms()) {
    throw UsageError("arm " + std::to_string(arm) + " out of range for K=" +
                     std::to_string(inst.num_arms()));
  }
  return rng.uniform() < inst.means[arm] ? 1 : 0;
}

inline ArmIndex best_arm(const MabInstance& inst) {
  return static_cast<ArmIndex>(
      std::distance(inst.means.begin(), std::max_element(inst.means.begin(), inst.means.end())));
}

/// One round of interaction as seen by an agent.
struct Step {
  ArmIndex arm = 0;
  int reward = 0;

  bool operator==(const Step&) const = default;
};

using History = std::vector<Step>;

/// Mean of the non-best arms in a two-level instance.
inline double low_mean(const MabInstance& inst) { return 0.5 - inst.delta / 2.0; }

}  // namespace armlab
