#pragma once

// Surrogate statistics over trajectory sets and the one-step decision probe.
//
// Only complete replicates enter the statistics; failed ones are counted
// separately. Round indices are 1-based throughout.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "armlab/agents.hpp"
#include "armlab/bandit.hpp"
#include "armlab/errors.hpp"
#include "armlab/llm_client.hpp"
#include "armlab/orchestrator.hpp"
#include "armlab/prompt.hpp"
#include "armlab/rng.hpp"

namespace armlab {

using Trajectories = std::span<const Trajectory>;

namespace detail {

inline std::vector<const Trajectory*> complete_only(Trajectories trajs) {
  std::vector<const Trajectory*> out;
  for (const auto& t : trajs) {
    if (t.complete()) out.push_back(&t);
  }
  if (out.empty()) throw UsageError("no complete trajectories to analyze");
  return out;
}

inline std::size_t common_horizon(const std::vector<const Trajectory*>& trajs) {
  const std::size_t horizon = trajs.front()->instance.horizon;
  for (const auto* t : trajs) {
    if (t->instance.horizon != horizon) throw UsageError("trajectories have different horizons");
  }
  return horizon;
}

// Last round (1-based) in which the best arm was played; 0 if never.
inline std::size_t last_best_round(const Trajectory& tr) {
  const ArmIndex best = best_arm(tr.instance);
  for (std::size_t i = tr.rounds.size(); i > 0; --i) {
    if (tr.rounds[i - 1].arm == best) return i;
  }
  return 0;
}

}  // namespace detail

/// SuffFailFreq(t) for t = 1..T; entry t-1 is the fraction of replicates
/// that never play the best arm in rounds [t, T].
inline std::vector<double> suffix_failure_curve(Trajectories trajs) {
  const auto done = detail::complete_only(trajs);
  const std::size_t horizon = detail::common_horizon(done);
  // SuffFail(t, R) = 1 exactly when the last best-arm round precedes t.
  std::vector<std::size_t> count_last(horizon + 1, 0);
  for (const auto* t : done) ++count_last[detail::last_best_round(*t)];
  std::vector<double> curve(horizon);
  std::size_t failing = 0;
  for (std::size_t t = 1; t <= horizon; ++t) {
    failing += count_last[t - 1];
    curve[t - 1] = static_cast<double>(failing) / static_cast<double>(done.size());
  }
  return curve;
}

inline double suffix_failure_freq(Trajectories trajs, std::size_t t) {
  const auto curve = suffix_failure_curve(trajs);
  if (t < 1 || t > curve.size()) throw UsageError("round outside [1, T]");
  return curve[t - 1];
}

/// Mean over replicates of min_a f_a(t, R), for t = 1..T, where f_a is the
/// fraction of the first t rounds spent on arm a. Multiply by K to report.
inline std::vector<double> min_frac_curve(Trajectories trajs) {
  const auto done = detail::complete_only(trajs);
  const std::size_t horizon = detail::common_horizon(done);
  // Every replicate shares t, so sum the integer minima and divide once.
  std::vector<std::size_t> least_sum(horizon, 0);
  for (const auto* tr : done) {
    std::vector<std::size_t> counts(tr->instance.num_arms(), 0);
    for (std::size_t t = 1; t <= horizon; ++t) {
      ++counts[tr->rounds[t - 1].arm];
      least_sum[t - 1] += *std::min_element(counts.begin(), counts.end());
    }
  }
  std::vector<double> curve(horizon);
  for (std::size_t t = 1; t <= horizon; ++t) {
    curve[t - 1] = static_cast<double>(least_sum[t - 1]) /
                   (static_cast<double>(t) * static_cast<double>(done.size()));
  }
  return curve;
}

inline double min_frac(Trajectories trajs, std::size_t t) {
  const auto curve = min_frac_curve(trajs);
  if (t < 1 || t > curve.size()) throw UsageError("round outside [1, T]");
  return curve[t - 1];
}

/// Fraction of rounds whose logged greedy flag is set, averaged over
/// replicates. All replicates share T, so this is the pooled ratio.
inline double greedy_frac(Trajectories trajs) {
  const auto done = detail::complete_only(trajs);
  detail::common_horizon(done);
  std::size_t greedy = 0, rounds = 0;
  for (const auto* tr : done) {
    for (const auto& r : tr->rounds) greedy += r.greedy ? 1 : 0;
    rounds += tr->rounds.size();
  }
  return static_cast<double>(greedy) / static_cast<double>(rounds);
}

/// Time-averaged reward of one replicate, affinely rescaled so that the
/// worst arm maps to 0 and the best arm to 1.
inline double rescaled_reward(const Trajectory& tr) {
  double total = 0.0;
  for (const auto& r : tr.rounds) total += r.reward;
  const double phi = total / static_cast<double>(tr.rounds.size());
  // Snap to 1e-12 so exact grid values (0.5, 1.0) survive the division.
  return std::round((phi - low_mean(tr.instance)) / tr.instance.delta * 1e12) / 1e12;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw UsageError("median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double med_rew(Trajectories trajs) {
  const auto done = detail::complete_only(trajs);
  std::vector<double> vals;
  for (const auto* tr : done) vals.push_back(rescaled_reward(*tr));
  return median(std::move(vals));
}

/// Number of best-arm plays per complete replicate.
inline std::vector<std::size_t> best_arm_counts(Trajectories trajs) {
  std::vector<std::size_t> out;
  for (const auto* tr : detail::complete_only(trajs)) {
    const ArmIndex best = best_arm(tr->instance);
    out.push_back(static_cast<std::size_t>(std::count_if(
        tr->rounds.begin(), tr->rounds.end(), [&](const RoundRecord& r) { return r.arm == best; })));
  }
  return out;
}

/// Cumulative time-averaged reward at each t, averaged over replicates.
inline std::vector<double> cumulative_reward_curve(Trajectories trajs) {
  const auto done = detail::complete_only(trajs);
  const std::size_t horizon = detail::common_horizon(done);
  std::vector<double> out(horizon, 0.0);
  for (const auto* tr : done) {
    double total = 0.0;
    for (std::size_t t = 1; t <= horizon; ++t) {
      total += tr->rounds[t - 1].reward;
      out[t - 1] += total / static_cast<double>(t);
    }
  }
  for (auto& v : out) v /= static_cast<double>(done.size());
  return out;
}

/// Per replicate: fraction of rounds in [1, t] on the best arm, t = 1..T.
inline std::vector<std::vector<double>> optimal_fraction_curves(Trajectories trajs) {
  std::vector<std::vector<double>> out;
  for (const auto* tr : detail::complete_only(trajs)) {
    const ArmIndex best = best_arm(tr->instance);
    std::vector<double> curve;
    std::size_t hits = 0;
    for (std::size_t t = 1; t <= tr->rounds.size(); ++t) {
      hits += tr->rounds[t - 1].arm == best ? 1 : 0;
      curve.push_back(static_cast<double>(hits) / static_cast<double>(t));
    }
    out.push_back(std::move(curve));
  }
  return out;
}

struct SurrogateReport {
  std::string config;
  std::string instance;
  std::size_t num_arms = 0;
  std::size_t horizon = 0;
  std::size_t replicates = 0;  // all replicates, including failed ones
  std::size_t fails = 0;
  std::optional<double> epsilon;  // set for eps-greedy runs
  std::vector<double> suffix_failure;  // SuffFailFreq(t), t = 1..T
  std::vector<double> k_min_frac;      // K * MinFrac(t), t = 1..T
  double medrew = 0.0;
  double greedyfrac = 0.0;
  std::vector<std::size_t> best_arm_histogram;  // index = #best-arm plays, 0..T

  std::size_t half() const { return std::max<std::size_t>(1, horizon / 2); }
  double sufffail_half() const { return suffix_failure.at(half() - 1); }
  double k_minfrac_T() const { return k_min_frac.back(); }
};

inline SurrogateReport make_report(std::string config, Trajectories trajs) {
  SurrogateReport r;
  r.config = std::move(config);
  r.replicates = trajs.size();
  for (const auto& t : trajs) {
    if (t.status == ReplicateStatus::kFailed) ++r.fails;
  }
  const auto done = detail::complete_only(trajs);
  r.horizon = detail::common_horizon(done);
  r.num_arms = done.front()->instance.num_arms();
  r.instance = done.front()->instance.label;
  r.suffix_failure = suffix_failure_curve(trajs);
  r.k_min_frac = min_frac_curve(trajs);
  for (auto& v : r.k_min_frac) v *= static_cast<double>(r.num_arms);
  r.medrew = med_rew(trajs);
  r.greedyfrac = greedy_frac(trajs);
  r.best_arm_histogram.assign(r.horizon + 1, 0);
  for (auto c : best_arm_counts(trajs)) ++r.best_arm_histogram[c];
  return r;
}

/// Report for a loaded run log, labelled by its agent.
inline SurrogateReport make_report(const LoadedRun& run) {
  SurrogateReport r = make_report(run.agent, run.trajectories);
  if (!run.spec.is_null()) {
    const auto agent = agent_from_json(run.spec.at("agent"));
    if (const auto* b = std::get_if<BaselineParams>(&agent); b && b->type == BaselineType::kEpsGreedy) {
      r.epsilon = b->epsilon;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Per-round decision probe

enum class HistorySource { kUnif, kUcb, kTs };

inline HistorySource parse_history_source(const std::string& s) {
  if (s == "unif") return HistorySource::kUnif;
  if (s == "ucb") return HistorySource::kUcb;
  if (s == "ts") return HistorySource::kTs;
  throw ConfigError("unknown history source: " + s);
}

inline const char* to_string(HistorySource s) {
  switch (s) {
    case HistorySource::kUnif:
      return "Unif";
    case HistorySource::kUcb:
      return "UCB";
    case HistorySource::kTs:
      return "TS";
  }
  return "?";
}

struct ProbeHistory {
  MabInstance instance;  // relabeled per history
  History steps;
};

/// N independent length-t histories drawn by the named generator.
inline std::vector<ProbeHistory> generate_histories(HistorySource source, std::size_t length,
                                                    std::size_t count, const MabInstance& instance,
                                                    std::uint64_t seed) {
  if (length < 1) throw UsageError("history length must be at least 1");
  if (length >= instance.horizon) throw UsageError("history length must be below the horizon");
  const std::uint64_t key = hash_name(std::string("probe/") + to_string(source));
  std::vector<ProbeHistory> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SeededRng perm_rng(seed, {key, i, StreamRole::kPermutation});
    SeededRng reward_rng(seed, {key, i, StreamRole::kReward});
    SeededRng agent_rng(seed, {key, i, StreamRole::kHistory});
    ProbeHistory h{shuffle_arms(instance, perm_rng), {}};
    AgentState state(instance.num_arms());
    for (std::size_t t = 1; t <= length; ++t) {
      ArmIndex arm = 0;
      switch (source) {
        case HistorySource::kUnif:
          arm = agent_rng.below(instance.num_arms());
          break;
        case HistorySource::kUcb:
          arm = ucb_select(state, agent_rng);
          break;
        case HistorySource::kTs:
          arm = ts_select(state, agent_rng);
          break;
      }
      const int r = pull(h.instance, arm, reward_rng);
      state.update(arm, r);
      h.steps.push_back({arm, r});
    }
    out.push_back(std::move(h));
  }
  return out;
}

/// An agent's one-step choice given a history, or nullopt on failure.
using ProbeAgent =
    std::function<std::optional<ArmIndex>(const ProbeHistory&, std::size_t index, std::uint64_t seed)>;

inline ProbeAgent baseline_probe_agent(BaselineParams params) {
  return [params](const ProbeHistory& h, std::size_t index, std::uint64_t seed) -> std::optional<ArmIndex> {
    AgentState state(h.instance.num_arms());
    for (const auto& s : h.steps) state.update(s.arm, s.reward);
    SeededRng rng(seed, {hash_name("probe/agent"), index, StreamRole::kAgent});
    return select_arm(params, state, rng);
  };
}

/// Presents each history to an LLM client with the given prompt design.
inline ProbeAgent llm_probe_agent(PromptConfig config, std::shared_ptr<ChatClient> client,
                                  int max_attempts = 3) {
  return [config, client, max_attempts](const ProbeHistory& h, std::size_t index,
                                        std::uint64_t seed) -> std::optional<ArmIndex> {
    const auto labels = arm_labels(config.scenario, h.instance.num_arms());
    const ChatPrompt prompt = render_prompt(config, h.instance, h.steps);
    const RoundContext ctx{config, labels, h.steps};
    SeededRng rng(seed, {hash_name("probe/decide"), index, StreamRole::kDecide});
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
      Completion c;
      try {
        c = client->complete(prompt, ctx);
      } catch (const std::runtime_error&) {
        return std::nullopt;
      }
      auto parsed = parse_response(config, c.text, labels);
      if (auto* d = std::get_if<Decision>(&parsed)) return decide(*d, rng);
    }
    return std::nullopt;
  };
}

struct ProbeResult {
  HistorySource source = HistorySource::kUnif;
  std::size_t length = 0;
  std::size_t count = 0;     // histories presented
  std::size_t failures = 0;  // excluded from the fractions
  double greedy_frac = 0.0;
  double least_frac = 0.0;
};

inline ProbeResult probe_per_round(const ProbeAgent& agent, const std::vector<ProbeHistory>& histories,
                                   HistorySource source, std::uint64_t seed) {
  if (histories.empty()) throw UsageError("probe needs at least one history");
  ProbeResult res;
  res.source = source;
  res.length = histories.front().steps.size();
  res.count = histories.size();
  std::size_t greedy = 0, least = 0, answered = 0;
  for (std::size_t i = 0; i < histories.size(); ++i) {
    const auto& h = histories[i];
    const auto arm = agent(h, i, seed);
    if (!arm || *arm >= h.instance.num_arms()) {
      ++res.failures;
      continue;
    }
    const auto stats = detail::summarize(h.steps, h.instance.num_arms());
    ++answered;
    greedy += is_greedy_choice(stats, *arm) ? 1 : 0;
    least += is_least_chosen(stats, *arm) ? 1 : 0;
  }
  if (answered > 0) {
    res.greedy_frac = static_cast<double>(greedy) / static_cast<double>(answered);
    res.least_frac = static_cast<double>(least) / static_cast<double>(answered);
  }
  return res;
}

}  // namespace armlab
