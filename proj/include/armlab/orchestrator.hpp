#pragma once

// Experiment execution: N replicates of T rounds for one agent on one
// instance, persisted as JSON Lines with a sibling manifest.
//
// Log record types, one JSON object per line:
//   replicate_start   instance record (label, K, delta, horizon, permutation, master_seed)
//   exchange          LLM prompt + raw response, written before parsing
//   round             chosen arm, reward, greedy flag, annotations
//   replicate_failed  terminal failure (retries exhausted, transport, budget)
//   replicate_end     all T rounds completed
//
// Records of one replicate are written in order by a single thread. Once
// every replicate is finished the log is rewritten grouped by replicate
// index, so the final file does not depend on thread scheduling or on
// where a previous run was interrupted.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "json.hpp"

#include "armlab/agents.hpp"
#include "armlab/bandit.hpp"
#include "armlab/errors.hpp"
#include "armlab/llm_client.hpp"
#include "armlab/prompt.hpp"
#include "armlab/rng.hpp"

namespace armlab {

using Json = nlohmann::ordered_json;

inline constexpr const char* kCodeVersion = "armlab 0.1.0";

struct LlmAgentSpec {
  PromptConfig config;
  ChatModel model;
};

using AgentSpec = std::variant<BaselineParams, LlmAgentSpec>;

inline std::string agent_label(const AgentSpec& agent) {
  if (const auto* b = std::get_if<BaselineParams>(&agent)) return baseline_label(*b);
  const auto& llm = std::get<LlmAgentSpec>(agent);
  return llm.model.model + ":" + encode_config(llm.config);
}

struct ExperimentSpec {
  std::string name = "experiment";
  std::string instance_kind = "hard";  // "hard", "easy" or "custom"
  std::size_t custom_arms = 0;
  double custom_delta = 0.0;
  std::size_t horizon = 100;
  std::size_t replicates = 10;
  std::uint64_t master_seed = 0;
  AgentSpec agent = BaselineParams{};
  std::filesystem::path output = "run.jsonl";
  int max_parse_retries = 3;  // attempts per round before the replicate fails
  std::size_t threads = 1;
  long token_budget = 0;  // 0 = unlimited
  bool timestamps = true;

  MabInstance base_instance() const {
    if (instance_kind == "custom") return make_instance(custom_arms, custom_delta, horizon);
    return make_instance(parse_instance_kind(instance_kind), horizon);
  }

  std::string experiment_id() const { return name + "/" + agent_label(agent); }

  std::uint64_t stream_key() const { return hash_name(experiment_id()); }

  bool is_llm() const { return std::holds_alternative<LlmAgentSpec>(agent); }

  void validate() const {
    if (replicates < 1) throw ConfigError("replicates must be at least 1");
    if (horizon < 1) throw ConfigError("horizon must be at least 1");
    if (max_parse_retries < 1) throw ConfigError("max_parse_retries must be at least 1");
    base_instance();
    if (const auto* b = std::get_if<BaselineParams>(&agent)) {
      if (b->type == BaselineType::kEpsGreedy) validate_epsilon(b->epsilon);
      if (b->type == BaselineType::kUcb && !(b->ucb_c >= 0.0)) throw ConfigError("UCB C must be >= 0");
    } else {
      const auto& llm = std::get<LlmAgentSpec>(agent);
      arm_labels(llm.config.scenario, base_instance().num_arms());
      if (llm.model.temperature != llm.config.temperature()) {
        throw ConfigError("model temperature does not match config code " +
                          encode_config(llm.config));
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Spec <-> JSON

inline Json agent_to_json(const AgentSpec& agent) {
  if (const auto* b = std::get_if<BaselineParams>(&agent)) {
    Json j;
    j["type"] = baseline_name(b->type);
    if (b->type == BaselineType::kUcb) j["C"] = b->ucb_c;
    if (b->type == BaselineType::kEpsGreedy) j["epsilon"] = b->epsilon;
    if (b->type == BaselineType::kThompson) {
      j["prior_alpha"] = b->prior_alpha;
      j["prior_beta"] = b->prior_beta;
    }
    return j;
  }
  const auto& llm = std::get<LlmAgentSpec>(agent);
  Json m;
  m["provider"] = llm.model.provider;
  m["model"] = llm.model.model;
  m["temperature"] = llm.model.temperature;
  if (!llm.model.script.empty()) m["script"] = llm.model.script;
  m["max_retries"] = llm.model.max_retries;
  m["timeout_ms"] = llm.model.timeout.count();
  m["initial_backoff_ms"] = llm.model.initial_backoff.count();
  m["min_request_interval_ms"] = llm.model.min_request_interval.count();
  if (llm.model.top_p) m["top_p"] = *llm.model.top_p;
  if (llm.model.max_tokens) m["max_tokens"] = *llm.model.max_tokens;
  if (llm.model.provider != "mock") {
    m["base_url"] = llm.model.base_url;
    m["api_key_env"] = llm.model.api_key_env;
  }
  Json j;
  j["type"] = "llm";
  j["config"] = encode_config(llm.config);
  j["model"] = m;
  return j;
}

inline AgentSpec agent_from_json(const Json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "llm") {
    LlmAgentSpec llm;
    llm.config = parse_config_code(j.at("config").get<std::string>());
    const Json m = j.value("model", Json::object());
    llm.model.provider = m.value("provider", std::string("mock"));
    llm.model.script = m.value("script", std::string());
    const bool mock = llm.model.provider == "mock";
    if (mock && llm.model.script.empty()) llm.model.script = "uniform";
    llm.model.model = m.value("model", mock ? "mock-" + llm.model.script : std::string("gpt-4-0613"));
    llm.model.temperature = m.value("temperature", llm.config.temperature());
    llm.model.max_retries = m.value("max_retries", 3);
    llm.model.timeout = std::chrono::milliseconds(m.value("timeout_ms", 60'000L));
    llm.model.initial_backoff = std::chrono::milliseconds(m.value("initial_backoff_ms", 1'000L));
    llm.model.min_request_interval =
        std::chrono::milliseconds(m.value("min_request_interval_ms", 0L));
    if (m.contains("top_p")) llm.model.top_p = m.at("top_p").get<double>();
    if (m.contains("max_tokens")) llm.model.max_tokens = m.at("max_tokens").get<int>();
    llm.model.base_url = m.value("base_url", llm.model.base_url);
    llm.model.api_key_env = m.value("api_key_env", llm.model.api_key_env);
    return llm;
  }
  BaselineParams b;
  b.type = parse_baseline_type(type);
  b.ucb_c = j.value("C", 1.0);
  b.epsilon = j.value("epsilon", 0.0);
  b.prior_alpha = j.value("prior_alpha", 1.0);
  b.prior_beta = j.value("prior_beta", 1.0);
  return b;
}

/// Canonical JSON form; this is what the manifest stores and resume compares.
inline Json spec_to_json(const ExperimentSpec& s) {
  Json j;
  j["name"] = s.name;
  if (s.instance_kind == "custom") {
    j["instance"] = Json{{"arms", s.custom_arms}, {"delta", s.custom_delta}};
  } else {
    j["instance"] = s.instance_kind;
  }
  j["horizon"] = s.horizon;
  j["replicates"] = s.replicates;
  j["seed"] = s.master_seed;
  j["agent"] = agent_to_json(s.agent);
  j["output"] = s.output.string();
  j["max_parse_retries"] = s.max_parse_retries;
  j["token_budget"] = s.token_budget;
  j["timestamps"] = s.timestamps;
  return j;
}

inline ExperimentSpec spec_from_json(const Json& j) {
  ExperimentSpec s;
  try {
    s.name = j.value("name", s.name);
    const Json& inst = j.at("instance");
    if (inst.is_string()) {
      s.instance_kind = inst.get<std::string>();
      parse_instance_kind(s.instance_kind);
    } else {
      s.instance_kind = "custom";
      s.custom_arms = inst.at("arms").get<std::size_t>();
      s.custom_delta = inst.at("delta").get<double>();
    }
    s.horizon = j.value("horizon", s.horizon);
    s.replicates = j.value("replicates", s.replicates);
    s.master_seed = j.value("seed", s.master_seed);
    s.agent = agent_from_json(j.at("agent"));
    s.output = j.value("output", s.output.string());
    s.max_parse_retries = j.value("max_parse_retries", s.max_parse_retries);
    s.threads = j.value("threads", s.threads);
    s.token_budget = j.value("token_budget", s.token_budget);
    s.timestamps = j.value("timestamps", s.timestamps);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad experiment config: ") + e.what());
  }
  s.validate();
  return s;
}

inline ExperimentSpec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return spec_from_json(j);
}

// ---------------------------------------------------------------------------
// Trajectories

struct RoundRecord {
  std::size_t t = 0;
  ArmIndex arm = 0;
  int reward = 0;
  bool greedy = false;
  std::string raw_response;
  std::vector<std::string> retries;
};

enum class ReplicateStatus { kIncomplete, kComplete, kFailed };

struct Trajectory {
  std::size_t replicate = 0;
  std::uint64_t master_seed = 0;
  MabInstance instance;  // permuted, as presented to the agent
  std::vector<RoundRecord> rounds;
  ReplicateStatus status = ReplicateStatus::kIncomplete;
  std::string failure;
  std::vector<std::string> failure_retries;
  bool restarted = false;

  bool complete() const { return status == ReplicateStatus::kComplete; }
};

inline Json instance_to_json(const MabInstance& inst, std::uint64_t master_seed) {
  return Json{{"label", inst.label},       {"K", inst.num_arms()},
              {"delta", inst.delta},       {"horizon", inst.horizon},
              {"permutation", inst.permutation}, {"master_seed", master_seed}};
}

inline MabInstance instance_from_json(const Json& j) {
  MabInstance base = make_instance(j.at("K").get<std::size_t>(), j.at("delta").get<double>(),
                                   j.at("horizon").get<std::size_t>(),
                                   j.at("label").get<std::string>());
  return permute(base, j.at("permutation").get<std::vector<ArmIndex>>());
}

/// Replicate r's instance: the base instance under a seeded relabeling.
inline MabInstance replicate_instance(const ExperimentSpec& spec, std::size_t replicate) {
  SeededRng rng(spec.master_seed, {spec.stream_key(), replicate, StreamRole::kPermutation});
  return shuffle_arms(spec.base_instance(), rng);
}

// ---------------------------------------------------------------------------
// Persistence

/// Receives records as a replicate executes.
class RecordSink {
 public:
  virtual ~RecordSink() = default;
  virtual void write(const Json& record) = 0;
};

/// Append-only JSONL writer. One fwrite + fflush per record, guarded by a
/// mutex, so concurrent replicates never interleave within a line.
class LogWriter : public RecordSink {
 public:
  explicit LogWriter(const std::filesystem::path& path) : file_(std::fopen(path.c_str(), "ab")) {
    if (!file_) throw IntegrityError("cannot open run log " + path.string() + " for append");
  }
  ~LogWriter() override {
    if (file_) std::fclose(file_);
  }
  LogWriter(const LogWriter&) = delete;
  LogWriter& operator=(const LogWriter&) = delete;

  void write(const Json& record) override {
    const std::string line = record.dump() + "\n";
    std::lock_guard lock(mu_);
    if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0) {
      throw IntegrityError("short write to run log");
    }
  }

 private:
  std::FILE* file_;
  std::mutex mu_;
};

/// Collects records in memory; handy for tests and dry runs.
class MemorySink : public RecordSink {
 public:
  void write(const Json& record) override {
    std::lock_guard lock(mu_);
    records_.push_back(record);
  }
  std::vector<Json> records() const {
    std::lock_guard lock(mu_);
    return records_;
  }

 private:
  mutable std::mutex mu_;
  std::vector<Json> records_;
};

inline long long unix_millis() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

inline std::filesystem::path manifest_path(const std::filesystem::path& log) {
  return log.string() + ".manifest.json";
}

inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IntegrityError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IntegrityError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IntegrityError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Parses a JSONL log. A trailing line without newline (a write cut short
/// by a crash) is ignored; any other malformed line is an integrity error.
inline std::vector<Json> read_log_records(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<Json> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) break;
    const std::string_view line(text.data() + pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::exception& e) {
      throw IntegrityError("corrupt record in " + path.string() + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Execution

struct RunLog {
  std::filesystem::path log;
  std::filesystem::path manifest;
  std::size_t complete = 0;
  std::size_t failed = 0;
  std::size_t incomplete = 0;
  bool aborted = false;  // stopped early (budget or external stop request)
};

class Experiment {
 public:
  explicit Experiment(ExperimentSpec spec, ClientFactory factory = make_mock_client)
      : spec_(std::move(spec)), budget_(std::make_shared<TokenBudget>(spec_.token_budget)) {
    spec_.validate();
    if (const auto* llm = std::get_if<LlmAgentSpec>(&spec_.agent)) {
      client_ = std::make_shared<GuardedClient>(factory(llm->model), llm->model, budget_);
    }
  }

  /// Supplies an already-built client (used by tests to inject transports).
  Experiment(ExperimentSpec spec, std::shared_ptr<ChatClient> client)
      : spec_(std::move(spec)), budget_(std::make_shared<TokenBudget>(spec_.token_budget)),
        client_(std::move(client)) {
    spec_.validate();
  }

  const ExperimentSpec& spec() const { return spec_; }
  const TokenBudget& budget() const { return *budget_; }

  /// Runs one replicate from round 1, streaming records to `sink`.
  /// `stop` is polled between rounds; a stopped replicate stays incomplete.
  Trajectory run_replicate(std::size_t replicate, RecordSink* sink = nullptr,
                           bool restarted = false, const std::atomic<bool>* stop = nullptr) const {
    if (replicate >= spec_.replicates) throw UsageError("replicate index beyond N");
    Trajectory traj;
    traj.replicate = replicate;
    traj.master_seed = spec_.master_seed;
    traj.instance = replicate_instance(spec_, replicate);
    traj.restarted = restarted;
    const MabInstance& inst = traj.instance;
    const std::uint64_t key = spec_.stream_key();
    SeededRng reward_rng(spec_.master_seed, {key, replicate, StreamRole::kReward});
    SeededRng agent_rng(spec_.master_seed, {key, replicate, StreamRole::kAgent});
    SeededRng decide_rng(spec_.master_seed, {key, replicate, StreamRole::kDecide});

    auto emit = [&](Json j) {
      if (!sink) return;
      if (spec_.timestamps) j["ts"] = unix_millis();
      sink->write(j);
    };
    emit(Json{{"type", "replicate_start"},
              {"replicate", replicate},
              {"instance", instance_to_json(inst, spec_.master_seed)}});

    const std::string exp_id = spec_.experiment_id();
    const std::string label = agent_label(spec_.agent);
    auto fail = [&](std::size_t t, std::string reason, std::vector<std::string> retries) {
      traj.status = ReplicateStatus::kFailed;
      traj.failure = reason;
      traj.failure_retries = retries;
      emit(Json{{"type", "replicate_failed"},
                {"replicate", replicate},
                {"t", t},
                {"reason", std::move(reason)},
                {"retries", std::move(retries)}});
    };

    AgentState state(inst.num_arms());
    History history;
    const auto* llm = std::get_if<LlmAgentSpec>(&spec_.agent);
    const auto labels = llm ? arm_labels(llm->config.scenario, inst.num_arms())
                            : std::vector<std::string>{};

    for (std::size_t t = 1; t <= inst.horizon; ++t) {
      if (stop && stop->load()) return traj;
      RoundRecord rec;
      rec.t = t;
      if (llm) {
        const ChatPrompt prompt = render_prompt(llm->config, inst, history);
        const RoundContext ctx{llm->config, labels, history};
        std::optional<Decision> decision;
        for (int attempt = 1; attempt <= spec_.max_parse_retries && !decision; ++attempt) {
          Completion completion;
          try {
            completion = client_->complete(prompt, ctx);
          } catch (const BudgetExceeded& e) {
            fail(t, std::string("budget_exceeded: ") + e.what(), rec.retries);
            return traj;
          } catch (const ContentFilterError& e) {
            fail(t, std::string("content_filter: ") + e.what(), rec.retries);
            return traj;
          } catch (const TransportError& e) {
            fail(t, std::string("transport: ") + e.what(), rec.retries);
            return traj;
          }
          emit(Json{{"type", "exchange"},
                    {"replicate", replicate},
                    {"t", t},
                    {"attempt", attempt},
                    {"system", prompt.system_text},
                    {"user", prompt.user_text},
                    {"response", completion.text},
                    {"usage",
                     {{"prompt_tokens", completion.usage.prompt_tokens},
                      {"completion_tokens", completion.usage.completion_tokens}}},
                    {"transport_retries", completion.retries}});
          auto parsed = parse_response(llm->config, completion.text, labels);
          if (auto* d = std::get_if<Decision>(&parsed)) {
            decision = std::move(*d);
            rec.raw_response = completion.text;
          } else {
            const auto& err = std::get<ParseError>(parsed);
            rec.retries.push_back(std::string(to_string(err.kind)) + ": " + err.detail);
          }
        }
        if (!decision) {
          fail(t, "parse_retries_exhausted", rec.retries);
          return traj;
        }
        rec.arm = decide(*decision, decide_rng);
      } else {
        rec.arm = select_arm(std::get<BaselineParams>(spec_.agent), state, agent_rng);
      }
      rec.greedy = is_greedy_choice(state.arms, rec.arm);
      rec.reward = pull(inst, rec.arm, reward_rng);
      state.update(rec.arm, rec.reward);
      history.push_back({rec.arm, rec.reward});

      Json j{{"type", "round"},   {"experiment_id", exp_id}, {"agent", label},
             {"replicate", replicate}, {"t", t},             {"arm", rec.arm},
             {"reward", rec.reward},   {"greedy", rec.greedy}};
      if (llm) j["raw_response"] = rec.raw_response;
      if (!rec.retries.empty()) j["retries"] = rec.retries;
      if (restarted) j["restarted"] = true;
      emit(std::move(j));
      traj.rounds.push_back(std::move(rec));
    }
    traj.status = ReplicateStatus::kComplete;
    emit(Json{{"type", "replicate_end"}, {"replicate", replicate}, {"rounds", inst.horizon}});
    return traj;
  }

  /// Runs every replicate into spec.output, starting from an empty log.
  RunLog run(const std::atomic<bool>* stop = nullptr) {
    std::filesystem::path log = spec_.output;
    if (log.has_parent_path()) std::filesystem::create_directories(log.parent_path());
    write_manifest("running");
    write_file_atomic(log, "");
    return execute(std::vector<bool>(spec_.replicates, false),
                   std::vector<bool>(spec_.replicates, false), stop);
  }

  /// Continues an interrupted run in place. Finished replicates are kept
  /// verbatim; partially written ones are dropped and rerun from round 1.
  RunLog resume(const std::atomic<bool>* stop = nullptr) {
    const auto log = spec_.output;
    const auto mpath = manifest_path(log);
    if (!std::filesystem::exists(mpath)) throw IntegrityError("no manifest at " + mpath.string());
    const Json manifest = Json::parse(read_file(mpath));
    if (manifest.at("spec") != spec_to_json(spec_)) {
      throw IntegrityError("experiment spec differs from the manifest of " + log.string() +
                           "; refusing to resume");
    }
    std::vector<Json> records =
        std::filesystem::exists(log) ? read_log_records(log) : std::vector<Json>{};
    std::vector<bool> done(spec_.replicates, false), started(spec_.replicates, false);
    for (const auto& r : records) {
      const auto idx = r.at("replicate").get<std::size_t>();
      if (idx >= spec_.replicates) throw IntegrityError("log references replicate beyond N");
      started[idx] = true;
      const auto type = r.at("type").get<std::string>();
      if (type == "replicate_end" || type == "replicate_failed") done[idx] = true;
    }
    const bool all_done = std::all_of(done.begin(), done.end(), [](bool b) { return b; });
    if (all_done && manifest.value("status", "") == "complete") {
      return summarize_log();
    }
    std::string kept;
    for (const auto& r : records) {
      if (done[r.at("replicate").get<std::size_t>()]) kept += r.dump() + "\n";
    }
    write_file_atomic(log, kept);
    std::vector<bool> restarted(spec_.replicates, false);
    for (std::size_t i = 0; i < spec_.replicates; ++i) {
      restarted[i] = spec_.is_llm() && started[i] && !done[i];
    }
    return execute(done, restarted, stop);
  }

 private:
  void write_manifest(const std::string& status) const {
    Json reps = Json::array();
    for (std::size_t r = 0; r < spec_.replicates; ++r) {
      reps.push_back(Json{{"index", r}, {"permutation", replicate_instance(spec_, r).permutation}});
    }
    Json m{{"spec", spec_to_json(spec_)},
           {"experiment_id", spec_.experiment_id()},
           {"code_version", kCodeVersion},
           {"tie_breaking", "uniform_random"},
           {"status", status},
           {"replicates", std::move(reps)}};
    write_file_atomic(manifest_path(spec_.output), m.dump(2) + "\n");
  }

  RunLog execute(const std::vector<bool>& done, const std::vector<bool>& restarted,
                 const std::atomic<bool>* external_stop) {
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < spec_.replicates; ++i) {
      if (!done[i]) todo.push_back(i);
    }
    std::atomic<bool> stop{false};
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    {
      LogWriter writer(spec_.output);
      auto worker = [&] {
        while (true) {
          if (stop.load() || (external_stop && external_stop->load())) return;
          const std::size_t i = next.fetch_add(1);
          if (i >= todo.size()) return;
          try {
            auto traj = run_replicate(todo[i], &writer, restarted[todo[i]], external_stop);
            if (budget_->exhausted()) stop = true;
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!error) error = std::current_exception();
            stop = true;
          }
        }
      };
      const std::size_t n = std::max<std::size_t>(1, std::min(spec_.threads, todo.size()));
      std::vector<std::thread> pool;
      for (std::size_t w = 1; w < n; ++w) pool.emplace_back(worker);
      worker();
      for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);
    RunLog out = summarize_log();
    if (out.incomplete == 0 && out.complete + out.failed == spec_.replicates) {
      finalize();
      write_manifest("complete");
    } else {
      out.aborted = true;
    }
    return out;
  }

  /// Groups records by replicate index (stable, so per-replicate order is kept).
  void finalize() const {
    auto records = read_log_records(spec_.output);
    std::stable_sort(records.begin(), records.end(), [](const Json& a, const Json& b) {
      return a.at("replicate").get<std::size_t>() < b.at("replicate").get<std::size_t>();
    });
    std::string out;
    for (const auto& r : records) out += r.dump() + "\n";
    write_file_atomic(spec_.output, out);
  }

  RunLog summarize_log() const {
    RunLog out{spec_.output, manifest_path(spec_.output)};
    std::vector<int> state(spec_.replicates, 0);  // 0 none, 1 started, 2 complete, 3 failed
    for (const auto& r : read_log_records(spec_.output)) {
      const auto idx = r.at("replicate").get<std::size_t>();
      const auto type = r.at("type").get<std::string>();
      if (type == "replicate_end") state[idx] = 2;
      else if (type == "replicate_failed") state[idx] = 3;
      else if (state[idx] == 0) state[idx] = 1;
    }
    for (int s : state) {
      if (s == 2) ++out.complete;
      else if (s == 3) ++out.failed;
      else ++out.incomplete;
    }
    return out;
  }

  ExperimentSpec spec_;
  std::shared_ptr<TokenBudget> budget_;
  std::shared_ptr<ChatClient> client_;
};

inline RunLog run_experiment(const ExperimentSpec& spec, ClientFactory factory = make_mock_client) {
  Experiment e(spec, std::move(factory));
  return e.run();
}

/// Resumes the run at `log`. With `spec` given, it must match the manifest.
inline RunLog resume(const std::filesystem::path& log, std::optional<ExperimentSpec> spec = std::nullopt,
                     ClientFactory factory = make_mock_client) {
  const auto mpath = manifest_path(log);
  if (!std::filesystem::exists(mpath)) throw IntegrityError("no manifest at " + mpath.string());
  const Json manifest = Json::parse(read_file(mpath));
  ExperimentSpec s = spec ? *spec : spec_from_json(manifest.at("spec"));
  if (s.output != log) {
    if (spec) {
      // Specs compare on output too; a mismatch here is a different experiment.
      throw IntegrityError("config output " + s.output.string() + " does not match log " +
                           log.string());
    }
    s.output = log;
  }
  Experiment e(s, std::move(factory));
  return e.resume();
}

// ---------------------------------------------------------------------------
// Loading logs back

struct LoadedRun {
  Json spec;  // null when the manifest is missing
  std::string agent;
  std::string experiment_id;
  std::vector<Trajectory> trajectories;  // ordered by replicate index
};

inline LoadedRun load_run(const std::filesystem::path& log) {
  LoadedRun run;
  const auto mpath = manifest_path(log);
  if (std::filesystem::exists(mpath)) {
    const Json manifest = Json::parse(read_file(mpath));
    run.spec = manifest.at("spec");
    run.experiment_id = manifest.value("experiment_id", "");
  }
  std::vector<std::optional<Trajectory>> reps;
  auto slot = [&](std::size_t idx) -> Trajectory& {
    if (idx >= reps.size()) reps.resize(idx + 1);
    if (!reps[idx]) {
      reps[idx] = Trajectory{};
      reps[idx]->replicate = idx;
    }
    return *reps[idx];
  };
  for (const auto& r : read_log_records(log)) {
    const auto type = r.at("type").get<std::string>();
    const auto idx = r.at("replicate").get<std::size_t>();
    Trajectory& tr = slot(idx);
    if (type == "replicate_start") {
      tr = Trajectory{};
      tr.replicate = idx;
      tr.instance = instance_from_json(r.at("instance"));
      tr.master_seed = r.at("instance").at("master_seed").get<std::uint64_t>();
    } else if (type == "round") {
      RoundRecord rec;
      rec.t = r.at("t").get<std::size_t>();
      rec.arm = r.at("arm").get<ArmIndex>();
      rec.reward = r.at("reward").get<int>();
      rec.greedy = r.at("greedy").get<bool>();
      rec.raw_response = r.value("raw_response", std::string());
      if (r.contains("retries")) rec.retries = r.at("retries").get<std::vector<std::string>>();
      if (rec.t != tr.rounds.size() + 1) {
        throw IntegrityError("replicate " + std::to_string(idx) + " rounds are not contiguous");
      }
      if (rec.arm >= tr.instance.num_arms()) throw IntegrityError("round references unknown arm");
      tr.restarted = tr.restarted || r.value("restarted", false);
      if (run.agent.empty()) run.agent = r.value("agent", "");
      if (run.experiment_id.empty()) run.experiment_id = r.value("experiment_id", "");
      tr.rounds.push_back(std::move(rec));
    } else if (type == "replicate_end") {
      if (tr.rounds.size() != tr.instance.horizon) {
        throw IntegrityError("replicate " + std::to_string(idx) + " ended before its horizon");
      }
      tr.status = ReplicateStatus::kComplete;
    } else if (type == "replicate_failed") {
      tr.status = ReplicateStatus::kFailed;
      tr.failure = r.value("reason", "");
      if (r.contains("retries")) tr.failure_retries = r.at("retries").get<std::vector<std::string>>();
    }
  }
  if (run.agent.empty() && !run.spec.is_null()) {
    run.agent = agent_label(agent_from_json(run.spec.at("agent")));
  }
  for (auto& r : reps) {
    if (r) run.trajectories.push_back(std::move(*r));
  }
  return run;
}

}  // namespace armlab
