#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "armlab/agents.hpp"
#include "armlab/bandit.hpp"
#include "armlab/errors.hpp"
#include "armlab/prompt.hpp"

namespace armlab {

/// Connection and sampling parameters for one chat model.
struct ChatModel {
  std::string provider = "mock";  // "mock" or "openai"
  std::string model = "mock";
  double temperature = 0.0;
  std::chrono::milliseconds timeout{60'000};
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{1'000};
  double backoff_factor = 2.0;
  std::chrono::milliseconds max_backoff{60'000};
  std::chrono::milliseconds min_request_interval{0};
  std::optional<double> top_p;
  std::optional<int> max_tokens;
  std::string base_url = "https://api.openai.com";
  std::string api_key_env = "OPENAI_API_KEY";
  // Mock providers only: which scripted policy to emulate.
  std::string script;
};

/// Network or provider failure. Transient failures are retried.
class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& what, bool transient)
      : std::runtime_error(what), transient_(transient) {}
  bool transient() const { return transient_; }

 private:
  bool transient_;
};

/// Provider refused to answer (content filter).
class ContentFilterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Usage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
  double latency_ms = 0.0;
};

struct Completion {
  std::string text;
  Usage usage;
  std::vector<std::string> retries;  // one entry per transient failure absorbed
};

/// What a client may know about the round besides the rendered prompt.
/// Network clients ignore it; mock scripts read the history from it.
struct RoundContext {
  PromptConfig config;
  std::vector<std::string> labels;
  History history;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual Completion complete(const ChatPrompt& prompt, const RoundContext& context) = 0;
};

// ---------------------------------------------------------------------------
// Scripted mocks

enum class MockScriptKind { kFixedArm, kUniform, kGreedy, kMalformed };

/// Deterministic stand-in for an LLM. The response is a pure function of
/// the round context.
struct MockScript {
  MockScriptKind kind = MockScriptKind::kUniform;
  ArmIndex fixed_arm = 0;

  static MockScript parse(const std::string& name) {
    if (name == "uniform") return {MockScriptKind::kUniform};
    if (name == "greedy") return {MockScriptKind::kGreedy};
    if (name == "malformed") return {MockScriptKind::kMalformed};
    const std::string prefix = "fixed:";
    if (name.rfind(prefix, 0) == 0) {
      try {
        return {MockScriptKind::kFixedArm, static_cast<ArmIndex>(std::stoul(name.substr(prefix.size())))};
      } catch (const std::exception&) {
        throw ConfigError("bad fixed-arm mock script: " + name);
      }
    }
    throw ConfigError("unknown mock script: " + name);
  }

  std::string respond(const RoundContext& ctx) const {
    const auto& labels = ctx.labels;
    const std::size_t k = labels.size();
    auto point_mass = [&](ArmIndex arm) {
      if (!ctx.config.wants_distribution()) return "<Answer>" + labels[arm] + "</Answer>";
      std::vector<std::string> parts;
      for (ArmIndex a = 0; a < k; ++a) parts.push_back(labels[a] + (a == arm ? ":1" : ":0"));
      return "<Answer>" + detail::join(parts, ",") + "</Answer>";
    };
    switch (kind) {
      case MockScriptKind::kFixedArm:
        if (fixed_arm >= k) throw ConfigError("fixed-arm mock script names arm beyond K");
        return point_mass(fixed_arm);
      case MockScriptKind::kUniform: {
        if (!ctx.config.wants_distribution()) {
          // Without a distribution answer the script cycles through arms.
          return point_mass(ctx.history.size() % k);
        }
        std::vector<std::string> parts;
        const std::string w = detail::format_rate(1.0 / static_cast<double>(k));
        for (const auto& l : labels) parts.push_back(l + ":" + w);
        return "<Answer>" + detail::join(parts, ",") + "</Answer>";
      }
      case MockScriptKind::kGreedy: {
        // Best empirical mean among played arms, lowest index on ties;
        // arm 0 before anything has been played.
        std::vector<ArmStats> stats(k);
        for (const Step& s : ctx.history) {
          ++stats[s.arm].pulls;
          stats[s.arm].successes += static_cast<std::size_t>(s.reward);
        }
        ArmIndex best = 0;
        std::optional<double> best_mean;
        for (ArmIndex a = 0; a < k; ++a) {
          auto m = stats[a].mean();
          if (m && (!best_mean || *m > *best_mean)) {
            best_mean = m;
            best = a;
          }
        }
        return point_mass(best);
      }
      case MockScriptKind::kMalformed:
        return "I would rather not pick a button.";
    }
    return {};
  }
};

class MockClient : public ChatClient {
 public:
  explicit MockClient(MockScript script) : script_(script) {}

  Completion complete(const ChatPrompt& prompt, const RoundContext& context) override {
    if (prompt.system_text.empty() || prompt.user_text.empty()) {
      throw UsageError("empty prompt");
    }
    Completion c;
    c.text = script_.respond(context);
    // Rough token accounting so budgets can be exercised offline.
    c.usage.prompt_tokens =
        static_cast<long>((prompt.system_text.size() + prompt.user_text.size()) / 4);
    c.usage.completion_tokens = static_cast<long>(c.text.size() / 4);
    return c;
  }

 private:
  MockScript script_;
};

// ---------------------------------------------------------------------------
// Shared guards

/// Enforces a minimum spacing between outbound requests across threads.
class RateLimiter {
 public:
  explicit RateLimiter(std::chrono::milliseconds min_interval) : interval_(min_interval) {}

  void acquire() {
    if (interval_.count() <= 0) return;
    std::unique_lock lock(mu_);
    const auto now = std::chrono::steady_clock::now();
    const auto slot = std::max(now, next_);
    next_ = slot + interval_;
    lock.unlock();
    std::this_thread::sleep_until(slot);
  }

 private:
  std::chrono::milliseconds interval_;
  std::mutex mu_;
  std::chrono::steady_clock::time_point next_{};
};

/// Per-experiment token allowance. A limit of zero means unlimited.
class TokenBudget {
 public:
  explicit TokenBudget(long limit = 0) : limit_(limit) {}

  void charge(const Usage& u) {
    used_ += u.prompt_tokens + u.completion_tokens;
  }
  bool exhausted() const { return limit_ > 0 && used_.load() >= limit_; }
  long used() const { return used_.load(); }
  long limit() const { return limit_; }

 private:
  long limit_;
  std::atomic<long> used_{0};
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

inline void real_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

/// Wraps a transport with rate limiting, exponential backoff on transient
/// failures, and budget accounting.
class GuardedClient : public ChatClient {
 public:
  GuardedClient(std::shared_ptr<ChatClient> inner, ChatModel model,
                std::shared_ptr<TokenBudget> budget = nullptr, Sleeper sleeper = real_sleep)
      : inner_(std::move(inner)),
        model_(std::move(model)),
        budget_(budget ? std::move(budget) : std::make_shared<TokenBudget>()),
        limiter_(model_.min_request_interval),
        sleeper_(std::move(sleeper)) {}

  Completion complete(const ChatPrompt& prompt, const RoundContext& context) override {
    if (budget_->exhausted()) {
      throw BudgetExceeded("token budget of " + std::to_string(budget_->limit()) + " exhausted");
    }
    std::vector<std::string> retries;
    auto backoff = model_.initial_backoff;
    for (int attempt = 0;; ++attempt) {
      limiter_.acquire();
      try {
        const auto start = std::chrono::steady_clock::now();
        Completion c = inner_->complete(prompt, context);
        if (c.usage.latency_ms == 0.0) {
          c.usage.latency_ms =
              std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                  .count();
        }
        budget_->charge(c.usage);
        c.retries = std::move(retries);
        return c;
      } catch (const TransportError& e) {
        if (!e.transient() || attempt >= model_.max_retries) {
          throw TransportError(std::string(e.what()) + " (after " + std::to_string(attempt) +
                                   " retries)",
                               false);
        }
        retries.push_back(e.what());
        sleeper_(backoff);
        backoff = std::min(model_.max_backoff,
                           std::chrono::milliseconds(static_cast<long long>(
                               static_cast<double>(backoff.count()) * model_.backoff_factor)));
      }
    }
  }

  const TokenBudget& budget() const { return *budget_; }

 private:
  std::shared_ptr<ChatClient> inner_;
  ChatModel model_;
  std::shared_ptr<TokenBudget> budget_;
  RateLimiter limiter_;
  Sleeper sleeper_;
};

/// Builds a raw transport for a model description. The default factory only
/// knows the mock provider; network providers register through the CLI.
using ClientFactory = std::function<std::shared_ptr<ChatClient>(const ChatModel&)>;

inline std::shared_ptr<ChatClient> make_mock_client(const ChatModel& model) {
  if (model.provider != "mock") {
    throw ConfigError("provider '" + model.provider + "' is not available in this build");
  }
  return std::make_shared<MockClient>(MockScript::parse(model.script.empty() ? "uniform" : model.script));
}

}  // namespace armlab
