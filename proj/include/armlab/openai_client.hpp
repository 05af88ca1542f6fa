#pragma once

// Chat-completion transport over HTTP(S). Kept out of the other headers so
// only binaries that talk to a provider pull in cpp-httplib. Define
// CPPHTTPLIB_OPENSSL_SUPPORT (and link OpenSSL) for https endpoints.

#include <chrono>
#include <cstdlib>
#include <memory>
#include <string>

#include "httplib.h"
#include "json.hpp"

#include "armlab/errors.hpp"
#include "armlab/llm_client.hpp"
#include "armlab/prompt.hpp"

namespace armlab {

/// Body of a chat-completion request: system + user messages and sampling
/// parameters.
inline nlohmann::json chat_request_body(const ChatModel& model, const ChatPrompt& prompt) {
  nlohmann::json body;
  body["model"] = model.model;
  body["messages"] = nlohmann::json::array({
      {{"role", "system"}, {"content", prompt.system_text}},
      {{"role", "user"}, {"content", prompt.user_text}},
  });
  body["temperature"] = model.temperature;
  if (model.top_p) body["top_p"] = *model.top_p;
  if (model.max_tokens) body["max_tokens"] = *model.max_tokens;
  return body;
}

class OpenAiClient : public ChatClient {
 public:
  explicit OpenAiClient(ChatModel model, std::string path = "/v1/chat/completions")
      : model_(std::move(model)), path_(std::move(path)) {
    if (const char* key = std::getenv(model_.api_key_env.c_str())) api_key_ = key;
  }

  Completion complete(const ChatPrompt& prompt, const RoundContext&) override {
    httplib::Client cli(model_.base_url);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(model_.timeout).count();
    cli.set_read_timeout(static_cast<time_t>(secs), 0);
    cli.set_write_timeout(static_cast<time_t>(secs), 0);
    cli.set_connection_timeout(static_cast<time_t>(std::min<long long>(secs, 30)), 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const auto start = std::chrono::steady_clock::now();
    auto res = cli.Post(path_, headers, chat_request_body(model_, prompt).dump(), "application/json");
    const double latency =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (!res) {
      throw TransportError("request failed: " + httplib::to_string(res.error()), true);
    }
    if (res->status == 429 || res->status >= 500) {
      throw TransportError("HTTP " + std::to_string(res->status), true);
    }
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception&) {
      throw TransportError("HTTP " + std::to_string(res->status) + " with non-JSON body", res->status >= 500);
    }
    if (res->status != 200) {
      const auto code = body.contains("error") ? body["error"].value("code", std::string()) : "";
      if (code == "content_filter") throw ContentFilterError("provider content filter");
      throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body, false);
    }
    try {
      const auto& choice = body.at("choices").at(0);
      if (choice.value("finish_reason", std::string()) == "content_filter") {
        throw ContentFilterError("provider content filter");
      }
      Completion c;
      const auto& content = choice.at("message").at("content");
      c.text = content.is_null() ? std::string() : content.get<std::string>();
      if (body.contains("usage")) {
        c.usage.prompt_tokens = body["usage"].value("prompt_tokens", 0L);
        c.usage.completion_tokens = body["usage"].value("completion_tokens", 0L);
      }
      c.usage.latency_ms = latency;
      return c;
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("unexpected response shape: ") + e.what(), false);
    }
  }

 private:
  ChatModel model_;
  std::string path_;
  std::string api_key_;
};

/// Factory for the CLI: mock scripts plus OpenAI-compatible endpoints.
inline std::shared_ptr<ChatClient> make_network_client(const ChatModel& model) {
  if (model.provider == "mock") return make_mock_client(model);
  if (model.provider == "openai") return std::make_shared<OpenAiClient>(model);
  throw ConfigError("unknown provider: " + model.provider);
}

}  // namespace armlab
