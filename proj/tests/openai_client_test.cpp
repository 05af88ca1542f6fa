#include <gtest/gtest.h>

#include <thread>

#include "armlab/bandit.hpp"
#include "armlab/openai_client.hpp"

using namespace armlab;

namespace {

class LocalServer {
 public:
  explicit LocalServer(httplib::Server::Handler handler) {
    server_.Post("/v1/chat/completions", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  ChatModel model() const {
    ChatModel m;
    m.provider = "openai";
    m.model = "gpt-test";
    m.base_url = "http://127.0.0.1:" + std::to_string(port_);
    m.api_key_env = "ARMLAB_TEST_KEY";
    m.timeout = std::chrono::milliseconds(5000);
    return m;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

const ChatPrompt kPrompt{"system text", "user text"};
const RoundContext kCtx{};

std::string reply(const std::string& content, const std::string& finish = "stop") {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}},
                                      {"finish_reason", finish}}}},
                        {"usage", {{"prompt_tokens", 12}, {"completion_tokens", 3}}}}
      .dump();
}

}  // namespace

TEST(OpenAi, SendsMessagesAndReadsCompletion) {
  setenv("ARMLAB_TEST_KEY", "sk-test", 1);
  nlohmann::json seen;
  std::string auth;
  LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(reply("<Answer>blue</Answer>"), "application/json");
  });
  OpenAiClient client(server.model());
  const Completion c = client.complete(kPrompt, kCtx);
  EXPECT_EQ(c.text, "<Answer>blue</Answer>");
  EXPECT_EQ(c.usage.prompt_tokens, 12);
  EXPECT_EQ(c.usage.completion_tokens, 3);
  EXPECT_EQ(auth, "Bearer sk-test");
  EXPECT_EQ(seen["model"], "gpt-test");
  EXPECT_EQ(seen["messages"][0]["role"], "system");
  EXPECT_EQ(seen["messages"][0]["content"], "system text");
  EXPECT_EQ(seen["messages"][1]["content"], "user text");
  EXPECT_EQ(seen["temperature"], 0.0);
}

TEST(OpenAi, ServerErrorsAreTransientAndRetried) {
  int calls = 0;
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    if (++calls <= 2) {
      res.status = calls == 1 ? 429 : 503;
      res.set_content("{}", "application/json");
      return;
    }
    res.set_content(reply("<Answer>red</Answer>"), "application/json");
  });
  GuardedClient client(std::make_shared<OpenAiClient>(server.model()), server.model(), nullptr,
                       [](auto) {});
  const Completion c = client.complete(kPrompt, kCtx);
  EXPECT_EQ(c.text, "<Answer>red</Answer>");
  EXPECT_EQ(c.retries.size(), 2u);
  EXPECT_EQ(calls, 3);
}

TEST(OpenAi, ClientErrorsAreNotTransient) {
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    res.status = 400;
    res.set_content(R"({"error":{"code":"bad_request","message":"nope"}})", "application/json");
  });
  OpenAiClient client(server.model());
  try {
    client.complete(kPrompt, kCtx);
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_FALSE(e.transient());
  }
}

TEST(OpenAi, ContentFilterIsReported) {
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    res.set_content(reply("", "content_filter"), "application/json");
  });
  OpenAiClient client(server.model());
  EXPECT_THROW(client.complete(kPrompt, kCtx), ContentFilterError);
}

TEST(OpenAi, UnreachableHostIsTransient) {
  ChatModel m;
  m.provider = "openai";
  m.base_url = "http://127.0.0.1:1";
  m.timeout = std::chrono::milliseconds(1000);
  OpenAiClient client(m);
  try {
    client.complete(kPrompt, kCtx);
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_TRUE(e.transient());
  }
}

TEST(OpenAi, FactoryRoutesProviders) {
  ChatModel m;
  m.provider = "mock";
  m.script = "uniform";
  EXPECT_NE(dynamic_cast<MockClient*>(make_network_client(m).get()), nullptr);
  m.provider = "openai";
  EXPECT_NE(dynamic_cast<OpenAiClient*>(make_network_client(m).get()), nullptr);
  m.provider = "elsewhere";
  EXPECT_THROW(make_network_client(m), ConfigError);
}
