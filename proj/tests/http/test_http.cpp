#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "hobson/http_provider.hpp"
#include "hobson/pipeline.hpp"
#include "hobson/similarity.hpp"
#include "support/fixtures.hpp"

using namespace hobson;
using nlohmann::json;
using namespace std::chrono_literals;

namespace {

// Loopback server whose chat handler is scripted per test.
class FakeServer {
 public:
  using Handler = std::function<void(const json&, httplib::Response&)>;

  FakeServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                httplib::Response& res) {
      std::lock_guard lock(mutex_);
      ++chat_calls;
      last_auth = req.get_header_value("Authorization");
      last_body = json::parse(req.body);
      chat_(last_body, res);
    });
    server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mutex_);
      ++embed_calls;
      last_body = json::parse(req.body);
      json data = json::array();
      const auto& inputs = last_body["input"];
      // Reply in reverse order; the client must honor "index".
      for (std::size_t i = inputs.size(); i-- > 0;) {
        const std::string text = inputs[i].get<std::string>();
        std::vector<double> v = {1.0, text.find("owner") != std::string::npos ? 1.0 : 0.0};
        data.push_back({{"index", i}, {"embedding", v}});
      }
      res.set_content(json{{"data", data}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  void on_chat(Handler h) { chat_ = std::move(h); }

  HttpEndpoint endpoint() const {
    HttpEndpoint e;
    e.base_url = "http://127.0.0.1:" + std::to_string(port_);
    e.api_key_env = "HOBSON_TEST_KEY";
    e.timeout_seconds = 5;
    return e;
  }

  int chat_calls = 0;
  int embed_calls = 0;
  std::string last_auth;
  json last_body;

 private:
  httplib::Server server_;
  std::thread thread_;
  std::mutex mutex_;
  int port_ = 0;
  Handler chat_ = [](const json&, httplib::Response& res) { res.status = 500; };
};

void reply_text(httplib::Response& res, const std::string& text,
                const std::string& finish = "stop") {
  res.set_content(json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}},
                                     {"finish_reason", finish}}}}}
                      .dump(),
                  "application/json");
}

CompletionRequest request() {
  CompletionRequest r;
  r.prompt.instance_id = "h1";
  r.prompt.text = "Which relation?";
  r.model = "test-model";
  r.temperature = 0.5;
  r.max_tokens = 64;
  return r;
}

}  // namespace

TEST_CASE("chat request shape and bearer key") {
  ::setenv("HOBSON_TEST_KEY", "sk-test", 1);
  FakeServer server;
  server.on_chat([](const json&, httplib::Response& res) { reply_text(res, "Answer: no_relation"); });
  ChatCompletionsProvider provider(server.endpoint(), "be terse");
  CHECK(provider.send(request()) == "Answer: no_relation");
  CHECK(server.last_auth == "Bearer sk-test");
  CHECK(server.last_body["model"] == "test-model");
  CHECK(server.last_body["temperature"] == 0.5);
  CHECK(server.last_body["max_tokens"] == 64);
  REQUIRE(server.last_body["messages"].size() == 2);
  CHECK(server.last_body["messages"][0]["role"] == "system");
  CHECK(server.last_body["messages"][1]["content"] == "Which relation?");
}

TEST_CASE("three 429s then success through the gateway") {
  FakeServer server;
  int seen = 0;
  server.on_chat([&](const json&, httplib::Response& res) {
    if (++seen <= 3) {
      res.status = 429;
      return;
    }
    reply_text(res, "Relation: org:org:shares_of");
  });
  auto provider = std::make_shared<ChatCompletionsProvider>(server.endpoint());
  Gateway gw(provider, nullptr, CacheMode::Disabled);
  std::vector<std::chrono::milliseconds> sleeps;
  gw.set_sleeper([&](std::chrono::milliseconds d) { sleeps.push_back(d); });
  const auto r = gw.complete(request());
  CHECK(r.text == "Relation: org:org:shares_of");
  CHECK(r.attempts == 4);
  CHECK(gw.stats().retries == 3);
  CHECK(sleeps.size() == 3);
  CHECK(server.chat_calls == 4);
}

TEST_CASE("content filter is a refusal and is not retried") {
  FakeServer server;
  server.on_chat([](const json&, httplib::Response& res) { reply_text(res, "", "content_filter"); });
  auto provider = std::make_shared<ChatCompletionsProvider>(server.endpoint());
  Gateway gw(provider, nullptr, CacheMode::Disabled);
  gw.set_sleeper([](auto) {});
  try {
    gw.complete(request());
    FAIL("expected refusal");
  } catch (const CompletionError& e) {
    CHECK(e.kind() == FailureKind::Refusal);
  }
  CHECK(server.chat_calls == 1);
}

TEST_CASE("server errors are retried as transport failures; 4xx is a refusal") {
  FakeServer server;
  server.on_chat([](const json&, httplib::Response& res) { res.status = 503; });
  RetryPolicy policy;
  policy.max_attempts = 2;
  Gateway gw(std::make_shared<ChatCompletionsProvider>(server.endpoint()), nullptr,
             CacheMode::Disabled, policy);
  gw.set_sleeper([](auto) {});
  try {
    gw.complete(request());
    FAIL("expected failure");
  } catch (const CompletionError& e) {
    CHECK(e.kind() == FailureKind::Transport);
    CHECK(e.attempts() == 2);
  }
  server.on_chat([](const json&, httplib::Response& res) { res.status = 400; });
  ChatCompletionsProvider direct(server.endpoint());
  try {
    direct.send(request());
    FAIL("expected refusal");
  } catch (const CompletionError& e) {
    CHECK(e.kind() == FailureKind::Refusal);
  }
}

TEST_CASE("unreachable endpoint is a transport failure") {
  HttpEndpoint e;
  e.base_url = "http://127.0.0.1:1";
  e.timeout_seconds = 1;
  try {
    ChatCompletionsProvider(e).send(request());
    FAIL("expected failure");
  } catch (const CompletionError& err) {
    CHECK(err.kind() == FailureKind::Transport);
  }
}

TEST_CASE("embedding client honors indices; scorer uses cosine") {
  FakeServer server;
  auto client = std::make_shared<EmbeddingClient>(server.endpoint(), "emb");
  const auto v = client->embed({"owner of", "client of"});
  REQUIRE(v.size() == 2);
  CHECK(v[0] == std::vector<double>{1.0, 1.0});
  CHECK(v[1] == std::vector<double>{1.0, 0.0});
  CHECK(server.last_body["model"] == "emb");

  EmbeddingScorer scorer(client);
  const auto s = scorer.score("owner_of", "client_of", "");
  CHECK(server.last_body["input"][0] == "owner of");
  CHECK(*s.score == doctest::Approx(std::sqrt(0.5)));
  scorer.score("owner_of", "client_of", "Acme owns Borealis");
  CHECK(server.last_body["input"][0] == "owner of (in: Acme owns Borealis)");
}

TEST_CASE("live pipeline run against the fake endpoint") {
  FakeServer server;
  server.on_chat([](const json& body, httplib::Response& res) {
    const std::string prompt = body["messages"].back()["content"];
    if (prompt.find("choose the appropriate relation class") != std::string::npos &&
        prompt.find("suggest a relation") == std::string::npos) {
      reply_text(res, "A better label would be 'stake_holder_of'.\nAnswer: no_relation");
    } else {
      reply_text(res, "Answer: stake_holder_of");
    }
  });
  hobson::testing::TempDir dir("live");
  hobson::testing::write_generic_dataset(dir.path() / "d.jsonl", 4);
  RunConfig c;
  c.dataset_path = dir.path() / "d.jsonl";
  c.output_dir = dir.path() / "out";
  c.cache_dir = dir.path() / "cache";
  c.provider = ProviderMode::Live;
  c.endpoint = server.endpoint();
  c.models = {"fake"};
  c.temperatures = {0.2};
  c.runs_per_setting = 1;
  c.parallelism = 2;
  const auto m = run(c);
  REQUIRE_MESSAGE(m.ok(), m.error);
  CHECK(server.chat_calls == 12);
  const auto bundle = load_report_bundle(c.output_dir);
  for (const auto& r : bundle.metrics) {
    if (r.key.tier == PromptTier::Constrained) {
      CHECK(r.hcr->str() == "100.00");
      CHECK(r.cbr->str() == "100.00");
    } else {
      CHECK(r.nrr->str() == "100.00");
    }
  }
  REQUIRE_FALSE(bundle.similarity.empty());
  CHECK(*bundle.similarity.front().mean == 1.0);

  // Same config in cache-only mode needs no server traffic.
  c.provider = ProviderMode::CacheOnly;
  c.output_dir = dir.path() / "replay";
  REQUIRE(run(c).ok());
  CHECK(server.chat_calls == 12);
}
