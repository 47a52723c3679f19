#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <thread>

#include "behaviorkit/chat.hpp"
#include "corpus_rows.hpp"

using namespace bkit;

namespace {

const BehaviorLexicon& lex() {
  static BehaviorLexicon instance = BehaviorLexicon::standard();
  return instance;
}

struct TestServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  explicit TestServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server.Post("/v1/chat/completions", std::move(handler));
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~TestServer() {
    server.stop();
    thread.join();
  }
  ChatEndpoint endpoint() const {
    ChatEndpoint ep;
    ep.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    ep.model = "test-model";
    ep.max_attempts = 3;
    ep.initial_backoff_ms = 1;
    return ep;
  }
};

}  // namespace

TEST_CASE("remote generation returns the endpoint's message verbatim") {
  std::string seen_system, seen_user;
  double seen_temperature = 0.0;
  TestServer server([&](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    seen_system = body["messages"][0]["content"];
    seen_user = body["messages"][1]["content"];
    seen_temperature = body["temperature"];
    nlohmann::json reply = {
        {"choices", {{{"message", {{"role", "assistant"}, {"content", rows::kLowAbility}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });

  PromptSpec spec;
  spec.trait = Trait::Ability;
  spec.level = Level::Low;
  setenv("BKIT_API_KEY", "sk-test", 1);
  const std::string turn = generate_remote(spec, lex(), server.endpoint());
  unsetenv("BKIT_API_KEY");

  CHECK(turn == rows::kLowAbility);
  CHECK(seen_temperature == Catch::Approx(0.7));
  CHECK(seen_system.find("High-Fidelity Multimodal Persona Engine") != std::string::npos);
  CHECK(seen_user.find("Ability Score: Low") != std::string::npos);
  // returned text parses under the transcript grammar
  CHECK_NOTHROW(parse(turn));
}

TEST_CASE("persistent server errors exhaust the bounded retries") {
  std::atomic<int> hits{0};
  TestServer server([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 500;
    res.set_content("boom", "text/plain");
  });

  PromptSpec spec;
  spec.trait = Trait::Ability;
  spec.level = Level::Low;
  CHECK_THROWS_AS(generate_remote(spec, lex(), server.endpoint()), ChatError);
  CHECK(hits == 3);
}

TEST_CASE("transient failures recover within the retry budget") {
  std::atomic<int> hits{0};
  TestServer server([&](const httplib::Request&, httplib::Response& res) {
    if (++hits < 3) {
      res.status = 429;
      res.set_content("slow down", "text/plain");
      return;
    }
    nlohmann::json reply = {
        {"choices", {{{"message", {{"role", "assistant"}, {"content", "ok turn"}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  PromptSpec spec;
  spec.trait = Trait::None;
  CHECK(generate_remote(spec, lex(), server.endpoint()) == "ok turn");
  CHECK(hits == 3);
}

TEST_CASE("client errors fail fast without retries") {
  std::atomic<int> hits{0};
  TestServer server([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 401;
    res.set_content("{\"error\":\"bad key\"}", "application/json");
  });
  PromptSpec spec;
  spec.trait = Trait::None;
  try {
    generate_remote(spec, lex(), server.endpoint());
    FAIL("expected ChatError");
  } catch (const ChatError& e) {
    CHECK(std::string(e.what()).find("401") != std::string::npos);
    CHECK(std::string(e.what()).find("bad key") != std::string::npos);
  }
  CHECK(hits == 1);
}

TEST_CASE("empty completions are rejected") {
  TestServer server([&](const httplib::Request&, httplib::Response& res) {
    nlohmann::json reply = {
        {"choices", {{{"message", {{"role", "assistant"}, {"content", ""}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  PromptSpec spec;
  spec.trait = Trait::None;
  CHECK_THROWS_AS(generate_remote(spec, lex(), server.endpoint()), ChatError);
}

TEST_CASE("out-of-range sampling settings are rejected before any request") {
  ChatEndpoint ep;
  ep.base_url = "http://127.0.0.1:1/v1";
  ep.model = "x";
  PromptSpec spec;
  spec.trait = Trait::None;
  spec.temperature = 2.5;
  CHECK_THROWS_AS(generate_remote(spec, lex(), ep), ChatError);
  spec.temperature = 0.7;
  spec.max_tokens = 0;
  CHECK_THROWS_AS(generate_remote(spec, lex(), ep), ChatError);
}

TEST_CASE("unreachable endpoints surface a transport failure") {
  ChatEndpoint ep;
  ep.base_url = "http://127.0.0.1:1/v1";  // nothing listens there
  ep.model = "x";
  ep.max_attempts = 2;
  ep.initial_backoff_ms = 1;
  ep.timeout_s = 1;
  PromptSpec spec;
  spec.trait = Trait::None;
  CHECK_THROWS_AS(generate_remote(spec, lex(), ep), ChatError);
}
