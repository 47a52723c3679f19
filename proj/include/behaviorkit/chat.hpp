#pragma once

#include <chrono>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "behaviorkit/synth.hpp"

namespace bkit {

class ChatError : public std::runtime_error {
 public:
  explicit ChatError(const std::string& what) : std::runtime_error(what) {}
};

// Chat-completion endpoint settings. The key is read from the environment so
// it never lands in config files or process listings.
struct ChatEndpoint {
  std::string base_url;  // e.g. "https://api.example.com/v1" or "http://127.0.0.1:8089/v1"
  std::string model;
  std::string api_key_env = "BKIT_API_KEY";
  int max_attempts = 4;
  int initial_backoff_ms = 250;
  int timeout_s = 120;
};

namespace detail {

// split "scheme://host:port/prefix" into client origin and path prefix
inline std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ChatError("endpoint URL needs a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

inline bool retryable_status(int status) {
  return status == 429 || (status >= 500 && status < 600);
}

}  // namespace detail

// One chat-completion round trip with bounded exponential-backoff retries on
// transport failures, 429 and 5xx. Returns the first choice's message text
// verbatim.
inline std::string chat_complete(const ChatEndpoint& endpoint, const std::string& system_message,
                                 const std::string& user_message, double temperature,
                                 int max_tokens) {
  if (temperature < 0.0 || temperature > 2.0) {
    throw ChatError("temperature must lie in [0, 2]");
  }
  if (max_tokens <= 0) throw ChatError("max_tokens must be positive");
  auto [origin, prefix] = detail::split_url(endpoint.base_url);
  httplib::Client client(origin);
  client.set_connection_timeout(endpoint.timeout_s, 0);
  client.set_read_timeout(endpoint.timeout_s, 0);

  httplib::Headers headers;
  if (const char* key = std::getenv(endpoint.api_key_env.c_str()); key != nullptr && *key != '\0') {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  nlohmann::json body{
      {"model", endpoint.model},
      {"messages",
       {{{"role", "system"}, {"content", system_message}},
        {{"role", "user"}, {"content", user_message}}}},
      {"temperature", temperature},
      {"max_tokens", max_tokens},
  };
  const std::string payload = body.dump();
  const std::string path = prefix + "/chat/completions";

  std::string last_error;
  for (int attempt = 0; attempt < endpoint.max_attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(endpoint.initial_backoff_ms << (attempt - 1)));
    }
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      std::string excerpt = res->body.substr(0, 200);
      last_error = "status " + std::to_string(res->status) + ": " + excerpt;
      if (!detail::retryable_status(res->status)) {
        throw ChatError("chat endpoint rejected request, " + last_error);
      }
      continue;
    }
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw ChatError(std::string("chat endpoint returned invalid JSON: ") + e.what());
    }
    if (!reply.contains("choices") || reply["choices"].empty()) {
      throw ChatError("chat endpoint returned no choices");
    }
    std::string text = reply["choices"][0].value("message", nlohmann::json::object())
                           .value("content", std::string());
    if (text.empty()) throw ChatError("chat endpoint returned an empty completion");
    return text;
  }
  throw ChatError("chat request failed after " + std::to_string(endpoint.max_attempts) +
                  " attempts, last: " + last_error);
}

inline std::string generate_remote(const PromptSpec& spec, const BehaviorLexicon& lex,
                                   const ChatEndpoint& endpoint) {
  return chat_complete(endpoint, build_prompt(spec, lex), build_user_message(spec),
                       spec.temperature, spec.max_tokens);
}

inline TurnGenerator remote_generator(const ChatEndpoint& endpoint, const BehaviorLexicon& lex) {
  return [endpoint, &lex](const PromptSpec& spec, std::uint64_t) {
    return generate_remote(spec, lex, endpoint);
  };
}

}  // namespace bkit
