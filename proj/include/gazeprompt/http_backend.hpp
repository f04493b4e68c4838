#pragma once

// Chat-completion backend over HTTP(S): POST {model, messages:[{role:user}]}
// and read choices[0].message.content from the reply.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <regex>
#include <string>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "gazeprompt/errors.hpp"
#include "gazeprompt/llm_client.hpp"

namespace gazeprompt {

struct HttpBackendConfig {
  std::string endpoint = "http://127.0.0.1:8000/v1/chat/completions";
  std::string model = "gpt-4o";
  std::string token;             // sent as a bearer token when nonempty
  std::string token_env = "GAZE_PROMPT_API_TOKEN";
  int timeout_ms = 30000;
  int retries = 2;
  int retry_backoff_ms = 200;
};

struct Endpoint {
  std::string scheme_host_port;
  std::string path;
};

inline Endpoint split_endpoint(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw InvalidArgument("endpoint must be an http(s) URL: " + url);
  return {m[1].str(), m[2].matched ? m[2].str() : std::string("/")};
}

class HttpChatBackend final : public CompletionBackend {
public:
  explicit HttpChatBackend(HttpBackendConfig config) : config_(std::move(config)), endpoint_(split_endpoint(config_.endpoint)) {
    if (config_.token.empty() && !config_.token_env.empty()) {
      if (const char* t = std::getenv(config_.token_env.c_str())) config_.token = t;
    }
    if (config_.timeout_ms <= 0) throw InvalidArgument("timeout_ms must be positive");
    if (config_.retries < 0) throw InvalidArgument("retries must be nonnegative");
  }

  std::string name() const override { return "http:" + config_.model; }

  /// Retries transport failures, 429 and 5xx up to `retries` more times.
  std::string complete(const std::string& user_message) override {
    const nlohmann::json body = {{"model", config_.model},
                                 {"messages", nlohmann::json::array({{{"role", "user"}, {"content", user_message}}})}};
    const std::string payload = body.dump();
    std::string last_error;
    int attempts = 0;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(config_.retry_backoff_ms));
      ++attempts;
      ++total_attempts_;
      httplib::Client client(endpoint_.scheme_host_port);
      const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
      client.set_connection_timeout(timeout);
      client.set_read_timeout(timeout);
      client.set_write_timeout(timeout);
      httplib::Headers headers;
      if (!config_.token.empty()) headers.emplace("Authorization", "Bearer " + config_.token);
      auto res = client.Post(endpoint_.path, headers, payload, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 401 || res->status == 403)
        throw AuthError("backend rejected credentials (HTTP " + std::to_string(res->status) + ")");
      if (res->status == 429 || res->status >= 500) {
        last_error = "backend returned HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200)
        throw TransportError("backend returned HTTP " + std::to_string(res->status), attempts);
      return parse_reply(res->body, attempts);
    }
    throw TransportError(last_error + " after " + std::to_string(attempts) + " attempts", attempts);
  }

  int total_attempts() const noexcept { return total_attempts_.load(); }

private:
  static std::string parse_reply(const std::string& body, int attempts) {
    try {
      auto j = nlohmann::json::parse(body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("malformed completion response: ") + e.what(), attempts);
    }
  }

  HttpBackendConfig config_;
  Endpoint endpoint_;
  std::atomic<int> total_attempts_{0};
};

}  // namespace gazeprompt
