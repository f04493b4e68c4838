#pragma once

// Refactoring requests against a pluggable completion backend.

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gazeprompt/errors.hpp"
#include "gazeprompt/prompt.hpp"

namespace gazeprompt {

struct RefactorRequest {
  PromptText prompt;
  std::string source_code;
  std::string language_hint = "java";
  std::string request_id;
};

struct RefactorResponse {
  std::string request_id;
  std::string refactored_code;
  bool code_extracted = false;  // false: the reply had no fenced block, see raw_model_message
  std::string backend_name;
  double latency_ms = 0.0;
  std::string raw_model_message;
};

inline constexpr std::string_view kNoCodeExtracted = "no code extracted";

/// Wraps code in a fence. The line break before the closing fence belongs to
/// the fence, so extract_first_code_block() returns `code` unchanged.
inline std::string fence_code(std::string_view code, std::string_view language) {
  std::string out = "```";
  out += language;
  out += '\n';
  out += code;
  out += "\n```";
  return out;
}

/// One user message: prompt, blank line, fenced code block tagged with the language.
inline std::string build_user_message(const RefactorRequest& r) {
  return r.prompt.text + "\n\n" + fence_code(r.source_code, r.language_hint);
}

/// Body of the first ``` fenced block; the info string after the opening fence is skipped.
inline std::optional<std::string> extract_first_code_block(std::string_view text) {
  auto open = text.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  auto body = text.find('\n', open + 3);
  if (body == std::string_view::npos) return std::nullopt;
  ++body;
  // closing fence must start a line
  std::size_t close = body;
  for (;;) {
    close = text.find("```", close);
    if (close == std::string_view::npos) return std::nullopt;
    if (close == body || text[close - 1] == '\n') break;
    close += 3;
  }
  if (close == body) return std::string();
  return std::string(text.substr(body, close - 1 - body));
}

/// The text in front of the first fence, i.e. the prompt part of a user message.
inline std::string_view prompt_part(std::string_view message) {
  auto fence = message.find("```");
  return fence == std::string_view::npos ? message : message.substr(0, fence);
}

class CompletionBackend {
public:
  virtual ~CompletionBackend() = default;
  virtual std::string name() const = 0;
  /// Sends one user message, returns the assistant's reply text.
  virtual std::string complete(const std::string& user_message) = 0;
};

/// Offline backend. A rule fires when every one of its markers occurs in the
/// prompt part of the message; the rule with the most markers wins, ties go to
/// the earlier rule. Unmatched messages are echoed back.
class MockBackend final : public CompletionBackend {
public:
  struct Rule {
    std::vector<std::string> markers;
    std::string code;
  };

  enum class Failure { none, unavailable, unauthorized };

  explicit MockBackend(std::vector<Rule> script = {}) : script_(std::move(script)) {}

  std::string name() const override { return "mock"; }

  std::string complete(const std::string& user_message) override {
    std::lock_guard lock(mutex_);
    captured_.push_back(user_message);
    if (failure_ == Failure::unavailable) throw TransportError("mock backend unavailable", 1);
    if (failure_ == Failure::unauthorized) throw AuthError("mock backend rejected credentials");

    const auto prompt = prompt_part(user_message);
    const Rule* best = nullptr;
    for (const auto& rule : script_) {
      bool all = true;
      for (const auto& m : rule.markers) all = all && prompt.find(m) != std::string_view::npos;
      if (all && (!best || rule.markers.size() > best->markers.size())) best = &rule;
    }
    std::string code;
    if (best) {
      code = best->code;
    } else {
      code = extract_first_code_block(user_message).value_or("");
    }
    return "Here is the refactored code:\n\n" + fence_code(code, language_of(user_message)) + "\n";
  }

  void set_failure(Failure f) {
    std::lock_guard lock(mutex_);
    failure_ = f;
  }

  std::vector<std::string> captured() const {
    std::lock_guard lock(mutex_);
    return captured_;
  }

private:
  static std::string language_of(std::string_view message) {
    auto open = message.find("```");
    if (open == std::string_view::npos) return {};
    auto eol = message.find('\n', open);
    return std::string(message.substr(open + 3, eol == std::string_view::npos ? std::string_view::npos : eol - open - 3));
  }

  std::vector<Rule> script_;
  Failure failure_ = Failure::none;
  mutable std::mutex mutex_;
  std::vector<std::string> captured_;
};

inline std::shared_ptr<MockBackend> mock_backend(std::vector<MockBackend::Rule> script = {}) {
  return std::make_shared<MockBackend>(std::move(script));
}

inline RefactorResponse refactor(const RefactorRequest& request, CompletionBackend& backend) {
  if (request.source_code.empty()) throw InvalidArgument("source_code must not be empty");
  const auto message = build_user_message(request);
  const auto t0 = std::chrono::steady_clock::now();
  std::string reply = backend.complete(message);
  const auto t1 = std::chrono::steady_clock::now();

  RefactorResponse r;
  r.request_id = request.request_id;
  r.backend_name = backend.name();
  r.latency_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  if (auto code = extract_first_code_block(reply)) {
    r.refactored_code = std::move(*code);
    r.code_extracted = true;
  }
  r.raw_model_message = std::move(reply);
  return r;
}

}  // namespace gazeprompt
