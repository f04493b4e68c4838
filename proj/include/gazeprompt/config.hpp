#pragma once

// The single configuration file shared by the CLI and the service.
//
// {
//   "bind": "127.0.0.1:8765",
//   "snapshot_period_ms": 500,
//   "journal_dir": "journals",
//   "thresholds": {...}, "fixation": {...}, "geometry": {...},
//   "backend": {"kind": "mock", "script": [{"markers": ["short saccades"], "code_file": "x.java"}]}
//            | {"kind": "http", "endpoint": "...", "model": "...", "token_env": "...",
//               "timeout_ms": 30000, "retries": 2}
// }
//
// Relative paths are resolved against the directory holding the file.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "json.hpp"

#include "gazeprompt/codemap.hpp"
#include "gazeprompt/errors.hpp"
#include "gazeprompt/fixation.hpp"
#include "gazeprompt/http_backend.hpp"
#include "gazeprompt/json_codec.hpp"
#include "gazeprompt/llm_client.hpp"
#include "gazeprompt/prompt.hpp"

namespace gazeprompt {

inline constexpr const char* kConfigEnvVar = "GAZE_PROMPT_CONFIG";

struct BackendConfig {
  std::string kind = "mock";
  std::vector<MockBackend::Rule> script;
  HttpBackendConfig http;
};

struct ServiceConfig {
  std::string bind = "127.0.0.1:8765";
  double snapshot_period_ms = 500.0;
  std::filesystem::path journal_dir = "journals";
  ThresholdConfig thresholds;
  FixationConfig fixation;
  EditorGeometry geometry;
  BackendConfig backend;
  std::filesystem::path base_dir = ".";
};

namespace detail {

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline BackendConfig parse_backend(const json& j, const std::filesystem::path& base) {
  check_keys(j, "backend",
             {"kind", "script", "endpoint", "model", "token", "token_env", "timeout_ms", "retries", "retry_backoff_ms"});
  BackendConfig b;
  read_opt(j, "kind", b.kind);
  if (b.kind == "mock") {
    if (auto it = j.find("script"); it != j.end()) {
      if (!it->is_array()) throw InvalidArgument("backend.script must be an array");
      for (const auto& entry : *it) {
        check_keys(entry, "script entry", {"markers", "code", "code_file"});
        MockBackend::Rule rule;
        rule.markers = required<std::vector<std::string>>(entry, "markers");
        if (entry.contains("code_file")) {
          rule.code = read_text_file(base / entry["code_file"].get<std::string>());
        } else {
          rule.code = required<std::string>(entry, "code");
        }
        b.script.push_back(std::move(rule));
      }
    }
  } else if (b.kind == "http") {
    read_opt(j, "endpoint", b.http.endpoint);
    read_opt(j, "model", b.http.model);
    read_opt(j, "token", b.http.token);
    read_opt(j, "token_env", b.http.token_env);
    read_opt(j, "timeout_ms", b.http.timeout_ms);
    read_opt(j, "retries", b.http.retries);
    read_opt(j, "retry_backoff_ms", b.http.retry_backoff_ms);
  } else {
    throw InvalidArgument("backend.kind must be 'mock' or 'http'");
  }
  return b;
}

}  // namespace detail

inline ServiceConfig parse_service_config(const json& j, const std::filesystem::path& base_dir) {
  detail::check_keys(j, "config",
                     {"bind", "snapshot_period_ms", "journal_dir", "thresholds", "fixation", "geometry", "backend"});
  ServiceConfig c;
  c.base_dir = base_dir;
  detail::read_opt(j, "bind", c.bind);
  detail::read_opt(j, "snapshot_period_ms", c.snapshot_period_ms);
  if (!(c.snapshot_period_ms > 0.0)) throw InvalidArgument("snapshot_period_ms must be positive");
  std::string journal = c.journal_dir.string();
  detail::read_opt(j, "journal_dir", journal);
  c.journal_dir = std::filesystem::path(journal).is_absolute() ? std::filesystem::path(journal) : base_dir / journal;
  if (j.contains("thresholds")) c.thresholds = j["thresholds"].get<ThresholdConfig>();
  if (j.contains("fixation")) c.fixation = j["fixation"].get<FixationConfig>();
  if (j.contains("geometry")) c.geometry = j["geometry"].get<EditorGeometry>();
  if (j.contains("backend")) c.backend = detail::parse_backend(j["backend"], base_dir);
  return c;
}

inline ServiceConfig load_service_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(detail::read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(0, "config " + path.string() + ": " + e.what());
  }
  try {
    return parse_service_config(j, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
  } catch (const json::exception& e) {
    throw InvalidArgument("config " + path.string() + ": " + e.what());
  }
}

/// Explicit path, else $GAZE_PROMPT_CONFIG, else built-in defaults.
inline ServiceConfig resolve_service_config(const std::string& explicit_path) {
  if (!explicit_path.empty()) return load_service_config(explicit_path);
  if (const char* env = std::getenv(kConfigEnvVar); env && *env) return load_service_config(env);
  ServiceConfig c;
  c.journal_dir = "journals";
  return c;
}

inline std::shared_ptr<CompletionBackend> make_backend(const BackendConfig& b) {
  if (b.kind == "http") return std::make_shared<HttpChatBackend>(b.http);
  return mock_backend(b.script);
}

}  // namespace gazeprompt
