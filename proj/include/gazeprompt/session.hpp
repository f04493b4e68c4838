#pragma once

// A live gaze session: ingestion, incremental metrics, the human-triggered
// prompt and the refactoring round trip. Every state change is published as a
// SessionEvent; the JSONL journal of those events is enough to replay the
// session to the same prompt bytes.
//
// Session is not thread-safe. The service gives each session one consumer.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "gazeprompt/codemap.hpp"
#include "gazeprompt/errors.hpp"
#include "gazeprompt/fixation.hpp"
#include "gazeprompt/gaze_io.hpp"
#include "gazeprompt/json_codec.hpp"
#include "gazeprompt/llm_client.hpp"
#include "gazeprompt/metrics.hpp"
#include "gazeprompt/prompt.hpp"

namespace gazeprompt {

inline constexpr int kProtocolVersion = 1;

enum class Phase { reading, prompt_ready, refactoring, refactored, closed };

inline std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::reading: return "reading";
    case Phase::prompt_ready: return "prompt_ready";
    case Phase::refactoring: return "refactoring";
    case Phase::refactored: return "refactored";
    case Phase::closed: return "closed";
  }
  return "closed";
}

inline Phase parse_phase(std::string_view s) {
  for (auto p : {Phase::reading, Phase::prompt_ready, Phase::refactoring, Phase::refactored, Phase::closed})
    if (to_string(p) == s) return p;
  throw InvalidArgument("unknown phase '" + std::string(s) + "'");
}

/// Permitted phase transitions. refactoring -> prompt_ready is the backend-failure path.
inline bool transition_allowed(Phase from, Phase to) {
  if (from == Phase::closed) return false;
  if (to == Phase::closed) return true;
  switch (from) {
    case Phase::reading: return to == Phase::prompt_ready;
    case Phase::prompt_ready: return to == Phase::refactoring;
    case Phase::refactoring: return to == Phase::refactored || to == Phase::prompt_ready;
    default: return false;
  }
}

/// Expands tabs to 4-cell tab stops so columns count character cells.
inline std::string expand_tabs(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  int col = 0;
  for (char c : text) {
    if (c == '\t') {
      const int n = 4 - col % 4;
      out.append(static_cast<std::size_t>(n), ' ');
      col += n;
    } else {
      out += c;
      col = c == '\n' ? 0 : col + 1;
    }
  }
  return out;
}

inline std::string load_snippet(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("unreadable snippet " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return expand_tabs(ss.str());
}

struct SessionConfig {
  std::string session_id;
  PromptMode mode = PromptMode::realtime;
  EditorGeometry geometry;
  std::string source_code;
  std::string language_hint = "java";
  ThresholdConfig thresholds;
  FixationConfig fixation;
  double snapshot_period_ms = 500.0;

  friend bool operator==(const SessionConfig&, const SessionConfig&) = default;
};

inline void to_json(json& j, const SessionConfig& c) {
  j = json{{"session_id", c.session_id},
           {"mode", to_string(c.mode)},
           {"geometry", c.geometry},
           {"source_code", c.source_code},
           {"language_hint", c.language_hint},
           {"thresholds", c.thresholds},
           {"fixation", c.fixation},
           {"snapshot_period_ms", c.snapshot_period_ms}};
}

inline void from_json(const json& j, SessionConfig& c) {
  c.session_id = detail::required<std::string>(j, "session_id");
  c.mode = parse_prompt_mode(detail::required<std::string>(j, "mode"));
  c.geometry = j.at("geometry").get<EditorGeometry>();
  c.source_code = detail::required<std::string>(j, "source_code");
  c.language_hint = detail::required<std::string>(j, "language_hint");
  c.thresholds = j.at("thresholds").get<ThresholdConfig>();
  c.fixation = j.at("fixation").get<FixationConfig>();
  c.snapshot_period_ms = detail::required<double>(j, "snapshot_period_ms");
}

inline void validate_session_config(const SessionConfig& c) {
  if (c.session_id.empty()) throw InvalidArgument("session_id must not be empty");
  if (c.mode == PromptMode::fallback) throw InvalidArgument("session mode must be realtime or preset");
  validate_geometry(c.geometry);
  validate_thresholds(c.thresholds);
  validate_fixation_config(c.fixation);
  if (c.source_code.empty()) throw InvalidArgument("source_code must not be empty");
  if (!(c.snapshot_period_ms > 0.0)) throw InvalidArgument("snapshot_period_ms must be positive");
}

// --- events --------------------------------------------------------------

namespace events {

struct SessionOpened {
  SessionConfig config;
};
struct SampleBatch {
  std::vector<GazeSample> samples;
};
struct MetricsUpdate {
  GazeMetrics metrics;
  TriggerFlags flags;
  std::vector<LineGazeSummary> lines;
};
struct GeometryUpdate {
  EditorGeometry geometry;
};
struct TriggerPrompt {
  std::optional<PromptMode> mode_override;
};
struct PromptPreview {
  PromptText prompt;
  TriggerFlags flags;
};
struct RefactorStarted {
  std::string request_id;
};
struct RefactorResult {
  RefactorResponse response;
};
struct Error {
  std::string code;
  std::string message;
};
struct Closed {};

}  // namespace events

using EventBody = std::variant<events::SessionOpened, events::SampleBatch, events::MetricsUpdate,
                               events::GeometryUpdate, events::TriggerPrompt, events::PromptPreview,
                               events::RefactorStarted, events::RefactorResult, events::Error, events::Closed>;

struct SessionEvent {
  std::string session_id;
  std::int64_t seq = 0;
  Phase phase = Phase::reading;  // phase after the event
  EventBody body;
};

inline std::string_view event_type(const EventBody& body) {
  return std::visit(
      [](const auto& e) -> std::string_view {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, events::SessionOpened>) return "session_opened";
        else if constexpr (std::is_same_v<T, events::SampleBatch>) return "sample_batch";
        else if constexpr (std::is_same_v<T, events::MetricsUpdate>) return "metrics_update";
        else if constexpr (std::is_same_v<T, events::GeometryUpdate>) return "geometry_update";
        else if constexpr (std::is_same_v<T, events::TriggerPrompt>) return "trigger_prompt";
        else if constexpr (std::is_same_v<T, events::PromptPreview>) return "prompt_preview";
        else if constexpr (std::is_same_v<T, events::RefactorStarted>) return "refactor_started";
        else if constexpr (std::is_same_v<T, events::RefactorResult>) return "refactor_result";
        else if constexpr (std::is_same_v<T, events::Error>) return "error";
        else return "closed";
      },
      body);
}

/// Wire frame / journal line for an event.
inline json to_frame(const SessionEvent& ev) {
  json j{{"protocol_version", kProtocolVersion},
         {"session_id", ev.session_id},
         {"seq", ev.seq},
         {"type", event_type(ev.body)},
         {"phase", to_string(ev.phase)}};
  std::visit(
      [&j](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, events::SessionOpened>) {
          j["config"] = e.config;
        } else if constexpr (std::is_same_v<T, events::SampleBatch>) {
          j["samples"] = e.samples;
        } else if constexpr (std::is_same_v<T, events::MetricsUpdate>) {
          j["metrics"] = e.metrics;
          j["flags"] = e.flags;
          j["lines"] = e.lines;
        } else if constexpr (std::is_same_v<T, events::GeometryUpdate>) {
          j["geometry"] = e.geometry;
        } else if constexpr (std::is_same_v<T, events::TriggerPrompt>) {
          j["mode_override"] = e.mode_override ? json(to_string(*e.mode_override)) : json(nullptr);
        } else if constexpr (std::is_same_v<T, events::PromptPreview>) {
          j["prompt"] = e.prompt;
          j["flags"] = e.flags;
        } else if constexpr (std::is_same_v<T, events::RefactorStarted>) {
          j["request_id"] = e.request_id;
        } else if constexpr (std::is_same_v<T, events::RefactorResult>) {
          j["response"] = e.response;
        } else if constexpr (std::is_same_v<T, events::Error>) {
          j["code"] = e.code;
          j["message"] = e.message;
        }
      },
      ev.body);
  return j;
}

inline SessionEvent from_frame(const json& j) {
  SessionEvent ev;
  try {
    if (j.value("protocol_version", 0) != kProtocolVersion) throw InvalidArgument("unsupported protocol_version");
    ev.session_id = detail::required<std::string>(j, "session_id");
    ev.seq = detail::required<std::int64_t>(j, "seq");
    ev.phase = parse_phase(detail::required<std::string>(j, "phase"));
    const auto type = detail::required<std::string>(j, "type");
    if (type == "session_opened") {
      ev.body = events::SessionOpened{j.at("config").get<SessionConfig>()};
    } else if (type == "sample_batch") {
      ev.body = events::SampleBatch{j.at("samples").get<std::vector<GazeSample>>()};
    } else if (type == "metrics_update") {
      events::MetricsUpdate m{j.at("metrics").get<GazeMetrics>(), j.at("flags").get<TriggerFlags>(), {}};
      for (const auto& l : j.at("lines"))
        m.lines.push_back({l.at("line").get<int>(), l.at("fixation_count").get<int>(),
                           l.at("total_fixation_ms").get<double>()});
      ev.body = std::move(m);
    } else if (type == "geometry_update") {
      ev.body = events::GeometryUpdate{j.at("geometry").get<EditorGeometry>()};
    } else if (type == "trigger_prompt") {
      events::TriggerPrompt t;
      if (j.contains("mode_override") && !j["mode_override"].is_null())
        t.mode_override = parse_prompt_mode(j["mode_override"].get<std::string>());
      ev.body = t;
    } else if (type == "prompt_preview") {
      ev.body = events::PromptPreview{j.at("prompt").get<PromptText>(), j.at("flags").get<TriggerFlags>()};
    } else if (type == "refactor_started") {
      ev.body = events::RefactorStarted{detail::required<std::string>(j, "request_id")};
    } else if (type == "refactor_result") {
      ev.body = events::RefactorResult{j.at("response").get<RefactorResponse>()};
    } else if (type == "error") {
      ev.body = events::Error{detail::required<std::string>(j, "code"), detail::required<std::string>(j, "message")};
    } else if (type == "closed") {
      ev.body = events::Closed{};
    } else {
      throw InvalidArgument("unknown event type '" + type + "'");
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed frame: ") + e.what());
  }
  return ev;
}

// --- session -------------------------------------------------------------

/// Error raised by a session operation. The same code/message pair is
/// published as an Error event before the exception propagates.
class SessionError : public Error {
public:
  SessionError(std::string code, const std::string& message) : Error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

class Session {
public:
  using EventSink = std::function<void(const SessionEvent&)>;

  Session(SessionConfig config, std::shared_ptr<CompletionBackend> backend, EventSink sink)
      : config_(std::move(config)),
        backend_(std::move(backend)),
        sink_(std::move(sink)),
        analyzer_(config_.fixation, config_.geometry.screen_width_px, config_.geometry.screen_height_px) {
    validate_session_config(config_);
    recording_.session_id = config_.session_id;
    recording_.screen_width_px = config_.geometry.screen_width_px;
    recording_.screen_height_px = config_.geometry.screen_height_px;
    publish(events::SessionOpened{config_});
  }

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const noexcept { return config_.session_id; }
  const SessionConfig& config() const noexcept { return config_; }
  Phase phase() const noexcept { return phase_; }
  const GazeRecording& recording() const noexcept { return recording_; }
  const EditorGeometry& geometry() const noexcept { return config_.geometry; }
  const std::optional<events::MetricsUpdate>& latest_update() const noexcept { return latest_update_; }
  const std::optional<events::PromptPreview>& preview() const noexcept { return preview_; }
  std::int64_t last_seq() const noexcept { return seq_; }

  /// Metrics and flags over every sample received so far.
  events::MetricsUpdate snapshot() const {
    events::MetricsUpdate u;
    u.metrics = analyzer_.snapshot();
    u.flags = evaluate_thresholds(u.metrics, config_.thresholds);
    const auto fixations = analyzer_.fixations();
    u.lines = line_summaries(fixations, config_.geometry);
    return u;
  }

  /// Appends a batch of samples. The whole batch is rejected if any sample is
  /// invalid or goes back in time.
  void ingest(std::span<const GazeSample> batch) {
    require_phase(Phase::reading, "ingest");
    std::optional<std::int64_t> last;
    if (!recording_.samples.empty()) last = recording_.samples.back().timestamp_us;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      try {
        validate_sample(batch[i]);
      } catch (const InvalidArgument& e) {
        fail("invalid_sample", "sample " + std::to_string(i) + ": " + e.what());
      }
      if (last && batch[i].timestamp_us < *last)
        fail("nonmonotonic_timestamp", "sample " + std::to_string(i) + " at " + std::to_string(batch[i].timestamp_us) +
                                           " us precedes " + std::to_string(*last) + " us");
      last = batch[i].timestamp_us;
    }
    if (batch.empty()) return;
    for (const auto& s : batch) {
      recording_.samples.push_back(s);
      analyzer_.push(s);
    }
    publish(events::SampleBatch{std::vector<GazeSample>(batch.begin(), batch.end())});

    const auto now = recording_.samples.back().timestamp_us;
    const auto period_us = static_cast<std::int64_t>(config_.snapshot_period_ms * 1000.0);
    if (!last_update_us_ || now - *last_update_us_ >= period_us) {
      try {
        emit_update(snapshot());
        last_update_us_ = now;
      } catch (const InsufficientData&) {
      }
    }
  }

  /// Scroll or move the editor viewport. Screen dimensions are fixed per session.
  void update_geometry(const EditorGeometry& g) {
    if (phase_ == Phase::closed) fail("wrong_phase", "geometry update on a closed session");
    try {
      validate_geometry(g);
    } catch (const InvalidArgument& e) {
      fail("invalid_geometry", e.what());
    }
    if (g.screen_width_px != config_.geometry.screen_width_px || g.screen_height_px != config_.geometry.screen_height_px)
      fail("invalid_geometry", "screen dimensions cannot change during a session");
    config_.geometry = g;
    publish(events::GeometryUpdate{g});
  }

  /// The human trigger: evaluates the full prefix and previews the prompt.
  events::PromptPreview trigger_prompt(std::optional<PromptMode> mode_override = std::nullopt) {
    require_phase(Phase::reading, "trigger");
    if (mode_override == PromptMode::fallback) fail("invalid_request", "mode override must be realtime or preset");
    publish(events::TriggerPrompt{mode_override});
    events::MetricsUpdate update;
    try {
      update = snapshot();
    } catch (const InsufficientData& e) {
      fail("insufficient_data", e.what());
    }
    emit_update(update);
    auto [flags, prompt] = prompt_for_session(update.metrics, config_.thresholds, mode_override.value_or(config_.mode));
    events::PromptPreview p{std::move(prompt), flags};
    preview_ = p;
    move_to(Phase::prompt_ready);
    publish(p);
    return p;
  }

  /// Sends the previewed prompt and the code to the backend.
  RefactorResponse confirm_refactor() {
    require_phase(Phase::prompt_ready, "confirm");
    RefactorRequest request{preview_->prompt, config_.source_code, config_.language_hint,
                            config_.session_id + "-r" + std::to_string(++request_counter_)};
    move_to(Phase::refactoring);
    publish(events::RefactorStarted{request.request_id});
    RefactorResponse response;
    try {
      response = refactor(request, *backend_);
    } catch (const Error& e) {
      move_to(Phase::prompt_ready);
      fail("backend_failure", e.what());
    }
    move_to(Phase::refactored);
    publish(events::RefactorResult{response});
    return response;
  }

  void close() {
    if (phase_ == Phase::closed) fail("wrong_phase", "session already closed");
    move_to(Phase::closed);
    publish(events::Closed{});
  }

private:
  void publish(EventBody body) {
    SessionEvent ev{config_.session_id, ++seq_, phase_, std::move(body)};
    if (sink_) sink_(ev);
  }

  [[noreturn]] void fail(const std::string& code, const std::string& message) {
    publish(events::Error{code, message});
    throw SessionError(code, message);
  }

  void require_phase(Phase expected, std::string_view op) {
    if (phase_ != expected)
      fail("wrong_phase", std::string(op) + " requires phase " + std::string(to_string(expected)) + ", session is " +
                              std::string(to_string(phase_)));
  }

  void move_to(Phase next) {
    if (!transition_allowed(phase_, next))
      throw PhaseError("illegal transition " + std::string(to_string(phase_)) + " -> " + std::string(to_string(next)));
    phase_ = next;
  }

  void emit_update(const events::MetricsUpdate& u) {
    latest_update_ = u;
    publish(u);
  }

  SessionConfig config_;
  std::shared_ptr<CompletionBackend> backend_;
  EventSink sink_;
  StreamingAnalyzer analyzer_;
  GazeRecording recording_;
  Phase phase_ = Phase::reading;
  std::int64_t seq_ = 0;
  std::optional<std::int64_t> last_update_us_;
  std::optional<events::MetricsUpdate> latest_update_;
  std::optional<events::PromptPreview> preview_;
  int request_counter_ = 0;
};

// --- journal -------------------------------------------------------------

/// Append-only JSONL journal, one frame per line, flushed per event.
class JournalWriter {
public:
  explicit JournalWriter(const std::filesystem::path& path) : path_(path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot create journal " + path.string());
  }

  void append(const SessionEvent& ev) {
    out_ << to_frame(ev).dump() << '\n';
    out_.flush();
    if (!out_) throw IoError("journal write failed for " + path_.string());
  }

  const std::filesystem::path& path() const noexcept { return path_; }

private:
  std::filesystem::path path_;
  std::ofstream out_;
};

inline std::vector<SessionEvent> read_journal(std::istream& in) {
  std::vector<SessionEvent> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(from_frame(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw ParseError(n, std::string("malformed journal line: ") + e.what());
    } catch (const InvalidArgument& e) {
      throw ParseError(n, e.what());
    }
  }
  return out;
}

inline std::vector<SessionEvent> read_journal(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open journal " + path.string());
  return read_journal(in);
}

struct JournalReplay {
  SessionConfig config;
  GazeRecording recording;
  std::optional<events::MetricsUpdate> final_update;        // snapshot after the last logged input
  std::optional<events::PromptPreview> logged_preview;
  std::optional<events::PromptPreview> replayed_preview;
  std::vector<SessionEvent> replayed_events;
};

/// Re-executes the inputs recorded in a journal (samples, geometry updates,
/// triggers) against a fresh session. Outputs in the journal are not fed back;
/// they are returned for comparison. Refactor requests are not re-sent.
inline JournalReplay replay_journal(const std::vector<SessionEvent>& journal) {
  if (journal.empty()) throw InvalidArgument("empty journal");
  const auto* opened = std::get_if<events::SessionOpened>(&journal.front().body);
  if (!opened) throw InvalidArgument("journal must start with session_opened");
  JournalReplay out;
  out.config = opened->config;
  Session session(out.config, mock_backend(), [&out](const SessionEvent& ev) { out.replayed_events.push_back(ev); });
  for (std::size_t i = 1; i < journal.size(); ++i) {
    const auto& body = journal[i].body;
    try {
      if (const auto* b = std::get_if<events::SampleBatch>(&body)) {
        session.ingest(b->samples);
      } else if (const auto* g = std::get_if<events::GeometryUpdate>(&body)) {
        session.update_geometry(g->geometry);
      } else if (const auto* t = std::get_if<events::TriggerPrompt>(&body)) {
        out.replayed_preview = session.trigger_prompt(t->mode_override);
      } else if (const auto* p = std::get_if<events::PromptPreview>(&body)) {
        out.logged_preview = *p;
      }
    } catch (const SessionError&) {
      // the journal records the same failure; keep going
    }
  }
  out.recording = session.recording();
  try {
    out.final_update = session.snapshot();
  } catch (const InsufficientData&) {
  }
  return out;
}

}  // namespace gazeprompt
