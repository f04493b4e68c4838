#pragma once

// HTTP session service.
//
// Control is plain request/response JSON; events flow to clients over a
// persistent chunked NDJSON stream (GET /sessions/{id}/events), one frame per
// line in sequence order. Each session is owned by a SessionActor whose
// worker thread is the only code touching the Session. docs/protocol.md
// describes the frames and endpoints.

#include <sys/socket.h>

#include <atomic>
#include <charconv>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "gazeprompt/config.hpp"
#include "gazeprompt/errors.hpp"
#include "gazeprompt/session.hpp"

namespace gazeprompt {

inline constexpr const char* kVersion = "0.1.0";

/// Frames of one session, indexed by seq - 1, with blocking waits for new ones.
class EventLog {
public:
  void append(std::string frame, bool closing) {
    {
      std::lock_guard lock(mutex_);
      frames_.push_back(std::move(frame));
      closed_ = closed_ || closing;
    }
    cv_.notify_all();
  }

  struct Batch {
    std::vector<std::string> frames;
    std::int64_t next_after = 0;
    bool closed = false;
  };

  /// Frames with seq > after; waits up to `timeout` if there are none yet.
  Batch wait_after(std::int64_t after, std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, timeout, [&] { return static_cast<std::int64_t>(frames_.size()) > after || closed_; });
    Batch b;
    for (auto i = static_cast<std::size_t>(std::max<std::int64_t>(after, 0)); i < frames_.size(); ++i)
      b.frames.push_back(frames_[i]);
    b.next_after = std::max<std::int64_t>(after, static_cast<std::int64_t>(frames_.size()));
    b.closed = closed_;
    return b;
  }

  std::string joined() const {
    std::lock_guard lock(mutex_);
    std::string out;
    for (const auto& f : frames_) {
      out += f;
      out += '\n';
    }
    return out;
  }

  void wake() { cv_.notify_all(); }

private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::vector<std::string> frames_;
  bool closed_ = false;
};

/// Owns one Session and runs every operation on it from a single worker thread.
class SessionActor {
public:
  SessionActor(SessionConfig config, std::shared_ptr<CompletionBackend> backend, const std::filesystem::path& journal)
      : journal_(journal),
        session_(std::move(config), std::move(backend), [this](const SessionEvent& ev) {
          journal_.append(ev);
          log_.append(to_frame(ev).dump(), std::holds_alternative<events::Closed>(ev.body));
        }),
        worker_([this] { run(); }) {}

  SessionActor(const SessionActor&) = delete;
  SessionActor& operator=(const SessionActor&) = delete;

  ~SessionActor() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    cv_.notify_all();
    worker_.join();
  }

  /// Runs `f(session)` on the worker and waits for its result; exceptions propagate.
  template <typename F>
  auto call(F&& f) -> decltype(f(std::declval<Session&>())) {
    using R = decltype(f(std::declval<Session&>()));
    auto task = std::make_shared<std::packaged_task<R()>>([this, fn = std::forward<F>(f)]() mutable { return fn(session_); });
    auto result = task->get_future();
    {
      std::lock_guard lock(mutex_);
      if (stopping_) throw Error("session actor stopped");
      queue_.push_back([task] { (*task)(); });
    }
    cv_.notify_one();
    return result.get();
  }

  EventLog& log() noexcept { return log_; }
  const std::filesystem::path& journal_path() const noexcept { return journal_.path(); }

private:
  void run() {
    for (;;) {
      std::function<void()> job;
      {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
        if (queue_.empty()) return;
        job = std::move(queue_.front());
        queue_.pop_front();
      }
      job();
    }
  }

  EventLog log_;
  JournalWriter journal_;
  Session session_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> queue_;
  bool stopping_ = false;
  std::thread worker_;
};

struct BindAddress {
  std::string host = "127.0.0.1";
  int port = 8765;
};

inline BindAddress parse_bind(const std::string& s) {
  auto colon = s.rfind(':');
  if (colon == std::string::npos || colon == 0) throw InvalidArgument("bind address must be host:port, got '" + s + "'");
  BindAddress b;
  b.host = s.substr(0, colon);
  try {
    std::size_t used = 0;
    b.port = std::stoi(s.substr(colon + 1), &used);
    if (used != s.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw InvalidArgument("bad port in bind address '" + s + "'");
  }
  if (b.port < 0 || b.port > 65535) throw InvalidArgument("port out of range in '" + s + "'");
  return b;
}

class Service {
public:
  explicit Service(ServiceConfig config, std::shared_ptr<CompletionBackend> backend = nullptr)
      : config_(std::move(config)), backend_(backend ? std::move(backend) : make_backend(config_.backend)) {
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    routes();
  }

  ~Service() { stop(); }

  /// Binds the listening socket; port 0 picks a free port. Returns the bound port.
  int bind(const BindAddress& addr) {
    if (addr.port == 0) {
      port_ = server_.bind_to_any_port(addr.host);
      if (port_ < 0) throw IoError("cannot bind " + addr.host + ":0");
    } else {
      if (!server_.bind_to_port(addr.host, addr.port))
        throw IoError("cannot bind " + addr.host + ":" + std::to_string(addr.port));
      port_ = addr.port;
    }
    return port_;
  }

  /// Serves until stop(). Requires bind().
  void run() { server_.listen_after_bind(); }

  void start() {
    thread_ = std::thread([this] { run(); });
    server_.wait_until_ready();
  }

  void stop() {
    stopping_ = true;
    {
      std::shared_lock lock(sessions_mutex_);
      for (auto& [id, actor] : sessions_) actor->log().wake();
    }
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const noexcept { return port_; }
  const ServiceConfig& config() const noexcept { return config_; }
  CompletionBackend& backend() noexcept { return *backend_; }

  /// Builds a session from a create-session request body over the service defaults.
  SessionConfig session_config_from(const json& body) const {
    detail::check_keys(body, "session request",
                       {"session_id", "mode", "snippet_path", "source_code", "language_hint", "geometry", "thresholds",
                        "fixation"});
    SessionConfig c;
    c.session_id = body.value("session_id", std::string());
    if (c.session_id.empty()) c.session_id = "s" + std::to_string(++session_counter_);
    c.mode = parse_prompt_mode(body.value("mode", std::string("realtime")));
    c.language_hint = body.value("language_hint", std::string("java"));
    c.snapshot_period_ms = config_.snapshot_period_ms;
    c.fixation = config_.fixation;
    json geometry = config_.geometry;
    if (body.contains("geometry")) geometry.merge_patch(body["geometry"]);
    c.geometry = geometry.get<EditorGeometry>();
    json thresholds = config_.thresholds;
    if (body.contains("thresholds")) thresholds.merge_patch(body["thresholds"]);
    c.thresholds = thresholds.get<ThresholdConfig>();
    json fixation = config_.fixation;
    if (body.contains("fixation")) fixation.merge_patch(body["fixation"]);
    c.fixation = fixation.get<FixationConfig>();
    if (body.contains("source_code")) {
      c.source_code = expand_tabs(body["source_code"].get<std::string>());
    } else if (body.contains("snippet_path")) {
      std::filesystem::path p = body["snippet_path"].get<std::string>();
      if (p.is_relative()) p = config_.base_dir / p;
      c.source_code = load_snippet(p);
    } else {
      throw InvalidArgument("session request needs snippet_path or source_code");
    }
    return c;
  }

  std::shared_ptr<SessionActor> open_session(const SessionConfig& config) {
    validate_session_config(config);
    std::unique_lock lock(sessions_mutex_);
    if (sessions_.count(config.session_id)) throw SessionError("duplicate_session", "session " + config.session_id + " exists");
    auto actor = std::make_shared<SessionActor>(config, backend_, config_.journal_dir / (config.session_id + ".jsonl"));
    sessions_.emplace(config.session_id, actor);
    return actor;
  }

  std::shared_ptr<SessionActor> find(const std::string& id) const {
    std::shared_lock lock(sessions_mutex_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

private:
  static void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    send_json(res, status, json{{"error", {{"code", code}, {"message", message}}}});
  }

  static int status_for(const std::string& code) {
    if (code == "wrong_phase" || code == "duplicate_session") return 409;
    if (code == "insufficient_data") return 422;
    if (code == "backend_failure") return 502;
    if (code == "unknown_session") return 404;
    return 400;
  }

  /// Wraps a handler with the error mapping shared by every endpoint.
  template <typename F>
  httplib::Server::Handler guarded(F f) {
    return [f = std::move(f)](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const SessionError& e) {
        send_error(res, status_for(e.code()), e.code(), e.what());
      } catch (const json::exception& e) {
        send_error(res, 400, "malformed_frame", e.what());
      } catch (const ParseError& e) {
        send_error(res, 400, "malformed_frame", e.what());
      } catch (const InvalidArgument& e) {
        send_error(res, 400, "invalid_request", e.what());
      } catch (const IoError& e) {
        send_error(res, 400, "unreadable_snippet", e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      }
    };
  }

  std::shared_ptr<SessionActor> require(const httplib::Request& req) const {
    const auto& id = req.path_params.at("id");
    auto actor = find(id);
    if (!actor) throw SessionError("unknown_session", "no session " + id);
    return actor;
  }

  static json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    auto j = json::parse(req.body);
    if (!j.is_object()) throw InvalidArgument("request body must be a JSON object");
    return j;
  }

  static json state_of(const Session& s) {
    return json{{"session_id", s.id()}, {"phase", to_string(s.phase())}, {"last_seq", s.last_seq()}};
  }

  template <typename T>
  static T decode(const json& frame, const char* key, const char* invalid_code = "malformed_frame") {
    try {
      return frame.at(key).get<T>();
    } catch (const json::exception& e) {
      throw SessionError("malformed_frame", e.what());
    } catch (const InvalidArgument& e) {
      throw SessionError(invalid_code, std::string(key) + ": " + e.what());
    }
  }

  /// Executes one client control frame against a session and returns the reply body.
  json dispatch(SessionActor& actor, const json& frame) {
    const auto type = frame.value("type", std::string());
    if (type == "samples") {
      auto samples = decode<std::vector<GazeSample>>(frame, "samples");
      return actor.call([&](Session& s) {
        s.ingest(samples);
        auto out = state_of(s);
        out["accepted"] = samples.size();
        return out;
      });
    }
    if (type == "geometry") {
      json g = actor.call([](Session& s) { return json(s.geometry()); });
      g.merge_patch(decode<json>(frame, "geometry"));
      json patched{{"geometry", g}};
      auto geometry = decode<EditorGeometry>(patched, "geometry", "invalid_geometry");
      return actor.call([&](Session& s) {
        s.update_geometry(geometry);
        return state_of(s);
      });
    }
    if (type == "snapshot") {
      return actor.call([](Session& s) {
        json out = state_of(s);
        try {
          auto u = s.snapshot();
          out["metrics"] = u.metrics;
          out["flags"] = u.flags;
          out["lines"] = u.lines;
        } catch (const InsufficientData& e) {
          throw SessionError("insufficient_data", e.what());
        }
        return out;
      });
    }
    if (type == "trigger") {
      std::optional<PromptMode> mode;
      if (frame.contains("mode") && !frame["mode"].is_null()) mode = parse_prompt_mode(frame["mode"].get<std::string>());
      return actor.call([&](Session& s) {
        auto p = s.trigger_prompt(mode);
        auto out = state_of(s);
        out["prompt"] = p.prompt;
        out["flags"] = p.flags;
        return out;
      });
    }
    if (type == "confirm") {
      return actor.call([](Session& s) {
        auto r = s.confirm_refactor();
        auto out = state_of(s);
        out["response"] = r;
        return out;
      });
    }
    if (type == "close") {
      return actor.call([](Session& s) {
        s.close();
        return state_of(s);
      });
    }
    throw InvalidArgument("unknown frame type '" + type + "'");
  }

  void routes() {
    server_.Get("/health", guarded([](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, json{{"status", "ok"}, {"version", kVersion}, {"protocol_version", kProtocolVersion}});
    }));

    server_.Get("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
      json list = json::array();
      std::shared_lock lock(sessions_mutex_);
      for (const auto& [id, actor] : sessions_) list.push_back(id);
      send_json(res, 200, json{{"sessions", list}});
    }));

    server_.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto config = session_config_from(parse_body(req));
      auto actor = open_session(config);
      send_json(res, 201, actor->call([](Session& s) { return state_of(s); }));
    }));

    auto frame_route = [this](std::string type) {
      return guarded([this, type](const httplib::Request& req, httplib::Response& res) {
        auto actor = require(req);
        auto frame = parse_body(req);
        frame["type"] = type;
        send_json(res, 200, dispatch(*actor, frame));
      });
    };
    server_.Post("/sessions/:id/samples", frame_route("samples"));
    server_.Post("/sessions/:id/geometry", frame_route("geometry"));
    server_.Post("/sessions/:id/trigger", frame_route("trigger"));
    server_.Post("/sessions/:id/confirm", frame_route("confirm"));
    server_.Post("/sessions/:id/close", frame_route("close"));
    server_.Get("/sessions/:id/snapshot", frame_route("snapshot"));

    server_.Post("/sessions/:id/frames", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto actor = require(req);
      send_json(res, 200, dispatch(*actor, parse_body(req)));
    }));

    server_.Get("/sessions/:id/log", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto actor = require(req);
      res.set_content(actor->log().joined(), "application/x-ndjson");
    }));

    server_.Get("/sessions/:id/events", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto actor = require(req);
      std::int64_t after = 0;
      if (req.has_param("after")) {
        const auto v = req.get_param_value("after");
        auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), after);
        if (ec != std::errc() || end != v.data() + v.size() || after < 0)
          throw InvalidArgument("after must be a nonnegative integer");
      }
      auto cursor = std::make_shared<std::int64_t>(after);
      res.set_chunked_content_provider(
          "application/x-ndjson", [this, actor, cursor](std::size_t, httplib::DataSink& sink) {
            if (stopping_) {
              sink.done();
              return true;
            }
            auto batch = actor->log().wait_after(*cursor, std::chrono::milliseconds(200));
            for (const auto& f : batch.frames) {
              const std::string line = f + "\n";
              if (!sink.write(line.data(), line.size())) return false;
            }
            *cursor = batch.next_after;
            if (batch.closed && batch.frames.empty()) sink.done();
            return sink.is_writable();
          });
    }));
  }

  ServiceConfig config_;
  std::shared_ptr<CompletionBackend> backend_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
  std::atomic<bool> stopping_{false};
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<SessionActor>> sessions_;
  mutable std::atomic<int> session_counter_{0};
};

}  // namespace gazeprompt
