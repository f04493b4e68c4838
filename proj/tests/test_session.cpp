#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "gazeprompt/config.hpp"
#include "gazeprompt/session.hpp"
#include "gazeprompt/synth.hpp"
#include "support/fixtures.hpp"

using namespace gazeprompt;

namespace {

SessionConfig base_config(std::string id = "t1") {
  SessionConfig c;
  c.session_id = std::move(id);
  c.source_code = fx::slurp(fx::data_dir() / "messy_snippet.java");
  return c;
}

struct Recorder {
  std::vector<SessionEvent> events;
  Session::EventSink sink() {
    return [this](const SessionEvent& ev) { events.push_back(ev); };
  }
  template <typename T>
  std::vector<const T*> all() const {
    std::vector<const T*> out;
    for (const auto& e : events)
      if (auto* p = std::get_if<T>(&e.body)) out.push_back(p);
    return out;
  }
  std::string last_error() const {
    for (auto it = events.rbegin(); it != events.rend(); ++it)
      if (auto* e = std::get_if<events::Error>(&it->body)) return e->code;
    return {};
  }
};

std::string error_code(const std::function<void()>& op) {
  try {
    op();
  } catch (const SessionError& e) {
    return e.code();
  }
  return "";
}

GazeRecording demo() { return read_recording(fx::data_dir() / "demo_novice.jsonl"); }

void feed(Session& s, const std::vector<GazeSample>& samples, std::size_t batch) {
  for (std::size_t i = 0; i < samples.size(); i += batch) {
    auto n = std::min(batch, samples.size() - i);
    s.ingest(std::span<const GazeSample>(samples.data() + i, n));
  }
}

}  // namespace

TEST_CASE("tabs expand to four-cell stops") {
  CHECK(expand_tabs("\tx") == "    x");
  CHECK(expand_tabs("ab\tc") == "ab  c");
  CHECK(expand_tabs("abcd\te") == "abcd    e");
  CHECK(expand_tabs("a\n\tb") == "a\n    b");
  CHECK(expand_tabs("no tabs") == "no tabs");
}

TEST_CASE("bad session configs are rejected") {
  auto c = base_config();
  c.geometry.line_height_px = 0;
  CHECK_THROWS_AS(Session(c, mock_backend(), nullptr), InvalidArgument);
  c = base_config("");
  CHECK_THROWS_AS(Session(c, mock_backend(), nullptr), InvalidArgument);
  c = base_config();
  c.source_code.clear();
  CHECK_THROWS_AS(Session(c, mock_backend(), nullptr), InvalidArgument);
  c = base_config();
  c.mode = PromptMode::fallback;
  CHECK_THROWS_AS(Session(c, mock_backend(), nullptr), InvalidArgument);
  CHECK_THROWS_AS(load_snippet(fx::data_dir() / "no_such_file.java"), IoError);
}

TEST_CASE("allowed transitions") {
  const Phase all[] = {Phase::reading, Phase::prompt_ready, Phase::refactoring, Phase::refactored, Phase::closed};
  int allowed = 0;
  for (auto a : all)
    for (auto b : all) allowed += transition_allowed(a, b);
  CHECK(allowed == 8);
  CHECK(transition_allowed(Phase::refactoring, Phase::prompt_ready));
  CHECK(!transition_allowed(Phase::refactored, Phase::reading));
  CHECK(!transition_allowed(Phase::closed, Phase::closed));
}

TEST_CASE("random operation sequences follow the phase model") {
  const auto samples = demo().samples;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(seed);
    Recorder rec;
    auto backend = mock_backend();
    Session s(base_config("p" + std::to_string(seed)), backend, rec.sink());

    // reference model
    std::string phase = "reading";
    std::size_t fed = 0;
    int valid_fed = 0;

    for (int step = 0; step < 25; ++step) {
      const int op = static_cast<int>(rng() % 6);
      const std::string before = phase;
      std::string code;
      if (op == 0) {
        const std::size_t n = std::min<std::size_t>(1 + rng() % 40, samples.size() - fed);
        code = error_code([&] { s.ingest(std::span<const GazeSample>(samples.data() + fed, n)); });
        if (phase == "reading") {
          REQUIRE(code.empty());
          for (std::size_t i = fed; i < fed + n; ++i) valid_fed += samples[i].gaze_valid();
          fed += n;
        } else {
          CHECK(code == "wrong_phase");
        }
      } else if (op == 1) {
        code = error_code([&] { s.trigger_prompt(); });
        if (phase == "reading" && valid_fed >= 2) {
          CHECK(code.empty());
          phase = "prompt_ready";
        } else {
          CHECK(code == (phase == "reading" ? "insufficient_data" : "wrong_phase"));
        }
      } else if (op == 2) {
        const bool down = rng() % 4 == 0;
        backend->set_failure(down ? MockBackend::Failure::unavailable : MockBackend::Failure::none);
        code = error_code([&] { s.confirm_refactor(); });
        if (phase == "prompt_ready") {
          CHECK(code == (down ? "backend_failure" : ""));
          if (!down) phase = "refactored";
        } else {
          CHECK(code == "wrong_phase");
        }
      } else if (op == 3) {
        if (rng() % 3) continue;  // keep closes rare
        code = error_code([&] { s.close(); });
        CHECK(code == (phase == "closed" ? "wrong_phase" : ""));
        phase = "closed";
      } else if (op == 4) {
        auto g = s.geometry();
        g.first_visible_line = 1 + static_cast<int>(rng() % 30);
        code = error_code([&] { s.update_geometry(g); });
        CHECK(code == (phase == "closed" ? "wrong_phase" : ""));
      } else {
        try {
          (void)s.snapshot();
          CHECK(valid_fed >= 2);
        } catch (const InsufficientData&) {
          CHECK(valid_fed < 2);
        }
      }
      INFO("seed " << seed << " step " << step << " op " << op << " from " << before);
      CHECK(std::string(to_string(s.phase())) == phase);
    }

    // event stream invariants
    for (std::size_t i = 0; i < rec.events.size(); ++i) {
      CHECK(rec.events[i].seq == static_cast<std::int64_t>(i + 1));
      CHECK(rec.events[i].session_id == s.id());
      if (i > 0) {
        auto from = rec.events[i - 1].phase, to = rec.events[i].phase;
        if (from != to) CHECK(transition_allowed(from, to));
        // after close only errors follow
        if (rec.events[i - 1].phase == Phase::closed) {
          CHECK(std::holds_alternative<events::Error>(rec.events[i].body));
          CHECK(rec.events[i].phase == Phase::closed);
        }
      }
    }
  }
}

TEST_CASE("a rejected batch leaves the session untouched") {
  Recorder rec;
  Session s(base_config(), mock_backend(), rec.sink());
  auto d = fx::dwell(0, 10, 400, 400);
  s.ingest(d);
  const auto seq = s.last_seq();

  std::vector<GazeSample> back{fx::sample(200000, .2, .2), fx::sample(100000, .2, .2)};
  CHECK(error_code([&] { s.ingest(back); }) == "nonmonotonic_timestamp");
  CHECK(s.recording().samples.size() == 10);

  std::vector<GazeSample> before_last{fx::sample(d.back().timestamp_us - 1, .2, .2)};
  CHECK(error_code([&] { s.ingest(before_last); }) == "nonmonotonic_timestamp");

  auto broken = fx::sample(400000, .2, .2, std::nullopt);  // valid eye without pupil
  std::vector<GazeSample> bad{fx::sample(300000, .2, .2), broken};
  CHECK(error_code([&] { s.ingest(bad); }) == "invalid_sample");
  CHECK(s.recording().samples.size() == 10);
  CHECK(rec.last_error() == "invalid_sample");
  CHECK(s.last_seq() == seq + 3);  // one error event per rejection
  CHECK(s.phase() == Phase::reading);

  // equal timestamps are tolerated
  std::vector<GazeSample> same{fx::sample(d.back().timestamp_us, .2, .2)};
  CHECK_NOTHROW(s.ingest(same));
}

TEST_CASE("any batching of the demo gives the same metrics and prompt") {
  const auto r = demo();
  const auto offline = analyze(r);
  const auto want = prompt_for_session(offline.metrics, ThresholdConfig{}, PromptMode::realtime);

  std::mt19937_64 rng(5);
  std::vector<std::size_t> sizes{1, 2, 7, 60, 333, r.samples.size()};
  for (int i = 0; i < 4; ++i) sizes.push_back(1 + rng() % 200);
  for (auto batch : sizes) {
    Session s(base_config(), mock_backend(), nullptr);
    feed(s, r.samples, batch);
    INFO("batch " << batch);
    REQUIRE(s.snapshot().metrics == offline.metrics);
    CHECK(s.snapshot().lines == line_summaries(offline.fixations, s.geometry()));
    auto p = s.trigger_prompt();
    CHECK(p.prompt.text == want.prompt.text);
    CHECK(p.flags == want.flags);
  }
}

TEST_CASE("metrics updates follow the snapshot period in stream time") {
  const auto r = demo();
  Recorder rec;
  Session s(base_config(), mock_backend(), rec.sink());
  feed(s, r.samples, 6);
  auto updates = rec.all<events::MetricsUpdate>();
  // 30 s at one update per 500 ms of stream time
  CHECK(updates.size() >= 55);
  CHECK(updates.size() <= 61);
  CHECK(updates.back()->metrics.n_fixations <= s.snapshot().metrics.n_fixations);
}

TEST_CASE("trigger without data is refused and the session keeps reading") {
  Recorder rec;
  Session s(base_config(), mock_backend(), rec.sink());
  CHECK(error_code([&] { s.trigger_prompt(); }) == "insufficient_data");
  std::vector<GazeSample> one{fx::sample(0, .5, .5)};
  s.ingest(one);
  CHECK(error_code([&] { s.trigger_prompt(); }) == "insufficient_data");
  CHECK(s.phase() == Phase::reading);
  std::vector<GazeSample> two{fx::sample(16667, .5, .5)};
  s.ingest(two);
  auto p = s.trigger_prompt();
  CHECK(p.flags == TriggerFlags{false, false, true, false});  // a still gaze has 0 px saccades
  CHECK(p.prompt.text == synthesize_prompt(p.flags, PromptMode::realtime).text);
  CHECK(s.phase() == Phase::prompt_ready);
  CHECK(!rec.all<events::TriggerPrompt>().empty());
}

TEST_CASE("preset sessions and overrides") {
  const auto preset = fx::slurp(fx::golden_dir() / "preset_prompt.txt");
  auto c = base_config();
  c.mode = PromptMode::preset;
  Session s(c, mock_backend(), nullptr);
  s.ingest(fx::dwell(0, 30, 300, 300));
  auto p = s.trigger_prompt();
  CHECK(p.prompt.text == preset);
  CHECK(p.prompt.mode == PromptMode::preset);

  Session o(base_config(), mock_backend(), nullptr);
  o.ingest(fx::dwell(0, 30, 300, 300));
  CHECK(error_code([&] { o.trigger_prompt(PromptMode::fallback); }) == "invalid_request");
  CHECK(o.trigger_prompt(PromptMode::preset).prompt.text == preset);
}

TEST_CASE("confirm sends the previewed prompt and code") {
  const auto r = demo();
  const auto snippet = fx::slurp(fx::data_dir() / "messy_snippet.java");

  SECTION("echo backend") {
    auto backend = mock_backend();
    Recorder rec;
    Session s(base_config(), backend, rec.sink());
    feed(s, r.samples, 100);
    auto p = s.trigger_prompt();
    auto resp = s.confirm_refactor();
    CHECK(resp.refactored_code == snippet);
    CHECK(resp.request_id == "t1-r1");
    CHECK(s.phase() == Phase::refactored);
    REQUIRE(backend->captured().size() == 1);
    CHECK(backend->captured()[0] == build_user_message({p.prompt, snippet, "java", ""}));
    REQUIRE(rec.all<events::RefactorStarted>().size() == 1);
    REQUIRE(rec.all<events::RefactorResult>().size() == 1);
    CHECK(rec.all<events::RefactorResult>()[0]->response.refactored_code == snippet);
  }

  SECTION("scripted backend picks the fixture for the demo's flags") {
    auto script = load_service_config(fx::data_dir() / "service_config.json").backend.script;
    Session s(base_config(), mock_backend(script), nullptr);
    feed(s, r.samples, 100);
    auto p = s.trigger_prompt();
    REQUIRE(p.flags == TriggerFlags{true, true, true, true});
    CHECK(s.confirm_refactor().refactored_code == fx::slurp(fx::data_dir() / "fixtures" / "full_refactor.java"));
  }

  SECTION("backend down returns to prompt_ready and a retry works") {
    auto backend = mock_backend();
    Recorder rec;
    Session s(base_config(), backend, rec.sink());
    feed(s, r.samples, 100);
    s.trigger_prompt();
    backend->set_failure(MockBackend::Failure::unavailable);
    CHECK(error_code([&] { s.confirm_refactor(); }) == "backend_failure");
    CHECK(s.phase() == Phase::prompt_ready);
    CHECK(rec.last_error() == "backend_failure");
    backend->set_failure(MockBackend::Failure::none);
    CHECK(s.confirm_refactor().request_id == "t1-r2");
    CHECK(s.phase() == Phase::refactored);
    CHECK(error_code([&] { s.confirm_refactor(); }) == "wrong_phase");
  }
}

TEST_CASE("geometry updates re-map lines but cannot resize the screen") {
  Session s(base_config(), mock_backend(), nullptr);
  s.ingest(fx::dwell(0, 30, 145, 96));  // line 3
  REQUIRE(s.snapshot().lines.size() == 1);
  CHECK(s.snapshot().lines[0].line == 3);
  auto g = s.geometry();
  g.first_visible_line = 41;
  s.update_geometry(g);
  CHECK(s.snapshot().lines[0].line == 43);
  g.screen_width_px = 1280;
  CHECK(error_code([&] { s.update_geometry(g); }) == "invalid_geometry");
  g = s.geometry();
  g.char_width_px = -1;
  CHECK(error_code([&] { s.update_geometry(g); }) == "invalid_geometry");
}

TEST_CASE("frames round-trip") {
  const auto r = demo();
  Recorder rec;
  auto backend = mock_backend();
  Session s(base_config(), backend, rec.sink());
  feed(s, r.samples, 250);
  auto g = s.geometry();
  g.first_visible_line = 3;
  s.update_geometry(g);
  error_code([&] { s.ingest(std::vector<GazeSample>{fx::sample(0, .1, .1)}); });
  s.trigger_prompt();
  s.confirm_refactor();
  s.close();
  for (const auto& ev : rec.events) {
    auto frame = to_frame(ev);
    CHECK(frame["protocol_version"] == kProtocolVersion);
    auto back = from_frame(json::parse(frame.dump()));
    CHECK(to_frame(back) == frame);
  }
  CHECK_THROWS_AS(from_frame(json{{"protocol_version", 99}}), InvalidArgument);
  CHECK_THROWS_AS(from_frame(json{{"protocol_version", 1}, {"session_id", "x"}, {"seq", 1}, {"phase", "reading"},
                                  {"type", "mystery"}}),
                  InvalidArgument);
}

TEST_CASE("journal replay reproduces the prompt bytes and final metrics") {
  fx::TempDir dir;
  const auto r = demo();
  for (auto mode : {PromptMode::realtime, PromptMode::preset}) {
    const auto path = dir / ("s-" + std::string(to_string(mode)) + ".jsonl");
    std::string live_prompt;
    GazeMetrics live_metrics;
    {
      JournalWriter journal(path);
      auto c = base_config("journal-" + std::string(to_string(mode)));
      c.mode = mode;
      Session s(c, mock_backend(), [&](const SessionEvent& ev) { journal.append(ev); });
      feed(s, r.samples, 37);
      error_code([&] { s.ingest(std::vector<GazeSample>{fx::sample(0, .1, .1)}); });  // rejected, journaled
      auto g = s.geometry();
      g.first_visible_line = 12;
      s.update_geometry(g);
      live_metrics = s.snapshot().metrics;
      live_prompt = s.trigger_prompt().prompt.text;
      s.confirm_refactor();
      s.close();
    }
    auto events = read_journal(path);
    REQUIRE(!events.empty());
    auto replay = replay_journal(events);
    REQUIRE(replay.logged_preview);
    REQUIRE(replay.replayed_preview);
    CHECK(replay.logged_preview->prompt.text == live_prompt);
    CHECK(replay.replayed_preview->prompt.text == live_prompt);
    CHECK(replay.replayed_preview->flags == replay.logged_preview->flags);
    REQUIRE(replay.final_update);
    CHECK(replay.final_update->metrics == live_metrics);
    CHECK(replay.recording.samples == r.samples);
    CHECK(replay.config.geometry.first_visible_line == 1);  // the opening config, before the scroll
  }
}

TEST_CASE("malformed journals report the line") {
  std::istringstream bad("{\"protocol_version\":1}\nnot json\n");
  try {
    read_journal(bad);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
  }
  std::istringstream empty("");
  CHECK_THROWS_AS(replay_journal(read_journal(empty)), InvalidArgument);
}
