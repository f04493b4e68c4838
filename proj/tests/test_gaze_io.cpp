#include <catch_amalgamated.hpp>

#include <chrono>
#include <sstream>

#include "gazeprompt/gaze_io.hpp"
#include "gazeprompt/synth.hpp"
#include "support/fixtures.hpp"

using namespace gazeprompt;

namespace {

GazeRecording roundtrip(const GazeRecording& r, RecordingFormat f) {
  std::stringstream ss;
  write_recording(r, ss, f);
  return read_recording(ss, f);
}

bool same(const GazeRecording& a, const GazeRecording& b) {
  return a.session_id == b.session_id && a.screen_width_px == b.screen_width_px &&
         a.screen_height_px == b.screen_height_px && a.sample_rate_hz == b.sample_rate_hz && a.samples == b.samples;
}

std::size_t error_line(const std::string& text, RecordingFormat f) {
  std::istringstream in(text);
  try {
    read_recording(in, f);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

const char* kHeader =
    R"({"format":"gaze-recording","version":1,"session_id":"t","screen_width_px":1920,"screen_height_px":1080,"sample_rate_hz":60})";

}  // namespace

TEST_CASE("header-only jsonl reads as an empty recording") {
  std::istringstream in(std::string(kHeader) + "\n");
  auto r = read_recording(in, RecordingFormat::jsonl);
  CHECK(r.samples.empty());
  CHECK(r.session_id == "t");
  CHECK(r.screen_width_px == 1920);
}

TEST_CASE("three jsonl samples keep their order") {
  std::string text = std::string(kHeader) + "\n";
  for (int ts : {0, 16667, 33333})
    text += R"({"timestamp_us":)" + std::to_string(ts) +
            R"(,"gaze_x":0.5,"gaze_y":0.5,"pupil_left_mm":3.1,"pupil_right_mm":null,"valid_left":true,"valid_right":false})" +
            "\n";
  std::istringstream in(text);
  auto r = read_recording(in, RecordingFormat::jsonl);
  REQUIRE(r.samples.size() == 3);
  CHECK(r.samples[0].timestamp_us == 0);
  CHECK(r.samples[1].timestamp_us == 16667);
  CHECK(r.samples[2].timestamp_us == 33333);
  CHECK(!r.samples[0].pupil_right_mm);
  CHECK(r.samples[0].pupil_mm() == 3.1);
}

TEST_CASE("bundled demo recording parses to the generator's sample count") {
  auto trace = synth_trace(ScanpathProfile::novice(42), EditorGeometry{}, 30000.0);
  auto r = read_recording(fx::data_dir() / "demo_novice.jsonl");
  CHECK(r.samples.size() == trace.samples.size());
  CHECK(same(r, trace));
}

TEST_CASE("parse errors carry the offending line number") {
  const std::string s = R"({"timestamp_us":0,"gaze_x":0.5,"gaze_y":0.5,"pupil_left_mm":3,"pupil_right_mm":3,"valid_left":true,"valid_right":true})";
  const std::string later = R"({"timestamp_us":10,"gaze_x":0.5,"gaze_y":0.5,"pupil_left_mm":3,"pupil_right_mm":3,"valid_left":true,"valid_right":true})";

  SECTION("malformed json") {
    CHECK(error_line(std::string(kHeader) + "\n" + s + "\n{not json\n", RecordingFormat::jsonl) == 3);
  }
  SECTION("timestamps going backwards") {
    CHECK(error_line(std::string(kHeader) + "\n" + later + "\n" + s + "\n", RecordingFormat::jsonl) == 3);
  }
  SECTION("missing header") {
    CHECK(error_line(s + "\n", RecordingFormat::jsonl) == 1);
    CHECK(error_line("", RecordingFormat::jsonl) > 0 );
  }
  SECTION("header missing a field") {
    CHECK(error_line(R"({"format":"gaze-recording","version":1,"session_id":"x","screen_width_px":1920,"sample_rate_hz":60})"
                     "\n",
                     RecordingFormat::jsonl) == 1);
  }
  SECTION("csv bad number") {
    std::string csv =
        "# session_id=x\n# screen_width_px=1920\n# screen_height_px=1080\n# sample_rate_hz=60\n"
        "timestamp_us,gaze_x,gaze_y,pupil_left_mm,pupil_right_mm,valid_left,valid_right\n"
        "0,0.5,0.5,3,3,true,true\n"
        "16667,abc,0.5,3,3,true,true\n";
    CHECK(error_line(csv, RecordingFormat::csv) == 7);
  }
  SECTION("csv without header fields") {
    std::string csv =
        "timestamp_us,gaze_x,gaze_y,pupil_left_mm,pupil_right_mm,valid_left,valid_right\n0,0.5,0.5,3,3,true,true\n";
    CHECK(error_line(csv, RecordingFormat::csv) > 0);
  }
  SECTION("csv wrong column count") {
    std::string csv =
        "# session_id=x\n# screen_width_px=1920\n# screen_height_px=1080\n# sample_rate_hz=60\n"
        "timestamp_us,gaze_x,gaze_y,pupil_left_mm,pupil_right_mm,valid_left,valid_right\n"
        "0,0.5,0.5,3,true,true\n";
    CHECK(error_line(csv, RecordingFormat::csv) == 6);
  }
}

TEST_CASE("empty recording round-trips through both formats") {
  auto r = fx::recording({});
  for (auto f : {RecordingFormat::jsonl, RecordingFormat::csv}) CHECK(same(roundtrip(r, f), r));
}

TEST_CASE("invalid-both-eyes sample keeps its flags") {
  auto r = fx::recording({fx::sample(0, 0.1, 0.2), fx::blink(16667), fx::sample(33333, 0.3, 0.4)});
  r.samples[1].pupil_left_mm = 2.5;  // stale value behind an invalid flag
  for (auto f : {RecordingFormat::jsonl, RecordingFormat::csv}) {
    auto back = roundtrip(r, f);
    REQUIRE(same(back, r));
    CHECK(!back.samples[1].valid_left);
    CHECK(!back.samples[1].valid_right);
    CHECK(back.samples[1].pupil_left_mm == 2.5);
  }
}

TEST_CASE("synthetic and random recordings round-trip exactly") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto kind = seed % 2 ? ProfileKind::expert : ProfileKind::novice;
    auto synth = synth_trace(ScanpathProfile::of(kind, seed), EditorGeometry{}, 3000.0);
    auto rnd = fx::random_recording(seed, 200);
    rnd.sample_rate_hz = 59.94;
    for (auto f : {RecordingFormat::jsonl, RecordingFormat::csv}) {
      CHECK(same(roundtrip(synth, f), synth));
      CHECK(same(roundtrip(rnd, f), rnd));
    }
  }
}

TEST_CASE("file round-trip picks the format from the extension") {
  fx::TempDir dir;
  auto r = fx::random_recording(5, 50);
  write_recording(r, dir / "a.csv");
  write_recording(r, dir / "a.jsonl");
  CHECK(fx::slurp(dir / "a.csv").rfind("# session_id=", 0) == 0);
  CHECK(same(read_recording(dir / "a.csv"), r));
  CHECK(same(read_recording(dir / "a.jsonl"), r));
  CHECK_THROWS_AS(write_recording(r, dir / "missing" / "x.jsonl"), IoError);
  CHECK_THROWS_AS(read_recording(dir / "nope.jsonl"), IoError);
}

TEST_CASE("writer refuses a recording that breaks invariants") {
  auto r = fx::recording({fx::sample(10, 0.1, 0.1), fx::sample(5, 0.1, 0.1)});
  std::stringstream ss;
  CHECK_THROWS_AS(write_recording(r, ss, RecordingFormat::jsonl), InvalidArgument);
  auto z = fx::recording({});
  z.screen_width_px = 0;
  CHECK_THROWS_AS(write_recording(z, ss, RecordingFormat::csv), InvalidArgument);
}

TEST_CASE("replay delivers every sample in order") {
  SECTION("three samples unthrottled") {
    auto r = fx::recording({fx::sample(0, 0.1, 0.1), fx::sample(16667, 0.2, 0.2), fx::sample(33333, 0.3, 0.3)});
    std::vector<GazeSample> got;
    replay(r, 0.0, [&](const GazeSample& s) { got.push_back(s); });
    CHECK(got == r.samples);
  }
  SECTION("empty recording") {
    int calls = 0;
    replay(fx::recording({}), 1.0, [&](const GazeSample&) { ++calls; });
    CHECK(calls == 0);
  }
  SECTION("random recordings") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto r = fx::random_recording(seed, 300);
      std::vector<GazeSample> got;
      replay(r, 0.0, [&](const GazeSample& s) { got.push_back(s); });
      CHECK(got == r.samples);
    }
  }
}

TEST_CASE("replay at speed 1 follows the recorded clock") {
  std::vector<GazeSample> samples;
  for (int i = 0; i < 61; ++i) samples.push_back(fx::sample(std::llround(i * 1e6 / 60.0), 0.5, 0.5));
  auto r = fx::recording(samples);  // 0 .. 1 s
  const auto t0 = std::chrono::steady_clock::now();
  int n = 0;
  replay(r, 1.0, [&](const GazeSample&) { ++n; });
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(n == 61);
  CHECK(elapsed == Catch::Approx(1.0).epsilon(0.10));
}

TEST_CASE("replay aborts at the rejected position") {
  auto r = fx::random_recording(1, 10);
  std::size_t seen = 0;
  try {
    replay(r, 0.0, [&](const GazeSample&) { return ++seen < 4; });
    FAIL("expected abort");
  } catch (const ReplayAborted& e) {
    CHECK(e.position() == 3);
  }
  CHECK(seen == 4);
  CHECK_THROWS_AS(replay(r, -1.0, [](const GazeSample&) {}), InvalidArgument);
}
