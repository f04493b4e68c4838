#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "gazeprompt/gaze_io.hpp"

namespace fx {

using namespace gazeprompt;

#ifndef GP_DATA_DIR
#define GP_DATA_DIR "data"
#endif
#ifndef GP_GOLDEN_DIR
#define GP_GOLDEN_DIR "tests/golden"
#endif

inline std::filesystem::path data_dir() { return GP_DATA_DIR; }
inline std::filesystem::path golden_dir() { return GP_GOLDEN_DIR; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline GazeSample sample(std::int64_t ts, double x, double y, std::optional<double> pupil = 3.0) {
  GazeSample s;
  s.timestamp_us = ts;
  s.gaze_x = x;
  s.gaze_y = y;
  s.pupil_left_mm = pupil;
  s.pupil_right_mm = pupil;
  s.valid_left = s.valid_right = true;
  return s;
}

inline GazeSample blink(std::int64_t ts) {
  GazeSample s;
  s.timestamp_us = ts;
  return s;
}

inline GazeRecording recording(std::vector<GazeSample> samples, int width = 1920, int height = 1080) {
  GazeRecording r;
  r.session_id = "fixture";
  r.screen_width_px = width;
  r.screen_height_px = height;
  r.samples = std::move(samples);
  return r;
}

// n samples at 60 Hz holding one pixel position
inline std::vector<GazeSample> dwell(std::int64_t start_us, int n, double px, double py, double pupil = 3.0) {
  std::vector<GazeSample> out;
  for (int i = 0; i < n; ++i)
    out.push_back(sample(start_us + static_cast<std::int64_t>(std::llround(i * 1e6 / 60.0)), px / 1920.0,
                         py / 1080.0, pupil));
  return out;
}

// Random but valid recording: wandering gaze, random validity and pupils.
inline GazeRecording random_recording(std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GazeRecording r;
  r.session_id = "random-" + std::to_string(seed);
  r.screen_width_px = 800 + static_cast<int>(u(rng) * 2000);
  r.screen_height_px = 600 + static_cast<int>(u(rng) * 1000);
  r.sample_rate_hz = 60;
  std::int64_t ts = static_cast<std::int64_t>(u(rng) * 1000);
  for (int i = 0; i < n; ++i) {
    GazeSample s;
    ts += 1 + static_cast<std::int64_t>(u(rng) * 33000);
    s.timestamp_us = ts;
    s.gaze_x = u(rng) * 1.2 - 0.1;
    s.gaze_y = u(rng) * 1.2 - 0.1;
    s.valid_left = u(rng) < 0.85;
    s.valid_right = u(rng) < 0.85;
    // an invalid eye may still carry a stale pupil value
    if (s.valid_left || u(rng) < 0.5) s.pupil_left_mm = 2.0 + u(rng) * 3.0;
    if (s.valid_right || u(rng) < 0.5) s.pupil_right_mm = 2.0 + u(rng) * 3.0;
    r.samples.push_back(s);
  }
  return r;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("gazeprompt-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

}  // namespace fx
