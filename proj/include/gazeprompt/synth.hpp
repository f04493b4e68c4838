#pragma once

// Synthetic reading scanpaths with a ground-truth dwell plan.
//
// Novices read linearly in short hops along each line and sweep back to the
// start of the next; experts jump across the code in long saccades. Each
// dwell holds gaze within a few pixels of its target, so the I-DT detector
// at default settings recovers exactly one fixation per planned dwell.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "gazeprompt/codemap.hpp"
#include "gazeprompt/errors.hpp"
#include "gazeprompt/gaze_io.hpp"

namespace gazeprompt {

enum class ProfileKind { novice, expert };

inline ProfileKind parse_profile_kind(std::string_view s) {
  if (s == "novice") return ProfileKind::novice;
  if (s == "expert") return ProfileKind::expert;
  throw InvalidArgument("profile must be 'novice' or 'expert'");
}

inline std::string_view to_string(ProfileKind k) { return k == ProfileKind::novice ? "novice" : "expert"; }

struct ScanpathProfile {
  ProfileKind profile_kind = ProfileKind::novice;
  double mean_dwell_ms = 280.0;
  double dwell_jitter_ms = 60.0;
  double hop_distance_px = 60.0;
  double pupil_base_mm = 3.2;
  double pupil_load_mm = 0.35;
  std::uint64_t rng_seed = 0;

  static ScanpathProfile novice(std::uint64_t seed) {
    return {ProfileKind::novice, 280.0, 60.0, 60.0, 3.2, 0.35, seed};
  }

  static ScanpathProfile expert(std::uint64_t seed) {
    return {ProfileKind::expert, 200.0, 40.0, 300.0, 3.2, 0.05, seed};
  }

  static ScanpathProfile of(ProfileKind kind, std::uint64_t seed) {
    return kind == ProfileKind::novice ? novice(seed) : expert(seed);
  }
};

struct PlannedDwell {
  std::int64_t start_us = 0;       // timestamp of the dwell's first sample
  double planned_duration_ms = 0;  // the last member sample lies within one period before start + duration
  double target_x_px = 0;
  double target_y_px = 0;
  int sample_count = 0;
};

struct SyntheticTrace {
  GazeRecording recording;
  std::vector<PlannedDwell> plan;
};

namespace synth_detail {

inline constexpr double kMinDwellMs = 150.0;
inline constexpr double kMinHopPx = 50.0;
inline constexpr double kGazeJitterPx = 2.5;
inline constexpr double kPupilNoiseMm = 0.03;
inline constexpr double kEyeOffsetMm = 0.02;
inline constexpr double kPupilRampS = 2.0;
inline constexpr int kReadingColumns = 80;
inline constexpr int kMinLineWords = 5;
inline constexpr int kMaxLineWords = 10;
inline constexpr double kBlinkChance = 0.15;
inline constexpr double kMonocularDropout = 0.02;

// mt19937_64 output is specified by the standard; the distributions are not,
// so they are built here to keep traces identical across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

private:
  std::mt19937_64 engine_;
};

inline std::int64_t sample_time_us(std::int64_t index, double rate_hz) {
  return static_cast<std::int64_t>(std::llround(static_cast<double>(index) * 1e6 / rate_hz));
}

}  // namespace synth_detail

inline SyntheticTrace synth_trace_with_plan(const ScanpathProfile& profile, const EditorGeometry& geometry,
                                            double duration_ms, double sample_rate_hz = 60.0) {
  using namespace synth_detail;
  if (!(duration_ms > 0.0) || !std::isfinite(duration_ms)) throw InvalidArgument("duration_ms must be positive");
  if (!(sample_rate_hz > 0.0)) throw InvalidArgument("sample rate must be positive");
  if (!(profile.mean_dwell_ms > 0.0) || !(profile.dwell_jitter_ms >= 0.0) || !(profile.hop_distance_px > 0.0) ||
      !(profile.pupil_base_mm > 0.0) || !(profile.pupil_load_mm >= 0.0))
    throw InvalidArgument("profile durations, distances and pupil sizes must be positive");
  if (!(geometry.char_width_px > 0.0) || !(geometry.line_height_px > 0.0))
    throw InvalidArgument("degenerate geometry: char width and line height must be positive");
  validate_geometry(geometry);

  const double left = geometry.origin_x_px + geometry.char_width_px / 2.0;
  const double right =
      std::min(geometry.origin_x_px + kReadingColumns * geometry.char_width_px, geometry.screen_width_px - 1.0);
  const int rows = std::min(geometry.visible_line_count,
                            static_cast<int>((geometry.screen_height_px - geometry.origin_y_px) / geometry.line_height_px));
  if (rows < 1 || right - left < 4 * kMinHopPx)
    throw InvalidArgument("degenerate geometry: text area too small for synthesis");
  const double top = geometry.origin_y_px + geometry.line_height_px / 2.0;
  const double bottom = top + (rows - 1) * geometry.line_height_px;
  auto row_y = [&](int row) { return top + row * geometry.line_height_px; };

  SyntheticTrace out;
  auto& rec = out.recording;
  rec.session_id = "synth-" + std::string(to_string(profile.profile_kind)) + "-" + std::to_string(profile.rng_seed);
  rec.screen_width_px = geometry.screen_width_px;
  rec.screen_height_px = geometry.screen_height_px;
  rec.sample_rate_hz = sample_rate_hz;

  const auto duration_us = static_cast<std::int64_t>(std::llround(duration_ms * 1000.0));
  std::int64_t total = 0;
  while (sample_time_us(total, sample_rate_hz) < duration_us) ++total;

  Rng rng(profile.rng_seed);
  double y = row_y(0);
  int row = 0;

  // Novice lines hold a drawn number of words; where a line breaks never
  // depends on hop_distance_px, and the hop is capped so the line fits. With
  // the draws fixed, every jump then grows with hop_distance_px.
  int words_left = 0;
  double line_hop_cap = 0.0;
  auto start_line = [&](double offset_draw, double words_draw) {
    const double x0 = left + offset_draw * 4.0 * geometry.char_width_px;
    words_left = kMinLineWords + static_cast<int>(words_draw * (kMaxLineWords - kMinLineWords + 1));
    line_hop_cap = (right - x0) / ((words_left - 1) * 1.25);
    return x0;
  };
  const double first_offset = rng.uniform();
  double x = start_line(first_offset, rng.uniform());
  // expert jumps up to half the text area always stay inside after reflection
  const double expert_cap = std::min(right - left, bottom - top) / 2.0;

  std::int64_t i = 0;
  while (i < total) {
    // fixed number of draws per dwell so that changing one parameter does
    // not reshuffle the rest of the trace
    double dwell = std::max(kMinDwellMs, profile.mean_dwell_ms + profile.dwell_jitter_ms * rng.normal());
    const double hop_scale = rng.uniform(0.75, 1.25);
    const double hop_angle = rng.uniform();
    const double blink_roll = rng.uniform();
    const double blink_pos = rng.uniform();
    const double blink_len = rng.uniform();
    const double line_words = rng.uniform();

    const std::int64_t start_us = sample_time_us(i, sample_rate_hz);
    const auto end_us = start_us + static_cast<std::int64_t>(std::llround(dwell * 1000.0));
    std::int64_t j = i;
    while (j < total && sample_time_us(j, sample_rate_hz) <= end_us) ++j;
    // a tail too short for another dwell is absorbed into this one
    const bool absorb = j < total && duration_us - sample_time_us(j, sample_rate_hz) < kMinDwellMs * 1000.0;
    if (absorb) j = total;
    if (absorb || end_us >= duration_us) dwell = static_cast<double>(duration_us - start_us) / 1000.0;

    const int count = static_cast<int>(j - i);
    int blink_start = -1, blink_end = -1;
    if (count >= 12 && blink_roll < kBlinkChance) {
      const int len = 2 + static_cast<int>(blink_len * 3.0);
      blink_start = 2 + static_cast<int>(blink_pos * (count - 4 - len));
      blink_end = blink_start + len;
    }

    for (int k = 0; k < count; ++k) {
      const std::int64_t ts = sample_time_us(i + k, sample_rate_hz);
      const double jx = rng.uniform(-kGazeJitterPx, kGazeJitterPx);
      const double jy = rng.uniform(-kGazeJitterPx, kGazeJitterPx);
      const double nl = rng.normal();
      const double nr = rng.normal();
      const double dropout = rng.uniform();

      GazeSample s;
      s.timestamp_us = ts;
      s.gaze_x = std::clamp((x + jx) / geometry.screen_width_px, 0.0, 1.0);
      s.gaze_y = std::clamp((y + jy) / geometry.screen_height_px, 0.0, 1.0);
      if (k >= blink_start && k < blink_end) {
        rec.samples.push_back(s);
        continue;
      }
      const double load = profile.pupil_load_mm * std::min(1.0, static_cast<double>(ts) / 1e6 / kPupilRampS);
      const double base = profile.pupil_base_mm + load;
      s.valid_left = dropout >= kMonocularDropout;
      s.valid_right = dropout < kMonocularDropout || dropout >= 2 * kMonocularDropout;
      if (s.valid_left) s.pupil_left_mm = std::max(0.5, base + kEyeOffsetMm + kPupilNoiseMm * nl);
      if (s.valid_right) s.pupil_right_mm = std::max(0.5, base - kEyeOffsetMm + kPupilNoiseMm * nr);
      rec.samples.push_back(s);
    }

    out.plan.push_back(PlannedDwell{start_us, dwell, x, y, count});
    i = j;

    if (profile.profile_kind == ProfileKind::novice) {
      if (--words_left > 0) {
        x += std::max(kMinHopPx, std::min(profile.hop_distance_px, line_hop_cap) * hop_scale);
      } else {
        row = (row + 1) % rows;
        y = row_y(row);
        x = start_line(hop_angle, line_words);
      }
    } else {
      const double hop = std::min(expert_cap, std::max(kMinHopPx, profile.hop_distance_px * hop_scale));
      const double theta = 2.0 * std::numbers::pi * hop_angle;
      double dx = hop * std::cos(theta);
      double dy = hop * std::sin(theta);
      if (x + dx < left || x + dx > right) dx = -dx;
      if (y + dy < top || y + dy > bottom) dy = -dy;
      x += dx;
      y += dy;
    }
  }
  return out;
}

inline GazeRecording synth_trace(const ScanpathProfile& profile, const EditorGeometry& geometry, double duration_ms) {
  return synth_trace_with_plan(profile, geometry, duration_ms).recording;
}

}  // namespace gazeprompt
