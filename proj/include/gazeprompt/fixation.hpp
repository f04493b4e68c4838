#pragma once

// Dispersion-threshold (I-DT) fixation identification.
//
// IdtDetector consumes samples one at a time; detect_fixations() is that same
// detector fed a whole recording and then flushed, so a detector stopped at
// any prefix yields exactly what the batch call yields on that prefix.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gazeprompt/errors.hpp"
#include "gazeprompt/gaze_io.hpp"

namespace gazeprompt {

struct Fixation {
  std::int64_t start_us = 0;
  std::int64_t end_us = 0;
  double centroid_x = 0.0;
  double centroid_y = 0.0;
  int sample_count = 0;
  std::optional<double> mean_pupil_mm;

  double duration_ms() const noexcept { return static_cast<double>(end_us - start_us) / 1000.0; }

  friend bool operator==(const Fixation&, const Fixation&) = default;
};

enum class ValidityPolicy { drop_invalid, interpolate_short_gaps };

inline ValidityPolicy parse_validity_policy(std::string_view name) {
  if (name == "drop_invalid") return ValidityPolicy::drop_invalid;
  if (name == "interpolate_short_gaps") return ValidityPolicy::interpolate_short_gaps;
  throw InvalidArgument("unknown validity policy '" + std::string(name) + "'");
}

inline std::string_view to_string(ValidityPolicy p) {
  return p == ValidityPolicy::drop_invalid ? "drop_invalid" : "interpolate_short_gaps";
}

struct FixationConfig {
  double dispersion_max_px = 35.0;
  double min_duration_ms = 100.0;
  ValidityPolicy validity_policy = ValidityPolicy::drop_invalid;
  double max_gap_ms = 75.0;

  friend bool operator==(const FixationConfig&, const FixationConfig&) = default;
};

inline void validate_fixation_config(const FixationConfig& c) {
  if (!(c.dispersion_max_px > 0.0)) throw InvalidArgument("dispersion_max_px must be positive");
  if (!(c.min_duration_ms > 0.0)) throw InvalidArgument("min_duration_ms must be positive");
  if (!(c.max_gap_ms >= 0.0)) throw InvalidArgument("max_gap_ms must be nonnegative");
}

class IdtDetector {
public:
  IdtDetector(FixationConfig config, int screen_width_px, int screen_height_px)
      : config_(config), width_(screen_width_px), height_(screen_height_px) {
    validate_fixation_config(config_);
    if (width_ <= 0 || height_ <= 0) throw InvalidArgument("screen dimensions must be positive");
    min_duration_us_ = config_.min_duration_ms * 1000.0;
    max_gap_us_ = config_.max_gap_ms * 1000.0;
  }

  void push(const GazeSample& s) {
    if (!s.gaze_valid()) {
      if (config_.validity_policy == ValidityPolicy::interpolate_short_gaps && last_valid_)
        gap_.push_back(s.timestamp_us);
      return;
    }
    Point p = to_point(s);
    if (!gap_.empty()) {
      if (static_cast<double>(p.ts - last_valid_->ts) <= max_gap_us_) {
        for (auto ts : gap_) add(interpolate(*last_valid_, p, ts));
      }
      gap_.clear();
    }
    last_valid_ = p;
    add(p);
  }

  /// Emits the trailing window if it already qualifies. The detector stays usable.
  void flush() {
    if (auto f = pending()) done_.push_back(*f);
    window_.clear();
    fixating_ = false;
    gap_.clear();
  }

  /// Completed fixations, in time order.
  const std::vector<Fixation>& fixations() const noexcept { return done_; }

  /// The fixation the current window would become if the stream ended now.
  std::optional<Fixation> pending() const {
    if (!fixating_) return std::nullopt;
    return make_fixation();
  }

  /// Completed fixations plus the pending one.
  std::vector<Fixation> snapshot() const {
    auto out = done_;
    if (auto f = pending()) out.push_back(*f);
    return out;
  }

  const FixationConfig& config() const noexcept { return config_; }

private:
  struct Point {
    std::int64_t ts;
    double x, y;    // normalized
    double px, py;  // screen pixels
    std::optional<double> pupil;
  };

  Point to_point(const GazeSample& s) const {
    return Point{s.timestamp_us, s.gaze_x, s.gaze_y, s.gaze_x * width_, s.gaze_y * height_, s.pupil_mm()};
  }

  Point interpolate(const Point& a, const Point& b, std::int64_t ts) const {
    const double span = static_cast<double>(b.ts - a.ts);
    const double t = span > 0.0 ? static_cast<double>(ts - a.ts) / span : 0.0;
    const double x = a.x + (b.x - a.x) * t;
    const double y = a.y + (b.y - a.y) * t;
    return Point{ts, x, y, x * width_, y * height_, std::nullopt};
  }

  double dispersion_with(const Point& p) const {
    return (std::max(max_x_, p.px) - std::min(min_x_, p.px)) + (std::max(max_y_, p.py) - std::min(min_y_, p.py));
  }

  double dispersion() const { return (max_x_ - min_x_) + (max_y_ - min_y_); }

  double window_duration_us() const {
    return static_cast<double>(window_.back().ts - window_.front().ts);
  }

  void extend_bounds(const Point& p) {
    if (window_.size() == 1) {
      min_x_ = max_x_ = p.px;
      min_y_ = max_y_ = p.py;
      return;
    }
    min_x_ = std::min(min_x_, p.px);
    max_x_ = std::max(max_x_, p.px);
    min_y_ = std::min(min_y_, p.py);
    max_y_ = std::max(max_y_, p.py);
  }

  void recompute_bounds() {
    if (window_.empty()) return;
    min_x_ = max_x_ = window_.front().px;
    min_y_ = max_y_ = window_.front().py;
    for (const auto& q : window_) {
      min_x_ = std::min(min_x_, q.px);
      max_x_ = std::max(max_x_, q.px);
      min_y_ = std::min(min_y_, q.py);
      max_y_ = std::max(max_y_, q.py);
    }
  }

  void add(const Point& p) {
    if (fixating_) {
      if (dispersion_with(p) <= config_.dispersion_max_px) {
        window_.push_back(p);
        extend_bounds(p);
        return;
      }
      done_.push_back(make_fixation());
      window_.clear();
      fixating_ = false;
    }
    window_.push_back(p);
    extend_bounds(p);
    while (!window_.empty() && window_duration_us() >= min_duration_us_) {
      if (dispersion() <= config_.dispersion_max_px) {
        fixating_ = true;
        break;
      }
      window_.pop_front();
      recompute_bounds();
    }
  }

  Fixation make_fixation() const {
    Fixation f;
    f.start_us = window_.front().ts;
    f.end_us = window_.back().ts;
    f.sample_count = static_cast<int>(window_.size());
    double sx = 0.0, sy = 0.0, sp = 0.0;
    double lo_x = window_.front().x, hi_x = lo_x, lo_y = window_.front().y, hi_y = lo_y;
    int np = 0;
    for (const auto& q : window_) {
      sx += q.x;
      sy += q.y;
      lo_x = std::min(lo_x, q.x);
      hi_x = std::max(hi_x, q.x);
      lo_y = std::min(lo_y, q.y);
      hi_y = std::max(hi_y, q.y);
      if (q.pupil) {
        sp += *q.pupil;
        ++np;
      }
    }
    const auto n = static_cast<double>(window_.size());
    // rounding in the mean can step one ulp outside the member range
    f.centroid_x = std::clamp(sx / n, lo_x, hi_x);
    f.centroid_y = std::clamp(sy / n, lo_y, hi_y);
    if (np > 0) f.mean_pupil_mm = sp / np;
    return f;
  }

  FixationConfig config_;
  int width_;
  int height_;
  double min_duration_us_ = 0.0;
  double max_gap_us_ = 0.0;

  std::deque<Point> window_;
  bool fixating_ = false;
  double min_x_ = 0.0, max_x_ = 0.0, min_y_ = 0.0, max_y_ = 0.0;
  std::optional<Point> last_valid_;
  std::vector<std::int64_t> gap_;
  std::vector<Fixation> done_;
};

inline std::vector<Fixation> detect_fixations(const GazeRecording& recording, const FixationConfig& config = {}) {
  IdtDetector detector(config, recording.screen_width_px, recording.screen_height_px);
  for (const auto& s : recording.samples) detector.push(s);
  detector.flush();
  return detector.fixations();
}

inline std::vector<double> fixation_durations_ms(std::span<const Fixation> fixations) {
  std::vector<double> out;
  out.reserve(fixations.size());
  for (const auto& f : fixations) out.push_back(f.duration_ms());
  return out;
}

}  // namespace gazeprompt
