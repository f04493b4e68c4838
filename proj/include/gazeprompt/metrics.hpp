#pragma once

// The four session gaze metrics and the pupil baseline.
//
//   mean fixation duration   (1/N) * sum(end_i - start_i)                 [ms]
//   fixation count per s     N / (total_time_ms / 1000)
//   mean saccade length      mean over consecutive valid sample pairs of
//                            sqrt(dx^2 + dy^2) * screen_width_px          [px]
//   mean pupil dilation      (1/M) * sum(pupil_i - baseline)              [mm]
//
// compute_metrics() and StreamingAnalyzer share MetricsFold and
// BaselineTracker, so a snapshot of a stream prefix is bit-identical to the
// batch computation over that prefix.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gazeprompt/errors.hpp"
#include "gazeprompt/fixation.hpp"
#include "gazeprompt/gaze_io.hpp"

namespace gazeprompt {

inline constexpr std::int64_t kBaselineWindowUs = 60'000;
inline constexpr int kBaselineFallbackSamples = 5;

struct GazeMetrics {
  std::optional<double> mean_fixation_duration_ms;
  std::optional<double> fixation_count_per_s;
  std::optional<double> mean_saccade_length_px;
  std::optional<double> mean_pupil_dilation_mm;
  int n_fixations = 0;
  int n_pupil_samples = 0;
  std::optional<double> baseline_pupil_mm;
  double total_time_ms = 0.0;

  friend bool operator==(const GazeMetrics&, const GazeMetrics&) = default;
};

/// Pupil baseline: mean per-sample pupil over samples with timestamp < 60 ms;
/// if that window holds no valid pupil, the mean of the first five valid
/// pupil samples instead.
class BaselineTracker {
public:
  void push(const GazeSample& s) {
    if (is_final()) return;
    const auto p = s.pupil_mm();
    if (s.timestamp_us < kBaselineWindowUs) {
      if (p) {
        window_sum_ += *p;
        ++window_n_;
      }
      return;
    }
    window_closed_ = true;
    if (window_n_ == 0 && p) {
      fallback_sum_ += *p;
      ++fallback_n_;
    }
  }

  bool is_final() const noexcept {
    return (window_closed_ && window_n_ > 0) || fallback_n_ >= kBaselineFallbackSamples;
  }

  std::optional<double> value() const noexcept {
    if (window_n_ > 0) return window_sum_ / window_n_;
    if (fallback_n_ > 0) return fallback_sum_ / fallback_n_;
    return std::nullopt;
  }

private:
  double window_sum_ = 0.0;
  int window_n_ = 0;
  bool window_closed_ = false;
  double fallback_sum_ = 0.0;
  int fallback_n_ = 0;
};

inline double pupil_baseline(const GazeRecording& recording) {
  BaselineTracker tracker;
  for (const auto& s : recording.samples) {
    tracker.push(s);
    if (tracker.is_final()) break;
  }
  if (auto b = tracker.value()) return *b;
  throw BaselineUnavailable();
}

namespace detail {

class MetricsFold {
public:
  explicit MetricsFold(int screen_width_px) : width_(screen_width_px) {}

  void push_gaze(const GazeSample& s) {
    if (!s.gaze_valid()) {
      prev_valid_ = false;
      return;
    }
    if (n_valid_ == 0) first_ts_ = s.timestamp_us;
    last_ts_ = s.timestamp_us;
    ++n_valid_;
    if (prev_valid_) {
      const double dx = s.gaze_x - prev_x_;
      const double dy = s.gaze_y - prev_y_;
      saccade_sum_px_ += std::sqrt(dx * dx + dy * dy) * width_;
      ++saccade_pairs_;
    }
    prev_x_ = s.gaze_x;
    prev_y_ = s.gaze_y;
    prev_valid_ = true;
  }

  void push_pupil(double pupil_mm, double baseline_mm) {
    dilation_sum_ += pupil_mm - baseline_mm;
    ++n_pupil_;
  }

  GazeMetrics finish(std::span<const Fixation> fixations, std::optional<double> baseline) const {
    if (n_valid_ < 2) throw InsufficientData("fewer than 2 valid samples");
    GazeMetrics m;
    m.total_time_ms = static_cast<double>(last_ts_ - first_ts_) / 1000.0;
    m.n_fixations = static_cast<int>(fixations.size());
    if (m.n_fixations > 0) {
      std::int64_t total_us = 0;
      for (const auto& f : fixations) total_us += f.end_us - f.start_us;
      m.mean_fixation_duration_ms = static_cast<double>(total_us) / 1000.0 / m.n_fixations;
      if (m.total_time_ms > 0.0) m.fixation_count_per_s = m.n_fixations / (m.total_time_ms / 1000.0);
    }
    if (saccade_pairs_ > 0) m.mean_saccade_length_px = saccade_sum_px_ / saccade_pairs_;
    m.n_pupil_samples = n_pupil_;
    if (n_pupil_ > 0) m.mean_pupil_dilation_mm = dilation_sum_ / n_pupil_;
    m.baseline_pupil_mm = baseline;
    return m;
  }

private:
  int width_;
  std::int64_t first_ts_ = 0;
  std::int64_t last_ts_ = 0;
  long n_valid_ = 0;
  bool prev_valid_ = false;
  double prev_x_ = 0.0, prev_y_ = 0.0;
  double saccade_sum_px_ = 0.0;
  long saccade_pairs_ = 0;
  double dilation_sum_ = 0.0;
  int n_pupil_ = 0;
};

}  // namespace detail

/// Metrics over a whole recording given its fixations. Without a baseline the
/// dilation is absent and M is 0.
inline GazeMetrics compute_metrics(const GazeRecording& recording, std::span<const Fixation> fixations,
                                   std::optional<double> baseline_mm) {
  if (baseline_mm && !(*baseline_mm > 0.0)) throw InvalidArgument("baseline must be positive");
  detail::MetricsFold fold(recording.screen_width_px);
  for (const auto& s : recording.samples) {
    fold.push_gaze(s);
    if (baseline_mm) {
      if (auto p = s.pupil_mm()) fold.push_pupil(*p, *baseline_mm);
    }
  }
  return fold.finish(fixations, baseline_mm);
}

inline GazeMetrics compute_metrics(const GazeRecording& recording, std::span<const Fixation> fixations,
                                   double baseline_mm) {
  return compute_metrics(recording, fixations, std::optional<double>(baseline_mm));
}

inline std::optional<double> try_pupil_baseline(const GazeRecording& recording) {
  try {
    return pupil_baseline(recording);
  } catch (const BaselineUnavailable&) {
    return std::nullopt;
  }
}

struct Analysis {
  std::vector<Fixation> fixations;
  GazeMetrics metrics;
};

/// Fixations, baseline and metrics for a whole recording in one call.
inline Analysis analyze(const GazeRecording& recording, const FixationConfig& config = {}) {
  Analysis a;
  a.fixations = detect_fixations(recording, config);
  a.metrics = compute_metrics(recording, a.fixations, try_pupil_baseline(recording));
  return a;
}

/// Incremental session-so-far analysis: fixation detection, baseline and
/// metric accumulators advanced one sample at a time.
class StreamingAnalyzer {
public:
  StreamingAnalyzer(const FixationConfig& config, int screen_width_px, int screen_height_px)
      : detector_(config, screen_width_px, screen_height_px), fold_(screen_width_px) {}

  void push(const GazeSample& s) {
    detector_.push(s);
    fold_.push_gaze(s);
    baseline_.push(s);
    ++sample_count_;
    const auto p = s.pupil_mm();
    if (baseline_.is_final()) {
      const double b = *baseline_.value();
      for (double q : pending_pupils_) fold_.push_pupil(q, b);
      pending_pupils_.clear();
      if (p) fold_.push_pupil(*p, b);
    } else if (p) {
      pending_pupils_.push_back(*p);
    }
  }

  /// Metrics over everything pushed so far. Throws InsufficientData below two valid samples.
  GazeMetrics snapshot() const {
    const auto fixations = detector_.snapshot();
    const auto b = baseline_.value();
    if (pending_pupils_.empty() || !b) return fold_.finish(fixations, b);
    auto fold = fold_;
    for (double q : pending_pupils_) fold.push_pupil(q, *b);
    return fold.finish(fixations, b);
  }

  std::vector<Fixation> fixations() const { return detector_.snapshot(); }
  std::size_t sample_count() const noexcept { return sample_count_; }

private:
  IdtDetector detector_;
  detail::MetricsFold fold_;
  BaselineTracker baseline_;
  std::vector<double> pending_pupils_;
  std::size_t sample_count_ = 0;
};

inline GazeMetrics metrics_snapshot(const StreamingAnalyzer& window) { return window.snapshot(); }

}  // namespace gazeprompt
