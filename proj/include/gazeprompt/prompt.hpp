#pragma once

// Threshold evaluation and gaze-informed prompt text.

#include <array>
#include <string>
#include <string_view>
#include <utility>

#include "gazeprompt/errors.hpp"
#include "gazeprompt/metrics.hpp"

namespace gazeprompt {

enum class SaccadeDirection { below, above };

inline SaccadeDirection parse_saccade_direction(std::string_view s) {
  if (s == "below") return SaccadeDirection::below;
  if (s == "above") return SaccadeDirection::above;
  throw InvalidArgument("saccade_trigger_direction must be 'below' or 'above'");
}

inline std::string_view to_string(SaccadeDirection d) { return d == SaccadeDirection::below ? "below" : "above"; }

/// Reference levels for "high" gaze metrics, from novice readers of well-structured code.
struct ThresholdConfig {
  double fixation_duration_ms = 241.31;
  double fixation_count_per_s = 2.89;
  double saccade_length_px = 132.74;
  double pupil_dilation_mm = 0.1;
  SaccadeDirection saccade_trigger_direction = SaccadeDirection::below;

  friend bool operator==(const ThresholdConfig&, const ThresholdConfig&) = default;
};

inline void validate_thresholds(const ThresholdConfig& c) {
  if (!(c.fixation_duration_ms > 0.0) || !(c.fixation_count_per_s > 0.0) || !(c.saccade_length_px > 0.0) ||
      !(c.pupil_dilation_mm > 0.0))
    throw InvalidArgument("thresholds must be positive");
}

struct TriggerFlags {
  bool long_fixation_duration = false;
  bool high_fixation_count = false;
  bool short_saccades = false;
  bool high_pupil_dilation = false;

  bool any() const noexcept {
    return long_fixation_duration || high_fixation_count || short_saccades || high_pupil_dilation;
  }

  friend bool operator==(const TriggerFlags&, const TriggerFlags&) = default;
};

enum class PromptMode { realtime, preset, fallback };

inline PromptMode parse_prompt_mode(std::string_view s) {
  if (s == "realtime") return PromptMode::realtime;
  if (s == "preset") return PromptMode::preset;
  if (s == "fallback") return PromptMode::fallback;
  throw InvalidArgument("mode must be 'realtime' or 'preset'");
}

inline std::string_view to_string(PromptMode m) {
  switch (m) {
    case PromptMode::realtime: return "realtime";
    case PromptMode::preset: return "preset";
    case PromptMode::fallback: return "fallback";
  }
  return "realtime";
}

struct PromptText {
  std::string text;
  PromptMode mode = PromptMode::realtime;

  friend bool operator==(const PromptText&, const PromptText&) = default;
};

namespace prompt_text {

inline constexpr std::string_view kOpening = "While reading the code, the developer demonstrated ";
inline constexpr std::string_view kCommand = "Improve the code.";

inline constexpr std::string_view kLongFixationDuration =
    "long fixation durations, indicating sustained attention and deep cognitive processing, suggesting higher "
    "complexity or ambiguity in the code";
inline constexpr std::string_view kHighFixationCount =
    "high fixation count suggesting low visual efficiency, increased scanning, suggesting cognitive strain in "
    "locating meaningful cues";
inline constexpr std::string_view kShortSaccades =
    "short saccades indicating novice-like behavior and linear reading patterns, reflecting difficulty in "
    "identifying key code elements";
inline constexpr std::string_view kHighPupilDilation =
    "increased pupil dilation reflecting high cognitive effort and mental workload";

// The fixed all-metrics prompt. Its first fragment has no comma after
// "durations"; the realtime template keeps the comma.
inline constexpr std::string_view kPreset =
    "While reading the code, the developer demonstrated long fixation durations indicating sustained attention "
    "and deep cognitive processing, suggesting higher complexity or ambiguity in the code, high fixation count "
    "suggesting low visual efficiency, increased scanning, suggesting cognitive strain in locating meaningful "
    "cues, short saccades indicating novice-like behavior and linear reading patterns, reflecting difficulty in "
    "identifying key code elements, increased pupil dilation reflecting high cognitive effort and mental "
    "workload. Improve the code.";

/// Fragments in canonical order: duration, count, saccade, pupil.
inline constexpr std::array<std::string_view, 4> kFragments = {kLongFixationDuration, kHighFixationCount,
                                                               kShortSaccades, kHighPupilDilation};

}  // namespace prompt_text

/// Strict comparisons; an absent metric never triggers.
inline TriggerFlags evaluate_thresholds(const GazeMetrics& m, const ThresholdConfig& c = {}) {
  TriggerFlags f;
  f.long_fixation_duration = m.mean_fixation_duration_ms && *m.mean_fixation_duration_ms > c.fixation_duration_ms;
  f.high_fixation_count = m.fixation_count_per_s && *m.fixation_count_per_s > c.fixation_count_per_s;
  if (m.mean_saccade_length_px) {
    f.short_saccades = c.saccade_trigger_direction == SaccadeDirection::below
                           ? *m.mean_saccade_length_px < c.saccade_length_px
                           : *m.mean_saccade_length_px > c.saccade_length_px;
  }
  f.high_pupil_dilation = m.mean_pupil_dilation_mm && *m.mean_pupil_dilation_mm > c.pupil_dilation_mm;
  return f;
}

inline std::array<bool, 4> flag_array(const TriggerFlags& f) {
  return {f.long_fixation_duration, f.high_fixation_count, f.short_saccades, f.high_pupil_dilation};
}

/// Preset mode ignores the flags. Realtime with no flag set falls back to the bare command.
inline PromptText synthesize_prompt(const TriggerFlags& flags, PromptMode mode) {
  if (mode == PromptMode::preset) return {std::string(prompt_text::kPreset), PromptMode::preset};
  if (!flags.any()) return {std::string(prompt_text::kCommand), PromptMode::fallback};
  std::string text(prompt_text::kOpening);
  bool first = true;
  const auto set = flag_array(flags);
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (!set[i]) continue;
    if (!first) text += ", ";
    text += prompt_text::kFragments[i];
    first = false;
  }
  text += ". ";
  text += prompt_text::kCommand;
  return {std::move(text), PromptMode::realtime};
}

struct SessionPrompt {
  TriggerFlags flags;
  PromptText prompt;
};

inline SessionPrompt prompt_for_session(const GazeMetrics& metrics, const ThresholdConfig& config, PromptMode mode) {
  auto flags = evaluate_thresholds(metrics, config);
  return {flags, synthesize_prompt(flags, mode)};
}

}  // namespace gazeprompt
