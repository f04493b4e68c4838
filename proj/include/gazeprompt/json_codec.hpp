#pragma once

// JSON mappings for domain types. Config-style objects accept partial input:
// missing keys keep their defaults, unknown keys are rejected.

#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "gazeprompt/codemap.hpp"
#include "gazeprompt/errors.hpp"
#include "gazeprompt/fixation.hpp"
#include "gazeprompt/llm_client.hpp"
#include "gazeprompt/metrics.hpp"
#include "gazeprompt/prompt.hpp"

namespace gazeprompt {

namespace detail {

inline void check_keys(const json& j, std::string_view what, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw InvalidArgument(std::string(what) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw InvalidArgument("unknown key '" + key + "' in " + std::string(what));
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument(std::string("field '") + key + "' has the wrong type");
  }
}

inline json opt_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace detail

// --- configuration types -------------------------------------------------

inline void to_json(json& j, const ThresholdConfig& c) {
  j = json{{"fixation_duration_ms", c.fixation_duration_ms},
           {"fixation_count_per_s", c.fixation_count_per_s},
           {"saccade_length_px", c.saccade_length_px},
           {"pupil_dilation_mm", c.pupil_dilation_mm},
           {"saccade_trigger_direction", to_string(c.saccade_trigger_direction)}};
}

inline void from_json(const json& j, ThresholdConfig& c) {
  detail::check_keys(j, "thresholds",
                     {"fixation_duration_ms", "fixation_count_per_s", "saccade_length_px", "pupil_dilation_mm",
                      "saccade_trigger_direction"});
  detail::read_opt(j, "fixation_duration_ms", c.fixation_duration_ms);
  detail::read_opt(j, "fixation_count_per_s", c.fixation_count_per_s);
  detail::read_opt(j, "saccade_length_px", c.saccade_length_px);
  detail::read_opt(j, "pupil_dilation_mm", c.pupil_dilation_mm);
  std::string dir(to_string(c.saccade_trigger_direction));
  detail::read_opt(j, "saccade_trigger_direction", dir);
  c.saccade_trigger_direction = parse_saccade_direction(dir);
  validate_thresholds(c);
}

inline void to_json(json& j, const FixationConfig& c) {
  j = json{{"dispersion_max_px", c.dispersion_max_px},
           {"min_duration_ms", c.min_duration_ms},
           {"validity_policy", to_string(c.validity_policy)},
           {"max_gap_ms", c.max_gap_ms}};
}

inline void from_json(const json& j, FixationConfig& c) {
  detail::check_keys(j, "fixation", {"dispersion_max_px", "min_duration_ms", "validity_policy", "max_gap_ms"});
  detail::read_opt(j, "dispersion_max_px", c.dispersion_max_px);
  detail::read_opt(j, "min_duration_ms", c.min_duration_ms);
  detail::read_opt(j, "max_gap_ms", c.max_gap_ms);
  std::string policy(to_string(c.validity_policy));
  detail::read_opt(j, "validity_policy", policy);
  c.validity_policy = parse_validity_policy(policy);
  validate_fixation_config(c);
}

inline void to_json(json& j, const EditorGeometry& g) {
  j = json{{"file_path", g.file_path},
           {"origin_x_px", g.origin_x_px},
           {"origin_y_px", g.origin_y_px},
           {"char_width_px", g.char_width_px},
           {"line_height_px", g.line_height_px},
           {"first_visible_line", g.first_visible_line},
           {"visible_line_count", g.visible_line_count},
           {"screen_width_px", g.screen_width_px},
           {"screen_height_px", g.screen_height_px}};
}

inline void from_json(const json& j, EditorGeometry& g) {
  detail::check_keys(j, "geometry",
                     {"file_path", "origin_x_px", "origin_y_px", "char_width_px", "line_height_px",
                      "first_visible_line", "visible_line_count", "screen_width_px", "screen_height_px"});
  detail::read_opt(j, "file_path", g.file_path);
  detail::read_opt(j, "origin_x_px", g.origin_x_px);
  detail::read_opt(j, "origin_y_px", g.origin_y_px);
  detail::read_opt(j, "char_width_px", g.char_width_px);
  detail::read_opt(j, "line_height_px", g.line_height_px);
  detail::read_opt(j, "first_visible_line", g.first_visible_line);
  detail::read_opt(j, "visible_line_count", g.visible_line_count);
  detail::read_opt(j, "screen_width_px", g.screen_width_px);
  detail::read_opt(j, "screen_height_px", g.screen_height_px);
  validate_geometry(g);
}

// --- results -------------------------------------------------------------

inline void to_json(json& j, const GazeMetrics& m) {
  j = json{{"mean_fixation_duration_ms", detail::opt_number(m.mean_fixation_duration_ms)},
           {"fixation_count_per_s", detail::opt_number(m.fixation_count_per_s)},
           {"mean_saccade_length_px", detail::opt_number(m.mean_saccade_length_px)},
           {"mean_pupil_dilation_mm", detail::opt_number(m.mean_pupil_dilation_mm)},
           {"n_fixations", m.n_fixations},
           {"n_pupil_samples", m.n_pupil_samples},
           {"baseline_pupil_mm", detail::opt_number(m.baseline_pupil_mm)},
           {"total_time_ms", m.total_time_ms}};
}

inline void from_json(const json& j, GazeMetrics& m) {
  m.mean_fixation_duration_ms = detail::optional_number(j, "mean_fixation_duration_ms");
  m.fixation_count_per_s = detail::optional_number(j, "fixation_count_per_s");
  m.mean_saccade_length_px = detail::optional_number(j, "mean_saccade_length_px");
  m.mean_pupil_dilation_mm = detail::optional_number(j, "mean_pupil_dilation_mm");
  m.n_fixations = detail::required<int>(j, "n_fixations");
  m.n_pupil_samples = detail::required<int>(j, "n_pupil_samples");
  m.baseline_pupil_mm = detail::optional_number(j, "baseline_pupil_mm");
  m.total_time_ms = detail::required<double>(j, "total_time_ms");
}

inline void to_json(json& j, const TriggerFlags& f) {
  j = json{{"long_fixation_duration", f.long_fixation_duration},
           {"high_fixation_count", f.high_fixation_count},
           {"short_saccades", f.short_saccades},
           {"high_pupil_dilation", f.high_pupil_dilation}};
}

inline void from_json(const json& j, TriggerFlags& f) {
  f.long_fixation_duration = detail::required<bool>(j, "long_fixation_duration");
  f.high_fixation_count = detail::required<bool>(j, "high_fixation_count");
  f.short_saccades = detail::required<bool>(j, "short_saccades");
  f.high_pupil_dilation = detail::required<bool>(j, "high_pupil_dilation");
}

inline void to_json(json& j, const PromptText& p) { j = json{{"text", p.text}, {"mode", to_string(p.mode)}}; }

inline void from_json(const json& j, PromptText& p) {
  p.text = detail::required<std::string>(j, "text");
  p.mode = parse_prompt_mode(detail::required<std::string>(j, "mode"));
}

inline void to_json(json& j, const Fixation& f) {
  j = json{{"start_us", f.start_us},         {"end_us", f.end_us},
           {"centroid_x", f.centroid_x},     {"centroid_y", f.centroid_y},
           {"sample_count", f.sample_count}, {"mean_pupil_mm", detail::opt_number(f.mean_pupil_mm)}};
}

inline void to_json(json& j, const LineGazeSummary& s) {
  j = json{{"line", s.line}, {"fixation_count", s.fixation_count}, {"total_fixation_ms", s.total_fixation_ms}};
}

inline void to_json(json& j, const RefactorResponse& r) {
  j = json{{"request_id", r.request_id},
           {"refactored_code", r.refactored_code},
           {"code_extracted", r.code_extracted},
           {"backend_name", r.backend_name},
           {"latency_ms", r.latency_ms},
           {"raw_model_message", r.raw_model_message}};
}

inline void from_json(const json& j, RefactorResponse& r) {
  r.request_id = detail::required<std::string>(j, "request_id");
  r.refactored_code = detail::required<std::string>(j, "refactored_code");
  r.code_extracted = detail::required<bool>(j, "code_extracted");
  r.backend_name = detail::required<std::string>(j, "backend_name");
  r.latency_ms = detail::required<double>(j, "latency_ms");
  r.raw_model_message = detail::required<std::string>(j, "raw_model_message");
}

}  // namespace gazeprompt
