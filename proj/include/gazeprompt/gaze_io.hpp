#pragma once

// Gaze data model, recording files (JSONL and CSV) and timed replay.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <type_traits>
#include <vector>

#include "json.hpp"

#include "gazeprompt/errors.hpp"

namespace gazeprompt {

using json = nlohmann::json;

/// One binocular tracker reading. Coordinates are normalized to [0,1] of the screen.
struct GazeSample {
  std::int64_t timestamp_us = 0;
  double gaze_x = 0.0;
  double gaze_y = 0.0;
  std::optional<double> pupil_left_mm;
  std::optional<double> pupil_right_mm;
  bool valid_left = false;
  bool valid_right = false;

  bool gaze_valid() const noexcept { return valid_left || valid_right; }

  /// Mean of the valid eyes' pupil diameters; absent if neither eye has one.
  std::optional<double> pupil_mm() const noexcept {
    const bool left = valid_left && pupil_left_mm;
    const bool right = valid_right && pupil_right_mm;
    if (left && right) return (*pupil_left_mm + *pupil_right_mm) / 2.0;
    if (left) return *pupil_left_mm;
    if (right) return *pupil_right_mm;
    return std::nullopt;
  }

  friend bool operator==(const GazeSample&, const GazeSample&) = default;
};

struct GazeRecording {
  std::string session_id;
  int screen_width_px = 1920;
  int screen_height_px = 1080;
  double sample_rate_hz = 60.0;
  std::vector<GazeSample> samples;

  friend bool operator==(const GazeRecording&, const GazeRecording&) = default;
};

enum class RecordingFormat { jsonl, csv };

inline RecordingFormat parse_recording_format(std::string_view name) {
  if (name == "jsonl") return RecordingFormat::jsonl;
  if (name == "csv") return RecordingFormat::csv;
  throw InvalidArgument("unknown recording format '" + std::string(name) + "'");
}

/// Picks the format from the file extension; anything but ".csv" is JSONL.
inline RecordingFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? RecordingFormat::csv : RecordingFormat::jsonl;
}

inline void validate_sample(const GazeSample& s) {
  if (!std::isfinite(s.gaze_x) || !std::isfinite(s.gaze_y))
    throw InvalidArgument("gaze coordinates must be finite");
  if (s.valid_left && !(s.pupil_left_mm && *s.pupil_left_mm > 0.0 && std::isfinite(*s.pupil_left_mm)))
    throw InvalidArgument("valid left eye requires a positive pupil diameter");
  if (s.valid_right && !(s.pupil_right_mm && *s.pupil_right_mm > 0.0 && std::isfinite(*s.pupil_right_mm)))
    throw InvalidArgument("valid right eye requires a positive pupil diameter");
}

inline void validate_recording(const GazeRecording& r) {
  if (r.screen_width_px <= 0 || r.screen_height_px <= 0)
    throw InvalidArgument("screen dimensions must be positive");
  if (!(r.sample_rate_hz > 0.0) || !std::isfinite(r.sample_rate_hz))
    throw InvalidArgument("sample rate must be positive");
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    validate_sample(r.samples[i]);
    if (i > 0 && r.samples[i].timestamp_us < r.samples[i - 1].timestamp_us)
      throw InvalidArgument("timestamps must be nondecreasing (sample " + std::to_string(i) + ")");
  }
}

// --- JSON mapping --------------------------------------------------------

inline void to_json(json& j, const GazeSample& s) {
  j = json{{"timestamp_us", s.timestamp_us},
           {"gaze_x", s.gaze_x},
           {"gaze_y", s.gaze_y},
           {"pupil_left_mm", s.pupil_left_mm ? json(*s.pupil_left_mm) : json(nullptr)},
           {"pupil_right_mm", s.pupil_right_mm ? json(*s.pupil_right_mm) : json(nullptr)},
           {"valid_left", s.valid_left},
           {"valid_right", s.valid_right}};
}

namespace detail {

inline std::optional<double> optional_number(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw InvalidArgument(std::string("field '") + key + "' must be a number");
  return it->get<double>();
}

template <typename T>
T required(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) throw InvalidArgument(std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace detail

inline void from_json(const json& j, GazeSample& s) {
  if (!j.is_object()) throw InvalidArgument("sample must be a JSON object");
  const auto& ts = j.find("timestamp_us");
  if (ts == j.end() || !ts->is_number_integer()) throw InvalidArgument("timestamp_us must be an integer");
  s.timestamp_us = ts->get<std::int64_t>();
  s.gaze_x = detail::required<double>(j, "gaze_x");
  s.gaze_y = detail::required<double>(j, "gaze_y");
  s.pupil_left_mm = detail::optional_number(j, "pupil_left_mm");
  s.pupil_right_mm = detail::optional_number(j, "pupil_right_mm");
  s.valid_left = detail::required<bool>(j, "valid_left");
  s.valid_right = detail::required<bool>(j, "valid_right");
}

// --- reading -------------------------------------------------------------

namespace detail {

inline void append_checked(GazeRecording& r, GazeSample s, std::size_t line) {
  try {
    validate_sample(s);
  } catch (const InvalidArgument& e) {
    throw ParseError(line, e.what());
  }
  if (!r.samples.empty() && s.timestamp_us < r.samples.back().timestamp_us)
    throw ParseError(line, "nonmonotonic timestamp " + std::to_string(s.timestamp_us));
  r.samples.push_back(s);
}

inline void apply_header(GazeRecording& r, const json& h, std::size_t line) {
  try {
    r.session_id = required<std::string>(h, "session_id");
    r.screen_width_px = required<int>(h, "screen_width_px");
    r.screen_height_px = required<int>(h, "screen_height_px");
    r.sample_rate_hz = required<double>(h, "sample_rate_hz");
  } catch (const InvalidArgument& e) {
    throw ParseError(line, std::string("header: ") + e.what());
  }
  if (r.screen_width_px <= 0 || r.screen_height_px <= 0 || !(r.sample_rate_hz > 0.0))
    throw ParseError(line, "header: screen dimensions and sample rate must be positive");
}

inline GazeRecording read_jsonl(std::istream& in) {
  GazeRecording r;
  std::string text;
  std::size_t line = 0;
  bool have_header = false;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, std::string("malformed JSON: ") + e.what());
    }
    if (!have_header) {
      if (!j.is_object()) throw ParseError(line, "header must be a JSON object");
      apply_header(r, j, line);
      have_header = true;
      continue;
    }
    GazeSample s;
    try {
      from_json(j, s);
    } catch (const InvalidArgument& e) {
      throw ParseError(line, e.what());
    }
    append_checked(r, s, line);
  }
  if (!have_header) throw ParseError(std::max<std::size_t>(line, 1), "missing header line");
  return r;
}

inline constexpr std::string_view kCsvColumns =
    "timestamp_us,gaze_x,gaze_y,pupil_left_mm,pupil_right_mm,valid_left,valid_right";

inline std::vector<std::string_view> split_csv(std::string_view row) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto comma = row.find(',', start);
    out.push_back(row.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char* name) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw ParseError(line, std::string("bad ") + name + " '" + std::string(field) + "'");
  return value;
}

inline bool parse_bool(std::string_view field, std::size_t line, const char* name) {
  if (field == "true" || field == "1") return true;
  if (field == "false" || field == "0") return false;
  throw ParseError(line, std::string("bad ") + name + " '" + std::string(field) + "'");
}

inline GazeRecording read_csv(std::istream& in) {
  GazeRecording r;
  json header = json::object();
  std::string text;
  std::size_t line = 0;
  bool have_columns = false;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    if (!have_columns) {
      if (text.rfind("# ", 0) == 0) {
        auto eq = text.find('=');
        if (eq == std::string::npos) throw ParseError(line, "header field without '='");
        std::string key = text.substr(2, eq - 2);
        std::string value = text.substr(eq + 1);
        if (key == "session_id") {
          header[key] = value;
        } else {
          try {
            header[key] = std::stod(value);
          } catch (const std::exception&) {
            throw ParseError(line, "bad header value for " + key);
          }
        }
        continue;
      }
      if (text != kCsvColumns) throw ParseError(line, "expected column row '" + std::string(kCsvColumns) + "'");
      if (header.contains("screen_width_px")) header["screen_width_px"] = static_cast<int>(header["screen_width_px"].get<double>());
      if (header.contains("screen_height_px")) header["screen_height_px"] = static_cast<int>(header["screen_height_px"].get<double>());
      apply_header(r, header, line);
      have_columns = true;
      continue;
    }
    auto f = split_csv(text);
    if (f.size() != 7) throw ParseError(line, "expected 7 columns, got " + std::to_string(f.size()));
    GazeSample s;
    s.timestamp_us = parse_number<std::int64_t>(f[0], line, "timestamp_us");
    s.gaze_x = parse_number<double>(f[1], line, "gaze_x");
    s.gaze_y = parse_number<double>(f[2], line, "gaze_y");
    if (!f[3].empty()) s.pupil_left_mm = parse_number<double>(f[3], line, "pupil_left_mm");
    if (!f[4].empty()) s.pupil_right_mm = parse_number<double>(f[4], line, "pupil_right_mm");
    s.valid_left = parse_bool(f[5], line, "valid_left");
    s.valid_right = parse_bool(f[6], line, "valid_right");
    append_checked(r, s, line);
  }
  if (!have_columns) throw ParseError(std::max<std::size_t>(line, 1), "missing header fields or column row");
  return r;
}

inline std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace detail

inline GazeRecording read_recording(std::istream& in, RecordingFormat format) {
  return format == RecordingFormat::csv ? detail::read_csv(in) : detail::read_jsonl(in);
}

inline GazeRecording read_recording(const std::filesystem::path& path, RecordingFormat format) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open recording " + path.string());
  return read_recording(in, format);
}

inline GazeRecording read_recording(const std::filesystem::path& path) {
  return read_recording(path, format_for_path(path));
}

// --- writing -------------------------------------------------------------

inline json recording_header(const GazeRecording& r) {
  return json{{"format", "gaze-recording"},
              {"version", 1},
              {"session_id", r.session_id},
              {"screen_width_px", r.screen_width_px},
              {"screen_height_px", r.screen_height_px},
              {"sample_rate_hz", r.sample_rate_hz}};
}

inline void write_recording(const GazeRecording& r, std::ostream& out, RecordingFormat format) {
  validate_recording(r);
  if (format == RecordingFormat::jsonl) {
    out << recording_header(r).dump() << '\n';
    for (const auto& s : r.samples) out << json(s).dump() << '\n';
    return;
  }
  out << "# session_id=" << r.session_id << '\n'
      << "# screen_width_px=" << r.screen_width_px << '\n'
      << "# screen_height_px=" << r.screen_height_px << '\n'
      << "# sample_rate_hz=" << detail::shortest(r.sample_rate_hz) << '\n'
      << detail::kCsvColumns << '\n';
  for (const auto& s : r.samples) {
    out << s.timestamp_us << ',' << detail::shortest(s.gaze_x) << ',' << detail::shortest(s.gaze_y) << ','
        << (s.pupil_left_mm ? detail::shortest(*s.pupil_left_mm) : "") << ','
        << (s.pupil_right_mm ? detail::shortest(*s.pupil_right_mm) : "") << ','
        << (s.valid_left ? "true" : "false") << ',' << (s.valid_right ? "true" : "false") << '\n';
  }
}

inline void write_recording(const GazeRecording& r, const std::filesystem::path& path, RecordingFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write recording " + path.string());
  write_recording(r, out, format);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

inline void write_recording(const GazeRecording& r, const std::filesystem::path& path) {
  write_recording(r, path, format_for_path(path));
}

// --- replay --------------------------------------------------------------

/// Delivers every sample to `sink` in order, paced by the recorded timestamps
/// divided by `speed`. Speed 0 delivers as fast as possible. A sink returning
/// false aborts the replay with ReplayAborted carrying the sample index.
template <typename Sink>
void replay(const GazeRecording& recording, double speed, Sink&& sink) {
  if (!(speed >= 0.0) || !std::isfinite(speed)) throw InvalidArgument("replay speed must be >= 0");
  if (recording.samples.empty()) return;
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const auto origin = recording.samples.front().timestamp_us;
  for (std::size_t i = 0; i < recording.samples.size(); ++i) {
    const auto& s = recording.samples[i];
    if (speed > 0.0) {
      const double offset_us = static_cast<double>(s.timestamp_us - origin) / speed;
      std::this_thread::sleep_until(start + std::chrono::microseconds(static_cast<std::int64_t>(offset_us)));
    }
    if constexpr (std::is_same_v<std::invoke_result_t<Sink&, const GazeSample&>, void>) {
      sink(s);
    } else {
      if (!sink(s)) throw ReplayAborted(i);
    }
  }
}

}  // namespace gazeprompt
