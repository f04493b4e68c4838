#pragma once

// Gaze-to-source mapping on a fixed monospace grid.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazeprompt/errors.hpp"
#include "gazeprompt/fixation.hpp"
#include "gazeprompt/gaze_io.hpp"

namespace gazeprompt {

struct EditorGeometry {
  std::string file_path = "snippet.java";
  double origin_x_px = 100.0;  // left edge of column 1
  double origin_y_px = 60.0;   // top edge of the first visible line
  double char_width_px = 9.0;
  double line_height_px = 18.0;
  int first_visible_line = 1;
  int visible_line_count = 50;
  int screen_width_px = 1920;
  int screen_height_px = 1080;

  double viewport_bottom_px() const noexcept { return origin_y_px + visible_line_count * line_height_px; }

  friend bool operator==(const EditorGeometry&, const EditorGeometry&) = default;
};

inline void validate_geometry(const EditorGeometry& g) {
  if (!std::isfinite(g.origin_x_px) || !std::isfinite(g.origin_y_px) || !std::isfinite(g.char_width_px) ||
      !std::isfinite(g.line_height_px))
    throw InvalidArgument("geometry pixel quantities must be finite");
  if (!(g.char_width_px > 0.0) || !(g.line_height_px > 0.0))
    throw InvalidArgument("char_width_px and line_height_px must be positive");
  if (g.first_visible_line < 1 || g.visible_line_count < 1)
    throw InvalidArgument("visible line range must start at 1 or later and be nonempty");
  if (g.screen_width_px <= 0 || g.screen_height_px <= 0) throw InvalidArgument("screen dimensions must be positive");
}

struct CodeLocation {
  std::string file_path;
  int line = 1;
  int column = 1;

  friend bool operator==(const CodeLocation&, const CodeLocation&) = default;
};

struct LineGazeSummary {
  int line = 0;
  int fixation_count = 0;
  double total_fixation_ms = 0.0;

  friend bool operator==(const LineGazeSummary&, const LineGazeSummary&) = default;
};

/// Maps a point in screen pixels to its character cell. The viewport spans
/// from the origin to the right screen edge and down `visible_line_count` lines.
inline std::optional<CodeLocation> map_pixel(double px, double py, const EditorGeometry& g) {
  if (!(px >= g.origin_x_px) || !(py >= g.origin_y_px)) return std::nullopt;
  if (px >= g.screen_width_px || py >= g.viewport_bottom_px()) return std::nullopt;
  const auto row = static_cast<int>(std::floor((py - g.origin_y_px) / g.line_height_px));
  const auto col = static_cast<int>(std::floor((px - g.origin_x_px) / g.char_width_px));
  if (row < 0 || row >= g.visible_line_count) return std::nullopt;
  return CodeLocation{g.file_path, g.first_visible_line + row, 1 + col};
}

inline std::optional<CodeLocation> map_gaze(const GazeSample& sample, const EditorGeometry& g) {
  return map_pixel(sample.gaze_x * g.screen_width_px, sample.gaze_y * g.screen_height_px, g);
}

/// Attributes each fixation to the line under its centroid; off-viewport fixations are dropped.
inline std::vector<LineGazeSummary> line_summaries(std::span<const Fixation> fixations, const EditorGeometry& g) {
  std::map<int, LineGazeSummary> by_line;
  for (const auto& f : fixations) {
    auto loc = map_pixel(f.centroid_x * g.screen_width_px, f.centroid_y * g.screen_height_px, g);
    if (!loc) continue;
    auto& entry = by_line[loc->line];
    entry.line = loc->line;
    entry.fixation_count += 1;
    entry.total_fixation_ms += f.duration_ms();
  }
  std::vector<LineGazeSummary> out;
  out.reserve(by_line.size());
  for (auto& [line, summary] : by_line) out.push_back(summary);
  return out;
}

}  // namespace gazeprompt
