#pragma once

// Minimal self-contained SVG line charts (prediction vs truth per session).

#include <filesystem>
#include <string>
#include <vector>

namespace spo2cam {

struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color;  // CSS color; empty picks from a fixed palette
};

/// Renders a line chart as a standalone SVG document. Axes carry ~5 round
/// ticks each; series get polylines plus a legend entry. Non-finite points
/// are dropped. Output is deterministic for identical inputs. Throws
/// LengthMismatch when no series are given, a series is empty, or x and y
/// lengths differ.
std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<SvgSeries>& series, int width = 900,
                              int height = 360);

/// Atomic write (temp + rename). Throws IoError.
void save_svg(const std::filesystem::path& path, const std::string& svg);

}  // namespace spo2cam
