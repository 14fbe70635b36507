#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "artstyle/core.hpp"

namespace artstyle::render {

// Fixed palette, one color per style class (documented in the README so
// figures stay comparable across runs).
const char* style_color(core::StyleClass style);

struct ScatterPoint {
  std::string painting_id;
  double x = 0.0, y = 0.0, z = 0.0;
  bool has_z = false;
  core::StyleClass style = core::StyleClass::EarlyRenaissance;
};

// Scatter CSV: painting_id,x,y[,z],style
std::string scatter_to_csv(const std::vector<ScatterPoint>& points, bool three_d);
std::vector<ScatterPoint> scatter_from_csv(std::string_view csv_text);

// Standalone SVG scatter plot, one marker per painting colored by style,
// with a legend for all nine classes. 3D input is drawn through a fixed-
// angle orthographic projection. Output bytes are deterministic.
std::string render_scatter_svg(const std::vector<ScatterPoint>& points, int dims);

}  // namespace artstyle::render
