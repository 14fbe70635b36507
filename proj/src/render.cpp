#include "artstyle/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "artstyle/csv.hpp"
#include "artstyle/errors.hpp"

namespace artstyle::render {

namespace {

constexpr const char* kPalette[core::kNumStyles] = {
    "#8c510a",  // EarlyRenaissance
    "#dfc27d",  // HighRenaissance
    "#d7191c",  // Baroque
    "#636363",  // Realism
    "#2c7bb6",  // Impressionism
    "#7b3294",  // Cubism
    "#fdae61",  // AbstractArt
    "#d01c8b",  // PopArt
    "#1a9641",  // Ukiyoe
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// fixed-angle orthographic projection for 3D input
std::pair<double, double> project(const ScatterPoint& p) {
  if (!p.has_z) return {p.x, p.y};
  constexpr double kAzimuth = 0.6108652381980153;    // 35 degrees
  constexpr double kElevation = 0.5235987755982988;  // 30 degrees
  const double u = p.x * std::cos(kAzimuth) - p.y * std::sin(kAzimuth);
  const double t = p.x * std::sin(kAzimuth) + p.y * std::cos(kAzimuth);
  const double v = t * std::cos(kElevation) - p.z * std::sin(kElevation);
  return {u, v};
}

}  // namespace

const char* style_color(core::StyleClass style) { return kPalette[static_cast<int>(style)]; }

std::string scatter_to_csv(const std::vector<ScatterPoint>& points, bool three_d) {
  std::string out = three_d ? "painting_id,x,y,z,style\n" : "painting_id,x,y,style\n";
  for (const auto& p : points) {
    out += csv::escape(p.painting_id);
    out.push_back(',');
    out += fmt_full(p.x);
    out.push_back(',');
    out += fmt_full(p.y);
    if (three_d) {
      out.push_back(',');
      out += fmt_full(p.has_z ? p.z : 0.0);
    }
    out.push_back(',');
    out += core::style_name(p.style);
    out.push_back('\n');
  }
  return out;
}

std::vector<ScatterPoint> scatter_from_csv(std::string_view csv_text) {
  const auto lines = csv::split_lines(csv_text);
  if (lines.empty()) throw ValidationError("scatter csv: empty input");
  const auto header = csv::split_line(lines[0]);
  const std::vector<std::string> header2{"painting_id", "x", "y", "style"};
  const std::vector<std::string> header3{"painting_id", "x", "y", "z", "style"};
  bool three_d = false;
  if (header == header3) {
    three_d = true;
  } else if (header != header2) {
    throw ValidationError("scatter csv: expected header painting_id,x,y[,z],style");
  }

  std::vector<ScatterPoint> points;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = csv::split_line(lines[i]);
    if (fields.size() != header.size()) {
      throw ValidationError("scatter csv: line " + std::to_string(i + 1) + ": malformed row");
    }
    ScatterPoint p;
    p.painting_id = fields[0];
    auto parse = [&](const std::string& text, const char* what) {
      char* end = nullptr;
      const double v = std::strtod(text.c_str(), &end);
      if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
        throw ValidationError("scatter csv: line " + std::to_string(i + 1) + ": bad " + what);
      }
      return v;
    };
    p.x = parse(fields[1], "x");
    p.y = parse(fields[2], "y");
    if (three_d) {
      p.z = parse(fields[3], "z");
      p.has_z = true;
    }
    const auto style = core::style_from_name(fields.back());
    if (!style) {
      throw ValidationError("scatter csv: line " + std::to_string(i + 1) + ": unknown style '" +
                            fields.back() + "'");
    }
    p.style = *style;
    points.push_back(std::move(p));
  }
  return points;
}

std::string render_scatter_svg(const std::vector<ScatterPoint>& points, int dims) {
  if (dims != 2 && dims != 3) throw ValidationError("render: dims must be 2 or 3");

  constexpr double kPlot = 600.0;
  constexpr double kMargin = 40.0;
  constexpr double kLegendWidth = 190.0;
  const double width = kPlot + 2 * kMargin + kLegendWidth;
  const double height = kPlot + 2 * kMargin;

  std::vector<std::pair<double, double>> projected;
  projected.reserve(points.size());
  double lo_x = -1.0, hi_x = 1.0, lo_y = -1.0, hi_y = 1.0;
  for (const auto& p : points) {
    projected.push_back(project(p));
  }
  if (!projected.empty()) {
    lo_x = hi_x = projected[0].first;
    lo_y = hi_y = projected[0].second;
    for (const auto& [x, y] : projected) {
      lo_x = std::min(lo_x, x);
      hi_x = std::max(hi_x, x);
      lo_y = std::min(lo_y, y);
      hi_y = std::max(hi_y, y);
    }
    const double pad_x = (hi_x > lo_x) ? 0.05 * (hi_x - lo_x) : 1.0;
    const double pad_y = (hi_y > lo_y) ? 0.05 * (hi_y - lo_y) : 1.0;
    lo_x -= pad_x;
    hi_x += pad_x;
    lo_y -= pad_y;
    hi_y += pad_y;
  }

  std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" +
         fmt(height) + "\" viewBox=\"0 0 " + fmt(width) + " " + fmt(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<rect x=\"" + fmt(kMargin) + "\" y=\"" + fmt(kMargin) + "\" width=\"" + fmt(kPlot) +
         "\" height=\"" + fmt(kPlot) + "\" fill=\"none\" stroke=\"#cccccc\"/>\n";

  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto [px, py] = projected[i];
    const double sx = kMargin + (px - lo_x) / (hi_x - lo_x) * kPlot;
    const double sy = kMargin + kPlot - (py - lo_y) / (hi_y - lo_y) * kPlot;
    svg += "<circle cx=\"" + fmt(sx) + "\" cy=\"" + fmt(sy) +
           "\" r=\"3\" fill=\"" + style_color(points[i].style) + "\" fill-opacity=\"0.85\"/>\n";
  }

  // legend: always all nine classes
  const double lx = kPlot + 2 * kMargin;
  for (int s = 0; s < core::kNumStyles; ++s) {
    const double ly = kMargin + 20.0 * s;
    svg += "<rect x=\"" + fmt(lx) + "\" y=\"" + fmt(ly) + "\" width=\"12\" height=\"12\" fill=\"" +
           style_color(static_cast<core::StyleClass>(s)) + "\"/>\n";
    svg += "<text x=\"" + fmt(lx + 18.0) + "\" y=\"" + fmt(ly + 10.0) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" +
           core::style_name(static_cast<core::StyleClass>(s)) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace artstyle::render
