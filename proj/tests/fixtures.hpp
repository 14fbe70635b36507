#pragma once

#include <string>

#include "artstyle/core.hpp"

namespace fixtures {

struct StyleRow {
  const char* style;
  int images;
  int artists;
};

// Published per-class painting and artist counts (24,110 / 235 total).
inline constexpr StyleRow kStyleTable[artstyle::core::kNumStyles] = {
    {"EarlyRenaissance", 1188, 21}, {"HighRenaissance", 1442, 25}, {"Baroque", 3462, 50},
    {"Realism", 4004, 33},          {"Impressionism", 7788, 20},   {"Cubism", 1258, 14},
    {"AbstractArt", 2927, 37},      {"PopArt", 1050, 24},          {"Ukiyoe", 991, 11},
};

// Full-size manifest matching the table: paintings distributed round-robin
// over each class's artists, with plausible years.
inline std::string full_manifest_csv() {
  std::string out(artstyle::core::kManifestHeader);
  out.push_back('\n');
  int artist_base = 0;
  int painting = 0;
  for (int s = 0; s < artstyle::core::kNumStyles; ++s) {
    const StyleRow& row = kStyleTable[s];
    for (int i = 0; i < row.images; ++i, ++painting) {
      const int artist = artist_base + (i % row.artists);
      out += "p" + std::to_string(painting) + ",a" + std::to_string(artist) + ",Artist " +
             std::to_string(artist) + "," + row.style + "," +
             std::to_string(1250 + s * 90 + (i % 40)) + ",img/p" + std::to_string(painting) +
             ".ppm,\n";
    }
    artist_base += row.artists;
  }
  return out;
}

}  // namespace fixtures
