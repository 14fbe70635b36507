#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "artstyle/errors.hpp"

namespace artstyle::core {

// The nine style classes, in the fixed table order (index 1..9).
enum class StyleClass : int {
  EarlyRenaissance = 0,
  HighRenaissance,
  Baroque,
  Realism,
  Impressionism,
  Cubism,
  AbstractArt,
  PopArt,
  Ukiyoe,
};

inline constexpr int kNumStyles = 9;

const char* style_name(StyleClass s);
std::optional<StyleClass> style_from_name(std::string_view name);

// 1-based index matching the published table order.
inline int style_index(StyleClass s) { return static_cast<int>(s) + 1; }

// Curation flags carried in the manifest for exclusions that need human
// judgment. Stored as a bitmask.
enum PaintingFlag : unsigned {
  kFlagNotPainting = 1u << 0,
  kFlagPartialFrame = 1u << 1,
  kFlagSketch = 1u << 2,
  kFlagMonochrome = 1u << 3,
  kFlagDistorted = 1u << 4,
};

constexpr unsigned kAllFlags =
    kFlagNotPainting | kFlagPartialFrame | kFlagSketch | kFlagMonochrome | kFlagDistorted;

const char* flag_name(PaintingFlag f);
std::optional<PaintingFlag> flag_from_name(std::string_view name);

inline constexpr int kMinYear = 1200;
inline constexpr int kMaxYear = 2100;

struct PaintingRecord {
  std::string painting_id;
  std::string artist_id;
  StyleClass style = StyleClass::EarlyRenaissance;
  std::optional<int> year;
  std::string image_ref;
  unsigned flags = 0;
};

struct ArtistRecord {
  std::string artist_id;
  std::string name;
  StyleClass primary_style = StyleClass::EarlyRenaissance;
};

struct DatasetManifest {
  std::vector<PaintingRecord> paintings;
  std::map<std::string, ArtistRecord> artists;
};

enum class Partition { Train, Test };

struct SplitAssignment {
  std::map<std::string, Partition> assignment;
  double ratio = 0.0;
  std::uint64_t seed = 0;
};

// Exact manifest CSV header, in order.
inline constexpr std::string_view kManifestHeader =
    "painting_id,artist_id,artist_name,style,year,image_path,flags";

// Parses a manifest from CSV text. Collects every malformed row and throws
// one ValidationError listing them with line numbers (header is line 1).
DatasetManifest parse_manifest(std::string_view csv_text);

// Serializes back to the same CSV layout, paintings in manifest order.
std::string manifest_to_csv(const DatasetManifest& manifest);

struct Exclusion {
  std::string painting_id;
  std::string rule;
};

struct ExclusionReport {
  std::vector<Exclusion> exclusions;
};

// Returns the mean per-pixel channel spread (max-min over R,G,B) on a
// 0-255 scale, or nullopt when the image cannot be read.
using ImageProbe = std::function<std::optional<double>(const PaintingRecord&)>;

// Channel spread below this is treated as monochrome.
inline constexpr double kMonochromeSpreadThreshold = 8.0;

// Drops flagged paintings, and (when a probe is supplied) unreadable or
// monochrome images. Artists left without paintings are dropped too.
std::pair<DatasetManifest, ExclusionReport> clean(const DatasetManifest& manifest,
                                                  const ImageProbe& probe = nullptr);

// Deterministic uniform split: painting ids are sorted, shuffled with the
// seeded portable shuffle, and the first round(ratio*N) go to Train
// (round half up).
SplitAssignment split(const DatasetManifest& manifest, double ratio, std::uint64_t seed);

// Per-class painting counts, indexed by StyleClass.
std::array<std::size_t, kNumStyles> class_histogram(const DatasetManifest& manifest);

// Split file helpers (CSV: painting_id,partition).
std::string split_to_csv(const SplitAssignment& split);
SplitAssignment split_from_csv(std::string_view csv_text);

}  // namespace artstyle::core
