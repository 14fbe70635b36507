#include "artstyle/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "artstyle/csv.hpp"
#include "artstyle/rng.hpp"

namespace artstyle::core {

namespace {

constexpr const char* kStyleNames[kNumStyles] = {
    "EarlyRenaissance", "HighRenaissance", "Baroque", "Realism", "Impressionism",
    "Cubism",           "AbstractArt",     "PopArt",  "Ukiyoe",
};

struct FlagEntry {
  PaintingFlag flag;
  const char* name;
};

constexpr FlagEntry kFlagTable[] = {
    {kFlagNotPainting, "not_painting"}, {kFlagPartialFrame, "partial_frame"},
    {kFlagSketch, "sketch"},            {kFlagMonochrome, "monochrome"},
    {kFlagDistorted, "distorted"},
};

std::optional<int> parse_int(std::string_view text) {
  int value = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return value;
}

std::string flags_to_string(unsigned flags) {
  std::string out;
  for (const auto& entry : kFlagTable) {
    if (flags & entry.flag) {
      if (!out.empty()) out.push_back('|');
      out += entry.name;
    }
  }
  return out;
}

}  // namespace

const char* style_name(StyleClass s) { return kStyleNames[static_cast<int>(s)]; }

std::optional<StyleClass> style_from_name(std::string_view name) {
  for (int i = 0; i < kNumStyles; ++i) {
    if (name == kStyleNames[i]) return static_cast<StyleClass>(i);
  }
  return std::nullopt;
}

const char* flag_name(PaintingFlag f) {
  for (const auto& entry : kFlagTable) {
    if (entry.flag == f) return entry.name;
  }
  return "unknown";
}

std::optional<PaintingFlag> flag_from_name(std::string_view name) {
  for (const auto& entry : kFlagTable) {
    if (name == entry.name) return entry.flag;
  }
  return std::nullopt;
}

DatasetManifest parse_manifest(std::string_view csv_text) {
  const auto lines = csv::split_lines(csv_text);
  if (lines.empty()) {
    throw ValidationError("manifest: empty input, expected header '" +
                          std::string(kManifestHeader) + "'");
  }

  std::vector<std::string> errors;
  constexpr std::size_t kMaxReportedErrors = 50;
  auto report = [&errors](std::size_t line_no, const std::string& what) {
    if (errors.size() < kMaxReportedErrors) {
      errors.push_back("line " + std::to_string(line_no) + ": " + what);
    }
  };

  const auto expected = csv::split_line(kManifestHeader);
  const auto header = csv::split_line(lines[0]);
  if (header != expected) {
    std::string what = "bad header, expected '" + std::string(kManifestHeader) + "'";
    for (const auto& col : expected) {
      if (std::count(header.begin(), header.end(), col) == 0) what += "; missing column '" + col + "'";
      if (std::count(header.begin(), header.end(), col) > 1) what += "; duplicate column '" + col + "'";
    }
    throw ValidationError("manifest: line 1: " + what);
  }

  DatasetManifest manifest;
  std::map<std::string, std::size_t> seen_ids;  // painting_id -> line
  std::map<std::string, std::size_t> artist_lines;

  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (lines[i].empty()) continue;
    const auto fields = csv::split_line(lines[i]);
    if (fields.size() != expected.size()) {
      report(line_no, "expected " + std::to_string(expected.size()) + " fields, got " +
                          std::to_string(fields.size()));
      continue;
    }

    PaintingRecord rec;
    rec.painting_id = fields[0];
    rec.artist_id = fields[1];
    const std::string& artist_name = fields[2];
    rec.image_ref = fields[5];
    bool row_ok = true;

    if (rec.painting_id.empty()) {
      report(line_no, "empty painting_id");
      row_ok = false;
    } else if (auto it = seen_ids.find(rec.painting_id); it != seen_ids.end()) {
      report(line_no, "duplicate painting_id '" + rec.painting_id + "' (first seen on line " +
                          std::to_string(it->second) + ")");
      row_ok = false;
    }
    if (rec.artist_id.empty()) {
      report(line_no, "empty artist_id");
      row_ok = false;
    }

    if (auto style = style_from_name(fields[3])) {
      rec.style = *style;
    } else {
      report(line_no, "unknown style '" + fields[3] + "'");
      row_ok = false;
    }

    if (!fields[4].empty()) {
      if (auto year = parse_int(fields[4])) {
        if (*year < kMinYear || *year > kMaxYear) {
          report(line_no, "year " + fields[4] + " outside [" + std::to_string(kMinYear) + ", " +
                              std::to_string(kMaxYear) + "]");
          row_ok = false;
        } else {
          rec.year = *year;
        }
      } else {
        report(line_no, "non-integer year '" + fields[4] + "'");
        row_ok = false;
      }
    }

    if (!fields[6].empty()) {
      std::string_view rest = fields[6];
      while (!rest.empty()) {
        const std::size_t bar = rest.find('|');
        const std::string_view token = rest.substr(0, bar);
        rest = (bar == std::string_view::npos) ? std::string_view{} : rest.substr(bar + 1);
        if (auto flag = flag_from_name(token)) {
          rec.flags |= *flag;
        } else {
          report(line_no, "unknown flag '" + std::string(token) + "'");
          row_ok = false;
        }
      }
    }

    if (!row_ok) continue;

    if (auto it = manifest.artists.find(rec.artist_id); it != manifest.artists.end()) {
      const ArtistRecord& existing = it->second;
      if (existing.primary_style != rec.style) {
        report(line_no, "artist '" + rec.artist_id + "' has style " +
                            style_name(rec.style) + " here but " +
                            style_name(existing.primary_style) + " on line " +
                            std::to_string(artist_lines[rec.artist_id]));
        continue;
      }
      if (existing.name != artist_name) {
        report(line_no, "artist '" + rec.artist_id + "' named '" + artist_name +
                            "' here but '" + existing.name + "' on line " +
                            std::to_string(artist_lines[rec.artist_id]));
        continue;
      }
    } else {
      manifest.artists[rec.artist_id] = ArtistRecord{rec.artist_id, artist_name, rec.style};
      artist_lines[rec.artist_id] = line_no;
    }

    seen_ids[rec.painting_id] = line_no;
    manifest.paintings.push_back(std::move(rec));
  }

  if (!errors.empty()) {
    std::string what = "manifest: " + std::to_string(errors.size()) + " malformed row(s)";
    if (errors.size() == kMaxReportedErrors) what += " (or more)";
    for (const auto& e : errors) {
      what += "\n  ";
      what += e;
    }
    throw ValidationError(what);
  }
  return manifest;
}

std::string manifest_to_csv(const DatasetManifest& manifest) {
  std::string out(kManifestHeader);
  out.push_back('\n');
  for (const auto& p : manifest.paintings) {
    const ArtistRecord& artist = manifest.artists.at(p.artist_id);
    out += csv::escape(p.painting_id);
    out.push_back(',');
    out += csv::escape(p.artist_id);
    out.push_back(',');
    out += csv::escape(artist.name);
    out.push_back(',');
    out += style_name(p.style);
    out.push_back(',');
    if (p.year) out += std::to_string(*p.year);
    out.push_back(',');
    out += csv::escape(p.image_ref);
    out.push_back(',');
    out += flags_to_string(p.flags);
    out.push_back('\n');
  }
  return out;
}

std::pair<DatasetManifest, ExclusionReport> clean(const DatasetManifest& manifest,
                                                  const ImageProbe& probe) {
  DatasetManifest kept;
  ExclusionReport report;
  for (const auto& p : manifest.paintings) {
    if (p.flags != 0) {
      report.exclusions.push_back({p.painting_id, flags_to_string(p.flags)});
      continue;
    }
    if (probe) {
      std::optional<double> spread;
      try {
        spread = probe(p);
      } catch (const std::exception&) {
        spread = std::nullopt;
      }
      if (!spread) {
        report.exclusions.push_back({p.painting_id, "unreadable"});
        continue;
      }
      if (*spread < kMonochromeSpreadThreshold) {
        report.exclusions.push_back({p.painting_id, "monochrome"});
        continue;
      }
    }
    kept.paintings.push_back(p);
  }
  for (const auto& p : kept.paintings) {
    kept.artists[p.artist_id] = manifest.artists.at(p.artist_id);
  }
  return {std::move(kept), std::move(report)};
}

SplitAssignment split(const DatasetManifest& manifest, double ratio, std::uint64_t seed) {
  if (manifest.paintings.empty()) throw ValidationError("split: empty manifest");
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ValidationError("split: ratio must lie in (0, 1), got " + std::to_string(ratio));
  }

  std::vector<std::string> ids;
  ids.reserve(manifest.paintings.size());
  for (const auto& p : manifest.paintings) ids.push_back(p.painting_id);
  std::sort(ids.begin(), ids.end());

  rng::Engine engine(seed);
  rng::shuffle(ids, engine);

  const auto n = static_cast<double>(ids.size());
  const auto n_train = static_cast<std::size_t>(std::floor(ratio * n + 0.5));

  SplitAssignment result;
  result.ratio = ratio;
  result.seed = seed;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    result.assignment[ids[i]] = (i < n_train) ? Partition::Train : Partition::Test;
  }
  return result;
}

std::array<std::size_t, kNumStyles> class_histogram(const DatasetManifest& manifest) {
  std::array<std::size_t, kNumStyles> counts{};
  for (const auto& p : manifest.paintings) counts[static_cast<int>(p.style)]++;
  return counts;
}

std::string split_to_csv(const SplitAssignment& split) {
  std::string out = "painting_id,partition\n";
  for (const auto& [id, part] : split.assignment) {
    out += csv::escape(id);
    out.push_back(',');
    out += (part == Partition::Train) ? "train" : "test";
    out.push_back('\n');
  }
  return out;
}

SplitAssignment split_from_csv(std::string_view csv_text) {
  const auto lines = csv::split_lines(csv_text);
  if (lines.empty() || csv::split_line(lines[0]) != std::vector<std::string>{"painting_id", "partition"}) {
    throw ValidationError("split file: expected header 'painting_id,partition'");
  }
  SplitAssignment result;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = csv::split_line(lines[i]);
    if (fields.size() != 2 || (fields[1] != "train" && fields[1] != "test")) {
      throw ValidationError("split file: line " + std::to_string(i + 1) + ": malformed row");
    }
    result.assignment[fields[0]] =
        (fields[1] == "train") ? Partition::Train : Partition::Test;
  }
  return result;
}

}  // namespace artstyle::core
