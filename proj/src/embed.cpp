#include "artstyle/embed.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

#include "artstyle/csv.hpp"
#include "artstyle/errors.hpp"
#include "artstyle/kernels.hpp"

namespace artstyle::embed {

namespace {

void check_dim(const std::vector<double>& v, const std::string& id) {
  if (v.size() != kEmbeddingDim) {
    throw ValidationError("embedding '" + id + "' has dimension " + std::to_string(v.size()) +
                          ", expected " + std::to_string(kEmbeddingDim));
  }
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t& pos) {
  if (pos + 4 > bytes.size()) throw ValidationError("embedding file: truncated");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  pos += 4;
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::vector<ArtistProfile> aggregate_artists(const std::vector<EmbeddingRecord>& embeddings,
                                             const core::DatasetManifest& manifest) {
  std::map<std::string, const core::PaintingRecord*> paintings;
  for (const auto& p : manifest.paintings) paintings[p.painting_id] = &p;

  struct Accumulator {
    std::vector<double> sum;
    double year_sum = 0.0;
    std::size_t year_count = 0;
    std::size_t count = 0;
  };
  std::map<std::string, Accumulator> by_artist;

  for (const auto& rec : embeddings) {
    check_dim(rec.vector, rec.painting_id);
    const auto it = paintings.find(rec.painting_id);
    if (it == paintings.end()) {
      throw ValidationError("embedding '" + rec.painting_id + "' does not resolve in the manifest");
    }
    Accumulator& acc = by_artist[it->second->artist_id];
    if (acc.sum.empty()) acc.sum.assign(kEmbeddingDim, 0.0);
    kernels::axpy(1.0, rec.vector.data(), acc.sum.data(), kEmbeddingDim);
    if (it->second->year) {
      acc.year_sum += *it->second->year;
      acc.year_count += 1;
    }
    acc.count += 1;
  }

  std::vector<ArtistProfile> profiles;
  profiles.reserve(by_artist.size());
  for (auto& [artist_id, acc] : by_artist) {
    ArtistProfile profile;
    profile.artist_id = artist_id;
    profile.mean_vector = std::move(acc.sum);
    kernels::scale(profile.mean_vector.data(), 1.0 / static_cast<double>(acc.count),
                   kEmbeddingDim);
    if (acc.year_count > 0) {
      profile.mean_year = acc.year_sum / static_cast<double>(acc.year_count);
    }
    profile.n_paintings = acc.count;
    profile.style = manifest.artists.at(artist_id).primary_style;
    profiles.push_back(std::move(profile));
  }
  return profiles;  // std::map iteration is already ordered by artist_id
}

double euclidean(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw ValidationError("euclidean: length mismatch (" + std::to_string(p.size()) + " vs " +
                          std::to_string(q.size()) + ")");
  }
  return std::sqrt(kernels::squared_distance(p.data(), q.data(), p.size()));
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ValidationError("cosine_similarity: length mismatch (" + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()) + ")");
  }
  const double norm_a = std::sqrt(kernels::dot(a.data(), a.data(), a.size()));
  const double norm_b = std::sqrt(kernels::dot(b.data(), b.data(), b.size()));
  if (norm_a == 0.0 || norm_b == 0.0) {
    throw ValidationError("cosine_similarity: zero-norm vector");
  }
  const double value = kernels::dot(a.data(), b.data(), a.size()) / (norm_a * norm_b);
  return std::clamp(value, -1.0, 1.0);
}

std::vector<std::vector<double>> pairwise(const std::vector<ArtistProfile>& profiles,
                                          Metric metric) {
  const std::size_t n = profiles.size();
  if (n < 2) throw ValidationError("pairwise: need at least two profiles");
  const double identity = (metric == Metric::Cosine) ? 1.0 : 0.0;
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) m[i][i] = identity;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = (metric == Metric::Cosine)
                           ? cosine_similarity(profiles[i].mean_vector, profiles[j].mean_vector)
                           : euclidean(profiles[i].mean_vector, profiles[j].mean_vector);
      m[i][j] = v;
      m[j][i] = v;
    }
  }
  return m;
}

FeatureTable feature_table_from_csv(std::string_view csv_text) {
  const auto lines = csv::split_lines(csv_text);
  if (lines.empty()) throw ValidationError("feature csv: empty input");
  const auto header = csv::split_line(lines[0]);
  if (header.size() < 2 || header[0] != "painting_id") {
    throw ValidationError("feature csv: header must start with painting_id,f0,...");
  }
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i] != "f" + std::to_string(i - 1)) {
      throw ValidationError("feature csv: expected column f" + std::to_string(i - 1) +
                            ", got '" + header[i] + "'");
    }
  }

  FeatureTable table;
  table.dim = header.size() - 1;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = csv::split_line(lines[i]);
    if (fields.size() != header.size()) {
      throw ValidationError("feature csv: line " + std::to_string(i + 1) + ": expected " +
                            std::to_string(header.size()) + " fields");
    }
    std::vector<double> row(table.dim);
    for (std::size_t j = 0; j < table.dim; ++j) {
      const std::string& f = fields[j + 1];
      char* end = nullptr;
      row[j] = std::strtod(f.c_str(), &end);
      if (end != f.c_str() + f.size() || f.empty() || !std::isfinite(row[j])) {
        throw ValidationError("feature csv: line " + std::to_string(i + 1) +
                              ": bad value '" + f + "'");
      }
    }
    table.ids.push_back(fields[0]);
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string feature_table_to_csv(const FeatureTable& table) {
  std::string out = "painting_id";
  for (std::size_t j = 0; j < table.dim; ++j) out += ",f" + std::to_string(j);
  out.push_back('\n');
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    out += csv::escape(table.ids[i]);
    for (double v : table.rows[i]) {
      out.push_back(',');
      out += format_value(v);
    }
    out.push_back('\n');
  }
  return out;
}

std::string embeddings_to_csv(const std::vector<EmbeddingRecord>& embeddings) {
  FeatureTable table;
  table.dim = kEmbeddingDim;
  for (const auto& rec : embeddings) {
    check_dim(rec.vector, rec.painting_id);
    table.ids.push_back(rec.painting_id);
    table.rows.push_back(rec.vector);
  }
  return feature_table_to_csv(table);
}

std::vector<EmbeddingRecord> embeddings_from_csv(std::string_view csv_text) {
  FeatureTable table = feature_table_from_csv(csv_text);
  if (table.dim != kEmbeddingDim) {
    throw ValidationError("embedding csv: dimension " + std::to_string(table.dim) +
                          ", expected " + std::to_string(kEmbeddingDim));
  }
  std::vector<EmbeddingRecord> out;
  out.reserve(table.ids.size());
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    out.push_back({std::move(table.ids[i]), std::move(table.rows[i])});
  }
  return out;
}

std::string embeddings_to_binary(const std::vector<EmbeddingRecord>& embeddings) {
  std::string out = "AEMB";
  put_u32(out, static_cast<std::uint32_t>(embeddings.size()));
  put_u32(out, static_cast<std::uint32_t>(kEmbeddingDim));
  for (const auto& rec : embeddings) {
    check_dim(rec.vector, rec.painting_id);
    put_u32(out, static_cast<std::uint32_t>(rec.painting_id.size()));
    out += rec.painting_id;
    for (double v : rec.vector) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  return out;
}

std::vector<EmbeddingRecord> embeddings_from_binary(std::string_view bytes) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != "AEMB") {
    throw ValidationError("embedding file: bad magic, expected 'AEMB'");
  }
  std::size_t pos = 4;
  const std::uint32_t count = get_u32(bytes, pos);
  const std::uint32_t dim = get_u32(bytes, pos);
  if (dim != kEmbeddingDim) {
    throw ValidationError("embedding file: dimension " + std::to_string(dim) + ", expected " +
                          std::to_string(kEmbeddingDim));
  }
  std::vector<EmbeddingRecord> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t id_len = get_u32(bytes, pos);
    if (pos + id_len > bytes.size()) throw ValidationError("embedding file: truncated id");
    EmbeddingRecord rec;
    rec.painting_id = std::string(bytes.substr(pos, id_len));
    pos += id_len;
    rec.vector.resize(kEmbeddingDim);
    for (double& v : rec.vector) {
      v = std::bit_cast<float>(get_u32(bytes, pos));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace artstyle::embed
