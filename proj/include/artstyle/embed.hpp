#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "artstyle/core.hpp"

namespace artstyle::embed {

inline constexpr std::size_t kEmbeddingDim = 512;

struct EmbeddingRecord {
  std::string painting_id;
  std::vector<double> vector;  // length 512
};

// Mean feature vector and mean production year over an artist's embedded
// paintings.
struct ArtistProfile {
  std::string artist_id;
  std::vector<double> mean_vector;
  std::optional<double> mean_year;
  std::size_t n_paintings = 0;
  core::StyleClass style = core::StyleClass::EarlyRenaissance;
};

// One profile per artist with at least one embedded painting, ordered by
// artist_id. Every painting_id must resolve in the manifest.
std::vector<ArtistProfile> aggregate_artists(const std::vector<EmbeddingRecord>& embeddings,
                                             const core::DatasetManifest& manifest);

double euclidean(std::span<const double> p, std::span<const double> q);

// (A.B)/(|A||B|), clamped to [-1, 1]. Zero-norm inputs are an error
// rather than a silent 0: a silent value would corrupt the argmax linkage
// downstream.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

enum class Metric { Euclidean, Cosine };

// Symmetric matrix, each unordered pair computed once; the diagonal holds
// the metric's identity value (0 for euclidean, 1 for cosine).
std::vector<std::vector<double>> pairwise(const std::vector<ArtistProfile>& profiles,
                                          Metric metric);

// Generic feature table (header painting_id,f0,...,fK). The embedding
// readers below additionally require exactly 512 columns.
struct FeatureTable {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::size_t dim = 0;
};

FeatureTable feature_table_from_csv(std::string_view csv_text);
std::string feature_table_to_csv(const FeatureTable& table);

std::string embeddings_to_csv(const std::vector<EmbeddingRecord>& embeddings);
std::vector<EmbeddingRecord> embeddings_from_csv(std::string_view csv_text);

// Binary format: magic "AEMB", little-endian u32 record count, u32
// dimension (must be 512), then per record u32 id length, id bytes,
// float32 values.
std::string embeddings_to_binary(const std::vector<EmbeddingRecord>& embeddings);
std::vector<EmbeddingRecord> embeddings_from_binary(std::string_view bytes);

}  // namespace artstyle::embed
