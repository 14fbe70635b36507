#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "artstyle/core.hpp"
#include "artstyle/embed.hpp"

namespace artstyle::graph {

struct Node {
  std::string artist_id;
  core::StyleClass style = core::StyleClass::EarlyRenaissance;
  std::optional<double> mean_year;
  int degree = 0;

  bool operator==(const Node&) const = default;
};

struct UndirectedEdge {
  std::string a, b;  // canonical: a < b
  double weight = 0.0;

  bool operator==(const UndirectedEdge&) const = default;
};

struct DirectedEdge {
  std::string src, dst;  // earlier mean year -> later
  double weight = 0.0;

  bool operator==(const DirectedEdge&) const = default;
};

// Each artist contributes one edge to its most cosine-similar peer; mutual
// selections collapse to a single edge. Node size is carried as the degree.
struct InfluenceGraph {
  std::vector<Node> nodes;
  std::vector<UndirectedEdge> edges;

  bool operator==(const InfluenceGraph&) const = default;
};

// Same selection rule with edges directed from the earlier mean production
// year to the later one.
struct LineageGraph {
  std::vector<Node> nodes;
  std::vector<DirectedEdge> edges;

  bool operator==(const LineageGraph&) const = default;
};

struct ArgmaxTie {
  std::size_t row, chosen, other;
};

// Selection core: for each row the most similar other index, exact ties
// resolved toward the smaller index and reported.
std::pair<std::vector<std::size_t>, std::vector<ArgmaxTie>> argmax_selection(
    const std::vector<std::vector<double>>& similarity);

struct InfluenceBuild {
  InfluenceGraph graph;
  std::vector<std::string> warnings;
};

struct LineageBuild {
  LineageGraph graph;
  std::vector<std::string> warnings;
};

InfluenceBuild build_similarity_network(const std::vector<embed::ArtistProfile>& profiles);
LineageBuild build_lineage(const std::vector<embed::ArtistProfile>& profiles);

// Nodes within this many years of each other are stacked on distinct rows.
inline constexpr double kTimelineYearWindow = 10.0;

// x = mean year; y = integer row chosen so nearby nodes never overlap.
std::map<std::string, std::pair<double, double>> layout_timeline(const LineageGraph& graph);

enum class Format { Dot, Json };

using LabelMap = std::map<std::string, std::string>;  // artist_id -> display label

// Deterministic byte-for-byte output. DOT nodes carry label, style class
// and a width scaled by degree; JSON follows
// {nodes:[{id,style,mean_year,degree}],edges:[{src,dst,weight}]}.
std::string export_graph(const InfluenceGraph& graph, Format format,
                         const LabelMap& labels = {});
std::string export_graph(const LineageGraph& graph, Format format, const LabelMap& labels = {});

InfluenceGraph influence_from_json(std::string_view text);
LineageGraph lineage_from_json(std::string_view text);

// Optional `index,artist_name` mapping; returns artist_name -> index label.
std::map<std::string, std::string> parse_index_mapping(std::string_view csv_text);

}  // namespace artstyle::graph
