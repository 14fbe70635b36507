#include "artstyle/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "artstyle/csv.hpp"
#include "artstyle/errors.hpp"
#include "artstyle/render.hpp"

#include <json.hpp>

namespace artstyle::graph {

namespace {

std::string format_weight(double w) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", w);
  return buf;
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

// Sorted copy of the profiles; validates ids and vectors.
std::vector<embed::ArtistProfile> prepare_profiles(
    const std::vector<embed::ArtistProfile>& profiles) {
  if (profiles.size() < 2) {
    throw ValidationError("network: need at least two artist profiles");
  }
  std::vector<embed::ArtistProfile> sorted = profiles;
  std::sort(sorted.begin(), sorted.end(),
            [](const embed::ArtistProfile& a, const embed::ArtistProfile& b) {
              return a.artist_id < b.artist_id;
            });
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    if (sorted[i].artist_id == sorted[i + 1].artist_id) {
      throw ValidationError("network: duplicate artist profile '" + sorted[i].artist_id + "'");
    }
  }
  for (const auto& p : sorted) {
    double norm_sq = 0.0;
    for (double v : p.mean_vector) norm_sq += v * v;
    if (norm_sq == 0.0) {
      throw ValidationError("network: artist '" + p.artist_id + "' has a zero mean vector");
    }
  }
  return sorted;
}

struct Selection {
  std::vector<embed::ArtistProfile> profiles;  // sorted by artist_id
  std::vector<std::vector<double>> similarity;
  std::vector<std::size_t> choice;
  std::vector<std::string> warnings;
};

Selection select_partners(const std::vector<embed::ArtistProfile>& input) {
  Selection sel;
  sel.profiles = prepare_profiles(input);
  sel.similarity = embed::pairwise(sel.profiles, embed::Metric::Cosine);
  auto [choice, ties] = argmax_selection(sel.similarity);
  sel.choice = std::move(choice);
  for (const auto& tie : ties) {
    sel.warnings.push_back("argmax tie for artist '" + sel.profiles[tie.row].artist_id +
                           "': chose '" + sel.profiles[tie.chosen].artist_id + "' over '" +
                           sel.profiles[tie.other].artist_id + "'");
  }
  return sel;
}

nlohmann::ordered_json node_to_json(const Node& node) {
  nlohmann::ordered_json j;
  j["id"] = node.artist_id;
  j["style"] = core::style_name(node.style);
  if (node.mean_year) {
    j["mean_year"] = *node.mean_year;
  } else {
    j["mean_year"] = nullptr;
  }
  j["degree"] = node.degree;
  return j;
}

Node node_from_json(const nlohmann::json& j) {
  Node node;
  node.artist_id = j.at("id").get<std::string>();
  const auto style = core::style_from_name(j.at("style").get<std::string>());
  if (!style) {
    throw ValidationError("graph json: unknown style '" + j.at("style").get<std::string>() + "'");
  }
  node.style = *style;
  if (!j.at("mean_year").is_null()) node.mean_year = j.at("mean_year").get<double>();
  node.degree = j.at("degree").get<int>();
  return node;
}

std::string node_label(const Node& node, const LabelMap& labels) {
  const auto it = labels.find(node.artist_id);
  return it != labels.end() ? it->second : node.artist_id;
}

std::string dot_nodes(const std::vector<Node>& nodes, const LabelMap& labels) {
  std::string out;
  for (const Node& node : nodes) {
    out += "  \"" + dot_escape(node.artist_id) + "\" [label=\"" +
           dot_escape(node_label(node, labels)) + "\", class=\"" +
           core::style_name(node.style) + "\", fillcolor=\"" + render::style_color(node.style) +
           "\", style=filled, width=" + format_weight(0.5 + 0.25 * node.degree) + "];\n";
  }
  return out;
}

template <typename Graph>
std::string graph_to_json_text(const Graph& graph, bool directed) {
  nlohmann::ordered_json j;
  j["nodes"] = nlohmann::ordered_json::array();
  for (const Node& node : graph.nodes) j["nodes"].push_back(node_to_json(node));
  j["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : graph.edges) {
    nlohmann::ordered_json je;
    if constexpr (std::is_same_v<std::decay_t<decltype(e)>, UndirectedEdge>) {
      je["src"] = e.a;
      je["dst"] = e.b;
    } else {
      je["src"] = e.src;
      je["dst"] = e.dst;
    }
    je["weight"] = e.weight;
    j["edges"].push_back(std::move(je));
  }
  (void)directed;
  return j.dump(2) + "\n";
}

}  // namespace

std::pair<std::vector<std::size_t>, std::vector<ArgmaxTie>> argmax_selection(
    const std::vector<std::vector<double>>& similarity) {
  const std::size_t n = similarity.size();
  if (n < 2) throw ValidationError("argmax_selection: need at least two rows");
  std::vector<std::size_t> choice(n);
  std::vector<ArgmaxTie> ties;
  for (std::size_t i = 0; i < n; ++i) {
    if (similarity[i].size() != n) throw ValidationError("argmax_selection: ragged matrix");
    std::size_t best = (i == 0) ? 1 : 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && similarity[i][j] > similarity[i][best]) best = j;
    }
    for (std::size_t j = best + 1; j < n; ++j) {
      if (j != i && similarity[i][j] == similarity[i][best]) ties.push_back({i, best, j});
    }
    choice[i] = best;
  }
  return {std::move(choice), std::move(ties)};
}

InfluenceBuild build_similarity_network(const std::vector<embed::ArtistProfile>& profiles) {
  Selection sel = select_partners(profiles);
  const std::size_t n = sel.profiles.size();

  std::set<std::pair<std::size_t, std::size_t>> edge_set;
  for (std::size_t i = 0; i < n; ++i) {
    edge_set.insert({std::min(i, sel.choice[i]), std::max(i, sel.choice[i])});
  }

  InfluenceBuild out;
  out.warnings = std::move(sel.warnings);
  std::vector<int> degree(n, 0);
  for (const auto& [a, b] : edge_set) {
    out.graph.edges.push_back(
        {sel.profiles[a].artist_id, sel.profiles[b].artist_id, sel.similarity[a][b]});
    degree[a] += 1;
    degree[b] += 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.graph.nodes.push_back(
        {sel.profiles[i].artist_id, sel.profiles[i].style, sel.profiles[i].mean_year, degree[i]});
  }
  return out;
}

LineageBuild build_lineage(const std::vector<embed::ArtistProfile>& profiles) {
  for (const auto& p : profiles) {
    if (!p.mean_year) {
      throw ValidationError("lineage: artist '" + p.artist_id + "' has no mean production year");
    }
  }
  Selection sel = select_partners(profiles);
  const std::size_t n = sel.profiles.size();

  std::set<std::pair<std::size_t, std::size_t>> edge_set;  // (src, dst), year-directed
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t a = i, b = sel.choice[i];
    const double ya = *sel.profiles[a].mean_year;
    const double yb = *sel.profiles[b].mean_year;
    if (ya > yb) std::swap(a, b);
    if (ya == yb) {
      // equal mean years: direct from the lexicographically smaller id
      if (sel.profiles[a].artist_id > sel.profiles[b].artist_id) std::swap(a, b);
      sel.warnings.push_back("equal mean years for '" + sel.profiles[a].artist_id + "' and '" +
                             sel.profiles[b].artist_id + "': edge directed by artist id");
    }
    edge_set.insert({a, b});
  }

  LineageBuild out;
  out.warnings = std::move(sel.warnings);
  std::vector<int> degree(n, 0);
  for (const auto& [a, b] : edge_set) {
    out.graph.edges.push_back(
        {sel.profiles[a].artist_id, sel.profiles[b].artist_id, sel.similarity[a][b]});
    degree[a] += 1;
    degree[b] += 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.graph.nodes.push_back(
        {sel.profiles[i].artist_id, sel.profiles[i].style, sel.profiles[i].mean_year, degree[i]});
  }
  return out;
}

std::map<std::string, std::pair<double, double>> layout_timeline(const LineageGraph& graph) {
  std::vector<const Node*> nodes;
  for (const Node& node : graph.nodes) {
    if (!node.mean_year) {
      throw ValidationError("layout_timeline: node '" + node.artist_id + "' lacks a mean year");
    }
    nodes.push_back(&node);
  }
  std::sort(nodes.begin(), nodes.end(), [](const Node* a, const Node* b) {
    if (*a->mean_year != *b->mean_year) return *a->mean_year < *b->mean_year;
    return a->artist_id < b->artist_id;
  });

  std::map<std::string, std::pair<double, double>> layout;
  std::vector<double> row_last_x;  // rightmost occupied x per row
  for (const Node* node : nodes) {
    const double x = *node->mean_year;
    std::size_t row = 0;
    while (row < row_last_x.size() && x - row_last_x[row] < kTimelineYearWindow) ++row;
    if (row == row_last_x.size()) row_last_x.push_back(x);
    row_last_x[row] = x;
    layout[node->artist_id] = {x, static_cast<double>(row)};
  }
  return layout;
}

std::string export_graph(const InfluenceGraph& graph, Format format, const LabelMap& labels) {
  if (format == Format::Json) return graph_to_json_text(graph, false);
  std::string out = "graph influence {\n  node [shape=circle];\n";
  out += dot_nodes(graph.nodes, labels);
  for (const auto& e : graph.edges) {
    out += "  \"" + dot_escape(e.a) + "\" -- \"" + dot_escape(e.b) +
           "\" [weight=" + format_weight(e.weight) + "];\n";
  }
  out += "}\n";
  return out;
}

std::string export_graph(const LineageGraph& graph, Format format, const LabelMap& labels) {
  if (format == Format::Json) return graph_to_json_text(graph, true);
  std::string out = "digraph lineage {\n  rankdir=LR;\n  node [shape=circle];\n";
  out += dot_nodes(graph.nodes, labels);
  for (const auto& e : graph.edges) {
    out += "  \"" + dot_escape(e.src) + "\" -> \"" + dot_escape(e.dst) +
           "\" [weight=" + format_weight(e.weight) + "];\n";
  }
  out += "}\n";
  return out;
}

namespace {

template <typename Graph, typename EdgeFn>
Graph graph_from_json_text(std::string_view text, EdgeFn&& make_edge) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("graph json: ") + e.what());
  }
  Graph graph;
  for (const auto& jn : j.at("nodes")) graph.nodes.push_back(node_from_json(jn));
  for (const auto& je : j.at("edges")) {
    graph.edges.push_back(make_edge(je.at("src").get<std::string>(),
                                    je.at("dst").get<std::string>(),
                                    je.at("weight").get<double>()));
  }
  return graph;
}

}  // namespace

InfluenceGraph influence_from_json(std::string_view text) {
  return graph_from_json_text<InfluenceGraph>(text, [](std::string a, std::string b, double w) {
    return UndirectedEdge{std::move(a), std::move(b), w};
  });
}

LineageGraph lineage_from_json(std::string_view text) {
  return graph_from_json_text<LineageGraph>(text, [](std::string a, std::string b, double w) {
    return DirectedEdge{std::move(a), std::move(b), w};
  });
}

std::map<std::string, std::string> parse_index_mapping(std::string_view csv_text) {
  const auto lines = csv::split_lines(csv_text);
  if (lines.empty() || csv::split_line(lines[0]) != std::vector<std::string>{"index", "artist_name"}) {
    throw ValidationError("index mapping: expected header 'index,artist_name'");
  }
  std::map<std::string, std::string> mapping;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = csv::split_line(lines[i]);
    if (fields.size() != 2) {
      throw ValidationError("index mapping: line " + std::to_string(i + 1) + ": malformed row");
    }
    mapping[fields[1]] = fields[0];
  }
  return mapping;
}

}  // namespace artstyle::graph
