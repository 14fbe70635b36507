#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "artstyle/graph.hpp"
#include "artstyle/rng.hpp"

using namespace artstyle;

namespace {

embed::ArtistProfile profile(std::string id, std::vector<double> v,
                             std::optional<double> year = std::nullopt,
                             core::StyleClass style = core::StyleClass::Baroque) {
  embed::ArtistProfile p;
  p.artist_id = std::move(id);
  p.mean_vector = std::move(v);
  p.mean_year = year;
  p.n_paintings = 1;
  p.style = style;
  return p;
}

std::vector<double> angle_vec(double degrees) {
  const double r = degrees * 3.14159265358979323846 / 180.0;
  return {std::cos(r), std::sin(r), 0.0};
}

// independent O(n^2) construction: own cosine, own argmax, own edge set
std::set<std::pair<std::string, std::string>> oracle_edges(
    const std::vector<embed::ArtistProfile>& profiles) {
  const std::size_t n = profiles.size();
  auto cosine = [&](std::size_t i, std::size_t j) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t d = 0; d < profiles[i].mean_vector.size(); ++d) {
      ab += profiles[i].mean_vector[d] * profiles[j].mean_vector[d];
      aa += profiles[i].mean_vector[d] * profiles[i].mean_vector[d];
      bb += profiles[j].mean_vector[d] * profiles[j].mean_vector[d];
    }
    return ab / (std::sqrt(aa) * std::sqrt(bb));
  };
  std::set<std::pair<std::string, std::string>> edges;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = (i == 0) ? 1 : 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && cosine(i, j) > cosine(i, best)) best = j;
    }
    auto a = profiles[i].artist_id;
    auto b = profiles[best].artist_id;
    if (b < a) std::swap(a, b);
    edges.insert({a, b});
  }
  return edges;
}

std::vector<embed::ArtistProfile> random_profiles(rng::Engine& g, std::size_t n, int dim = 16) {
  std::vector<embed::ArtistProfile> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(dim);
    for (double& x : v) x = rng::uniform(g, 0.05, 1.0);
    char id[16];
    std::snprintf(id, sizeof(id), "a%03zu", i);
    out.push_back(profile(id, std::move(v), 1300.0 + static_cast<double>(rng::below(g, 700)),
                          static_cast<core::StyleClass>(rng::below(g, 9))));
  }
  return out;
}

}  // namespace

TEST_CASE("argmax selection on the three-artist fixture matrix") {
  const std::vector<std::vector<double>> sim{{1.0, 0.9, 0.1}, {0.9, 1.0, 0.8}, {0.1, 0.8, 1.0}};
  const auto [choice, ties] = graph::argmax_selection(sim);
  CHECK(choice == std::vector<std::size_t>{1, 0, 1});
  CHECK(ties.empty());
}

TEST_CASE("three-artist network matches the forced selection") {
  // unit vectors at 0, 25 and 80 degrees: cos(A,B) > cos(B,C) > cos(A,C)
  const std::vector<embed::ArtistProfile> profiles{
      profile("A", angle_vec(0)), profile("B", angle_vec(25)), profile("C", angle_vec(80))};
  const auto build = graph::build_similarity_network(profiles);
  REQUIRE(build.graph.edges.size() == 2);
  CHECK(build.graph.edges[0].a == "A");
  CHECK(build.graph.edges[0].b == "B");
  CHECK(build.graph.edges[1].a == "B");
  CHECK(build.graph.edges[1].b == "C");
  CHECK(build.graph.nodes[0].degree == 1);
  CHECK(build.graph.nodes[1].degree == 2);
  CHECK(build.graph.nodes[2].degree == 1);

  // exported json carries the same structure
  const auto json_text = graph::export_graph(build.graph, graph::Format::Json);
  const auto parsed = graph::influence_from_json(json_text);
  CHECK(parsed == build.graph);
}

TEST_CASE("two artists are forced into a single edge") {
  const std::vector<embed::ArtistProfile> profiles{profile("x", angle_vec(10)),
                                                   profile("y", angle_vec(40))};
  const auto build = graph::build_similarity_network(profiles);
  CHECK(build.graph.edges.size() == 1);
  CHECK(build.graph.nodes[0].degree == 1);
  CHECK(build.graph.nodes[1].degree == 1);
}

TEST_CASE("network equals the brute-force oracle on random profiles") {
  rng::Engine g(61);
  for (int trial = 0; trial < 25; ++trial) {
    const auto profiles = random_profiles(g, 2 + rng::below(g, 30));
    const auto build = graph::build_similarity_network(profiles);

    std::set<std::pair<std::string, std::string>> got;
    for (const auto& e : build.graph.edges) got.insert({e.a, e.b});
    CHECK(got == oracle_edges(profiles));

    // selection totality: between ceil(n/2) and n edges
    const std::size_t n = profiles.size();
    CHECK(build.graph.edges.size() >= (n + 1) / 2);
    CHECK(build.graph.edges.size() <= n);

    // degrees recount the incident edges
    std::map<std::string, int> degree;
    for (const auto& e : build.graph.edges) {
      degree[e.a]++;
      degree[e.b]++;
    }
    for (const auto& node : build.graph.nodes) {
      CHECK(node.degree == degree[node.artist_id]);
      CHECK(node.degree >= 1);
    }
  }
}

TEST_CASE("edge selection is invariant under positive scaling") {
  rng::Engine g(62);
  const auto profiles = random_profiles(g, 12);
  const auto base = graph::build_similarity_network(profiles);
  auto scaled = profiles;
  for (double& v : scaled[3].mean_vector) v *= 64.0;
  for (double& v : scaled[7].mean_vector) v *= 0.125;
  const auto after = graph::build_similarity_network(scaled);
  CHECK(base.graph.edges == after.graph.edges);
}

TEST_CASE("exact similarity ties are reported and broken by id") {
  // B and C identical: cos(A,B) == cos(A,C) bitwise
  const std::vector<embed::ArtistProfile> profiles{
      profile("A", angle_vec(0)), profile("B", angle_vec(30)), profile("C", angle_vec(30))};
  const auto build = graph::build_similarity_network(profiles);
  REQUIRE_FALSE(build.warnings.empty());
  bool has_ab = false;
  for (const auto& e : build.graph.edges) has_ab |= (e.a == "A" && e.b == "B");
  CHECK(has_ab);
}

TEST_CASE("zero-norm profiles are rejected") {
  const std::vector<embed::ArtistProfile> profiles{profile("A", {0.0, 0.0, 0.0}),
                                                   profile("B", angle_vec(30))};
  CHECK_THROWS_WITH_AS(graph::build_similarity_network(profiles), doctest::Contains("zero"),
                       ValidationError);
}

TEST_CASE("lineage directs edges by mean year") {
  SUBCASE("earlier to later") {
    const std::vector<embed::ArtistProfile> profiles{profile("late", angle_vec(10), 1650.0),
                                                     profile("early", angle_vec(20), 1601.0)};
    const auto build = graph::build_lineage(profiles);
    REQUIRE(build.graph.edges.size() == 1);
    CHECK(build.graph.edges[0].src == "early");
    CHECK(build.graph.edges[0].dst == "late");
  }
  SUBCASE("equal years fall back to id order and warn") {
    const std::vector<embed::ArtistProfile> profiles{profile("beta", angle_vec(10), 1700.0),
                                                     profile("alpha", angle_vec(20), 1700.0)};
    const auto build = graph::build_lineage(profiles);
    REQUIRE(build.graph.edges.size() == 1);
    CHECK(build.graph.edges[0].src == "alpha");
    CHECK_FALSE(build.warnings.empty());
  }
  SUBCASE("missing year is an error") {
    const std::vector<embed::ArtistProfile> profiles{profile("a", angle_vec(10), 1700.0),
                                                     profile("b", angle_vec(20))};
    CHECK_THROWS_AS(graph::build_lineage(profiles), ValidationError);
  }
}

TEST_CASE("lineage edges never run backwards in time and stay acyclic") {
  rng::Engine g(63);
  for (int trial = 0; trial < 20; ++trial) {
    auto profiles = random_profiles(g, 3 + rng::below(g, 25));
    const auto build = graph::build_lineage(profiles);

    std::map<std::string, double> year;
    for (const auto& node : build.graph.nodes) year[node.artist_id] = *node.mean_year;
    for (const auto& e : build.graph.edges) {
      CHECK(year.at(e.src) <= year.at(e.dst));
    }

    // independent cycle check over the directed edges (DFS)
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& e : build.graph.edges) adj[e.src].push_back(e.dst);
    std::set<std::string> done, active;
    bool cyclic = false;
    std::function<void(const std::string&)> dfs = [&](const std::string& v) {
      if (done.contains(v) || cyclic) return;
      if (active.contains(v)) {
        cyclic = true;
        return;
      }
      active.insert(v);
      for (const auto& w : adj[v]) dfs(w);
      active.erase(v);
      done.insert(v);
    };
    std::set<std::string> distinct_years;
    bool all_distinct = true;
    for (const auto& node : build.graph.nodes) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6f", *node.mean_year);
      all_distinct &= distinct_years.insert(buf).second;
    }
    if (all_distinct) {
      for (const auto& node : build.graph.nodes) dfs(node.artist_id);
      CHECK_FALSE(cyclic);
    }
  }
}

TEST_CASE("timeline layout keeps nodes apart") {
  SUBCASE("single node sits at its year") {
    graph::LineageGraph g;
    g.nodes.push_back({"solo", core::StyleClass::HighRenaissance, 1503.0, 0});
    const auto layout = graph::layout_timeline(g);
    CHECK(layout.at("solo").first == 1503.0);
  }
  SUBCASE("x order follows year order") {
    graph::LineageGraph g;
    g.nodes.push_back({"b", core::StyleClass::Baroque, 1610.0, 0});
    g.nodes.push_back({"a", core::StyleClass::Baroque, 1600.0, 0});
    const auto layout = graph::layout_timeline(g);
    CHECK(layout.at("a").first < layout.at("b").first);
  }
  SUBCASE("random layouts respect the minimum separation") {
    rng::Engine rg(64);
    graph::LineageGraph g;
    for (int i = 0; i < 50; ++i) {
      g.nodes.push_back({"a" + std::to_string(i),
                         core::StyleClass::Realism,
                         1400.0 + static_cast<double>(rng::below(rg, 120)), 0});
    }
    const auto layout = graph::layout_timeline(g);
    std::vector<std::pair<double, double>> placed;
    for (const auto& [id, xy] : layout) placed.push_back(xy);
    for (std::size_t i = 0; i < placed.size(); ++i) {
      for (std::size_t j = i + 1; j < placed.size(); ++j) {
        const bool x_ok = std::abs(placed[i].first - placed[j].first) >= graph::kTimelineYearWindow;
        const bool y_ok = std::abs(placed[i].second - placed[j].second) >= 1.0;
        CHECK((x_ok || y_ok));
      }
    }
  }
}

TEST_CASE("exports are deterministic and round-trip") {
  rng::Engine g(65);
  const auto profiles = random_profiles(g, 8);
  const auto influence = graph::build_similarity_network(profiles);
  const auto lineage = graph::build_lineage(profiles);

  SUBCASE("byte-identical re-export") {
    CHECK(graph::export_graph(influence.graph, graph::Format::Dot) ==
          graph::export_graph(influence.graph, graph::Format::Dot));
    CHECK(graph::export_graph(lineage.graph, graph::Format::Json) ==
          graph::export_graph(lineage.graph, graph::Format::Json));
  }

  SUBCASE("json round-trip equality") {
    const auto i2 = graph::influence_from_json(graph::export_graph(influence.graph, graph::Format::Json));
    CHECK(i2 == influence.graph);
    const auto l2 = graph::lineage_from_json(graph::export_graph(lineage.graph, graph::Format::Json));
    CHECK(l2 == lineage.graph);
  }

  SUBCASE("json key order is fixed") {
    const auto text = graph::export_graph(influence.graph, graph::Format::Json);
    CHECK(text.find("\"nodes\"") < text.find("\"edges\""));
    const auto id_pos = text.find("\"id\"");
    CHECK(id_pos < text.find("\"style\""));
    CHECK(text.find("\"style\"") < text.find("\"mean_year\""));
    CHECK(text.find("\"mean_year\"") < text.find("\"degree\""));
  }

  SUBCASE("dot structure") {
    const auto dot = graph::export_graph(lineage.graph, graph::Format::Dot);
    CHECK(dot.rfind("digraph lineage {", 0) == 0);
    CHECK(dot.find("->") != std::string::npos);
    CHECK(dot.find("weight=") != std::string::npos);
    const auto udot = graph::export_graph(influence.graph, graph::Format::Dot);
    CHECK(udot.rfind("graph influence {", 0) == 0);
    CHECK(udot.find("--") != std::string::npos);
  }
}

TEST_CASE("a single isolated node still exports valid dot") {
  graph::InfluenceGraph g;
  g.nodes.push_back({"hermit", core::StyleClass::PopArt, std::nullopt, 0});
  const auto dot = graph::export_graph(g, graph::Format::Dot);
  CHECK(dot.find("\"hermit\"") != std::string::npos);
  CHECK(dot.find("--") == std::string::npos);

  const auto back = graph::influence_from_json(graph::export_graph(g, graph::Format::Json));
  CHECK(back == g);
  CHECK_FALSE(back.nodes[0].mean_year.has_value());
}

TEST_CASE("index mapping labels nodes") {
  const auto mapping = graph::parse_index_mapping("index,artist_name\n99,Pablo Picasso\n92,Georges Braque\n");
  CHECK(mapping.at("Pablo Picasso") == "99");

  graph::InfluenceGraph g;
  g.nodes.push_back({"picasso", core::StyleClass::Cubism, 1910.0, 1});
  const graph::LabelMap labels{{"picasso", "99"}};
  const auto dot = graph::export_graph(g, graph::Format::Dot, labels);
  CHECK(dot.find("label=\"99\"") != std::string::npos);

  CHECK_THROWS_AS(graph::parse_index_mapping("wrong,header\n"), ValidationError);
}
