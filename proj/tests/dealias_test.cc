#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "narrative/corpus.h"
#include "narrative/dealias.h"
#include "narrative/error.h"
#include "narrative/random.h"
#include "narrative/utf8.h"
#include "oracles.h"

namespace narrative {
namespace {

std::vector<std::string> SurfacesOf(const std::vector<Mention> &mentions) {
  std::vector<std::string> out;
  for (const auto &m : mentions) out.push_back(m.surface);
  return out;
}

std::vector<Mention> MentionsOf(const std::vector<std::string> &surfaces) {
  std::vector<Mention> out;
  for (size_t i = 0; i < surfaces.size(); ++i) {
    Mention m;
    m.surface = surfaces[i];
    m.token_span = {i, i + 1};
    out.push_back(m);
  }
  return out;
}

DistanceMatrix RandomMetric(Rng &rng, size_t n) {
  // Points on a line plus a random integer lattice: a genuine metric with
  // frequent exact ties at the eps boundary.
  std::vector<double> x(n), y(n);
  for (size_t i = 0; i < n; ++i) {
    x[i] = static_cast<double>(UniformIndex(rng, 8));
    y[i] = static_cast<double>(UniformIndex(rng, 8));
  }
  DistanceMatrix d(n, std::vector<double>(n));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) d[i][j] = std::abs(x[i] - x[j]) + std::abs(y[i] - y[j]);
  }
  return d;
}

// Reference values from Python's difflib.SequenceMatcher, taking the larger
// matched count of both argument orders.
TEST_CASE("sequence distance matches difflib reference values") {
  struct Case {
    const char *a, *b;
    double distance;
  };
  const Case cases[] = {
      {"ron", "ronald", 0.33333333333333337},
      {"ron", "ron weasley", 0.5714285714285714},
      {"ronald", "ron weasley", 0.4117647058823529},
      {"harry", "zed", 1.0},
      {"harry potter", "james potter", 0.33333333333333337},
      {"harry potter", "ron weasley", 0.7391304347826086},
      {"james potter", "ron weasley", 0.8260869565217391},
      {"xavier", "yolanda", 0.8461538461538461},
      {"yolanda", "zachary", 0.7142857142857143},
      {"abcab", "bacba", 0.4},
      {"mrs. weasley", "mr. weasley", 0.04347826086956519},
      {"zoë", "zoe", 0.33333333333333337},
  };
  for (const auto &c : cases) {
    CAPTURE(c.a);
    CAPTURE(c.b);
    CHECK(SeqMatchDistance(c.a, c.b) == doctest::Approx(c.distance).epsilon(1e-12));
  }
  CHECK(std::abs(SeqMatchDistance("ron", "ronald") - (1.0 - 6.0 / 9.0)) < 1e-9);
  CHECK(SeqMatchDistance("Ron", "RON") == 0.0);
  CHECK(SeqMatchDistance("", "") == 0.0);
  CHECK(SeqMatchDistance("", "a") == 1.0);
}

TEST_CASE("one-directional matching follows difflib block order") {
  // difflib: "harry potter" vs "ron weasley" matches 2 one way, 3 the other.
  CHECK(MatchingCharacters(U"harry potter", U"ron weasley") == 2);
  CHECK(MatchingCharacters(U"ron weasley", U"harry potter") == 3);
}

TEST_CASE("sequence distance agrees with the exhaustive oracle") {
  Rng rng(5);
  const std::u32string alphabet = U"abcde é";
  for (int trial = 0; trial < 2000; ++trial) {
    std::u32string a, b;
    for (size_t i = UniformIndex(rng, 9); i > 0; --i) a += alphabet[UniformIndex(rng, alphabet.size())];
    for (size_t i = UniformIndex(rng, 9); i > 0; --i) b += alphabet[UniformIndex(rng, alphabet.size())];
    std::string ua, ub;
    utf8::Append(a, ua);
    utf8::Append(b, ub);
    CAPTURE(ua);
    CAPTURE(ub);
    CHECK(MatchingCharacters(a, b) == oracle::Matches(a, b));
    CHECK(SeqMatchDistance(ua, ub) == oracle::SeqDistance(a, b));
    CHECK(SeqMatchDistance(ua, ub) == SeqMatchDistance(ub, ua));
    CHECK(SeqMatchDistance(ua, ua) == 0.0);
  }
}

TEST_CASE("dbscan small example with border and noise") {
  // 0-1-2 chain of cores, 3 is a border of 2, 4 is isolated.
  const DistanceMatrix d = {
      {0, 1, 2, 3, 9}, {1, 0, 1, 2, 9}, {2, 1, 0, 1, 9},
      {3, 2, 1, 0, 9}, {9, 9, 9, 9, 0}};
  const auto r = Dbscan(d, 1.0, 3);
  CHECK(r.clusters == std::vector<std::vector<size_t>>{{0, 1, 2, 3}});
  CHECK(r.noise == std::vector<size_t>{4});
  const auto singletons = Dbscan(d, 0.5, 1);
  CHECK(singletons.clusters.size() == 5);
  CHECK(singletons.noise.empty());
  CHECK_THROWS_AS(Dbscan(d, -0.1, 1), ParameterError);
  CHECK_THROWS_AS(Dbscan(d, 0.1, 0), ParameterError);
}

TEST_CASE("dbscan border point joins the cluster with the lowest seed") {
  // Points on a line at 0, 0.5, 1, 2, 3, 3.5, 4 with eps 1 and min_pts 4:
  // the cores are 2 and 4, and point 3 is reachable from both.
  const std::vector<double> x = {0, 0.5, 1, 2, 3, 3.5, 4};
  DistanceMatrix d(x.size(), std::vector<double>(x.size()));
  for (size_t i = 0; i < x.size(); ++i) {
    for (size_t j = 0; j < x.size(); ++j) d[i][j] = std::abs(x[i] - x[j]);
  }
  const auto r = Dbscan(d, 1.0, 4);
  CHECK(r.clusters == std::vector<std::vector<size_t>>{{0, 1, 2, 3}, {4, 5, 6}});
  CHECK(r.clusters == oracle::Dbscan(d, 1.0, 4).clusters);
}

TEST_CASE("dbscan matches the reachability oracle on random instances") {
  Rng rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const size_t n = UniformIndex(rng, 13);
    const auto d = RandomMetric(rng, n);
    const double eps = static_cast<double>(UniformIndex(rng, 5));
    const size_t min_pts = 1 + UniformIndex(rng, 4);
    const auto got = Dbscan(d, eps, min_pts);
    const auto want = oracle::Dbscan(d, eps, min_pts);
    CHECK(got.clusters == want.clusters);
    CHECK(got.noise == want.noise);
    // Partition property.
    std::vector<int> seen(n, 0);
    for (const auto &c : got.clusters) for (size_t i : c) ++seen[i];
    for (size_t i : got.noise) ++seen[i];
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
  }
}

TEST_CASE("heuristic mentions") {
  const auto doc = MakeDocument(
      "h", "Then Harry Potter met Ron's owl. Harry left. Mr. Weasley came.");
  const auto mentions = HeuristicMentions(doc);
  CHECK(SurfacesOf(mentions) ==
        std::vector<std::string>{"Harry Potter", "Ron", "Weasley"});
  CHECK(mentions[0].token_span == Range{1, 3});
  CHECK(mentions[0].sentence_index == 0);
  CHECK(doc.raw.substr(mentions[1].char_begin,
                       mentions[1].char_end - mentions[1].char_begin) == "Ron's");
  CHECK(mentions[2].sentence_index == 2);
  // Only the first word of a sentence-initial run is dropped.
  const auto later = HeuristicMentions(MakeDocument("l", "Later Lily Potter ran."));
  CHECK(SurfacesOf(later) == std::vector<std::string>{"Lily Potter"});
  CHECK(IsStopword("The"));
  CHECK_FALSE(IsStopword("Harry"));
}

TEST_CASE("annotation file parsing") {
  const auto doc = MakeDocument("a", "Then Harry Potter met Ron.");
  const auto mentions = ParseAnnotations(doc, "1\t3\tHarry Potter\n\n4\t5\tRon\n");
  REQUIRE(mentions.size() == 2);
  CHECK(mentions[0].surface == "Harry Potter");
  CHECK(mentions[1].token_span == Range{4, 5});
  CHECK(mentions[1].char_begin == 22);
  try {
    ParseAnnotations(doc, "1\t3\tHarry Potter\n4\tx\tRon\n");
    FAIL("expected a parse error");
  } catch (const ParseError &e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(ParseAnnotations(doc, "4\t99\tRon\n"), ParseError);
  CHECK_THROWS_AS(ParseAnnotations(doc, "3\t3\tRon\n"), ParseError);
  const std::string annotations = "4\t5\tRon\n";
  CHECK(MentionCandidates(doc, MentionMode::kExternal, &annotations).size() == 1);
  CHECK_THROWS_AS(MentionCandidates(doc, MentionMode::kExternal, nullptr),
                  ParameterError);
}

TEST_CASE("alias clustering") {
  const auto mentions = MentionsOf(
      {"Ron", "Ronald", "Ron", "Ron Weasley", "Harry", "Harry", "Harry", "Zed"});
  // d(ron, ronald) = 1/3, d(ronald, ron weasley) = 0.4118,
  // d(ron, ron weasley) = 0.5714.
  const auto at40 = BuildClusters(mentions, 0.40, 1);
  REQUIRE(at40.size() == 4);
  CHECK(at40[0].canonical == "harry");
  CHECK(at40[0].mentions.size() == 3);
  CHECK(at40[1].canonical == "ron");
  CHECK(at40[1].aliases == std::set<std::string>{"Ron", "Ronald"});
  CHECK(at40[2].canonical == "ron_weasley");
  CHECK(at40[3].canonical == "zed");
  for (size_t i = 0; i < at40.size(); ++i) CHECK(at40[i].id == static_cast<int>(i));

  const auto at42 = BuildClusters(mentions, 0.42, 1);
  REQUIRE(at42.size() == 3);
  CHECK(at42[0].canonical == "ron");
  CHECK(at42[0].aliases == std::set<std::string>{"Ron", "Ron Weasley", "Ronald"});
  CHECK(at42[0].mentions.size() == 4);

  // With min_pts 2 the lone "Zed" is noise and still gets its own cluster.
  const auto strict = BuildClusters(mentions, 0.40, 2);
  CHECK(strict.back().canonical == "zed");
  CHECK_THROWS_AS(BuildClusters({}, 0.4, 1), ParameterError);
}

TEST_CASE("every mention lands in exactly one cluster") {
  Rng rng(23);
  const std::vector<std::string> names = {"Ron", "Ronald", "Harry", "Harry Potter",
                                          "James Potter", "Jo", "Josephine", "Amy"};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> surfaces;
    for (size_t i = 1 + UniformIndex(rng, 20); i > 0; --i) {
      surfaces.push_back(names[UniformIndex(rng, names.size())]);
    }
    const auto clusters = BuildClusters(MentionsOf(surfaces), 0.1 * UniformIndex(rng, 6), 1);
    size_t total = 0;
    std::set<std::string> canonicals;
    for (const auto &c : clusters) {
      total += c.mentions.size();
      canonicals.insert(c.canonical);
      for (const auto &m : c.mentions) CHECK(c.aliases.count(m.surface) == 1);
    }
    CHECK(total == surfaces.size());
    CHECK(canonicals.size() == clusters.size());
  }
}

TEST_CASE("canonical tokens and longest alias") {
  CHECK(CanonicalToken("Ron Weasley") == "ron_weasley");
  CHECK(CanonicalToken("Mrs. Weasley") == "mrs_weasley");
  CHECK(CanonicalToken("Zoë") == "zoë");
  CharacterCluster c;
  c.aliases = {"Ron", "Ronald", "Ronnie"};
  CHECK(LongestAlias(c) == "Ronald");
}

TEST_CASE("family clusters") {
  const auto clusters = BuildClusters(
      MentionsOf({"Harry Potter", "James Potter", "Ron Weasley"}), 0.3, 1);
  REQUIRE(clusters.size() == 3);
  auto id_of = [&](const std::string &canonical) {
    for (const auto &c : clusters) if (c.canonical == canonical) return c.id;
    return -1;
  };
  const auto families = FamilyClusters(clusters, 0.6, 2, 0.3);
  REQUIRE(families.size() == 1);
  CHECK(families[0].members ==
        std::set<int>{id_of("harry_potter"), id_of("james_potter")});
  CHECK(FamilyClusters(clusters, 0.6, 1, 0.3).size() == 2);
  CHECK_THROWS_AS(FamilyClusters(clusters, 0.3, 1, 0.3), ParameterError);
}

TEST_CASE("cluster dump") {
  const auto clusters = BuildClusters(MentionsOf({"Ron", "Ronald", "Ron"}), 0.4, 1);
  const auto j = nlohmann::json::parse(DumpClusters(clusters));
  REQUIRE(j.size() == 1);
  CHECK(j[0]["canonical"] == "ron");
  CHECK(j[0]["mention_count"] == 3);
  CHECK(j[0]["aliases"] == nlohmann::json::array({"Ron", "Ronald"}));
}

}  // namespace
}  // namespace narrative
