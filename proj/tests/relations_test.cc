#include <string>
#include <vector>

#include "doctest.h"
#include "narrative/corpus.h"
#include "narrative/error.h"
#include "narrative/random.h"
#include "narrative/relations.h"
#include "oracles.h"
#include "test_util.h"

namespace narrative {
namespace {

using testing::ClusterOf;

RelationSample Sample(std::string text, std::string c1, std::string c2, bool label,
                      std::string source = "book1", size_t sent = 0) {
  RelationSample s;
  s.text = std::move(text);
  s.c1 = std::move(c1);
  s.c2 = std::move(c2);
  s.label = label;
  s.source = std::move(source);
  s.sentence_index = sent;
  return s;
}

// Trainer stub: predicts positive when the text contains "kin", regardless of
// the training data.
Trainer KinRule() {
  return [](const std::vector<RelationSample> &, uint64_t) {
    return Predictor([](const std::vector<RelationSample> &samples) {
      std::vector<bool> out;
      for (const auto &s : samples) out.push_back(s.text.find("kin") != std::string::npos);
      return out;
    });
  };
}

TEST_CASE("pair sentence extraction") {
  const auto doc = MakeDocument(
      "hp", "Then Ron hugged Hermione. Harry saw Ron, Hermione and Ginny. Ron left.");
  // Tokens: Then Ron hugged Hermione . | Harry saw Ron , Hermione and Ginny . | Ron left .
  const std::vector<CharacterCluster> clusters = {
      ClusterOf(doc, "ron", {{1, 2}, {7, 8}, {13, 14}}, 0),
      ClusterOf(doc, "hermione", {{3, 4}, {9, 10}}, 1),
      ClusterOf(doc, "harry", {{5, 6}}, 2),
      ClusterOf(doc, "ginny", {{11, 12}}, 3)};
  const auto samples = ExtractPairSentences(ReplaceMentions(doc, clusters), clusters, "hp1");
  REQUIRE(samples.size() == 1 + 6);
  CHECK(samples[0].text == "Then [CHAR2] hugged [CHAR1] .");
  CHECK(samples[0].c1 == "hermione");
  CHECK(samples[0].c2 == "ron");
  CHECK(samples[0].source == "hp1");
  CHECK(samples[0].sentence_index == 0);
  // Second sentence: pairs of {ginny, harry, hermione, ron} in canonical order.
  CHECK(samples[1].c1 == "ginny");
  CHECK(samples[1].c2 == "harry");
  CHECK(samples[1].text == "[CHAR2] saw [CHAR] , [CHAR] and [CHAR1] .");
  CHECK(samples[6].c1 == "hermione");
  CHECK(samples[6].c2 == "ron");
  for (const auto &s : samples) {
    CHECK(s.c1 < s.c2);
    CHECK(s.text.find("[CHAR1]") != std::string::npos);
    CHECK(s.text.find("[CHAR2]") != std::string::npos);
  }
}

TEST_CASE("repeated mentions of the pair are masked as third parties") {
  const auto doc = MakeDocument("r", "Then Ron told Amy that Ron was tired.");
  const std::vector<CharacterCluster> clusters = {
      ClusterOf(doc, "ron", {{1, 2}, {5, 6}}, 0), ClusterOf(doc, "amy", {{3, 4}}, 1)};
  const auto samples = ExtractPairSentences(ReplaceMentions(doc, clusters), clusters, "s");
  REQUIRE(samples.size() == 1);
  CHECK(samples[0].text == "Then [CHAR2] told [CHAR1] that [CHAR] was tired .");
  CHECK(ExtractPairSentences(ReplaceMentions(doc, {clusters[0]}), {clusters[0]}, "s").empty());
}

TEST_CASE("auto labeling") {
  const FamilyIndex families = {{"harry_potter", 0}, {"james_potter", 0}, {"ron_weasley", 1}};
  CHECK(AutoLabel(Sample("", "harry_potter", "james_potter", false), families).label);
  CHECK_FALSE(AutoLabel(Sample("", "harry_potter", "ron_weasley", true), families).label);
  CHECK_FALSE(AutoLabel(Sample("", "hermione", "ron_weasley", true), families).label);
  CHECK_FALSE(AutoLabel(Sample("", "a", "b", true), families).label);
  const std::vector<std::string> names = {"harry_potter", "james_potter", "ron_weasley", "x"};
  for (const auto &a : names) {
    for (const auto &b : names) {
      CHECK(AutoLabel(Sample("", a, b, false), families).label ==
            AutoLabel(Sample("", b, a, false), families).label);
    }
  }

  std::vector<CharacterCluster> clusters(3);
  clusters[0].id = 0;
  clusters[0].canonical = "harry";
  clusters[1].id = 1;
  clusters[1].canonical = "james";
  clusters[2].id = 2;
  clusters[2].canonical = "ron";
  const auto index = MakeFamilyIndex(clusters, {{0, {0, 1}}});
  CHECK(index == FamilyIndex{{"harry", 0}, {"james", 0}});
  CHECK_THROWS_AS(MakeFamilyIndex(clusters, {{0, {0, 1}}, {1, {1, 2}}}), ParameterError);
}

TEST_CASE("dataset jsonl") {
  CHECK(FormatDataset({}).empty());
  CHECK(ParseDataset("").empty());
  const auto one = Sample("[CHAR1] met [CHAR2] .", "a", "b", true, "book1", 7);
  const std::string line = FormatDataset({one});
  CHECK(line == "{\"text\":\"[CHAR1] met [CHAR2] .\",\"c1\":\"a\",\"c2\":\"b\","
                "\"label\":1,\"source\":\"book1\",\"sent_id\":7}\n");
  CHECK(ParseDataset(line) == std::vector<RelationSample>{one});

  try {
    ParseDataset(line + "{\"text\":\"x\"}\n");
    FAIL("expected a parse error");
  } catch (const ParseError &e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(ParseDataset("not json\n"), ParseError);
  CHECK_THROWS_AS(ParseDataset("{\"text\":\"x\",\"c1\":\"a\",\"c2\":\"b\",\"label\":2,"
                               "\"source\":\"s\",\"sent_id\":0}\n"),
                  ParseError);
  CHECK_THROWS_AS(ParseDataset("{\"text\":\"x\",\"c1\":\"a\",\"c2\":\"b\",\"label\":1,"
                               "\"source\":\"s\",\"sent_id\":0,\"extra\":1}\n"),
                  ParseError);
}

TEST_CASE("dataset round trip over random unicode samples") {
  Rng rng(41);
  const std::vector<std::string> pieces = {"a", "Zoë", "\"", "\\", "\t", "“", "💡",
                                           "[CHAR1]", " ", "ß", " ", "}"};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<RelationSample> samples;
    for (size_t n = UniformIndex(rng, 5); n > 0; --n) {
      RelationSample s;
      for (size_t k = UniformIndex(rng, 12); k > 0; --k) s.text += pieces[UniformIndex(rng, pieces.size())];
      s.c1 = "c" + std::to_string(UniformIndex(rng, 5));
      s.c2 = "d" + std::to_string(UniformIndex(rng, 5));
      s.label = UniformIndex(rng, 2) == 1;
      s.source = pieces[UniformIndex(rng, pieces.size())];
      s.sentence_index = UniformIndex(rng, 100000);
      samples.push_back(s);
    }
    CHECK(ParseDataset(FormatDataset(samples)) == samples);
  }
  testing::TempDir dir("dataset");
  const std::vector<RelationSample> samples = {Sample("x", "a", "b", false)};
  SaveDataset(dir / "d/ds.jsonl", samples);
  CHECK(LoadDataset(dir / "d/ds.jsonl") == samples);
}

TEST_CASE("prediction exchange format") {
  std::vector<SentencePrediction> preds = {{3, "book1", "a", "b", true},
                                           {4, "book2", "a", "c", false}};
  const std::string text = FormatPredictions(preds);
  CHECK(text.substr(0, text.find('\n')) ==
        "{\"sent_id\":3,\"source\":\"book1\",\"c1\":\"a\",\"c2\":\"b\",\"pred\":1}");
  CHECK(ParsePredictions(text) == preds);
  const std::vector<RelationSample> gold = {Sample("t", "a", "c", true, "book2", 4),
                                            Sample("t", "a", "b", false, "book1", 3)};
  CHECK(AlignPredictions(gold, preds) == std::vector<bool>{false, true});
  preds.pop_back();
  CHECK_THROWS_AS(AlignPredictions(gold, preds), LookupError);
  preds.push_back(preds.front());
  CHECK_THROWS_AS(AlignPredictions(gold, preds), LookupError);
}

TEST_CASE("bag aggregation examples") {
  const auto out = BagAggregate({{{"a", "b"}, {false, false, true}},
                                 {{"a", "c"}, {false, false}}});
  REQUIRE(out.size() == 2);
  CHECK(out[0].pair_label);
  CHECK_FALSE(out[1].pair_label);
  CHECK_THROWS_AS(BagAggregate({{{"a", "b"}, {}}}), ParameterError);
}

TEST_CASE("bag aggregation is OR, exhaustively, and monotone") {
  for (size_t len = 1; len <= 10; ++len) {
    for (uint32_t mask = 0; mask < (1u << len); ++mask) {
      std::vector<bool> preds(len);
      for (size_t i = 0; i < len; ++i) preds[i] = (mask >> i) & 1;
      const bool label = BagAggregate({{{"a", "b"}, preds}})[0].pair_label;
      CHECK(label == (mask != 0));
      for (size_t i = 0; i < len; ++i) {
        if (preds[i]) continue;
        auto flipped = preds;
        flipped[i] = true;
        CHECK(BagAggregate({{{"a", "b"}, flipped}})[0].pair_label >= label);
      }
    }
  }
}

TEST_CASE("group by pair") {
  const std::vector<RelationSample> samples = {Sample("", "a", "b", true),
                                               Sample("", "a", "c", true),
                                               Sample("", "a", "b", false)};
  const auto grouped = GroupByPair(samples, {true, false, false});
  CHECK(grouped.at({"a", "b"}) == std::vector<bool>{true, false});
  CHECK(grouped.at({"a", "c"}) == std::vector<bool>{false});
  CHECK_THROWS_AS(GroupByPair(samples, {true}), ParameterError);
}

TEST_CASE("evaluate examples") {
  std::vector<bool> pred, gold;
  oracle::ConfusionVectors({3, 1, 1, 5}, pred, gold);
  const auto m = Evaluate(pred, gold);
  CHECK(m.positive.precision == 0.75);
  CHECK(m.positive.recall == 0.75);
  CHECK(m.positive.f1 == 0.75);
  CHECK(m.positive.support == 4);
  CHECK(m.negative.support == 6);

  const std::vector<bool> mixed = {true, false, false, true, false};
  const auto perfect = Evaluate(mixed, mixed);
  for (const auto *c : {&perfect.positive, &perfect.negative, &perfect.weighted}) {
    CHECK(c->precision == 1.0);
    CHECK(c->recall == 1.0);
    CHECK(c->f1 == 1.0);
  }
  // No predicted positives: precision undefined, reported as 0.
  const auto none = Evaluate({false, false}, {true, false});
  CHECK(none.positive.precision == 0.0);
  CHECK(none.positive.f1 == 0.0);
  CHECK_THROWS_AS(Evaluate({true}, {true, false}), ParameterError);
  CHECK_THROWS_AS(Evaluate({}, {}), ParameterError);
}

TEST_CASE("evaluate agrees with the confusion-table oracle") {
  Rng rng(59);
  for (int trial = 0; trial < 1000; ++trial) {
    oracle::Confusion c{UniformIndex(rng, 20), UniformIndex(rng, 20),
                        UniformIndex(rng, 20), UniformIndex(rng, 20)};
    if (c.tp + c.fp + c.fn + c.tn == 0) c.tn = 1;
    std::vector<bool> pred, gold;
    oracle::ConfusionVectors(c, pred, gold);
    const auto got = Evaluate(pred, gold);
    const auto want = oracle::MetricsFromConfusion(c);
    CHECK(got.positive.precision == doctest::Approx(want.positive.precision));
    CHECK(got.positive.f1 == doctest::Approx(want.positive.f1));
    CHECK(got.negative.recall == doctest::Approx(want.negative.recall));
    CHECK(got.weighted.f1 == doctest::Approx(want.weighted.f1));
    CHECK(got.positive.support + got.negative.support == gold.size());
    const double lo = std::min(got.positive.f1, got.negative.f1);
    const double hi = std::max(got.positive.f1, got.negative.f1);
    CHECK(got.weighted.f1 >= lo - 1e-12);
    CHECK(got.weighted.f1 <= hi + 1e-12);
  }
}

TEST_CASE("pair-level evaluation") {
  const std::vector<RelationSample> gold = {
      Sample("", "a", "b", true), Sample("", "a", "b", true),
      Sample("", "a", "c", false), Sample("", "b", "c", false),
      Sample("", "c", "d", true)};
  const auto p = EvaluatePairs(gold, {false, true, false, true, false});
  CHECK(p.positive_pairs == 2);
  CHECK(p.positive_correct == 1);
  CHECK(p.negative_pairs == 2);
  CHECK(p.negative_correct == 1);
}

TEST_CASE("cross validation") {
  std::vector<RelationSample> book = {
      Sample("[CHAR1] kin [CHAR2]", "a", "b", true, "", 0),
      Sample("[CHAR1] and [CHAR2]", "a", "c", false, "", 1),
      Sample("[CHAR1] kin [CHAR2] again", "a", "b", true, "", 2),
      Sample("[CHAR1] kin [CHAR2] once", "b", "c", false, "", 3)};
  std::vector<RelationSample> two;
  for (const char *src : {"one", "two"}) {
    for (auto s : book) {
      s.source = src;
      two.push_back(s);
    }
  }
  const auto r = CrossValidate(two, KinRule(), 1);
  REQUIRE(r.folds.size() == 2);
  CHECK(r.folds[0].source == "one");
  CHECK(r.folds[0].metrics.weighted.f1 == r.folds[1].metrics.weighted.f1);
  CHECK(r.stdev.weighted.f1 == 0.0);
  CHECK(r.stdev.positive.precision == 0.0);
  CHECK(r.mean.positive.precision == doctest::Approx(2.0 / 3.0));
  CHECK(r.folds[0].train_size == 4);
  CHECK(r.folds[0].pairs.positive_pairs == 1);

  std::vector<RelationSample> six;
  for (int b = 1; b <= 6; ++b) {
    for (auto s : book) {
      s.source = "book" + std::to_string(b);
      six.push_back(s);
    }
  }
  CHECK(CrossValidate(six, KinRule(), 1).folds.size() == 6);

  // The only negatives live in "neg": its fold trains on positives alone.
  std::vector<RelationSample> skewed = {Sample("kin", "a", "b", true, "pos1"),
                                        Sample("kin", "a", "b", true, "pos2"),
                                        Sample("x", "a", "c", false, "neg")};
  const auto sk = CrossValidate(skewed, KinRule(), 1);
  CHECK(sk.folds.size() == 2);
  REQUIRE(sk.skipped.size() == 1);
  CHECK(sk.skipped[0].rfind("neg", 0) == 0);

  CHECK_THROWS_AS(CrossValidate(book, KinRule(), 1), ParameterError);
}

TEST_CASE("cross validation from exchange predictions") {
  std::vector<RelationSample> gold = {Sample("t", "a", "b", true, "one", 0),
                                      Sample("t", "a", "c", false, "one", 1),
                                      Sample("t", "a", "b", true, "two", 0),
                                      Sample("t", "a", "c", false, "two", 1)};
  const std::vector<SentencePrediction> preds = {{0, "one", "a", "b", true},
                                                 {1, "one", "a", "c", false},
                                                 {0, "two", "a", "b", true},
                                                 {1, "two", "a", "c", true}};
  const auto r = CrossValidateFromPredictions(gold, preds);
  REQUIRE(r.folds.size() == 2);
  CHECK(r.folds[0].metrics.weighted.f1 == 1.0);
  CHECK(r.folds[1].metrics.positive.precision == 0.5);
  CHECK(r.stdev.weighted.f1 > 0.0);
}

TEST_CASE("report layout") {
  std::vector<RelationSample> samples;
  for (const char *src : {"a", "b", "c"}) {
    samples.push_back(Sample("kin", "x", "y", true, src));
    samples.push_back(Sample("no", "x", "z", false, src));
    samples.push_back(Sample("kin", "y", "z", false, src));
  }
  const auto r = CrossValidate(samples, KinRule(), 1);
  const std::string text = FormatReport(r);
  CHECK(text.find("Precision") != std::string::npos);
  CHECK(text.find("Recall") != std::string::npos);
  CHECK(text.find("F-score") != std::string::npos);
  const size_t neg = text.find("\nNegative"), pos = text.find("\nPositive"),
               all = text.find("\nAll");
  CHECK(neg < pos);
  CHECK(pos < all);
  CHECK(all != std::string::npos);
  CHECK(text.find("±") != std::string::npos);
  CHECK(text.find("folds: 3") != std::string::npos);
  const auto j = ReportJson(r);
  CHECK(j.find("\"folds\"") != std::string::npos);
}

}  // namespace
}  // namespace narrative
