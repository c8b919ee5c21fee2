#ifndef NARRATIVE_RELATIONS_H_
#define NARRATIVE_RELATIONS_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "narrative/corpus.h"
#include "narrative/dealias.h"

namespace narrative {

inline constexpr std::string_view kChar1 = "[CHAR1]";
inline constexpr std::string_view kChar2 = "[CHAR2]";
inline constexpr std::string_view kCharOther = "[CHAR]";

// One sentence mentioning a character pair, with both characters masked.
// Characters are identified by their canonical token; c1 < c2.
struct RelationSample {
  std::string text;
  std::string c1;
  std::string c2;
  bool label = false;
  std::string source;
  size_t sentence_index = 0;
  bool operator==(const RelationSample &) const = default;
};

// For every sentence of a resolved document (see ReplaceMentions) mentioning
// at least two distinct characters, one sample per unordered pair. The pair's
// first mentions become [CHAR1] (for c1) and [CHAR2] (for c2); any other
// character mention, including repeats of c1 or c2, becomes [CHAR]. Tokens
// are joined by single spaces.
std::vector<RelationSample> ExtractPairSentences(
    const Document &resolved, const std::vector<CharacterCluster> &clusters,
    const std::string &source);

// canonical -> family id, for characters that belong to a family.
using FamilyIndex = std::map<std::string, int>;
FamilyIndex MakeFamilyIndex(const std::vector<CharacterCluster> &clusters,
                            const std::vector<FamilyCluster> &families);

// label = both characters belong to the same family.
RelationSample AutoLabel(RelationSample sample, const FamilyIndex &families);

// JSONL: {"text","c1","c2","label","source","sent_id"} per line.
std::string FormatDataset(const std::vector<RelationSample> &samples);
// Throws ParseError with the line number on malformed lines.
std::vector<RelationSample> ParseDataset(std::string_view jsonl);
void SaveDataset(const std::string &path,
                 const std::vector<RelationSample> &samples);
std::vector<RelationSample> LoadDataset(const std::string &path);

// Prediction exchange format: {"sent_id","source","c1","c2","pred"}.
struct SentencePrediction {
  size_t sentence_index = 0;
  std::string source;
  std::string c1;
  std::string c2;
  bool pred = false;
  bool operator==(const SentencePrediction &) const = default;
};
std::string FormatPredictions(const std::vector<SentencePrediction> &preds);
std::vector<SentencePrediction> ParsePredictions(std::string_view jsonl);

// Aligns exchange-format predictions with gold samples by
// (source, sent_id, c1, c2). Throws LookupError on a missing or duplicate key.
std::vector<bool> AlignPredictions(const std::vector<RelationSample> &gold,
                                   const std::vector<SentencePrediction> &preds);

using PairKey = std::pair<std::string, std::string>;

struct PairPrediction {
  PairKey pair;
  std::vector<bool> sentence_predictions;
  bool pair_label = false;
};

// pair_label is the OR of the sentence predictions. Throws ParameterError for
// a pair with no sentences.
std::vector<PairPrediction> BagAggregate(
    const std::map<PairKey, std::vector<bool>> &by_pair);

// Groups per-sentence values of `samples` by character pair.
std::map<PairKey, std::vector<bool>> GroupByPair(
    const std::vector<RelationSample> &samples, const std::vector<bool> &values);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  size_t support = 0;
};

struct Metrics {
  ClassMetrics negative;
  ClassMetrics positive;
  ClassMetrics weighted;  // support-weighted averages; support = total
};

// Undefined ratios (zero denominators) are reported as 0. Throws
// ParameterError on length mismatch or empty input.
Metrics Evaluate(const std::vector<bool> &pred, const std::vector<bool> &gold);

// Pair-level accuracy per gold class, as in "9 of 12 positive pairs".
struct PairLevel {
  size_t positive_pairs = 0;
  size_t positive_correct = 0;
  size_t negative_pairs = 0;
  size_t negative_correct = 0;
};
PairLevel EvaluatePairs(const std::vector<RelationSample> &gold,
                        const std::vector<bool> &pred);

using Predictor =
    std::function<std::vector<bool>(const std::vector<RelationSample> &)>;
using Trainer =
    std::function<Predictor(const std::vector<RelationSample> &, uint64_t)>;

struct FoldResult {
  std::string source;
  Metrics metrics;
  PairLevel pairs;
  size_t train_size = 0;
  size_t test_size = 0;
};

struct CrossValReport {
  std::vector<FoldResult> folds;
  std::vector<std::string> skipped;  // "source: reason"
  Metrics mean;
  Metrics stdev;  // sample standard deviation across folds
};

// Leave-one-source-out. Every fold trains with the same seed. Folds whose
// training part holds a single class are skipped and listed in `skipped`.
// Throws ParameterError for fewer than two sources.
CrossValReport CrossValidate(const std::vector<RelationSample> &samples,
                             const Trainer &trainer, uint64_t seed);

// Per-source evaluation of externally produced predictions (e.g. from a
// leave-one-book-out run of another classifier).
CrossValReport CrossValidateFromPredictions(
    const std::vector<RelationSample> &gold,
    const std::vector<SentencePrediction> &preds);

// Fills mean/stdev from folds.
void Summarize(CrossValReport &report);

// Plain-text table with rows Negative/Positive/All and columns
// Precision/Recall/F-score as mean±stdev percentages, followed by per-fold
// lines and pair-level counts.
std::string FormatReport(const CrossValReport &report);
std::string FormatMetrics(const Metrics &m);

std::string ReportJson(const CrossValReport &report);

}  // namespace narrative

#endif  // NARRATIVE_RELATIONS_H_
