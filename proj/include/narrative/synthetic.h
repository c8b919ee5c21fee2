#ifndef NARRATIVE_SYNTHETIC_H_
#define NARRATIVE_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "narrative/relations.h"

namespace narrative {

// Three-slice novel-like text about Xavier, Yolanda and Zachary. Xavier shares
// sentences and vocabulary with Yolanda in slice 0, with both in slice 1 and
// with Zachary in slice 2. Every sentence is exactly kDriftSentenceTokens
// tokens, so slice t covers tokens [t * size, (t + 1) * size) with
// size = DriftSliceTokens(sentences_per_slice).
inline constexpr size_t kDriftSentenceTokens = 8;
inline constexpr size_t kDriftSentencesPerSlice = 300;

constexpr size_t DriftSliceTokens(
    size_t sentences_per_slice = kDriftSentencesPerSlice) {
  return sentences_per_slice * kDriftSentenceTokens;
}

struct DriftCorpus {
  std::string text;
  size_t slice_tokens = 0;
};

DriftCorpus MakeDriftCorpus(uint64_t seed,
                            size_t sentences_per_slice = kDriftSentencesPerSlice);

// 200 masked sentences; positives, and only positives, contain "kin".
// Sources are "train" (first 150) and "heldout" (last 50).
std::vector<RelationSample> MakeSeparableDataset(uint64_t seed);

// Six sources "book1".."book6" with a noisy family signal: positives usually
// carry a kinship word, negatives rarely do.
std::vector<RelationSample> MakeSixSourceDataset(uint64_t seed);

}  // namespace narrative

#endif  // NARRATIVE_SYNTHETIC_H_
