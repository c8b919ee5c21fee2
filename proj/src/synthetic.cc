#include "narrative/synthetic.h"

#include <algorithm>
#include <array>
#include <string_view>

#include "narrative/random.h"

namespace narrative {
namespace {

constexpr std::array<std::string_view, 8> kOrchardWords = {
    "orchard", "meadow", "river", "willow",
    "harvest", "barley", "cottage", "garden"};
constexpr std::array<std::string_view, 8> kHarborWords = {
    "harbor", "anchor", "sail", "tide", "lantern", "compass", "voyage", "ship"};
constexpr std::array<std::string_view, 24> kNeutralWords = {
    "walked", "with",   "near",   "the",    "old",   "house",
    "talked", "about",  "a",      "letter", "by",    "window",
    "in",     "winter", "after",  "dinner", "quiet", "road",
    "sat",    "beside", "market", "read",   "long",  "evening"};
constexpr std::array<std::string_view, 7> kKinWords = {
    "brother", "sister", "mother", "father", "son", "daughter", "cousin"};

template <size_t N>
std::string_view Pick(const std::array<std::string_view, N> &words, Rng &rng) {
  return words[UniformIndex(rng, N)];
}

// "Then" + six slots + "." (8 tokens). Names take slots 0 and 3, in random
// order; a sentence with one name fills the other slot with a topic word.
void AppendSentence(std::string &out, std::string_view a, std::string_view b,
                    const std::array<std::string_view, 8> &words, Rng &rng) {
  std::array<std::string_view, 6> slots;
  for (auto &slot : slots) slot = Pick(words, rng);
  if (UniformIndex(rng, 2) == 0) std::swap(a, b);
  if (!a.empty()) slots[0] = a;
  if (!b.empty()) slots[3] = b;
  out += "Then";
  for (auto slot : slots) {
    out += ' ';
    out += slot;
  }
  out += " .";
}

// `marker` empty draws a kinship word.
std::string MaskedSentence(Rng &rng, bool kin, double kin_probability,
                           std::string_view marker = {}) {
  const size_t filler = 4 + UniformIndex(rng, 5);
  std::vector<std::string> words;
  words.emplace_back(kChar1);
  for (size_t i = 0; i < filler; ++i) words.emplace_back(Pick(kNeutralWords, rng));
  words.insert(words.begin() + 1 + UniformIndex(rng, filler), std::string(kChar2));
  if (kin && UniformUnit(rng) < kin_probability) {
    words.insert(words.begin() + 1 + UniformIndex(rng, words.size() - 1),
                 std::string(marker.empty() ? Pick(kKinWords, rng) : marker));
  }
  std::string text;
  for (const auto &w : words) {
    text += w;
    text += ' ';
  }
  text += '.';
  return text;
}

}  // namespace

DriftCorpus MakeDriftCorpus(uint64_t seed, size_t sentences_per_slice) {
  Rng rng(seed);
  DriftCorpus corpus;
  corpus.slice_tokens = DriftSliceTokens(sentences_per_slice);
  for (int slice = 0; slice < 3; ++slice) {
    for (size_t s = 0; s < sentences_per_slice; ++s) {
      // Yolanda stays with the orchard and Zachary with the harbor; Xavier
      // moves from one to the other.
      const bool orchard_phase =
          slice == 0 || (slice == 1 && UniformIndex(rng, 2) == 0);
      switch (UniformIndex(rng, 4)) {
        case 0:
          AppendSentence(corpus.text, "Yolanda", {}, kOrchardWords, rng);
          break;
        case 1:
          AppendSentence(corpus.text, "Zachary", {}, kHarborWords, rng);
          break;
        case 2:
          AppendSentence(corpus.text, "Xavier", {},
                         orchard_phase ? kOrchardWords : kHarborWords, rng);
          break;
        default:
          if (orchard_phase) {
            AppendSentence(corpus.text, "Xavier", "Yolanda", kOrchardWords, rng);
          } else {
            AppendSentence(corpus.text, "Xavier", "Zachary", kHarborWords, rng);
          }
      }
      corpus.text += (s + 1) % 6 == 0 ? '\n' : ' ';
    }
  }
  return corpus;
}

std::vector<RelationSample> MakeSeparableDataset(uint64_t seed) {
  Rng rng(seed);
  std::vector<RelationSample> samples;
  for (size_t i = 0; i < 200; ++i) {
    RelationSample s;
    s.label = UniformIndex(rng, 2) == 1;
    s.text = MaskedSentence(rng, s.label, 1.0, "kin");
    const size_t a = UniformIndex(rng, 6);
    const size_t b = (a + 1 + UniformIndex(rng, 5)) % 6;
    s.c1 = "char_" + std::string(1, static_cast<char>('a' + std::min(a, b)));
    s.c2 = "char_" + std::string(1, static_cast<char>('a' + std::max(a, b)));
    s.source = i < 150 ? "train" : "heldout";
    s.sentence_index = i;
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<RelationSample> MakeSixSourceDataset(uint64_t seed) {
  Rng rng(seed);
  std::vector<RelationSample> samples;
  // Characters 0-2 and 3-5 form two families; 6 and 7 belong to none.
  auto family = [](size_t c) { return c < 3 ? 0 : c < 6 ? 1 : 2 + c; };
  for (int book = 1; book <= 6; ++book) {
    const std::string source = "book" + std::to_string(book);
    const size_t n = 60 + UniformIndex(rng, 41);
    for (size_t i = 0; i < n; ++i) {
      const size_t a = UniformIndex(rng, 8);
      const size_t b = (a + 1 + UniformIndex(rng, 7)) % 8;
      RelationSample s;
      s.c1 = source + "_c" + std::to_string(std::min(a, b));
      s.c2 = source + "_c" + std::to_string(std::max(a, b));
      s.label = family(a) == family(b);
      s.text = MaskedSentence(rng, true, s.label ? 0.75 : 0.1);
      s.source = source;
      s.sentence_index = i;
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

}  // namespace narrative
