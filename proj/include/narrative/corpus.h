#ifndef NARRATIVE_CORPUS_H_
#define NARRATIVE_CORPUS_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace narrative {

// Half-open index range [begin, end).
struct Range {
  size_t begin = 0;
  size_t end = 0;

  size_t size() const { return end - begin; }
  bool empty() const { return begin == end; }
  bool operator==(const Range &) const = default;
};

struct Token {
  std::string surface;  // original casing, exactly as in the raw text
  std::string norm;     // lowercased, punctuation stripped
  bool is_entity = false;
  size_t char_offset = 0;  // byte offset of surface in the raw text

  size_t char_end() const { return char_offset + surface.size(); }
  bool operator==(const Token &) const = default;
};

struct Slice {
  size_t index = 0;
  Range token_range;
  bool operator==(const Slice &) const = default;
};

struct Document {
  std::string id;
  std::string raw;
  std::vector<Token> tokens;
  std::vector<Range> sentences;

  // Number of tokens with a non-empty norm.
  size_t WordCount() const;
  // Index of the sentence containing token `t`.
  size_t SentenceOf(size_t t) const;
  bool operator==(const Document &) const = default;
};

struct Mention;
struct CharacterCluster;

// Splits UTF-8 text into word and punctuation tokens. Words are maximal runs
// of letters and digits, with internal apostrophes and hyphens kept when they
// join two word characters ("don't", "to-morrow"). Every other non-space code
// point becomes a one-character punctuation token.
std::vector<Token> Tokenize(std::string_view raw);

// Lowercases ASCII and Latin-1 letters and drops punctuation code points.
std::string NormalizeWord(std::string_view surface);

// Rebuilds text from tokens, placing each surface at its recorded offset and
// filling gaps with single spaces.
std::string Detokenize(const std::vector<Token> &tokens);

// Sentence boundaries after '.', '!' and '?', except when the terminator
// closes an honorific abbreviation (Mr., Mrs., Dr., St., Prof.). Runs of
// terminators and closing quotes/brackets stay with the sentence they end.
std::vector<Range> SplitSentences(const std::vector<Token> &tokens);

// Tokenize + SplitSentences.
Document MakeDocument(std::string id, std::string raw);

// Collapses each mention span into a single entity token whose norm is the
// cluster canonical. Mentions are located by their character extent, so the
// operation is idempotent. Throws OverlapError on overlapping mentions and
// ParameterError for mentions that fall outside the document or do not align
// with token boundaries.
Document ReplaceMentions(const Document &doc,
                         const std::vector<CharacterCluster> &clusters);

// Positional partition of the document tokens. Every slice except the last
// holds exactly `slice_size` tokens.
std::vector<Slice> SliceCorpus(const Document &doc, size_t slice_size);

// Norm strings of the tokens in `range`, skipping empty norms.
std::vector<std::string> NormStream(const Document &doc, Range range);
std::vector<std::string> NormStream(const Document &doc);

// NARR1 JSON container: tokens, sentence ranges and (optionally) slices.
std::string SerializeCorpus(const Document &doc,
                            const std::vector<Slice> &slices = {});
Document DeserializeCorpus(std::string_view text,
                           std::vector<Slice> *slices = nullptr);

void SaveCorpus(const std::string &path, const Document &doc,
                const std::vector<Slice> &slices = {});
Document LoadCorpus(const std::string &path,
                    std::vector<Slice> *slices = nullptr);

}  // namespace narrative

#endif  // NARRATIVE_CORPUS_H_
