#include "narrative/corpus.h"

#include <algorithm>
#include <array>
#include <tuple>

#include "json.hpp"
#include "narrative/dealias.h"
#include "narrative/error.h"
#include "narrative/io.h"
#include "narrative/utf8.h"

namespace narrative {
namespace {

constexpr std::string_view kCorpusMagic = "NARR1";

constexpr std::array<std::string_view, 5> kHonorifics = {"Mr", "Mrs", "Dr",
                                                         "St", "Prof"};

bool IsJoiner(char32_t cp) { return cp == '\'' || cp == 0x2019 || cp == '-'; }

bool IsTerminator(const Token &t) {
  return t.surface == "." || t.surface == "!" || t.surface == "?";
}

bool IsCloser(const Token &t) {
  return t.surface == "\"" || t.surface == "'" || t.surface == ")" ||
         t.surface == "]" || t.surface == "”" || t.surface == "’";
}

bool IsHonorific(std::string_view surface) {
  return std::find(kHonorifics.begin(), kHonorifics.end(), surface) !=
         kHonorifics.end();
}

}  // namespace

size_t Document::WordCount() const {
  return std::count_if(tokens.begin(), tokens.end(),
                       [](const Token &t) { return !t.norm.empty(); });
}

size_t Document::SentenceOf(size_t t) const {
  auto it = std::upper_bound(
      sentences.begin(), sentences.end(), t,
      [](size_t value, const Range &r) { return value < r.end; });
  if (it == sentences.end() || t < it->begin) {
    throw LookupError("token " + std::to_string(t) + " is in no sentence");
  }
  return static_cast<size_t>(it - sentences.begin());
}

std::string NormalizeWord(std::string_view surface) {
  std::string out;
  out.reserve(surface.size());
  size_t pos = 0;
  while (pos < surface.size()) {
    const char32_t cp = utf8::Next(surface, pos);
    if (utf8::IsPunct(cp) || utf8::IsSpace(cp)) continue;
    utf8::Append(utf8::ToLower(cp), out);
  }
  return out;
}

std::vector<Token> Tokenize(std::string_view raw) {
  std::vector<Token> tokens;
  size_t pos = 0;
  size_t word_start = std::string_view::npos;

  auto flush_word = [&](size_t end) {
    if (word_start == std::string_view::npos) return;
    Token t;
    t.surface = std::string(raw.substr(word_start, end - word_start));
    t.norm = NormalizeWord(t.surface);
    t.char_offset = word_start;
    tokens.push_back(std::move(t));
    word_start = std::string_view::npos;
  };

  while (pos < raw.size()) {
    const size_t start = pos;
    const char32_t cp = utf8::Next(raw, pos);
    if (utf8::IsSpace(cp)) {
      flush_word(start);
      continue;
    }
    if (utf8::IsWord(cp)) {
      if (word_start == std::string_view::npos) word_start = start;
      continue;
    }
    // Joiners survive inside a word when another word character follows.
    if (IsJoiner(cp) && word_start != std::string_view::npos &&
        pos < raw.size()) {
      size_t peek = pos;
      if (utf8::IsWord(utf8::Next(raw, peek))) continue;
    }
    flush_word(start);
    Token t;
    t.surface = std::string(raw.substr(start, pos - start));
    t.char_offset = start;
    tokens.push_back(std::move(t));
  }
  flush_word(raw.size());
  return tokens;
}

std::string Detokenize(const std::vector<Token> &tokens) {
  std::string out;
  for (const Token &t : tokens) {
    if (!out.empty() && t.char_offset > out.size()) out.push_back(' ');
    out += t.surface;
  }
  return out;
}

std::vector<Range> SplitSentences(const std::vector<Token> &tokens) {
  std::vector<Range> sentences;
  size_t begin = 0;
  size_t i = 0;
  while (i < tokens.size()) {
    const bool honorific_dot =
        tokens[i].surface == "." && i > 0 && IsHonorific(tokens[i - 1].surface);
    if (!IsTerminator(tokens[i]) || honorific_dot) {
      ++i;
      continue;
    }
    size_t end = i + 1;
    while (end < tokens.size() && IsTerminator(tokens[end])) ++end;
    // Closing quotes glued to the terminator belong to this sentence.
    while (end < tokens.size() && IsCloser(tokens[end]) &&
           tokens[end].char_offset == tokens[end - 1].char_end()) {
      ++end;
    }
    sentences.push_back({begin, end});
    begin = end;
    i = end;
  }
  if (begin < tokens.size()) sentences.push_back({begin, tokens.size()});
  return sentences;
}

Document MakeDocument(std::string id, std::string raw) {
  Document doc;
  doc.id = std::move(id);
  doc.raw = std::move(raw);
  doc.tokens = Tokenize(doc.raw);
  doc.sentences = SplitSentences(doc.tokens);
  return doc;
}

Document ReplaceMentions(const Document &doc,
                         const std::vector<CharacterCluster> &clusters) {
  struct Span {
    size_t begin, end;
    const std::string *canonical;
  };
  std::vector<Span> spans;
  for (const auto &cluster : clusters) {
    for (const auto &m : cluster.mentions) {
      if (m.char_end <= m.char_begin) {
        throw ParameterError("mention '" + m.surface + "' has an empty extent");
      }
      spans.push_back({m.char_begin, m.char_end, &cluster.canonical});
    }
  }
  std::sort(spans.begin(), spans.end(), [](const Span &a, const Span &b) {
    return std::tie(a.begin, a.end, *a.canonical) <
           std::tie(b.begin, b.end, *b.canonical);
  });
  spans.erase(std::unique(spans.begin(), spans.end(),
                          [](const Span &a, const Span &b) {
                            return a.begin == b.begin && a.end == b.end &&
                                   *a.canonical == *b.canonical;
                          }),
              spans.end());
  for (size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].begin < spans[i - 1].end) {
      throw OverlapError("overlapping mentions at bytes [" +
                         std::to_string(spans[i - 1].begin) + "," +
                         std::to_string(spans[i - 1].end) + ") and [" +
                         std::to_string(spans[i].begin) + "," +
                         std::to_string(spans[i].end) + ")");
    }
  }
  if (spans.empty()) return doc;

  Document out;
  out.id = doc.id;
  out.raw = doc.raw;
  out.tokens.reserve(doc.tokens.size());
  // new_index[i] is the output token that old token i was folded into.
  std::vector<size_t> new_index(doc.tokens.size());
  size_t next = 0;
  for (size_t i = 0; i < doc.tokens.size();) {
    const Token &tok = doc.tokens[i];
    if (next < spans.size() && spans[next].end <= tok.char_offset) {
      throw ParameterError("mention at byte " +
                           std::to_string(spans[next].begin) +
                           " does not align with token boundaries");
    }
    if (next == spans.size() || tok.char_end() <= spans[next].begin) {
      new_index[i] = out.tokens.size();
      out.tokens.push_back(tok);
      ++i;
      continue;
    }
    const Span &span = spans[next];
    if (tok.char_offset != span.begin) {
      throw ParameterError("mention at byte " + std::to_string(span.begin) +
                           " does not align with token boundaries");
    }
    size_t j = i;
    while (j < doc.tokens.size() && doc.tokens[j].char_end() < span.end) ++j;
    if (j == doc.tokens.size() || doc.tokens[j].char_end() != span.end) {
      throw ParameterError("mention at byte " + std::to_string(span.begin) +
                           " does not align with token boundaries");
    }
    if (!doc.sentences.empty() && doc.SentenceOf(i) != doc.SentenceOf(j)) {
      throw ParameterError("mention at byte " + std::to_string(span.begin) +
                           " crosses a sentence boundary");
    }
    Token merged;
    merged.surface = doc.raw.substr(span.begin, span.end - span.begin);
    merged.norm = *span.canonical;
    merged.is_entity = true;
    merged.char_offset = span.begin;
    for (size_t k = i; k <= j; ++k) new_index[k] = out.tokens.size();
    out.tokens.push_back(std::move(merged));
    i = j + 1;
    ++next;
  }
  if (next != spans.size()) {
    throw ParameterError("mention at byte " + std::to_string(spans[next].begin) +
                         " lies outside document '" + doc.id + "'");
  }
  out.sentences.reserve(doc.sentences.size());
  for (const Range &r : doc.sentences) {
    out.sentences.push_back({new_index[r.begin], new_index[r.end - 1] + 1});
  }
  return out;
}

std::vector<Slice> SliceCorpus(const Document &doc, size_t slice_size) {
  if (slice_size < 1) throw ParameterError("slice_size must be at least 1");
  std::vector<Slice> slices;
  const size_t n = doc.tokens.size();
  for (size_t begin = 0, index = 0; begin < n; begin += slice_size, ++index) {
    slices.push_back({index, {begin, std::min(n, begin + slice_size)}});
  }
  return slices;
}

std::vector<std::string> NormStream(const Document &doc, Range range) {
  std::vector<std::string> out;
  out.reserve(range.size());
  for (size_t i = range.begin; i < range.end && i < doc.tokens.size(); ++i) {
    if (!doc.tokens[i].norm.empty()) out.push_back(doc.tokens[i].norm);
  }
  return out;
}

std::vector<std::string> NormStream(const Document &doc) {
  return NormStream(doc, {0, doc.tokens.size()});
}

std::string SerializeCorpus(const Document &doc,
                            const std::vector<Slice> &slices) {
  nlohmann::ordered_json j;
  j["format"] = kCorpusMagic;
  j["id"] = doc.id;
  j["raw"] = doc.raw;
  auto &tokens = j["tokens"] = nlohmann::ordered_json::array();
  for (const Token &t : doc.tokens) {
    tokens.push_back({t.surface, t.norm, t.is_entity ? 1 : 0, t.char_offset});
  }
  auto &sentences = j["sentences"] = nlohmann::ordered_json::array();
  for (const Range &r : doc.sentences) sentences.push_back({r.begin, r.end});
  auto &js = j["slices"] = nlohmann::ordered_json::array();
  for (const Slice &s : slices) {
    js.push_back({s.index, s.token_range.begin, s.token_range.end});
  }
  return j.dump() + "\n";
}

Document DeserializeCorpus(std::string_view text, std::vector<Slice> *slices) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("corpus container: ") + e.what(), 0);
  }
  if (!j.is_object() || j.value("format", "") != kCorpusMagic) {
    throw ParseError("not a NARR1 corpus container", 0);
  }
  try {
    Document doc;
    doc.id = j.at("id").get<std::string>();
    doc.raw = j.at("raw").get<std::string>();
    for (const auto &t : j.at("tokens")) {
      doc.tokens.push_back({t.at(0).get<std::string>(),
                            t.at(1).get<std::string>(), t.at(2).get<int>() != 0,
                            t.at(3).get<size_t>()});
    }
    for (const auto &r : j.at("sentences")) {
      doc.sentences.push_back({r.at(0).get<size_t>(), r.at(1).get<size_t>()});
    }
    if (slices != nullptr) {
      slices->clear();
      for (const auto &s : j.at("slices")) {
        slices->push_back(
            {s.at(0).get<size_t>(), {s.at(1).get<size_t>(), s.at(2).get<size_t>()}});
      }
    }
    return doc;
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("corpus container: ") + e.what(), 0);
  }
}

void SaveCorpus(const std::string &path, const Document &doc,
                const std::vector<Slice> &slices) {
  WriteFile(path, SerializeCorpus(doc, slices));
}

Document LoadCorpus(const std::string &path, std::vector<Slice> *slices) {
  return DeserializeCorpus(ReadFile(path), slices);
}

}  // namespace narrative
