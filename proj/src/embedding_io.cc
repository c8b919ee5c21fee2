#include "narrative/embedding_io.h"

#include <charconv>
#include <unordered_map>

#include "narrative/error.h"
#include "narrative/io.h"

namespace narrative {
namespace {

constexpr std::string_view kHeader = "NARR-EMB v1";

std::vector<std::string_view> SplitFields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  size_t pos = 0;
  while (pos <= line.size()) {
    size_t next = line.find(sep, pos);
    if (next == std::string_view::npos) next = line.size();
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

template <typename T>
T ParseNumber(std::string_view field, size_t line_no) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError("invalid number '" + std::string(field) + "'", line_no);
  }
  return value;
}

// Iterates lines, stripping a trailing '\r'.
class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}
  bool Next(std::string_view &line) {
    if (pos_ >= text_.size()) return false;
    size_t eol = text_.find('\n', pos_);
    if (eol == std::string_view::npos) eol = text_.size();
    line = text_.substr(pos_, eol - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = eol + 1;
    ++line_no_;
    return true;
  }
  size_t line_no() const { return line_no_; }

 private:
  std::string_view text_;
  size_t pos_ = 0;
  size_t line_no_ = 0;
};

}  // namespace

std::string FormatEmbeddings(const std::vector<std::string> &words,
                             const WordMatrix &m) {
  if (words.size() != m.rows()) {
    throw ParameterError("word list and matrix row count differ");
  }
  std::string out;
  out.reserve(m.rows() * m.cols() * 12 + 64);
  out += std::string(kHeader) + " " + std::to_string(m.rows()) + " " +
         std::to_string(m.cols()) + "\n";
  char buf[32];
  for (size_t r = 0; r < m.rows(); ++r) {
    out += words[r];
    for (float x : m.row(r)) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
      out.push_back(' ');
      out.append(buf, ptr);
    }
    out.push_back('\n');
  }
  return out;
}

LoadedEmbeddings ParseEmbeddings(std::string_view text) {
  LineReader reader(text);
  std::string_view line;
  if (!reader.Next(line) || !line.starts_with(kHeader)) {
    throw ParseError("missing NARR-EMB v1 header", 1);
  }
  const auto header = SplitFields(line.substr(kHeader.size() + 1), ' ');
  if (header.size() != 2) throw ParseError("malformed header", 1);
  const auto rows = ParseNumber<size_t>(header[0], 1);
  const auto dim = ParseNumber<size_t>(header[1], 1);

  LoadedEmbeddings out{{}, WordMatrix(rows, dim)};
  out.words.reserve(rows);
  for (size_t r = 0; r < rows; ++r) {
    if (!reader.Next(line)) {
      throw ParseError("expected " + std::to_string(rows) + " rows, found " +
                           std::to_string(r),
                       reader.line_no() + 1);
    }
    const auto fields = SplitFields(line, ' ');
    if (fields.size() != dim + 1) {
      throw ParseError("expected token and " + std::to_string(dim) + " values",
                       reader.line_no());
    }
    out.words.emplace_back(fields[0]);
    auto row = out.matrix.row(r);
    for (size_t i = 0; i < dim; ++i) {
      row[i] = ParseNumber<float>(fields[i + 1], reader.line_no());
    }
  }
  while (reader.Next(line)) {
    if (!line.empty()) throw ParseError("trailing data", reader.line_no());
  }
  return out;
}

void SaveEmbeddings(const std::string &path,
                    const std::vector<std::string> &words, const WordMatrix &m) {
  WriteFile(path, FormatEmbeddings(words, m));
}

LoadedEmbeddings LoadEmbeddings(const std::string &path) {
  const std::string text = ReadFile(path);
  try {
    return ParseEmbeddings(text);
  } catch (const ParseError &e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

std::string FormatVocab(const Vocabulary &vocab) {
  std::string out = "# min_count " + std::to_string(vocab.min_count) + "\n";
  for (size_t i = 0; i < vocab.size(); ++i) {
    out += vocab.words[i] + "\t" + std::to_string(vocab.counts[i]) + "\n";
  }
  return out;
}

Vocabulary ParseVocab(std::string_view text) {
  LineReader reader(text);
  std::string_view line;
  std::unordered_map<std::string, int64_t> counts;
  std::vector<std::string> order;
  int64_t min_count = 0;
  while (reader.Next(line)) {
    if (line.empty()) continue;
    if (line.starts_with("# min_count ")) {
      min_count = ParseNumber<int64_t>(line.substr(12), reader.line_no());
      continue;
    }
    const auto fields = SplitFields(line, '\t');
    if (fields.size() != 2) {
      throw ParseError("expected token<TAB>count", reader.line_no());
    }
    const std::string token(fields[0]);
    if (!counts.emplace(token, ParseNumber<int64_t>(fields[1], reader.line_no()))
             .second) {
      throw ParseError("duplicate token '" + token + "'", reader.line_no());
    }
    order.push_back(token);
  }
  // Every listed token survived the original cut, so protect them all.
  Vocabulary vocab = BuildVocabFromCounts(
      counts, min_count, std::set<std::string>(order.begin(), order.end()));
  if (vocab.words != order) {
    throw ParseError("vocabulary file is not in count order", 0);
  }
  return vocab;
}

}  // namespace narrative
