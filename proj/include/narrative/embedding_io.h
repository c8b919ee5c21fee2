#ifndef NARRATIVE_EMBEDDING_IO_H_
#define NARRATIVE_EMBEDDING_IO_H_

#include <string>
#include <string_view>
#include <vector>

#include "narrative/sgns.h"

namespace narrative {

// Text format: a header line `NARR-EMB v1 <rows> <dim>`, then one line per
// vocabulary entry: the token followed by `dim` space-separated floats.
// Floats are written in shortest round-trip form, so a load of a saved matrix
// is bitwise identical.
std::string FormatEmbeddings(const std::vector<std::string> &words,
                             const WordMatrix &m);

struct LoadedEmbeddings {
  std::vector<std::string> words;
  WordMatrix matrix;
};

// Throws ParseError with the line number on malformed input.
LoadedEmbeddings ParseEmbeddings(std::string_view text);

void SaveEmbeddings(const std::string &path,
                    const std::vector<std::string> &words, const WordMatrix &m);
LoadedEmbeddings LoadEmbeddings(const std::string &path);

// Vocabulary file: `token<TAB>count` per line in index order.
std::string FormatVocab(const Vocabulary &vocab);
Vocabulary ParseVocab(std::string_view text);

}  // namespace narrative

#endif  // NARRATIVE_EMBEDDING_IO_H_
