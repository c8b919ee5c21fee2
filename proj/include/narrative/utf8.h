#ifndef NARRATIVE_UTF8_H_
#define NARRATIVE_UTF8_H_

#include <cstddef>
#include <string>
#include <string_view>

namespace narrative::utf8 {

// Decodes the code point starting at `pos` and advances `pos` past it.
// Invalid bytes decode as themselves (one byte, value 0x80-0xFF) so that no
// input byte is ever lost.
char32_t Next(std::string_view s, size_t &pos);

void Append(std::u32string_view cps, std::string &out);
void Append(char32_t cp, std::string &out);

bool IsSpace(char32_t cp);
bool IsPunct(char32_t cp);
// Letters and digits, including all non-ASCII code points not classified as
// space or punctuation.
inline bool IsWord(char32_t cp) { return !IsSpace(cp) && !IsPunct(cp); }
bool IsUpper(char32_t cp);
char32_t ToLower(char32_t cp);

}  // namespace narrative::utf8

#endif  // NARRATIVE_UTF8_H_
