#ifndef NARRATIVE_IO_H_
#define NARRATIVE_IO_H_

#include <string>
#include <string_view>

namespace narrative {

// Whole-file helpers. Both throw IoError naming the path on failure.
std::string ReadFile(const std::string &path);
void WriteFile(const std::string &path, std::string_view contents);

// Creates parent directories of `path` as needed.
void EnsureParentDir(const std::string &path);

// Lowercase hex FNV-1a digest, used for content hashes in manifests.
std::string HashHex(std::string_view data);

}  // namespace narrative

#endif  // NARRATIVE_IO_H_
