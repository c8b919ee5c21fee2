#ifndef NARRATIVE_DEALIAS_H_
#define NARRATIVE_DEALIAS_H_

#include <cstddef>
#include <functional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "narrative/corpus.h"

namespace narrative {

struct Mention {
  std::string surface;
  Range token_span;
  size_t sentence_index = 0;
  // Byte extent of the span in Document::raw. Mentions are matched by this
  // extent so they stay valid after ReplaceMentions renumbers tokens.
  size_t char_begin = 0;
  size_t char_end = 0;
  bool operator==(const Mention &) const = default;
};

struct CharacterCluster {
  int id = 0;
  std::set<std::string> aliases;
  std::string canonical;
  std::vector<Mention> mentions;
};

struct FamilyCluster {
  int id = 0;
  std::set<int> members;  // CharacterCluster ids
};

enum class MentionMode { kHeuristic, kExternal };

// Builds a mention for tokens `span` of `doc`, filling the sentence index and
// byte extent. The surface defaults to the raw text of the span.
Mention MakeMention(const Document &doc, Range span,
                    std::string surface = {});

// Capitalized-run heuristic. A run is a maximal sequence of capitalized word
// tokens that are not stopwords. A run starting on the first word of a
// sentence loses that word, unless it follows an honorific. A trailing
// possessive "'s" is removed from the surface.
std::vector<Mention> HeuristicMentions(const Document &doc);

// Parses `start_token<TAB>end_token<TAB>surface` lines. Blank lines are
// skipped. Throws ParseError with the line number for malformed lines or
// spans outside the document.
std::vector<Mention> ParseAnnotations(const Document &doc,
                                      std::string_view text);

// Dispatches on mode. External mode requires `annotations` (file contents).
std::vector<Mention> MentionCandidates(const Document &doc, MentionMode mode,
                                       const std::string *annotations);

bool IsStopword(std::string_view surface);

// Ratcliff/Obershelp distance 1 - 2M/(|a|+|b|) over lowercased code points.
// M is the matched character count of the recursive longest-block
// decomposition, taken as the larger of the two argument orders so that the
// distance is symmetric. Two empty strings have distance 0.
double SeqMatchDistance(std::string_view a, std::string_view b);

// Matched character count of the one-directional decomposition: the longest
// block is the earliest in `a`, then earliest in `b`, as in difflib.
size_t MatchingCharacters(std::u32string_view a, std::u32string_view b);

std::u32string LowerCodePoints(std::string_view utf8);

struct DbscanResult {
  // Clusters in order of their seed point; indices ascending in each.
  std::vector<std::vector<size_t>> clusters;
  std::vector<size_t> noise;
};

using DistanceMatrix = std::vector<std::vector<double>>;

// DBSCAN over a precomputed symmetric distance matrix. A point is core when
// at least `min_pts` points (itself included) lie within `eps`. Points are
// scanned in ascending index, so a border point reachable from several
// clusters joins the one whose seed has the lowest index.
DbscanResult Dbscan(const DistanceMatrix &dist, double eps, size_t min_pts);

DistanceMatrix PairwiseDistances(
    const std::vector<std::string> &items,
    const std::function<double(std::string_view, std::string_view)> &dist);

// Clusters distinct mention surfaces by SeqMatchDistance. Noise surfaces
// become singleton clusters. Clusters are ordered by descending mention
// count (ties by canonical) and ids are assigned in that order.
std::vector<CharacterCluster> BuildClusters(const std::vector<Mention> &mentions,
                                            double eps_alias, size_t min_pts);

// Canonical token for an alias: lowercased, spaces replaced by underscores,
// punctuation removed.
std::string CanonicalToken(std::string_view alias);

// Longest alias, ties broken lexicographically.
const std::string &LongestAlias(const CharacterCluster &cluster);

// Second DBSCAN pass with a wider radius over each character's longest alias.
// Characters left as noise belong to no family. Requires
// eps_family > eps_alias.
std::vector<FamilyCluster> FamilyClusters(
    const std::vector<CharacterCluster> &clusters, double eps_family,
    size_t min_pts, double eps_alias);

// JSON list of {id, canonical, aliases, mention_count}.
std::string DumpClusters(const std::vector<CharacterCluster> &clusters);

}  // namespace narrative

#endif  // NARRATIVE_DEALIAS_H_
