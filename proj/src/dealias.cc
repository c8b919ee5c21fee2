#include "narrative/dealias.h"

#include <algorithm>
#include <charconv>
#include <deque>
#include <map>
#include <tuple>
#include <unordered_set>

#include "json.hpp"
#include "narrative/error.h"
#include "narrative/utf8.h"

namespace narrative {
namespace {

// Capitalized words that are almost never character names.
const std::unordered_set<std::string> &Stopwords() {
  static const auto *words = new std::unordered_set<std::string>{
      "a", "about", "after", "again", "ah", "all", "also", "although", "am",
      "an", "and", "another", "any", "are", "as", "at", "aunt", "be",
      "because", "before", "both", "but", "by", "can", "chapter", "christmas",
      "could", "dear", "did", "do", "does", "don't", "dr", "each", "even",
      "every", "for", "from", "god", "good", "had", "has", "have", "he",
      "her", "here", "hers", "him", "his", "how", "i", "i'd", "i'll", "i'm",
      "i've", "if", "in", "is", "it", "it's", "its", "just", "lady", "let",
      "lord", "madam", "many", "may", "me", "might", "miss", "mr", "mrs", "ms",
      "much", "must", "my", "no", "nor", "not", "now", "o", "of", "oh", "ok",
      "on", "once", "one", "or", "our", "perhaps", "please", "prof",
      "professor", "sir", "she", "should", "so", "some", "st", "still",
      "such", "that", "that's", "the", "their", "them", "then", "there",
      "these", "they", "this", "those", "though", "to", "too", "uncle", "up",
      "very", "was", "we", "well", "were", "what", "when", "where", "whether",
      "which", "while", "who", "why", "will", "with", "would", "yes", "yet",
      "you", "your", "monday", "tuesday", "wednesday", "thursday", "friday",
      "saturday", "sunday", "january", "february", "march", "april", "june",
      "july", "august", "september", "october", "november", "december",
      "english", "french", "mother", "father", "mamma", "papa", "mum", "dad"};
  return *words;
}

constexpr std::array<std::string_view, 5> kHonorifics = {"Mr", "Mrs", "Dr",
                                                         "St", "Prof"};

std::string LowerAscii(std::string_view s) {
  std::string out(s);
  for (char &c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
  }
  return out;
}

bool StartsUpper(std::string_view s) {
  if (s.empty()) return false;
  size_t pos = 0;
  return utf8::IsUpper(utf8::Next(s, pos));
}

// Collapses whitespace runs (including newlines) to single spaces.
std::string SquashSpaces(std::string_view s) {
  std::string out;
  bool in_space = false;
  size_t pos = 0;
  while (pos < s.size()) {
    const size_t start = pos;
    const char32_t cp = utf8::Next(s, pos);
    if (utf8::IsSpace(cp)) {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out.push_back(' ');
    in_space = false;
    out.append(s.substr(start, pos - start));
  }
  return out;
}

std::string StripPossessive(std::string s) {
  for (std::string_view suffix : {std::string_view("'s"), std::string_view("’s")}) {
    if (s.size() > suffix.size() && s.ends_with(suffix)) {
      s.resize(s.size() - suffix.size());
      break;
    }
  }
  return s;
}

}  // namespace

bool IsStopword(std::string_view surface) {
  return Stopwords().count(LowerAscii(surface)) > 0;
}

Mention MakeMention(const Document &doc, Range span, std::string surface) {
  if (span.empty() || span.end > doc.tokens.size()) {
    throw ParameterError("mention span [" + std::to_string(span.begin) + "," +
                         std::to_string(span.end) + ") outside document");
  }
  Mention m;
  m.token_span = span;
  m.char_begin = doc.tokens[span.begin].char_offset;
  m.char_end = doc.tokens[span.end - 1].char_end();
  m.sentence_index = doc.sentences.empty() ? 0 : doc.SentenceOf(span.begin);
  m.surface = surface.empty()
                  ? SquashSpaces(std::string_view(doc.raw).substr(
                        m.char_begin, m.char_end - m.char_begin))
                  : std::move(surface);
  return m;
}

std::vector<Mention> HeuristicMentions(const Document &doc) {
  std::vector<Mention> mentions;
  for (size_t s = 0; s < doc.sentences.size(); ++s) {
    const Range sentence = doc.sentences[s];
    size_t first_word = sentence.end;
    for (size_t i = sentence.begin; i < sentence.end; ++i) {
      if (!doc.tokens[i].norm.empty()) {
        first_word = i;
        break;
      }
    }
    auto is_name_token = [&](size_t i) {
      const Token &t = doc.tokens[i];
      return !t.norm.empty() && StartsUpper(t.surface) &&
             !IsStopword(StripPossessive(t.surface));
    };
    size_t i = sentence.begin;
    while (i < sentence.end) {
      if (!is_name_token(i)) {
        ++i;
        continue;
      }
      size_t j = i + 1;
      // A possessive ends the run: "Ron's Mother" is not one name.
      while (j < sentence.end && is_name_token(j) &&
             StripPossessive(doc.tokens[j - 1].surface) ==
                 doc.tokens[j - 1].surface) {
        ++j;
      }
      const bool after_honorific =
          i >= 2 && doc.tokens[i - 1].surface == "." &&
          std::find(kHonorifics.begin(), kHonorifics.end(),
                    doc.tokens[i - 2].surface) != kHonorifics.end();
      // A sentence-initial capital may be ordinary: keep only what follows it.
      const size_t begin = i == first_word && !after_honorific ? i + 1 : i;
      if (begin < j) {
        Mention m = MakeMention(doc, {begin, j});
        m.surface = StripPossessive(std::move(m.surface));
        mentions.push_back(std::move(m));
      }
      i = j;
    }
  }
  return mentions;
}

std::vector<Mention> ParseAnnotations(const Document &doc,
                                      std::string_view text) {
  std::vector<Mention> mentions;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    const size_t tab1 = line.find('\t');
    const size_t tab2 =
        tab1 == std::string_view::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string_view::npos) {
      throw ParseError("expected start<TAB>end<TAB>surface", line_no);
    }
    auto parse_index = [&](std::string_view field) {
      size_t value = 0;
      auto [ptr, ec] =
          std::from_chars(field.data(), field.data() + field.size(), value);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw ParseError("invalid token index '" + std::string(field) + "'",
                         line_no);
      }
      return value;
    };
    const size_t start = parse_index(line.substr(0, tab1));
    const size_t end = parse_index(line.substr(tab1 + 1, tab2 - tab1 - 1));
    std::string surface(line.substr(tab2 + 1));
    if (surface.empty()) throw ParseError("empty surface", line_no);
    if (start >= end || end > doc.tokens.size()) {
      throw ParseError("span [" + std::to_string(start) + "," +
                           std::to_string(end) + ") outside document of " +
                           std::to_string(doc.tokens.size()) + " tokens",
                       line_no);
    }
    mentions.push_back(MakeMention(doc, {start, end}, std::move(surface)));
  }
  return mentions;
}

std::vector<Mention> MentionCandidates(const Document &doc, MentionMode mode,
                                       const std::string *annotations) {
  if (mode == MentionMode::kHeuristic) return HeuristicMentions(doc);
  if (annotations == nullptr) {
    throw ParameterError("external mention mode requires an annotation file");
  }
  return ParseAnnotations(doc, *annotations);
}

std::u32string LowerCodePoints(std::string_view utf8_text) {
  std::u32string out;
  size_t pos = 0;
  while (pos < utf8_text.size()) {
    out.push_back(utf8::ToLower(utf8::Next(utf8_text, pos)));
  }
  return out;
}

size_t MatchingCharacters(std::u32string_view a, std::u32string_view b) {
  size_t total = 0;
  std::vector<size_t> prev(b.size() + 1), curr(b.size() + 1);
  std::deque<std::array<size_t, 4>> queue{{0, a.size(), 0, b.size()}};
  while (!queue.empty()) {
    const auto [alo, ahi, blo, bhi] = queue.front();
    queue.pop_front();
    // Longest common block; strict '>' keeps the earliest i, then earliest j.
    size_t best_i = alo, best_j = blo, best_k = 0;
    std::fill(prev.begin() + blo, prev.begin() + bhi + 1, 0);
    for (size_t i = alo; i < ahi; ++i) {
      curr[blo] = 0;
      for (size_t j = blo; j < bhi; ++j) {
        const size_t k = a[i] == b[j] ? prev[j] + 1 : 0;
        curr[j + 1] = k;
        if (k > best_k) {
          best_k = k;
          best_i = i + 1 - k;
          best_j = j + 1 - k;
        }
      }
      std::swap(prev, curr);
    }
    if (best_k == 0) continue;
    total += best_k;
    if (alo < best_i && blo < best_j) queue.push_back({alo, best_i, blo, best_j});
    if (best_i + best_k < ahi && best_j + best_k < bhi) {
      queue.push_back({best_i + best_k, ahi, best_j + best_k, bhi});
    }
  }
  return total;
}

double SeqMatchDistance(std::string_view a, std::string_view b) {
  const std::u32string la = LowerCodePoints(a);
  const std::u32string lb = LowerCodePoints(b);
  const size_t length = la.size() + lb.size();
  if (length == 0) return 0.0;
  const size_t matched =
      std::max(MatchingCharacters(la, lb), MatchingCharacters(lb, la));
  return 1.0 - 2.0 * static_cast<double>(matched) / static_cast<double>(length);
}

DbscanResult Dbscan(const DistanceMatrix &dist, double eps, size_t min_pts) {
  if (eps < 0) throw ParameterError("eps must be non-negative");
  if (min_pts < 1) throw ParameterError("min_pts must be at least 1");
  const size_t n = dist.size();
  std::vector<std::vector<size_t>> neighbors(n);
  for (size_t i = 0; i < n; ++i) {
    if (dist[i].size() != n) throw ParameterError("distance matrix not square");
    for (size_t j = 0; j < n; ++j) {
      if (dist[i][j] <= eps) neighbors[i].push_back(j);
    }
  }
  auto is_core = [&](size_t i) { return neighbors[i].size() >= min_pts; };

  constexpr long kUnassigned = -1;
  std::vector<long> label(n, kUnassigned);
  DbscanResult result;
  for (size_t seed = 0; seed < n; ++seed) {
    if (label[seed] != kUnassigned || !is_core(seed)) continue;
    const long id = static_cast<long>(result.clusters.size());
    std::vector<size_t> members;
    std::deque<size_t> frontier{seed};
    label[seed] = id;
    while (!frontier.empty()) {
      const size_t p = frontier.front();
      frontier.pop_front();
      members.push_back(p);
      if (!is_core(p)) continue;
      for (size_t q : neighbors[p]) {
        if (label[q] != kUnassigned) continue;
        label[q] = id;
        frontier.push_back(q);
      }
    }
    std::sort(members.begin(), members.end());
    result.clusters.push_back(std::move(members));
  }
  for (size_t i = 0; i < n; ++i) {
    if (label[i] == kUnassigned) result.noise.push_back(i);
  }
  return result;
}

DistanceMatrix PairwiseDistances(
    const std::vector<std::string> &items,
    const std::function<double(std::string_view, std::string_view)> &dist) {
  const size_t n = items.size();
  DistanceMatrix d(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      d[i][j] = d[j][i] = dist(items[i], items[j]);
    }
  }
  return d;
}

std::string CanonicalToken(std::string_view alias) {
  std::string out;
  size_t pos = 0;
  while (pos < alias.size()) {
    while (pos < alias.size() && alias[pos] == ' ') ++pos;
    size_t end = alias.find(' ', pos);
    if (end == std::string_view::npos) end = alias.size();
    const std::string word = NormalizeWord(alias.substr(pos, end - pos));
    if (!word.empty()) {
      if (!out.empty()) out.push_back('_');
      out += word;
    }
    pos = end;
  }
  return out;
}

const std::string &LongestAlias(const CharacterCluster &cluster) {
  if (cluster.aliases.empty()) {
    throw ParameterError("character cluster has no aliases");
  }
  auto best = cluster.aliases.begin();
  for (auto it = cluster.aliases.begin(); it != cluster.aliases.end(); ++it) {
    if (it->size() > best->size()) best = it;
  }
  return *best;
}

std::vector<CharacterCluster> BuildClusters(const std::vector<Mention> &mentions,
                                            double eps_alias, size_t min_pts) {
  if (mentions.empty()) throw ParameterError("no mentions to cluster");
  std::map<std::string, std::vector<const Mention *>> by_surface;
  for (const Mention &m : mentions) by_surface[m.surface].push_back(&m);

  std::vector<std::string> surfaces;
  for (const auto &[surface, _] : by_surface) surfaces.push_back(surface);
  const DbscanResult db =
      Dbscan(PairwiseDistances(surfaces, SeqMatchDistance), eps_alias, min_pts);

  std::vector<std::vector<size_t>> groups = db.clusters;
  for (size_t i : db.noise) groups.push_back({i});

  std::vector<CharacterCluster> clusters;
  for (const auto &group : groups) {
    CharacterCluster c;
    const std::string *best = nullptr;
    size_t best_count = 0;
    for (size_t i : group) {
      const auto &ms = by_surface.at(surfaces[i]);
      c.aliases.insert(surfaces[i]);
      for (const Mention *m : ms) c.mentions.push_back(*m);
      // Surfaces are visited in lexicographic order, so '>' keeps the
      // smallest alias among equally frequent ones.
      if (best == nullptr || ms.size() > best_count) {
        best = &surfaces[i];
        best_count = ms.size();
      }
    }
    c.canonical = CanonicalToken(*best);
    if (c.canonical.empty()) c.canonical = "char";
    std::sort(c.mentions.begin(), c.mentions.end(),
              [](const Mention &a, const Mention &b) {
                return std::tie(a.char_begin, a.char_end) <
                       std::tie(b.char_begin, b.char_end);
              });
    clusters.push_back(std::move(c));
  }
  std::sort(clusters.begin(), clusters.end(),
            [](const CharacterCluster &a, const CharacterCluster &b) {
              if (a.mentions.size() != b.mentions.size()) {
                return a.mentions.size() > b.mentions.size();
              }
              return std::tie(a.canonical, a.aliases) <
                     std::tie(b.canonical, b.aliases);
            });
  // Aliases that differ only in case or punctuation can land in separate
  // clusters (e.g. as noise with min_pts > 1); keep canonicals unique.
  std::map<std::string, int> seen;
  for (size_t i = 0; i < clusters.size(); ++i) {
    clusters[i].id = static_cast<int>(i);
    const int n = ++seen[clusters[i].canonical];
    if (n > 1) clusters[i].canonical += "_" + std::to_string(n);
  }
  return clusters;
}

std::vector<FamilyCluster> FamilyClusters(
    const std::vector<CharacterCluster> &clusters, double eps_family,
    size_t min_pts, double eps_alias) {
  if (!(eps_family > eps_alias)) {
    throw ParameterError("eps_family must be greater than eps_alias");
  }
  std::vector<std::string> names;
  names.reserve(clusters.size());
  for (const auto &c : clusters) names.push_back(LongestAlias(c));
  const DbscanResult db =
      Dbscan(PairwiseDistances(names, SeqMatchDistance), eps_family, min_pts);
  std::vector<FamilyCluster> families;
  for (const auto &group : db.clusters) {
    FamilyCluster f;
    f.id = static_cast<int>(families.size());
    for (size_t i : group) f.members.insert(clusters[i].id);
    families.push_back(std::move(f));
  }
  return families;
}

std::string DumpClusters(const std::vector<CharacterCluster> &clusters) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto &c : clusters) {
    nlohmann::ordered_json j;
    j["id"] = c.id;
    j["canonical"] = c.canonical;
    j["aliases"] = c.aliases;
    j["mention_count"] = c.mentions.size();
    out.push_back(std::move(j));
  }
  return out.dump(2) + "\n";
}

}  // namespace narrative
