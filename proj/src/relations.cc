#include "narrative/relations.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <tuple>

#include "json.hpp"
#include "narrative/error.h"
#include "narrative/io.h"

namespace narrative {
namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

// Iterates non-empty JSONL lines, reporting 1-based line numbers.
template <typename F>
void ForEachJsonLine(std::string_view jsonl, F &&fn) {
  size_t pos = 0, line_no = 0;
  while (pos < jsonl.size()) {
    size_t eol = jsonl.find('\n', pos);
    if (eol == std::string_view::npos) eol = jsonl.size();
    std::string_view line = jsonl.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception &e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    if (!j.is_object()) throw ParseError("expected a JSON object", line_no);
    try {
      fn(j, line_no);
    } catch (const Json::exception &e) {
      throw ParseError(e.what(), line_no);
    }
  }
}

bool ParseBit(const Json &v, const char *key, size_t line_no) {
  const Json &x = v.at(key);
  if (x.is_boolean()) return x.get<bool>();
  if (x.is_number_integer()) {
    const auto i = x.get<int64_t>();
    if (i == 0 || i == 1) return i == 1;
  }
  throw ParseError(std::string("'") + key + "' must be 0 or 1", line_no);
}

void CheckKeys(const Json &j, std::initializer_list<const char *> keys,
               size_t line_no) {
  for (const auto &[k, _] : j.items()) {
    if (std::find_if(keys.begin(), keys.end(),
                     [&](const char *x) { return k == x; }) == keys.end()) {
      throw ParseError("unknown key '" + k + "'", line_no);
    }
  }
}

std::string Percent(double mean, double stdev) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.1f±%.1f%%", 100.0 * mean, 100.0 * stdev);
  return buf;
}

std::string Fixed3(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", x);
  return buf;
}

OrderedJson ClassJson(const ClassMetrics &c) {
  OrderedJson j;
  j["precision"] = c.precision;
  j["recall"] = c.recall;
  j["f1"] = c.f1;
  j["support"] = c.support;
  return j;
}

OrderedJson MetricsJson(const Metrics &m) {
  OrderedJson j;
  j["negative"] = ClassJson(m.negative);
  j["positive"] = ClassJson(m.positive);
  j["weighted"] = ClassJson(m.weighted);
  return j;
}

std::vector<std::string> Sources(const std::vector<RelationSample> &samples) {
  std::vector<std::string> sources;
  for (const auto &s : samples) {
    if (std::find(sources.begin(), sources.end(), s.source) == sources.end()) {
      sources.push_back(s.source);
    }
  }
  return sources;
}

}  // namespace

std::vector<RelationSample> ExtractPairSentences(
    const Document &resolved, const std::vector<CharacterCluster> &clusters,
    const std::string &source) {
  std::set<std::string> known;
  for (const auto &c : clusters) known.insert(c.canonical);

  std::vector<RelationSample> samples;
  for (size_t s = 0; s < resolved.sentences.size(); ++s) {
    const Range r = resolved.sentences[s];
    std::set<std::string> present;
    for (size_t i = r.begin; i < r.end; ++i) {
      const Token &t = resolved.tokens[i];
      if (t.is_entity && known.count(t.norm) > 0) present.insert(t.norm);
    }
    if (present.size() < 2) continue;
    const std::vector<std::string> chars(present.begin(), present.end());
    for (size_t a = 0; a < chars.size(); ++a) {
      for (size_t b = a + 1; b < chars.size(); ++b) {
        RelationSample sample;
        sample.c1 = chars[a];
        sample.c2 = chars[b];
        sample.source = source;
        sample.sentence_index = s;
        bool used1 = false, used2 = false;
        for (size_t i = r.begin; i < r.end; ++i) {
          const Token &t = resolved.tokens[i];
          if (i > r.begin) sample.text.push_back(' ');
          if (!t.is_entity) {
            sample.text += t.surface;
          } else if (t.norm == sample.c1 && !used1) {
            sample.text += kChar1;
            used1 = true;
          } else if (t.norm == sample.c2 && !used2) {
            sample.text += kChar2;
            used2 = true;
          } else {
            sample.text += kCharOther;
          }
        }
        samples.push_back(std::move(sample));
      }
    }
  }
  return samples;
}

FamilyIndex MakeFamilyIndex(const std::vector<CharacterCluster> &clusters,
                            const std::vector<FamilyCluster> &families) {
  std::map<int, int> family_of;
  for (const auto &f : families) {
    for (int member : f.members) {
      if (!family_of.emplace(member, f.id).second) {
        throw ParameterError("character " + std::to_string(member) +
                             " belongs to two families");
      }
    }
  }
  FamilyIndex index;
  for (const auto &c : clusters) {
    auto it = family_of.find(c.id);
    if (it != family_of.end()) index[c.canonical] = it->second;
  }
  return index;
}

RelationSample AutoLabel(RelationSample sample, const FamilyIndex &families) {
  const auto f1 = families.find(sample.c1);
  const auto f2 = families.find(sample.c2);
  sample.label = f1 != families.end() && f2 != families.end() &&
                 f1->second == f2->second;
  return sample;
}

std::string FormatDataset(const std::vector<RelationSample> &samples) {
  std::string out;
  for (const auto &s : samples) {
    OrderedJson j;
    j["text"] = s.text;
    j["c1"] = s.c1;
    j["c2"] = s.c2;
    j["label"] = s.label ? 1 : 0;
    j["source"] = s.source;
    j["sent_id"] = s.sentence_index;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<RelationSample> ParseDataset(std::string_view jsonl) {
  std::vector<RelationSample> samples;
  ForEachJsonLine(jsonl, [&](const Json &j, size_t line_no) {
    CheckKeys(j, {"text", "c1", "c2", "label", "source", "sent_id"}, line_no);
    RelationSample s;
    s.text = j.at("text").get<std::string>();
    s.c1 = j.at("c1").get<std::string>();
    s.c2 = j.at("c2").get<std::string>();
    s.label = ParseBit(j, "label", line_no);
    s.source = j.at("source").get<std::string>();
    s.sentence_index = j.at("sent_id").get<size_t>();
    samples.push_back(std::move(s));
  });
  return samples;
}

void SaveDataset(const std::string &path,
                 const std::vector<RelationSample> &samples) {
  WriteFile(path, FormatDataset(samples));
}

std::vector<RelationSample> LoadDataset(const std::string &path) {
  const std::string text = ReadFile(path);
  try {
    return ParseDataset(text);
  } catch (const ParseError &e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

std::string FormatPredictions(const std::vector<SentencePrediction> &preds) {
  std::string out;
  for (const auto &p : preds) {
    OrderedJson j;
    j["sent_id"] = p.sentence_index;
    j["source"] = p.source;
    j["c1"] = p.c1;
    j["c2"] = p.c2;
    j["pred"] = p.pred ? 1 : 0;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<SentencePrediction> ParsePredictions(std::string_view jsonl) {
  std::vector<SentencePrediction> preds;
  ForEachJsonLine(jsonl, [&](const Json &j, size_t line_no) {
    SentencePrediction p;
    p.sentence_index = j.at("sent_id").get<size_t>();
    p.source = j.at("source").get<std::string>();
    p.c1 = j.at("c1").get<std::string>();
    p.c2 = j.at("c2").get<std::string>();
    p.pred = ParseBit(j, "pred", line_no);
    preds.push_back(std::move(p));
  });
  return preds;
}

std::vector<bool> AlignPredictions(const std::vector<RelationSample> &gold,
                                   const std::vector<SentencePrediction> &preds) {
  using Key = std::tuple<std::string, size_t, std::string, std::string>;
  std::map<Key, bool> by_key;
  for (const auto &p : preds) {
    if (!by_key.emplace(Key{p.source, p.sentence_index, p.c1, p.c2}, p.pred)
             .second) {
      throw LookupError("duplicate prediction for " + p.source + " sentence " +
                        std::to_string(p.sentence_index) + " (" + p.c1 + ", " +
                        p.c2 + ")");
    }
  }
  std::vector<bool> out;
  out.reserve(gold.size());
  for (const auto &g : gold) {
    auto it = by_key.find(Key{g.source, g.sentence_index, g.c1, g.c2});
    if (it == by_key.end()) {
      throw LookupError("no prediction for " + g.source + " sentence " +
                        std::to_string(g.sentence_index) + " (" + g.c1 + ", " +
                        g.c2 + ")");
    }
    out.push_back(it->second);
  }
  return out;
}

std::vector<PairPrediction> BagAggregate(
    const std::map<PairKey, std::vector<bool>> &by_pair) {
  std::vector<PairPrediction> out;
  out.reserve(by_pair.size());
  for (const auto &[pair, preds] : by_pair) {
    if (preds.empty()) {
      throw ParameterError("pair (" + pair.first + ", " + pair.second +
                           ") has no sentences");
    }
    PairPrediction p;
    p.pair = pair;
    p.sentence_predictions = preds;
    p.pair_label = std::find(preds.begin(), preds.end(), true) != preds.end();
    out.push_back(std::move(p));
  }
  return out;
}

std::map<PairKey, std::vector<bool>> GroupByPair(
    const std::vector<RelationSample> &samples, const std::vector<bool> &values) {
  if (samples.size() != values.size()) {
    throw ParameterError("samples and predictions differ in length");
  }
  std::map<PairKey, std::vector<bool>> out;
  for (size_t i = 0; i < samples.size(); ++i) {
    out[{samples[i].c1, samples[i].c2}].push_back(values[i]);
  }
  return out;
}

Metrics Evaluate(const std::vector<bool> &pred, const std::vector<bool> &gold) {
  if (pred.size() != gold.size()) {
    throw ParameterError("prediction and gold lengths differ (" +
                         std::to_string(pred.size()) + " vs " +
                         std::to_string(gold.size()) + ")");
  }
  if (gold.empty()) throw ParameterError("cannot evaluate an empty set");
  size_t counts[2][2] = {{0, 0}, {0, 0}};  // [gold][pred]
  for (size_t i = 0; i < gold.size(); ++i) ++counts[gold[i]][pred[i]];

  auto ratio = [](size_t num, size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  auto per_class = [&](int c) {
    ClassMetrics m;
    const size_t tp = counts[c][c];
    m.support = counts[c][0] + counts[c][1];
    m.precision = ratio(tp, counts[0][c] + counts[1][c]);
    m.recall = ratio(tp, m.support);
    m.f1 = m.precision + m.recall > 0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
  };
  Metrics m;
  m.negative = per_class(0);
  m.positive = per_class(1);
  const double total = static_cast<double>(gold.size());
  const double wn = static_cast<double>(m.negative.support) / total;
  const double wp = static_cast<double>(m.positive.support) / total;
  m.weighted.precision = wn * m.negative.precision + wp * m.positive.precision;
  m.weighted.recall = wn * m.negative.recall + wp * m.positive.recall;
  m.weighted.f1 = wn * m.negative.f1 + wp * m.positive.f1;
  m.weighted.support = gold.size();
  return m;
}

PairLevel EvaluatePairs(const std::vector<RelationSample> &gold,
                        const std::vector<bool> &pred) {
  std::vector<bool> labels;
  labels.reserve(gold.size());
  for (const auto &g : gold) labels.push_back(g.label);
  const auto gold_pairs = BagAggregate(GroupByPair(gold, labels));
  const auto pred_pairs = BagAggregate(GroupByPair(gold, pred));
  PairLevel out;
  for (size_t i = 0; i < gold_pairs.size(); ++i) {
    const bool g = gold_pairs[i].pair_label;
    const bool correct = g == pred_pairs[i].pair_label;
    if (g) {
      ++out.positive_pairs;
      out.positive_correct += correct;
    } else {
      ++out.negative_pairs;
      out.negative_correct += correct;
    }
  }
  return out;
}

void Summarize(CrossValReport &report) {
  const size_t n = report.folds.size();
  report.mean = Metrics{};
  report.stdev = Metrics{};
  if (n == 0) return;
  auto fields = [](Metrics &m) {
    return std::array<ClassMetrics *, 3>{&m.negative, &m.positive, &m.weighted};
  };
  for (size_t c = 0; c < 3; ++c) {
    double sum[3] = {0, 0, 0};
    double support = 0;
    for (auto &f : report.folds) {
      const ClassMetrics &m = *fields(f.metrics)[c];
      sum[0] += m.precision;
      sum[1] += m.recall;
      sum[2] += m.f1;
      support += static_cast<double>(m.support);
    }
    ClassMetrics &mean = *fields(report.mean)[c];
    mean.precision = sum[0] / n;
    mean.recall = sum[1] / n;
    mean.f1 = sum[2] / n;
    mean.support = static_cast<size_t>(std::llround(support / n));
    if (n < 2) continue;
    double sq[3] = {0, 0, 0};
    for (auto &f : report.folds) {
      const ClassMetrics &m = *fields(f.metrics)[c];
      sq[0] += (m.precision - mean.precision) * (m.precision - mean.precision);
      sq[1] += (m.recall - mean.recall) * (m.recall - mean.recall);
      sq[2] += (m.f1 - mean.f1) * (m.f1 - mean.f1);
    }
    ClassMetrics &sd = *fields(report.stdev)[c];
    sd.precision = std::sqrt(sq[0] / (n - 1));
    sd.recall = std::sqrt(sq[1] / (n - 1));
    sd.f1 = std::sqrt(sq[2] / (n - 1));
  }
}

CrossValReport CrossValidate(const std::vector<RelationSample> &samples,
                             const Trainer &trainer, uint64_t seed) {
  const auto sources = Sources(samples);
  if (sources.size() < 2) {
    throw ParameterError("cross-validation needs at least two sources, found " +
                         std::to_string(sources.size()));
  }
  CrossValReport report;
  for (const auto &held_out : sources) {
    std::vector<RelationSample> train, test;
    for (const auto &s : samples) (s.source == held_out ? test : train).push_back(s);
    const bool has_pos = std::any_of(train.begin(), train.end(),
                                     [](const auto &s) { return s.label; });
    const bool has_neg = std::any_of(train.begin(), train.end(),
                                     [](const auto &s) { return !s.label; });
    if (!has_pos || !has_neg) {
      report.skipped.push_back(held_out + ": training partition has only " +
                               (has_pos ? "positive" : "negative") + " samples");
      continue;
    }
    const Predictor predict = trainer(train, seed);
    const std::vector<bool> pred = predict(test);
    std::vector<bool> gold;
    for (const auto &s : test) gold.push_back(s.label);
    FoldResult fold;
    fold.source = held_out;
    fold.metrics = Evaluate(pred, gold);
    fold.pairs = EvaluatePairs(test, pred);
    fold.train_size = train.size();
    fold.test_size = test.size();
    report.folds.push_back(std::move(fold));
  }
  Summarize(report);
  return report;
}

CrossValReport CrossValidateFromPredictions(
    const std::vector<RelationSample> &gold,
    const std::vector<SentencePrediction> &preds) {
  const std::vector<bool> aligned = AlignPredictions(gold, preds);
  CrossValReport report;
  for (const auto &source : Sources(gold)) {
    std::vector<RelationSample> test;
    std::vector<bool> pred, labels;
    for (size_t i = 0; i < gold.size(); ++i) {
      if (gold[i].source != source) continue;
      test.push_back(gold[i]);
      pred.push_back(aligned[i]);
      labels.push_back(gold[i].label);
    }
    FoldResult fold;
    fold.source = source;
    fold.metrics = Evaluate(pred, labels);
    fold.pairs = EvaluatePairs(test, pred);
    fold.test_size = test.size();
    report.folds.push_back(std::move(fold));
  }
  Summarize(report);
  return report;
}

std::string FormatMetrics(const Metrics &m) {
  std::string out = "Samples   Precision  Recall     F-score    Support\n";
  auto row = [&](const char *name, const ClassMetrics &c) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-9s %-10s %-10s %-10s %zu\n", name,
                  Fixed3(c.precision).c_str(), Fixed3(c.recall).c_str(),
                  Fixed3(c.f1).c_str(), c.support);
    out += buf;
  };
  row("Negative", m.negative);
  row("Positive", m.positive);
  row("All", m.weighted);
  return out;
}

std::string FormatReport(const CrossValReport &report) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-9s %-14s %-14s %-14s\n", "Samples",
                "Precision", "Recall", "F-score");
  out += buf;
  auto row = [&](const char *name, const ClassMetrics &mean,
                 const ClassMetrics &sd) {
    std::snprintf(buf, sizeof(buf), "%-9s %-14s %-14s %-14s\n", name,
                  Percent(mean.precision, sd.precision).c_str(),
                  Percent(mean.recall, sd.recall).c_str(),
                  Percent(mean.f1, sd.f1).c_str());
    out += buf;
  };
  row("Negative", report.mean.negative, report.stdev.negative);
  row("Positive", report.mean.positive, report.stdev.positive);
  row("All", report.mean.weighted, report.stdev.weighted);
  out += "\nfolds: " + std::to_string(report.folds.size()) + "\n";
  PairLevel total;
  for (const auto &f : report.folds) {
    std::snprintf(buf, sizeof(buf),
                  "  %s: n=%zu P=%s R=%s F=%s pairs +%zu/%zu -%zu/%zu\n",
                  f.source.c_str(), f.test_size,
                  Fixed3(f.metrics.weighted.precision).c_str(),
                  Fixed3(f.metrics.weighted.recall).c_str(),
                  Fixed3(f.metrics.weighted.f1).c_str(), f.pairs.positive_correct,
                  f.pairs.positive_pairs, f.pairs.negative_correct,
                  f.pairs.negative_pairs);
    out += buf;
    total.positive_pairs += f.pairs.positive_pairs;
    total.positive_correct += f.pairs.positive_correct;
    total.negative_pairs += f.pairs.negative_pairs;
    total.negative_correct += f.pairs.negative_correct;
  }
  std::snprintf(buf, sizeof(buf),
                "pair level: %zu/%zu positive, %zu/%zu negative correct\n",
                total.positive_correct, total.positive_pairs,
                total.negative_correct, total.negative_pairs);
  out += buf;
  for (const auto &s : report.skipped) out += "skipped " + s + "\n";
  return out;
}

std::string ReportJson(const CrossValReport &report) {
  OrderedJson j;
  auto &folds = j["folds"] = OrderedJson::array();
  for (const auto &f : report.folds) {
    OrderedJson fj;
    fj["source"] = f.source;
    fj["train_size"] = f.train_size;
    fj["test_size"] = f.test_size;
    fj["metrics"] = MetricsJson(f.metrics);
    fj["pairs"] = {{"positive_pairs", f.pairs.positive_pairs},
                   {"positive_correct", f.pairs.positive_correct},
                   {"negative_pairs", f.pairs.negative_pairs},
                   {"negative_correct", f.pairs.negative_correct}};
    folds.push_back(std::move(fj));
  }
  j["skipped"] = report.skipped;
  j["mean"] = MetricsJson(report.mean);
  j["stdev"] = MetricsJson(report.stdev);
  return j.dump(2) + "\n";
}

}  // namespace narrative
