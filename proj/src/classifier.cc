#include "narrative/classifier.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <memory>
#include <numeric>

#include "narrative/error.h"
#include "narrative/random.h"
#include "narrative/sgns.h"

namespace narrative {
namespace {

constexpr std::string_view kModelHeader = "NARR-LR v1";

std::vector<std::string> LowerWords(std::string_view text) {
  std::vector<std::string> words;
  size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' ||
                                 text[pos] == '\n' || text[pos] == '\r')) {
      ++pos;
    }
    size_t end = pos;
    while (end < text.size() && text[end] != ' ' && text[end] != '\t' &&
           text[end] != '\n' && text[end] != '\r') {
      ++end;
    }
    if (end > pos) {
      std::string w(text.substr(pos, end - pos));
      for (char &c : w) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
      }
      words.push_back(std::move(w));
    }
    pos = end;
  }
  return words;
}

std::string FormatDouble(double x) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

}  // namespace

std::vector<uint32_t> HashedFeatures(std::string_view text, size_t buckets) {
  const auto words = LowerWords(text);
  std::vector<uint32_t> features;
  features.reserve(2 * words.size());
  for (size_t i = 0; i < words.size(); ++i) {
    features.push_back(
        static_cast<uint32_t>(Fnv1a64("u\x1f" + words[i]) % buckets));
    if (i + 1 < words.size()) {
      features.push_back(static_cast<uint32_t>(
          Fnv1a64("b\x1f" + words[i] + "\x1f" + words[i + 1]) % buckets));
    }
  }
  std::sort(features.begin(), features.end());
  features.erase(std::unique(features.begin(), features.end()), features.end());
  return features;
}

SentenceClassifier SentenceClassifier::Train(
    const std::vector<RelationSample> &train, uint64_t seed,
    const BaselineOptions &options) {
  const bool has_pos = std::any_of(train.begin(), train.end(),
                                   [](const auto &s) { return s.label; });
  const bool has_neg = std::any_of(train.begin(), train.end(),
                                   [](const auto &s) { return !s.label; });
  if (!has_pos || !has_neg) {
    throw ParameterError("baseline training needs both positive and negative "
                         "samples");
  }
  if (options.buckets == 0) throw ParameterError("buckets must be positive");

  std::vector<std::vector<uint32_t>> features;
  features.reserve(train.size());
  for (const auto &s : train) {
    features.push_back(HashedFeatures(s.text, options.buckets));
  }

  // Weights are stored as scale * v so that the L2 shrinkage of every weight
  // is a single multiplication per step.
  std::vector<double> v(options.buckets, 0.0);
  double scale = 1.0;
  double bias = 0.0;
  const double decay = 1.0 - options.learning_rate * options.l2;

  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (size_t epoch = 0; epoch < options.epochs; ++epoch) {
    Shuffle(order.begin(), order.end(), rng);
    for (size_t idx : order) {
      const auto &f = features[idx];
      double z = 0.0;
      for (uint32_t b : f) z += v[b];
      z = bias + scale * z;
      const double g = Sigmoid(z) - (train[idx].label ? 1.0 : 0.0);
      scale *= decay;
      const double step = options.learning_rate * g;
      for (uint32_t b : f) v[b] -= step / scale;
      bias -= step;
      if (scale < 1e-6) {
        for (double &x : v) x *= scale;
        scale = 1.0;
      }
    }
  }
  SentenceClassifier model;
  model.weights_.resize(options.buckets);
  for (size_t i = 0; i < v.size(); ++i) model.weights_[i] = scale * v[i];
  model.bias_ = bias;
  return model;
}

double SentenceClassifier::Probability(std::string_view text) const {
  if (weights_.empty()) throw ParameterError("classifier is not trained");
  double z = bias_;
  for (uint32_t b : HashedFeatures(text, weights_.size())) z += weights_[b];
  return Sigmoid(z);
}

std::vector<bool> SentenceClassifier::Predict(
    const std::vector<RelationSample> &samples) const {
  std::vector<bool> out;
  out.reserve(samples.size());
  for (const auto &s : samples) out.push_back(Predict(s.text));
  return out;
}

std::string SentenceClassifier::Serialize() const {
  std::string out = std::string(kModelHeader) + " " +
                    std::to_string(weights_.size()) + "\n";
  out += "bias " + FormatDouble(bias_) + "\n";
  for (size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] != 0.0) {
      out += std::to_string(i) + " " + FormatDouble(weights_[i]) + "\n";
    }
  }
  return out;
}

SentenceClassifier SentenceClassifier::Deserialize(std::string_view text) {
  size_t pos = 0, line_no = 0;
  auto next_line = [&](std::string_view &line) {
    if (pos >= text.size()) return false;
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    return true;
  };
  auto parse = [&](std::string_view field, auto &value) {
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
      throw ParseError("invalid number '" + std::string(field) + "'", line_no);
    }
  };
  std::string_view line;
  if (!next_line(line) || !line.starts_with(kModelHeader)) {
    throw ParseError("missing NARR-LR v1 header", 1);
  }
  size_t buckets = 0;
  parse(line.substr(kModelHeader.size() + 1), buckets);
  if (buckets == 0) throw ParseError("bucket count must be positive", 1);
  SentenceClassifier model;
  model.weights_.assign(buckets, 0.0);
  if (!next_line(line) || !line.starts_with("bias ")) {
    throw ParseError("missing bias line", 2);
  }
  parse(line.substr(5), model.bias_);
  while (next_line(line)) {
    if (line.empty()) continue;
    const size_t space = line.find(' ');
    if (space == std::string_view::npos) {
      throw ParseError("expected '<bucket> <weight>'", line_no);
    }
    size_t bucket = 0;
    double w = 0.0;
    parse(line.substr(0, space), bucket);
    parse(line.substr(space + 1), w);
    if (bucket >= buckets) throw ParseError("bucket out of range", line_no);
    model.weights_[bucket] = w;
  }
  return model;
}

Trainer BaselineTrainer(const BaselineOptions &options) {
  return [options](const std::vector<RelationSample> &train, uint64_t seed) {
    auto model = std::make_shared<SentenceClassifier>(
        SentenceClassifier::Train(train, seed, options));
    return Predictor([model](const std::vector<RelationSample> &samples) {
      return model->Predict(samples);
    });
  };
}

}  // namespace narrative
