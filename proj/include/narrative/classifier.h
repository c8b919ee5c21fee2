#ifndef NARRATIVE_CLASSIFIER_H_
#define NARRATIVE_CLASSIFIER_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "narrative/relations.h"

namespace narrative {

struct BaselineOptions {
  size_t buckets = size_t{1} << 18;
  size_t epochs = 10;
  double learning_rate = 0.1;
  double l2 = 1e-4;
};

// Hashed unigram + bigram feature buckets of a sentence (whitespace tokens,
// ASCII-lowercased, FNV-1a). Duplicates are kept once: features are binary.
std::vector<uint32_t> HashedFeatures(std::string_view text, size_t buckets);

// Binary logistic regression over hashed n-gram features, trained by SGD.
class SentenceClassifier {
 public:
  SentenceClassifier() = default;

  // Throws ParameterError when `train` does not hold both classes.
  static SentenceClassifier Train(const std::vector<RelationSample> &train,
                                  uint64_t seed,
                                  const BaselineOptions &options = {});

  double Probability(std::string_view text) const;
  bool Predict(std::string_view text) const { return Probability(text) >= 0.5; }
  std::vector<bool> Predict(const std::vector<RelationSample> &samples) const;

  // Sparse text format: header `NARR-LR v1 <buckets>`, `bias <w>`, then
  // `<bucket> <w>` for non-zero weights in bucket order.
  std::string Serialize() const;
  static SentenceClassifier Deserialize(std::string_view text);

  const std::vector<double> &weights() const { return weights_; }
  double bias() const { return bias_; }

 private:
  std::vector<double> weights_;
  double bias_ = 0.0;
};

// Trainer adapter for CrossValidate.
Trainer BaselineTrainer(const BaselineOptions &options = {});

}  // namespace narrative

#endif  // NARRATIVE_CLASSIFIER_H_
