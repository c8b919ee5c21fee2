#ifndef NARRATIVE_SGNS_H_
#define NARRATIVE_SGNS_H_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "narrative/error.h"
#include "narrative/random.h"

namespace narrative {

// Dense row-major matrix.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(size_t rows, size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }

  std::span<T> row(size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  T &operator()(size_t r, size_t c) { return data_[r * cols_ + c]; }
  const T &operator()(size_t r, size_t c) const { return data_[r * cols_ + c]; }

  const std::vector<T> &data() const { return data_; }
  std::vector<T> &data() { return data_; }

  bool operator==(const Matrix &) const = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<T> data_;
};

using WordMatrix = Matrix<float>;

struct Vocabulary {
  std::vector<std::string> words;  // index -> token
  std::unordered_map<std::string, size_t> index;
  std::vector<int64_t> counts;
  std::vector<double> noise_weights;  // count^0.75, normalized
  std::vector<double> noise_cdf;      // running sum of noise_weights
  int64_t min_count = 0;

  size_t size() const { return words.size(); }
  std::optional<size_t> Find(const std::string &token) const;
  size_t At(const std::string &token) const;  // throws LookupError
};

// Word (input) and context (output) embeddings over one vocabulary.
template <typename T>
struct EmbeddingMatricesT {
  Matrix<T> w;
  Matrix<T> ctx;
  size_t dim() const { return w.cols(); }
};
using EmbeddingMatrices = EmbeddingMatricesT<float>;

struct TrainConfig {
  size_t dim = 100;
  size_t window = 5;
  size_t negatives = 5;
  size_t epochs = 5;
  double lr_start = 0.025;
  double lr_end = 0.0001;
  int64_t min_count = 5;
  std::optional<double> subsample_threshold;
  uint64_t seed = 1;
  bool freeze_context = false;

  // Per-slice defaults for temporal training: smaller rate, frozen context.
  static TrainConfig SliceDefaults();
  // Throws ParameterError when an invariant does not hold.
  void Validate() const;
};

inline constexpr double kNoiseExponent = 0.75;
inline constexpr int kMaxNegativeResamples = 100;

// Vocabulary sorted by descending count, ties lexicographic. Tokens below
// `min_count` are dropped unless protected; empty tokens are always dropped.
// Throws ParameterError when nothing survives.
Vocabulary BuildVocab(const std::vector<std::string> &tokens, int64_t min_count,
                      const std::set<std::string> &protected_tokens = {});

// Same, from precomputed counts.
Vocabulary BuildVocabFromCounts(
    const std::unordered_map<std::string, int64_t> &counts, int64_t min_count,
    const std::set<std::string> &protected_tokens = {});

// One draw from the noise distribution.
size_t DrawNegative(const Vocabulary &vocab, Rng &rng);
// k i.i.d. draws from the noise distribution.
std::vector<size_t> DrawNegatives(const Vocabulary &vocab, size_t k, Rng &rng);

// Maps tokens to vocabulary indices, dropping unknown ones.
std::vector<size_t> IndexStream(const Vocabulary &vocab,
                                const std::vector<std::string> &tokens);

inline double Sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                : std::exp(x) / (1.0 + std::exp(x));
}

// -log(sigmoid(x)), stable for large |x|.
inline double NegLogSigmoid(double x) {
  return x >= 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

template <typename T>
double Dot(std::span<const T> a, std::span<const T> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return s;
}

// Gradient of the SGNS loss for one (center, context, negatives) example.
// d_center is with respect to the center word row; d_context[i] with respect
// to the context row of context_rows[i] (the true context first, then each
// negative in order; duplicates appear once per occurrence).
struct SgnsGradient {
  double loss = 0.0;
  std::vector<double> d_center;
  std::vector<size_t> context_rows;
  std::vector<std::vector<double>> d_context;
};

template <typename T>
SgnsGradient SgnsLossAndGradient(size_t center, size_t context,
                                 std::span<const size_t> negatives,
                                 const EmbeddingMatricesT<T> &m) {
  const size_t d = m.dim();
  const auto w = m.w.row(center);
  SgnsGradient g;
  g.d_center.assign(d, 0.0);
  g.context_rows.reserve(negatives.size() + 1);
  g.context_rows.push_back(context);
  g.context_rows.insert(g.context_rows.end(), negatives.begin(),
                        negatives.end());
  for (size_t r = 0; r < g.context_rows.size(); ++r) {
    const auto c = m.ctx.row(g.context_rows[r]);
    const double x = Dot<T>(w, c);
    if (!std::isfinite(x)) {
      throw NumericError("non-finite dot product in SGNS step");
    }
    // Positive pair: -log sig(x), d/dx = sig(x) - 1.
    // Negative pair: -log sig(-x), d/dx = sig(x).
    const bool positive = r == 0;
    g.loss += positive ? NegLogSigmoid(x) : NegLogSigmoid(-x);
    const double coeff = positive ? Sigmoid(x) - 1.0 : Sigmoid(x);
    std::vector<double> dc(d);
    for (size_t i = 0; i < d; ++i) {
      g.d_center[i] += coeff * static_cast<double>(c[i]);
      dc[i] = coeff * static_cast<double>(w[i]);
    }
    g.d_context.push_back(std::move(dc));
  }
  return g;
}

// One gradient-descent step. All gradients are taken at the pre-step
// parameters, so the update equals -lr times SgnsLossAndGradient; the context
// rows are left untouched when freeze_context is set.
template <typename T>
double SgnsStep(size_t center, size_t context, std::span<const size_t> negatives,
                EmbeddingMatricesT<T> &m, double lr, bool freeze_context) {
  thread_local std::vector<double> coeffs;
  thread_local std::vector<double> d_center;
  const size_t d = m.dim();
  const size_t n = negatives.size() + 1;
  auto row_of = [&](size_t r) { return r == 0 ? context : negatives[r - 1]; };
  auto w = m.w.row(center);

  coeffs.resize(n);
  d_center.assign(d, 0.0);
  double loss = 0.0;
  for (size_t r = 0; r < n; ++r) {
    const auto c = m.ctx.row(row_of(r));
    const double x = Dot<T>(std::span<const T>(w), c);
    if (!std::isfinite(x)) {
      throw NumericError("non-finite dot product in SGNS step");
    }
    loss += r == 0 ? NegLogSigmoid(x) : NegLogSigmoid(-x);
    coeffs[r] = r == 0 ? Sigmoid(x) - 1.0 : Sigmoid(x);
    for (size_t i = 0; i < d; ++i) d_center[i] += coeffs[r] * c[i];
  }
  if (!freeze_context) {
    for (size_t r = 0; r < n; ++r) {
      auto c = m.ctx.row(row_of(r));
      const double step = lr * coeffs[r];
      for (size_t i = 0; i < d; ++i) {
        c[i] = static_cast<T>(c[i] - step * static_cast<double>(w[i]));
      }
    }
  }
  for (size_t i = 0; i < d; ++i) {
    w[i] = static_cast<T>(static_cast<double>(w[i]) - lr * d_center[i]);
  }
  return loss;
}

struct TrainStats {
  std::vector<double> epoch_mean_loss;  // mean per-pair loss of each epoch
  uint64_t pairs = 0;
  uint64_t skipped_pairs = 0;  // negatives could not avoid the context
};

// Runs cfg.epochs passes of SGNS over `stream` (vocabulary indices), updating
// `m` in place. Every (center, context) pair within cfg.window is visited once
// per epoch; the learning rate decays linearly from lr_start to lr_end.
TrainStats RunEpochs(const std::vector<size_t> &stream, const Vocabulary &vocab,
                     EmbeddingMatrices &m, const TrainConfig &cfg, Rng &rng);

// W uniform in [-0.5/d, 0.5/d], context zeros.
EmbeddingMatrices InitMatrices(size_t vocab_size, size_t dim, Rng &rng);

struct StaticModel {
  Vocabulary vocab;
  EmbeddingMatrices matrices;
  TrainStats stats;
};

// Static embedding over the whole token stream.
StaticModel TrainStatic(const std::vector<std::string> &tokens,
                        const TrainConfig &cfg,
                        const std::set<std::string> &protected_tokens = {});

// Same, with a vocabulary built by the caller.
StaticModel TrainStatic(const std::vector<std::string> &tokens,
                        Vocabulary vocab, const TrainConfig &cfg);

}  // namespace narrative

#endif  // NARRATIVE_SGNS_H_
