#include "narrative/sgns.h"

#include <algorithm>
#include <numeric>

namespace narrative {

std::optional<size_t> Vocabulary::Find(const std::string &token) const {
  auto it = index.find(token);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

size_t Vocabulary::At(const std::string &token) const {
  auto it = index.find(token);
  if (it == index.end()) {
    throw LookupError("token '" + token + "' is not in the vocabulary");
  }
  return it->second;
}

TrainConfig TrainConfig::SliceDefaults() {
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.lr_start = 0.01;
  cfg.lr_end = 0.0001;
  cfg.freeze_context = true;
  return cfg;
}

void TrainConfig::Validate() const {
  if (dim < 1) throw ParameterError("dim must be at least 1");
  if (window < 1) throw ParameterError("window must be at least 1");
  if (negatives < 1) throw ParameterError("negatives must be at least 1");
  // lr = 0 is allowed so that a zero-rate run can be used as a no-op check.
  if (!(lr_end >= 0.0) || !(lr_start >= lr_end)) {
    throw ParameterError("learning rates must satisfy lr_start >= lr_end >= 0");
  }
  if (subsample_threshold && !(*subsample_threshold > 0.0)) {
    throw ParameterError("subsample_threshold must be positive");
  }
}

Vocabulary BuildVocabFromCounts(
    const std::unordered_map<std::string, int64_t> &counts, int64_t min_count,
    const std::set<std::string> &protected_tokens) {
  std::vector<std::pair<std::string, int64_t>> kept;
  for (const auto &[token, count] : counts) {
    if (token.empty()) continue;
    if (count >= min_count || protected_tokens.count(token) > 0) {
      kept.emplace_back(token, count);
    }
  }
  if (kept.empty()) throw ParameterError("vocabulary is empty");
  std::sort(kept.begin(), kept.end(), [](const auto &a, const auto &b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary vocab;
  vocab.min_count = min_count;
  double total = 0.0;
  for (const auto &[token, count] : kept) {
    vocab.index.emplace(token, vocab.words.size());
    vocab.words.push_back(token);
    vocab.counts.push_back(count);
    vocab.noise_weights.push_back(
        std::pow(static_cast<double>(count), kNoiseExponent));
    total += vocab.noise_weights.back();
  }
  double running = 0.0;
  for (double &w : vocab.noise_weights) {
    w /= total;
    running += w;
    vocab.noise_cdf.push_back(running);
  }
  return vocab;
}

Vocabulary BuildVocab(const std::vector<std::string> &tokens, int64_t min_count,
                      const std::set<std::string> &protected_tokens) {
  std::unordered_map<std::string, int64_t> counts;
  for (const auto &t : tokens) ++counts[t];
  return BuildVocabFromCounts(counts, min_count, protected_tokens);
}

size_t DrawNegative(const Vocabulary &vocab, Rng &rng) {
  // Scaling by the last cdf entry absorbs rounding in the running sum.
  const double u = UniformUnit(rng) * vocab.noise_cdf.back();
  const auto it =
      std::upper_bound(vocab.noise_cdf.begin(), vocab.noise_cdf.end(), u);
  return std::min(static_cast<size_t>(it - vocab.noise_cdf.begin()),
                  vocab.size() - 1);
}

std::vector<size_t> DrawNegatives(const Vocabulary &vocab, size_t k, Rng &rng) {
  std::vector<size_t> out(k);
  for (size_t &x : out) x = DrawNegative(vocab, rng);
  return out;
}

std::vector<size_t> IndexStream(const Vocabulary &vocab,
                                const std::vector<std::string> &tokens) {
  std::vector<size_t> out;
  out.reserve(tokens.size());
  for (const auto &t : tokens) {
    if (auto i = vocab.Find(t)) out.push_back(*i);
  }
  return out;
}

EmbeddingMatrices InitMatrices(size_t vocab_size, size_t dim, Rng &rng) {
  EmbeddingMatrices m{WordMatrix(vocab_size, dim), WordMatrix(vocab_size, dim)};
  const double half = 0.5 / static_cast<double>(dim);
  for (float &x : m.w.data()) {
    x = static_cast<float>((UniformUnit(rng) * 2.0 - 1.0) * half);
  }
  return m;
}

namespace {

uint64_t PairsInStream(size_t n, size_t window) {
  uint64_t pairs = 0;
  for (size_t i = 0; i < n; ++i) {
    const size_t lo = i >= window ? i - window : 0;
    const size_t hi = std::min(n - 1, i + window);
    pairs += hi - lo;
  }
  return pairs;
}

// word2vec's keep probability for frequent tokens.
std::vector<size_t> Subsample(const std::vector<size_t> &stream,
                              const Vocabulary &vocab, double threshold,
                              Rng &rng) {
  const double total = std::accumulate(vocab.counts.begin(), vocab.counts.end(),
                                       0.0, [](double a, int64_t c) {
                                         return a + static_cast<double>(c);
                                       });
  std::vector<size_t> kept;
  kept.reserve(stream.size());
  for (size_t t : stream) {
    const double f = static_cast<double>(vocab.counts[t]) / total;
    const double keep = (std::sqrt(f / threshold) + 1.0) * threshold / f;
    if (keep >= 1.0 || UniformUnit(rng) < keep) kept.push_back(t);
  }
  return kept;
}

}  // namespace

TrainStats RunEpochs(const std::vector<size_t> &stream, const Vocabulary &vocab,
                     EmbeddingMatrices &m, const TrainConfig &cfg, Rng &rng) {
  cfg.Validate();
  if (m.w.rows() != vocab.size() || m.ctx.rows() != vocab.size() ||
      m.w.cols() != m.ctx.cols()) {
    throw ParameterError("embedding matrices do not match the vocabulary");
  }
  TrainStats stats;
  const uint64_t total_steps = cfg.epochs * PairsInStream(stream.size(), cfg.window);
  const double denom =
      total_steps > 1 ? static_cast<double>(total_steps - 1) : 1.0;
  uint64_t step = 0;
  std::vector<size_t> negatives(cfg.negatives);

  for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<size_t> kept =
        cfg.subsample_threshold
            ? Subsample(stream, vocab, *cfg.subsample_threshold, rng)
            : stream;
    double loss_sum = 0.0;
    uint64_t pairs = 0;
    const size_t n = kept.size();
    for (size_t i = 0; i < n; ++i) {
      const size_t lo = i >= cfg.window ? i - cfg.window : 0;
      const size_t hi = std::min(n - 1, i + cfg.window);
      for (size_t j = lo; j <= hi; ++j) {
        if (j == i) continue;
        const double progress =
            std::min(1.0, static_cast<double>(step) / denom);
        const double lr = cfg.lr_start + (cfg.lr_end - cfg.lr_start) * progress;
        ++step;
        const size_t context = kept[j];
        bool ok = true;
        for (size_t &neg : negatives) {
          int attempts = 0;
          do {
            neg = DrawNegative(vocab, rng);
          } while (neg == context && ++attempts < kMaxNegativeResamples);
          if (neg == context) {
            ok = false;
            break;
          }
        }
        if (!ok) {
          ++stats.skipped_pairs;
          continue;
        }
        loss_sum += SgnsStep<float>(kept[i], context, negatives, m, lr,
                                    cfg.freeze_context);
        ++pairs;
      }
    }
    stats.pairs += pairs;
    stats.epoch_mean_loss.push_back(
        pairs > 0 ? loss_sum / static_cast<double>(pairs) : 0.0);
  }
  return stats;
}

StaticModel TrainStatic(const std::vector<std::string> &tokens,
                        Vocabulary vocab, const TrainConfig &cfg) {
  cfg.Validate();
  if (vocab.size() == 0) throw ParameterError("vocabulary is empty");
  Rng rng(cfg.seed);
  StaticModel model;
  model.matrices = InitMatrices(vocab.size(), cfg.dim, rng);
  model.stats = RunEpochs(IndexStream(vocab, tokens), vocab, model.matrices,
                          cfg, rng);
  model.vocab = std::move(vocab);
  return model;
}

StaticModel TrainStatic(const std::vector<std::string> &tokens,
                        const TrainConfig &cfg,
                        const std::set<std::string> &protected_tokens) {
  return TrainStatic(tokens, BuildVocab(tokens, cfg.min_count, protected_tokens),
                     cfg);
}

}  // namespace narrative
