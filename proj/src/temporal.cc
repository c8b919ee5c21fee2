#include "narrative/temporal.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "narrative/embedding_io.h"
#include "narrative/io.h"

namespace narrative {
namespace {

nlohmann::ordered_json ConfigJson(const TrainConfig &cfg) {
  nlohmann::ordered_json j;
  j["dim"] = cfg.dim;
  j["window"] = cfg.window;
  j["negatives"] = cfg.negatives;
  j["epochs"] = cfg.epochs;
  j["lr_start"] = cfg.lr_start;
  j["lr_end"] = cfg.lr_end;
  j["min_count"] = cfg.min_count;
  j["subsample_threshold"] = cfg.subsample_threshold
                                 ? nlohmann::ordered_json(*cfg.subsample_threshold)
                                 : nlohmann::ordered_json(nullptr);
  j["seed"] = cfg.seed;
  j["freeze_context"] = cfg.freeze_context;
  return j;
}

TrainConfig ConfigFromJson(const nlohmann::json &j) {
  TrainConfig cfg;
  cfg.dim = j.at("dim").get<size_t>();
  cfg.window = j.at("window").get<size_t>();
  cfg.negatives = j.at("negatives").get<size_t>();
  cfg.epochs = j.at("epochs").get<size_t>();
  cfg.lr_start = j.at("lr_start").get<double>();
  cfg.lr_end = j.at("lr_end").get<double>();
  cfg.min_count = j.at("min_count").get<int64_t>();
  if (!j.at("subsample_threshold").is_null()) {
    cfg.subsample_threshold = j.at("subsample_threshold").get<double>();
  }
  cfg.seed = j.at("seed").get<uint64_t>();
  cfg.freeze_context = j.at("freeze_context").get<bool>();
  return cfg;
}

std::string SlicePath(const std::string &dir, size_t t) {
  return (std::filesystem::path(dir) / ("slice_" + std::to_string(t) + ".emb"))
      .string();
}

}  // namespace

const char *InitSchemeName(InitScheme scheme) {
  return scheme == InitScheme::kStatic ? "static" : "dynamic";
}

InitScheme ParseInitScheme(const std::string &name) {
  if (name == "static") return InitScheme::kStatic;
  if (name == "dynamic") return InitScheme::kDynamic;
  throw ParameterError("unknown init scheme '" + name +
                       "' (expected static or dynamic)");
}

uint64_t SliceSeed(uint64_t seed, size_t slice_index) {
  return MixSeed(seed, slice_index);
}

WordMatrix TrainSlice(const std::vector<std::string> &slice_tokens,
                      const Vocabulary &vocab, const WordMatrix &w_init,
                      const WordMatrix &ctx, const TrainConfig &cfg,
                      size_t slice_index) {
  if (!cfg.freeze_context) {
    throw ParameterError("slice training requires a frozen context matrix");
  }
  if (w_init.rows() != vocab.size() || ctx.rows() != vocab.size() ||
      w_init.cols() != ctx.cols()) {
    throw ParameterError(
        "dimension mismatch: word matrix " + std::to_string(w_init.rows()) +
        "x" + std::to_string(w_init.cols()) + ", context matrix " +
        std::to_string(ctx.rows()) + "x" + std::to_string(ctx.cols()) +
        ", vocabulary " + std::to_string(vocab.size()));
  }
  EmbeddingMatrices m{w_init, ctx};
  Rng rng(SliceSeed(cfg.seed, slice_index));
  RunEpochs(IndexStream(vocab, slice_tokens), vocab, m, cfg, rng);
  return std::move(m.w);
}

TemporalEmbeddings TrainTemporal(
    const std::vector<std::vector<std::string>> &slice_tokens,
    const StaticModel &static_model, InitScheme scheme, const TrainConfig &cfg,
    size_t threads) {
  if (slice_tokens.empty()) throw ParameterError("no slices to train");
  TemporalEmbeddings out;
  out.vocab = static_model.vocab;
  out.ctx = static_model.matrices.ctx;
  out.scheme = scheme;
  out.slices.resize(slice_tokens.size());

  if (scheme == InitScheme::kDynamic) {
    const WordMatrix *init = &static_model.matrices.w;
    for (size_t t = 0; t < slice_tokens.size(); ++t) {
      out.slices[t] =
          TrainSlice(slice_tokens[t], out.vocab, *init, out.ctx, cfg, t);
      init = &out.slices[t];
    }
    return out;
  }

  // Static scheme: each slice owns its output matrix and seed, so the result
  // does not depend on the number of workers.
  threads = std::clamp<size_t>(threads, 1, slice_tokens.size());
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (size_t t = next++; t < slice_tokens.size(); t = next++) {
      try {
        out.slices[t] = TrainSlice(slice_tokens[t], out.vocab,
                                   static_model.matrices.w, out.ctx, cfg, t);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto &th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

void SaveBundle(const std::string &dir, const TemporalEmbeddings &t,
                const BundleInfo &info) {
  const std::filesystem::path root(dir);
  WriteFile((root / "vocab.tsv").string(), FormatVocab(t.vocab));
  SaveEmbeddings((root / "ctx.emb").string(), t.vocab.words, t.ctx);
  for (size_t i = 0; i < t.slices.size(); ++i) {
    SaveEmbeddings(SlicePath(dir, i), t.vocab.words, t.slices[i]);
  }
  nlohmann::ordered_json manifest;
  manifest["scheme"] = InitSchemeName(t.scheme);
  manifest["slice_size"] = info.slice_size;
  manifest["slices"] = t.slices.size();
  manifest["corpus_hash"] = info.corpus_hash;
  manifest["cfg"] = ConfigJson(info.cfg);
  WriteFile((root / "manifest.json").string(), manifest.dump(2) + "\n");
}

TemporalEmbeddings LoadBundle(const std::string &dir, BundleInfo *info) {
  const std::filesystem::path root(dir);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(ReadFile((root / "manifest.json").string()));
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(dir + "/manifest.json: " + e.what(), 0);
  }
  TemporalEmbeddings t;
  t.vocab = ParseVocab(ReadFile((root / "vocab.tsv").string()));
  try {
    t.scheme = ParseInitScheme(manifest.at("scheme").get<std::string>());
    const size_t n = manifest.at("slices").get<size_t>();
    if (info != nullptr) {
      info->slice_size = manifest.at("slice_size").get<size_t>();
      info->corpus_hash = manifest.at("corpus_hash").get<std::string>();
      info->cfg = ConfigFromJson(manifest.at("cfg"));
    }
    auto ctx = LoadEmbeddings((root / "ctx.emb").string());
    if (ctx.words != t.vocab.words) {
      throw ParseError(dir + "/ctx.emb: vocabulary differs from vocab.tsv", 0);
    }
    t.ctx = std::move(ctx.matrix);
    for (size_t i = 0; i < n; ++i) {
      auto slice = LoadEmbeddings(SlicePath(dir, i));
      if (slice.words != t.vocab.words) {
        throw ParseError(SlicePath(dir, i) + ": vocabulary differs", 0);
      }
      t.slices.push_back(std::move(slice.matrix));
    }
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(dir + "/manifest.json: " + e.what(), 0);
  }
  return t;
}

}  // namespace narrative
