#ifndef NARRATIVE_TEMPORAL_H_
#define NARRATIVE_TEMPORAL_H_

#include <cstddef>
#include <string>
#include <vector>

#include "narrative/sgns.h"

namespace narrative {

enum class InitScheme {
  kStatic,   // every slice starts from the static word matrix
  kDynamic,  // slice t starts from the result of slice t-1
};

const char *InitSchemeName(InitScheme scheme);
InitScheme ParseInitScheme(const std::string &name);  // throws ParameterError

// Per-slice word matrices aligned through one frozen context matrix.
struct TemporalEmbeddings {
  Vocabulary vocab;
  WordMatrix ctx;
  std::vector<WordMatrix> slices;
  InitScheme scheme = InitScheme::kDynamic;
};

// Seed of the RNG used for slice `slice_index`.
uint64_t SliceSeed(uint64_t seed, size_t slice_index);

// SGNS epochs over one slice with the context matrix frozen. Only rows of
// tokens that occur in the slice move. Requires cfg.freeze_context.
WordMatrix TrainSlice(const std::vector<std::string> &slice_tokens,
                      const Vocabulary &vocab, const WordMatrix &w_init,
                      const WordMatrix &ctx, const TrainConfig &cfg,
                      size_t slice_index);

// Trains one word matrix per slice against the static model's context matrix.
// Under the static scheme slices are independent and run on up to `threads`
// workers; the dynamic scheme is sequential.
TemporalEmbeddings TrainTemporal(
    const std::vector<std::vector<std::string>> &slice_tokens,
    const StaticModel &static_model, InitScheme scheme, const TrainConfig &cfg,
    size_t threads = 1);

struct BundleInfo {
  size_t slice_size = 0;
  std::string corpus_hash;
  TrainConfig cfg;
};

// Directory with vocab.tsv, ctx.emb, slice_<t>.emb and manifest.json.
void SaveBundle(const std::string &dir, const TemporalEmbeddings &t,
                const BundleInfo &info);
TemporalEmbeddings LoadBundle(const std::string &dir,
                              BundleInfo *info = nullptr);

}  // namespace narrative

#endif  // NARRATIVE_TEMPORAL_H_
