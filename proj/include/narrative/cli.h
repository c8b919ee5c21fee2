#ifndef NARRATIVE_CLI_H_
#define NARRATIVE_CLI_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "narrative/classifier.h"
#include "narrative/sgns.h"

namespace narrative::cli {

struct DealiasOptions {
  double eps_alias = 0.4;
  double eps_family = 0.6;
  size_t min_pts = 1;
  std::string mention_mode = "heuristic";  // or "external"
  std::map<std::string, std::string> annotations;  // book id -> file
};

struct TemporalOptions {
  size_t slice_size = 10000;
  std::string init_scheme = "dynamic";
  size_t epochs = 5;
  double lr_start = 0.01;
  double lr_end = 0.0001;
  size_t threads = 1;
};

struct TrajectoryOptions {
  std::string anchor;                   // empty: most mentioned character
  std::vector<std::string> characters;  // empty: top_characters by mentions
  size_t top_characters = 5;
};

struct PipelineConfig {
  std::vector<std::string> books;
  std::string workspace = "workspace";
  uint64_t seed = 1;
  DealiasOptions dealias;
  TrainConfig train;
  TemporalOptions temporal;
  TrajectoryOptions trajectories;
  BaselineOptions relations;

  // Throws ConfigError when an invariant does not hold.
  void Validate() const;
  // Word-level training config for slices: shares dim, window, negatives,
  // min_count and subsampling with `train`, with a frozen context.
  TrainConfig SliceConfig() const;
};

// Parses the JSON config. Unknown keys and type mismatches throw ConfigError.
// Relative book and annotation paths are resolved against `base_dir`.
PipelineConfig ParseConfig(std::string_view json_text,
                           const std::string &base_dir = {});
PipelineConfig LoadConfig(const std::string &path);

// Echo of the effective configuration, without the workspace location.
std::string ConfigJson(const PipelineConfig &config);

// Runs one subcommand. Returns 0 on success, 2 on a usage or configuration
// error and 1 on any other failure; messages go to `err`.
int Run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace narrative::cli

#endif  // NARRATIVE_CLI_H_
