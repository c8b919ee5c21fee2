// Regenerates the bundled synthetic data files.
//
//   make_synthetic <data_dir>

#include <cstdio>
#include <exception>
#include <string>

#include "narrative/io.h"
#include "narrative/relations.h"
#include "narrative/synthetic.h"

int main(int argc, char **argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <data_dir>\n", argv[0]);
    return 2;
  }
  const std::string dir = argv[1];
  try {
    narrative::WriteFile(dir + "/drift_corpus.txt",
                         narrative::MakeDriftCorpus(1).text);
    narrative::SaveDataset(dir + "/separable.jsonl",
                           narrative::MakeSeparableDataset(1));
    narrative::SaveDataset(dir + "/six_sources.jsonl",
                           narrative::MakeSixSourceDataset(1));
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
