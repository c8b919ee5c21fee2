#include "narrative/cli.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "narrative/corpus.h"
#include "narrative/dealias.h"
#include "narrative/embedding_io.h"
#include "narrative/error.h"
#include "narrative/io.h"
#include "narrative/relations.h"
#include "narrative/temporal.h"
#include "narrative/trajectory.h"

namespace narrative::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

constexpr const char *kWorkspaceEnv = "NARR_WORKSPACE";

// ---------------------------------------------------------------------------
// Config parsing

void CheckKeys(const Json &j, const std::string &where,
               std::initializer_list<const char *> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto &[key, value] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char *a) {
          return key == a;
        }) == allowed.end()) {
      throw ConfigError("unknown config key '" +
                        (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

template <typename T>
void Read(const Json &j, const char *key, const std::string &where, T &out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    if constexpr (std::is_unsigned_v<T>) {
      if (!it->is_number_unsigned()) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!it->is_number_integer()) throw ConfigError("");
    }
    out = it->get<T>();
  } catch (const std::exception &) {
    throw ConfigError("config key '" + where + key + "' has the wrong type");
  }
}

std::string Resolve(const std::string &base_dir, const std::string &path) {
  if (base_dir.empty() || path.empty() || fs::path(path).is_absolute()) {
    return path;
  }
  return (fs::path(base_dir) / path).lexically_normal().string();
}

std::string BookId(const std::string &path) {
  return fs::path(path).stem().string();
}

// ---------------------------------------------------------------------------
// Workspace

class Workspace {
 public:
  explicit Workspace(std::string root) : root_(std::move(root)) {}

  std::string Path(const std::string &relative) const {
    return (fs::path(root_) / relative).string();
  }
  std::string Relative(const std::string &path) const {
    const auto rel = fs::path(path).lexically_relative(root_);
    return !rel.empty() && *rel.begin() != ".." ? rel.string() : path;
  }

  // Throws an error naming the subcommand that produces `relative`.
  std::string Require(const std::string &relative,
                      const std::string &producer) const {
    const std::string p = Path(relative);
    if (!fs::exists(p)) {
      throw Error("missing " + p + "; run `narrative " + producer +
                  "` first");
    }
    return p;
  }

  const std::string &root() const { return root_; }

 private:
  std::string root_;
};

constexpr const char *kBooks = "corpus/books.json";
constexpr const char *kCharacters = "clusters/characters.json";
constexpr const char *kFamilies = "clusters/families.json";
constexpr const char *kStaticDir = "emb/static";
constexpr const char *kTemporalDir = "emb/temporal";
constexpr const char *kDistances = "traj/distances";
constexpr const char *kProjection = "traj/projection";
constexpr const char *kDataset = "dataset/dataset.jsonl";
constexpr const char *kModel = "models/baseline.lr";
constexpr const char *kManifest = "reports/run.json";

std::string CorpusFile(const std::string &id) { return "corpus/" + id + ".json"; }
std::string ResolvedFile(const std::string &id) {
  return "corpus/" + id + ".resolved.json";
}

// Records what a subcommand read and wrote in reports/run.json.
class RunRecord {
 public:
  RunRecord(const Workspace &ws, std::string command, const PipelineConfig &cfg)
      : ws_(ws), command_(std::move(command)), config_(ConfigJson(cfg)) {}

  void Input(const std::string &path) { inputs_.push_back(path); }
  void Output(const std::string &path) { outputs_.push_back(path); }

  void Write(const std::string &path, std::string_view contents) {
    WriteFile(path, contents);
    Output(path);
  }

  void Commit() const {
    const std::string manifest = ws_.Path(kManifest);
    Json all = Json::object();
    if (fs::exists(manifest)) {
      try {
        all = Json::parse(ReadFile(manifest));
      } catch (const Json::exception &) {
        all = Json::object();
      }
    }
    Json entry;
    entry["config"] = Json::parse(config_);
    entry["inputs"] = Hashes(inputs_);
    entry["outputs"] = Hashes(outputs_);
    all[command_] = std::move(entry);
    WriteFile(manifest, all.dump(2) + "\n");
  }

 private:
  Json Hashes(const std::vector<std::string> &paths) const {
    Json out = Json::object();
    for (const auto &p : paths) out[ws_.Relative(p)] = HashHex(ReadFile(p));
    return out;
  }

  const Workspace &ws_;
  std::string command_;
  std::string config_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
};

// ---------------------------------------------------------------------------
// Artifact loading

std::vector<std::string> LoadBookIds(const Workspace &ws, RunRecord &run) {
  const std::string path = ws.Require(kBooks, "ingest");
  run.Input(path);
  return Json::parse(ReadFile(path)).get<std::vector<std::string>>();
}

std::vector<Document> LoadResolved(const Workspace &ws, RunRecord &run) {
  std::vector<Document> docs;
  for (const auto &id : LoadBookIds(ws, run)) {
    const std::string path = ws.Require(ResolvedFile(id), "dealias");
    run.Input(path);
    docs.push_back(LoadCorpus(path));
  }
  return docs;
}

struct CharacterInfo {
  std::vector<CharacterCluster> clusters;  // without mention positions
  std::map<std::string, size_t> mention_count;
};

CharacterInfo LoadCharacters(const Workspace &ws, RunRecord &run) {
  const std::string path = ws.Require(kCharacters, "dealias");
  run.Input(path);
  CharacterInfo info;
  for (const auto &c : Json::parse(ReadFile(path))) {
    CharacterCluster cluster;
    cluster.id = c.at("id").get<int>();
    cluster.canonical = c.at("canonical").get<std::string>();
    for (const auto &a : c.at("aliases")) cluster.aliases.insert(a.get<std::string>());
    info.mention_count[cluster.canonical] = c.at("mention_count").get<size_t>();
    info.clusters.push_back(std::move(cluster));
  }
  return info;
}

std::vector<FamilyCluster> LoadFamilies(const Workspace &ws, RunRecord &run) {
  const std::string path = ws.Require(kFamilies, "dealias");
  run.Input(path);
  std::vector<FamilyCluster> families;
  for (const auto &f : Json::parse(ReadFile(path))) {
    FamilyCluster family;
    family.id = f.at("id").get<int>();
    for (const auto &m : f.at("members")) family.members.insert(m.get<int>());
    families.push_back(std::move(family));
  }
  return families;
}

StaticModel LoadStatic(const Workspace &ws, RunRecord &run) {
  const std::string dir = std::string(kStaticDir) + "/";
  const std::string vocab_path = ws.Require(dir + "vocab.tsv", "train-static");
  const std::string w_path = ws.Require(dir + "w.emb", "train-static");
  const std::string ctx_path = ws.Require(dir + "ctx.emb", "train-static");
  for (const auto &p : {vocab_path, w_path, ctx_path}) run.Input(p);
  StaticModel model;
  model.vocab = ParseVocab(ReadFile(vocab_path));
  auto w = LoadEmbeddings(w_path);
  auto ctx = LoadEmbeddings(ctx_path);
  if (w.words != model.vocab.words || ctx.words != model.vocab.words) {
    throw Error("static embeddings in " + ws.Path(kStaticDir) +
                " do not match vocab.tsv; rerun `narrative train-static`");
  }
  model.matrices.w = std::move(w.matrix);
  model.matrices.ctx = std::move(ctx.matrix);
  return model;
}

std::vector<RelationSample> LoadSamples(const Workspace &ws, RunRecord &run,
                                        const std::string &override_path) {
  const std::string path =
      override_path.empty() ? ws.Require(kDataset, "dataset") : override_path;
  run.Input(path);
  return LoadDataset(path);
}

std::string CorpusHash(const std::vector<Document> &docs) {
  std::string all;
  for (const auto &d : docs) all += SerializeCorpus(d);
  return HashHex(all);
}

std::string Percent(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", 100.0 * x);
  return buf;
}

// ---------------------------------------------------------------------------
// Subcommands

struct Flags {
  std::vector<std::string> inputs;
  std::vector<std::string> annotations;  // id=path
  std::vector<std::string> characters;
  std::vector<std::string> holdout;
  std::vector<std::string> sources;
  std::string data;
  std::string predictions;
  std::string title;
};

void Ingest(const PipelineConfig &cfg, const Workspace &ws, const Flags &flags,
            std::ostream &out) {
  const std::vector<std::string> books = flags.inputs.empty() ? cfg.books : flags.inputs;
  if (books.empty()) {
    throw ConfigError("no input books: pass --input or set \"books\" in the config");
  }
  RunRecord run(ws, "ingest", cfg);
  std::vector<std::string> ids;
  for (const auto &path : books) {
    const std::string id = BookId(path);
    if (std::find(ids.begin(), ids.end(), id) != ids.end()) {
      throw ConfigError("two input books share the id '" + id + "'");
    }
    ids.push_back(id);
    run.Input(path);
    Document doc = MakeDocument(id, ReadFile(path));
    if (doc.WordCount() == 0) throw Error("empty document: " + path);
    const auto slices = SliceCorpus(doc, cfg.temporal.slice_size);
    run.Write(ws.Path(CorpusFile(id)), SerializeCorpus(doc, slices));
    out << "ingested " << id << ": " << doc.WordCount() << " words, "
        << doc.tokens.size() << " tokens, " << doc.sentences.size()
        << " sentences, " << slices.size() << " slices\n";
  }
  run.Write(ws.Path(kBooks), Json(ids).dump() + "\n");
  run.Commit();
}

void Dealias(const PipelineConfig &cfg, const Workspace &ws, std::ostream &out) {
  RunRecord run(ws, "dealias", cfg);
  const auto ids = LoadBookIds(ws, run);
  const MentionMode mode = cfg.dealias.mention_mode == "external"
                               ? MentionMode::kExternal
                               : MentionMode::kHeuristic;
  std::vector<Document> docs;
  std::vector<std::vector<Mention>> per_doc;
  std::vector<Mention> pooled;
  for (const auto &id : ids) {
    const std::string path = ws.Require(CorpusFile(id), "ingest");
    run.Input(path);
    docs.push_back(LoadCorpus(path));
    std::string annotations;
    const std::string *annotations_ptr = nullptr;
    if (mode == MentionMode::kExternal) {
      auto it = cfg.dealias.annotations.find(id);
      if (it == cfg.dealias.annotations.end()) {
        throw ConfigError("mention_mode is external but book '" + id +
                          "' has no annotation file");
      }
      run.Input(it->second);
      annotations = ReadFile(it->second);
      annotations_ptr = &annotations;
    }
    per_doc.push_back(MentionCandidates(docs.back(), mode, annotations_ptr));
    pooled.insert(pooled.end(), per_doc.back().begin(), per_doc.back().end());
  }
  if (pooled.empty()) throw Error("no character mentions found");

  const auto clusters =
      BuildClusters(pooled, cfg.dealias.eps_alias, cfg.dealias.min_pts);
  const auto families = FamilyClusters(clusters, cfg.dealias.eps_family,
                                       cfg.dealias.min_pts, cfg.dealias.eps_alias);

  // Every distinct surface belongs to exactly one cluster, so each book's
  // mentions can be routed back to their cluster by surface.
  std::map<std::string, size_t> cluster_of;
  for (size_t c = 0; c < clusters.size(); ++c) {
    for (const auto &alias : clusters[c].aliases) cluster_of[alias] = c;
  }
  for (size_t d = 0; d < docs.size(); ++d) {
    std::vector<CharacterCluster> local = clusters;
    for (auto &c : local) c.mentions.clear();
    for (const auto &m : per_doc[d]) local[cluster_of.at(m.surface)].mentions.push_back(m);
    const Document resolved = ReplaceMentions(docs[d], local);
    run.Write(ws.Path(ResolvedFile(ids[d])),
              SerializeCorpus(resolved, SliceCorpus(resolved, cfg.temporal.slice_size)));
  }

  Json fams = Json::array();
  for (const auto &f : families) {
    Json members = Json::array(), names = Json::array();
    for (int m : f.members) {
      members.push_back(m);
      names.push_back(clusters[static_cast<size_t>(m)].canonical);
    }
    fams.push_back({{"id", f.id}, {"members", members}, {"canonicals", names}});
  }
  run.Write(ws.Path(kCharacters), DumpClusters(clusters) + "\n");
  run.Write(ws.Path(kFamilies), fams.dump(2) + "\n");
  run.Commit();

  out << clusters.size() << " characters from " << pooled.size()
      << " mentions, " << families.size() << " families\n";
  const size_t shown = std::min<size_t>(clusters.size(), 10);
  for (size_t c = 0; c < shown; ++c) {
    out << "  " << clusters[c].canonical << " (" << clusters[c].mentions.size()
        << " mentions, " << clusters[c].aliases.size() << " aliases)\n";
  }
}

void TrainStaticCommand(const PipelineConfig &cfg, const Workspace &ws,
                        std::ostream &out) {
  RunRecord run(ws, "train-static", cfg);
  const auto docs = LoadResolved(ws, run);
  const auto characters = LoadCharacters(ws, run);
  std::vector<std::string> tokens;
  for (const auto &d : docs) {
    const auto stream = NormStream(d);
    tokens.insert(tokens.end(), stream.begin(), stream.end());
  }
  std::set<std::string> protect;
  for (const auto &c : characters.clusters) protect.insert(c.canonical);
  TrainConfig train = cfg.train;
  train.seed = cfg.seed;
  const auto model = TrainStatic(tokens, train, protect);

  const std::string dir = std::string(kStaticDir) + "/";
  run.Write(ws.Path(dir + "vocab.tsv"), FormatVocab(model.vocab));
  run.Write(ws.Path(dir + "w.emb"), FormatEmbeddings(model.vocab.words, model.matrices.w));
  run.Write(ws.Path(dir + "ctx.emb"), FormatEmbeddings(model.vocab.words, model.matrices.ctx));
  run.Commit();

  out << "vocabulary " << model.vocab.size() << ", " << tokens.size()
      << " tokens, " << model.stats.pairs << " pairs\n";
  for (size_t e = 0; e < model.stats.epoch_mean_loss.size(); ++e) {
    out << "  epoch " << e + 1 << " mean loss "
        << FormatFixed6(model.stats.epoch_mean_loss[e]) << "\n";
  }
}

void TrainTemporalCommand(const PipelineConfig &cfg, const Workspace &ws,
                          std::ostream &out) {
  RunRecord run(ws, "train-temporal", cfg);
  const auto docs = LoadResolved(ws, run);
  const auto model = LoadStatic(ws, run);
  std::vector<std::vector<std::string>> slices;
  for (const auto &d : docs) {
    for (const auto &s : SliceCorpus(d, cfg.temporal.slice_size)) {
      slices.push_back(NormStream(d, s.token_range));
    }
  }
  TrainConfig slice_cfg = cfg.SliceConfig();
  slice_cfg.seed = cfg.seed;
  const auto t = TrainTemporal(slices, model, ParseInitScheme(cfg.temporal.init_scheme),
                               slice_cfg, cfg.temporal.threads);
  const BundleInfo info{cfg.temporal.slice_size, CorpusHash(docs), slice_cfg};
  SaveBundle(ws.Path(kTemporalDir), t, info);
  for (const auto &entry : fs::directory_iterator(ws.Path(kTemporalDir))) {
    run.Output(entry.path().string());
  }
  run.Commit();
  out << t.slices.size() << " slices trained (" << InitSchemeName(t.scheme)
      << " initialization, slice size " << cfg.temporal.slice_size << ")\n";
}

void Trajectories(const PipelineConfig &cfg, const Workspace &ws, std::ostream &out) {
  RunRecord run(ws, "trajectories", cfg);
  const std::string manifest = ws.Require(std::string(kTemporalDir) + "/manifest.json",
                                          "train-temporal");
  run.Input(manifest);
  const auto t = LoadBundle(ws.Path(kTemporalDir));
  const auto characters = LoadCharacters(ws, run);

  // Characters in the vocabulary, most mentioned first.
  std::vector<std::string> ranked;
  for (const auto &c : characters.clusters) {
    if (t.vocab.Find(c.canonical)) ranked.push_back(c.canonical);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [&](const auto &a, const auto &b) {
    return characters.mention_count.at(a) > characters.mention_count.at(b);
  });
  if (ranked.empty()) throw Error("no character has an embedding");
  const std::string anchor =
      cfg.trajectories.anchor.empty() ? ranked.front() : cfg.trajectories.anchor;
  std::vector<std::string> others = cfg.trajectories.characters;
  if (others.empty()) {
    for (const auto &c : ranked) {
      if (c != anchor && others.size() < cfg.trajectories.top_characters) {
        others.push_back(c);
      }
    }
  }
  if (others.empty()) throw Error("no characters besides the anchor '" + anchor + "'");

  const DistanceTable distances{others, DistanceSeries(anchor, others, t)};
  WriteFile(ws.Path(std::string(kDistances) + ".csv"), DistanceCsv(distances));
  WriteFile(ws.Path(std::string(kDistances) + ".svg"),
            DistanceSvg(distances, "Cosine distance from " + anchor));
  run.Output(ws.Path(std::string(kDistances) + ".csv"));
  run.Output(ws.Path(std::string(kDistances) + ".svg"));

  std::vector<std::string> projected = {anchor};
  projected.insert(projected.end(), others.begin(), others.end());
  if (projected.size() * t.slices.size() >= 3) {
    const PointTable points = ToPointTable(ProjectTrajectories(projected, t));
    WriteFile(ws.Path(std::string(kProjection) + ".csv"), ProjectionCsv(points));
    WriteFile(ws.Path(std::string(kProjection) + ".svg"),
              ProjectionSvg(points, "Character trajectories (PCA)"));
    run.Output(ws.Path(std::string(kProjection) + ".csv"));
    run.Output(ws.Path(std::string(kProjection) + ".svg"));
  }
  run.Commit();

  out << "distances from " << anchor << " over " << t.slices.size() << " slices\n";
  for (size_t i = 0; i < others.size(); ++i) {
    out << "  " << others[i] << ":";
    for (double d : distances.series[i]) out << " " << FormatFixed6(d);
    out << "\n";
  }
}

void Plot(const PipelineConfig &cfg, const Workspace &ws, const Flags &flags,
          std::ostream &out) {
  RunRecord run(ws, "plot", cfg);
  const std::string csv = ws.Require(std::string(kDistances) + ".csv", "trajectories");
  run.Input(csv);
  const std::string title =
      flags.title.empty() ? "Cosine distance from the anchor" : flags.title;
  run.Write(ws.Path(std::string(kDistances) + ".svg"),
            DistanceSvg(ParseDistanceCsv(ReadFile(csv)), title));
  const std::string pcsv = ws.Path(std::string(kProjection) + ".csv");
  if (fs::exists(pcsv)) {
    run.Input(pcsv);
    run.Write(ws.Path(std::string(kProjection) + ".svg"),
              ProjectionSvg(ParseProjectionCsv(ReadFile(pcsv)),
                            "Character trajectories (PCA)"));
  }
  run.Commit();
  out << "wrote " << ws.Path("traj") << "/*.svg\n";
}

void DatasetCommand(const PipelineConfig &cfg, const Workspace &ws, std::ostream &out) {
  RunRecord run(ws, "dataset", cfg);
  const auto ids = LoadBookIds(ws, run);
  const auto docs = LoadResolved(ws, run);
  const auto characters = LoadCharacters(ws, run);
  const FamilyIndex families =
      MakeFamilyIndex(characters.clusters, LoadFamilies(ws, run));
  std::vector<RelationSample> samples;
  for (size_t d = 0; d < docs.size(); ++d) {
    size_t n = 0, positive = 0;
    for (auto &s : ExtractPairSentences(docs[d], characters.clusters, ids[d])) {
      s = AutoLabel(std::move(s), families);
      positive += s.label;
      ++n;
      samples.push_back(std::move(s));
    }
    out << ids[d] << ": " << n << " samples, "
        << (n > 0 ? Percent(static_cast<double>(positive) / static_cast<double>(n))
                  : "n/a")
        << " positive\n";
  }
  run.Write(ws.Path(kDataset), FormatDataset(samples));
  run.Commit();
}

void TrainBaseline(const PipelineConfig &cfg, const Workspace &ws, const Flags &flags,
                   std::ostream &out) {
  RunRecord run(ws, "train-baseline", cfg);
  const auto all = LoadSamples(ws, run, flags.data);
  std::vector<RelationSample> train;
  for (const auto &s : all) {
    if (std::find(flags.holdout.begin(), flags.holdout.end(), s.source) ==
        flags.holdout.end()) {
      train.push_back(s);
    }
  }
  const auto model = SentenceClassifier::Train(train, cfg.seed, cfg.relations);
  run.Write(ws.Path(kModel), model.Serialize());
  run.Commit();
  const auto pred = model.Predict(train);
  size_t correct = 0;
  for (size_t i = 0; i < train.size(); ++i) correct += pred[i] == train[i].label;
  out << "trained on " << train.size() << " samples, training accuracy "
      << Percent(static_cast<double>(correct) / static_cast<double>(train.size()))
      << "\n";
}

void Eval(const PipelineConfig &cfg, const Workspace &ws, const Flags &flags,
          std::ostream &out) {
  RunRecord run(ws, "eval", cfg);
  std::vector<RelationSample> gold;
  for (auto &s : LoadSamples(ws, run, flags.data)) {
    if (flags.sources.empty() ||
        std::find(flags.sources.begin(), flags.sources.end(), s.source) !=
            flags.sources.end()) {
      gold.push_back(std::move(s));
    }
  }
  if (gold.empty()) throw Error("no samples to evaluate");

  std::vector<bool> pred;
  if (!flags.predictions.empty()) {
    run.Input(flags.predictions);
    pred = AlignPredictions(gold, ParsePredictions(ReadFile(flags.predictions)));
  } else {
    const std::string model_path = ws.Require(kModel, "train-baseline");
    run.Input(model_path);
    pred = SentenceClassifier::Deserialize(ReadFile(model_path)).Predict(gold);
    std::vector<SentencePrediction> exchange;
    for (size_t i = 0; i < gold.size(); ++i) {
      exchange.push_back({gold[i].sentence_index, gold[i].source, gold[i].c1,
                          gold[i].c2, pred[i]});
    }
    run.Write(ws.Path("reports/predictions.jsonl"), FormatPredictions(exchange));
  }
  const Metrics m = Evaluate(pred, gold.empty() ? std::vector<bool>{} : [&] {
    std::vector<bool> g;
    for (const auto &s : gold) g.push_back(s.label);
    return g;
  }());
  const PairLevel p = EvaluatePairs(gold, pred);
  std::ostringstream report;
  report << FormatMetrics(m);
  report << "pair level: " << p.positive_correct << "/" << p.positive_pairs
         << " positive, " << p.negative_correct << "/" << p.negative_pairs
         << " negative correct\n";
  run.Write(ws.Path("reports/eval.txt"), report.str());
  run.Commit();
  out << report.str();
}

void CrossVal(const PipelineConfig &cfg, const Workspace &ws, const Flags &flags,
              std::ostream &out, std::ostream &err) {
  RunRecord run(ws, "crossval", cfg);
  const auto samples = LoadSamples(ws, run, flags.data);
  CrossValReport report;
  if (!flags.predictions.empty()) {
    run.Input(flags.predictions);
    report = CrossValidateFromPredictions(
        samples, ParsePredictions(ReadFile(flags.predictions)));
  } else {
    report = CrossValidate(samples, BaselineTrainer(cfg.relations), cfg.seed);
  }
  for (const auto &s : report.skipped) err << "warning: skipped fold " << s << "\n";
  const std::string text = FormatReport(report);
  run.Write(ws.Path("reports/crossval.txt"), text);
  run.Write(ws.Path("reports/crossval.json"), ReportJson(report) + "\n");
  run.Commit();
  out << text;
}

}  // namespace

// ---------------------------------------------------------------------------

void PipelineConfig::Validate() const {
  try {
    train.Validate();
    SliceConfig().Validate();
  } catch (const ParameterError &e) {
    throw ConfigError(e.what());
  }
  if (dealias.eps_alias < 0) throw ConfigError("dealias.eps_alias must be >= 0");
  if (dealias.eps_family <= dealias.eps_alias) {
    throw ConfigError("dealias.eps_family must be greater than dealias.eps_alias");
  }
  if (dealias.min_pts < 1) throw ConfigError("dealias.min_pts must be >= 1");
  if (dealias.mention_mode != "heuristic" && dealias.mention_mode != "external") {
    throw ConfigError("dealias.mention_mode must be 'heuristic' or 'external'");
  }
  if (temporal.slice_size < 1) throw ConfigError("temporal.slice_size must be >= 1");
  if (temporal.threads < 1) throw ConfigError("temporal.threads must be >= 1");
  if (temporal.init_scheme != "static" && temporal.init_scheme != "dynamic") {
    throw ConfigError("temporal.init_scheme must be 'static' or 'dynamic'");
  }
  if (relations.buckets < 1) throw ConfigError("relations.buckets must be >= 1");
  if (!(relations.learning_rate > 0)) {
    throw ConfigError("relations.learning_rate must be positive");
  }
  if (relations.l2 < 0 || relations.learning_rate * relations.l2 >= 1) {
    throw ConfigError("relations.l2 must satisfy 0 <= learning_rate * l2 < 1");
  }
  if (workspace.empty()) throw ConfigError("workspace must not be empty");
}

TrainConfig PipelineConfig::SliceConfig() const {
  TrainConfig cfg = TrainConfig::SliceDefaults();
  cfg.dim = train.dim;
  cfg.window = train.window;
  cfg.negatives = train.negatives;
  cfg.min_count = train.min_count;
  cfg.subsample_threshold = train.subsample_threshold;
  cfg.epochs = temporal.epochs;
  cfg.lr_start = temporal.lr_start;
  cfg.lr_end = temporal.lr_end;
  cfg.seed = seed;
  return cfg;
}

PipelineConfig ParseConfig(std::string_view json_text, const std::string &base_dir) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error &e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  CheckKeys(j, "", {"books", "workspace", "seed", "dealias", "train", "temporal",
                    "trajectories", "relations"});
  PipelineConfig cfg;
  Read(j, "books", "", cfg.books);
  for (auto &b : cfg.books) b = Resolve(base_dir, b);
  Read(j, "workspace", "", cfg.workspace);
  cfg.workspace = Resolve(base_dir, cfg.workspace);
  Read(j, "seed", "", cfg.seed);

  if (auto it = j.find("dealias"); it != j.end()) {
    CheckKeys(*it, "dealias",
              {"eps_alias", "eps_family", "min_pts", "mention_mode", "annotations"});
    Read(*it, "eps_alias", "dealias.", cfg.dealias.eps_alias);
    Read(*it, "eps_family", "dealias.", cfg.dealias.eps_family);
    Read(*it, "min_pts", "dealias.", cfg.dealias.min_pts);
    Read(*it, "mention_mode", "dealias.", cfg.dealias.mention_mode);
    Read(*it, "annotations", "dealias.", cfg.dealias.annotations);
    for (auto &[id, path] : cfg.dealias.annotations) path = Resolve(base_dir, path);
  }
  if (auto it = j.find("train"); it != j.end()) {
    CheckKeys(*it, "train", {"dim", "window", "negatives", "epochs", "lr_start",
                             "lr_end", "min_count", "subsample_threshold"});
    Read(*it, "dim", "train.", cfg.train.dim);
    Read(*it, "window", "train.", cfg.train.window);
    Read(*it, "negatives", "train.", cfg.train.negatives);
    Read(*it, "epochs", "train.", cfg.train.epochs);
    Read(*it, "lr_start", "train.", cfg.train.lr_start);
    Read(*it, "lr_end", "train.", cfg.train.lr_end);
    Read(*it, "min_count", "train.", cfg.train.min_count);
    if (auto s = it->find("subsample_threshold"); s != it->end() && !s->is_null()) {
      double threshold = 0;
      Read(*it, "subsample_threshold", "train.", threshold);
      cfg.train.subsample_threshold = threshold;
    }
  }
  if (auto it = j.find("temporal"); it != j.end()) {
    CheckKeys(*it, "temporal",
              {"slice_size", "init_scheme", "epochs", "lr_start", "lr_end", "threads"});
    Read(*it, "slice_size", "temporal.", cfg.temporal.slice_size);
    Read(*it, "init_scheme", "temporal.", cfg.temporal.init_scheme);
    Read(*it, "epochs", "temporal.", cfg.temporal.epochs);
    Read(*it, "lr_start", "temporal.", cfg.temporal.lr_start);
    Read(*it, "lr_end", "temporal.", cfg.temporal.lr_end);
    Read(*it, "threads", "temporal.", cfg.temporal.threads);
  }
  if (auto it = j.find("trajectories"); it != j.end()) {
    CheckKeys(*it, "trajectories", {"anchor", "characters", "top_characters"});
    Read(*it, "anchor", "trajectories.", cfg.trajectories.anchor);
    Read(*it, "characters", "trajectories.", cfg.trajectories.characters);
    Read(*it, "top_characters", "trajectories.", cfg.trajectories.top_characters);
  }
  if (auto it = j.find("relations"); it != j.end()) {
    CheckKeys(*it, "relations", {"buckets", "epochs", "learning_rate", "l2"});
    Read(*it, "buckets", "relations.", cfg.relations.buckets);
    Read(*it, "epochs", "relations.", cfg.relations.epochs);
    Read(*it, "learning_rate", "relations.", cfg.relations.learning_rate);
    Read(*it, "l2", "relations.", cfg.relations.l2);
  }
  return cfg;
}

PipelineConfig LoadConfig(const std::string &path) {
  std::string text;
  try {
    text = ReadFile(path);
  } catch (const IoError &e) {
    throw ConfigError(e.what());
  }
  return ParseConfig(text, fs::path(path).parent_path().string());
}

std::string ConfigJson(const PipelineConfig &c) {
  nlohmann::ordered_json j;
  j["books"] = c.books;
  j["seed"] = c.seed;
  j["dealias"] = {{"eps_alias", c.dealias.eps_alias},
                  {"eps_family", c.dealias.eps_family},
                  {"min_pts", c.dealias.min_pts},
                  {"mention_mode", c.dealias.mention_mode},
                  {"annotations", c.dealias.annotations}};
  j["train"] = {{"dim", c.train.dim},
                {"window", c.train.window},
                {"negatives", c.train.negatives},
                {"epochs", c.train.epochs},
                {"lr_start", c.train.lr_start},
                {"lr_end", c.train.lr_end},
                {"min_count", c.train.min_count},
                {"subsample_threshold",
                 c.train.subsample_threshold
                     ? nlohmann::ordered_json(*c.train.subsample_threshold)
                     : nlohmann::ordered_json(nullptr)}};
  j["temporal"] = {{"slice_size", c.temporal.slice_size},
                   {"init_scheme", c.temporal.init_scheme},
                   {"epochs", c.temporal.epochs},
                   {"lr_start", c.temporal.lr_start},
                   {"lr_end", c.temporal.lr_end},
                   {"threads", c.temporal.threads}};
  j["trajectories"] = {{"anchor", c.trajectories.anchor},
                       {"characters", c.trajectories.characters},
                       {"top_characters", c.trajectories.top_characters}};
  j["relations"] = {{"buckets", c.relations.buckets},
                    {"epochs", c.relations.epochs},
                    {"learning_rate", c.relations.learning_rate},
                    {"l2", c.relations.l2}};
  return j.dump();
}

int Run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Character trajectories and family relations from novel text.\n"
               "Each subcommand reads the previous stage's artifacts from the "
               "workspace and writes its own."};
  app.name("narrative");
  app.require_subcommand(1);

  std::string config_path, workspace;
  uint64_t seed = 0;
  app.add_option("--config,-c", config_path, "JSON pipeline config");
  auto *workspace_opt = app.add_option(
      "--workspace,-w", workspace,
      "Workspace directory (overrides NARR_WORKSPACE and the config)");
  auto *seed_opt = app.add_option("--seed", seed, "Random seed (overrides the config)");

  PipelineConfig overrides;
  Flags flags;
  std::vector<std::pair<CLI::Option *, std::function<void(PipelineConfig &)>>> apply;
  auto override_option = [&](CLI::App *cmd, const std::string &name, auto &target,
                             auto member, const std::string &help) {
    auto *opt = cmd->add_option(name, target, help);
    apply.emplace_back(opt, [&target, member](PipelineConfig &c) { member(c) = target; });
  };

  auto *ingest = app.add_subcommand("ingest", "Tokenize books into corpus/");
  ingest->add_option("--input,-i", flags.inputs, "Book text file (repeatable)");
  override_option(ingest, "--slice-size", overrides.temporal.slice_size,
                  [](PipelineConfig &c) -> auto & { return c.temporal.slice_size; },
                  "Tokens per temporal slice");

  auto *dealias = app.add_subcommand("dealias", "Cluster character aliases into clusters/");
  override_option(dealias, "--eps-alias", overrides.dealias.eps_alias,
                  [](PipelineConfig &c) -> auto & { return c.dealias.eps_alias; },
                  "DBSCAN radius for aliases");
  override_option(dealias, "--eps-family", overrides.dealias.eps_family,
                  [](PipelineConfig &c) -> auto & { return c.dealias.eps_family; },
                  "DBSCAN radius for families");
  override_option(dealias, "--min-pts", overrides.dealias.min_pts,
                  [](PipelineConfig &c) -> auto & { return c.dealias.min_pts; },
                  "DBSCAN minimum neighbourhood size");
  override_option(dealias, "--mention-mode", overrides.dealias.mention_mode,
                  [](PipelineConfig &c) -> auto & { return c.dealias.mention_mode; },
                  "heuristic or external");
  dealias->add_option("--annotations", flags.annotations,
                      "book_id=path annotation file (repeatable)");
  override_option(dealias, "--slice-size", overrides.temporal.slice_size,
                  [](PipelineConfig &c) -> auto & { return c.temporal.slice_size; },
                  "Tokens per temporal slice");

  auto *train_static = app.add_subcommand("train-static", "Train the static embedding into emb/");
  override_option(train_static, "--dim", overrides.train.dim,
                  [](PipelineConfig &c) -> auto & { return c.train.dim; }, "Embedding size");
  override_option(train_static, "--window", overrides.train.window,
                  [](PipelineConfig &c) -> auto & { return c.train.window; }, "Context window");
  override_option(train_static, "--negatives", overrides.train.negatives,
                  [](PipelineConfig &c) -> auto & { return c.train.negatives; },
                  "Negative samples per pair");
  override_option(train_static, "--epochs", overrides.train.epochs,
                  [](PipelineConfig &c) -> auto & { return c.train.epochs; }, "Epochs");
  override_option(train_static, "--min-count", overrides.train.min_count,
                  [](PipelineConfig &c) -> auto & { return c.train.min_count; },
                  "Minimum token count");

  auto *train_temporal =
      app.add_subcommand("train-temporal", "Train per-slice embeddings into emb/temporal/");
  override_option(train_temporal, "--slice-size", overrides.temporal.slice_size,
                  [](PipelineConfig &c) -> auto & { return c.temporal.slice_size; },
                  "Tokens per temporal slice");
  override_option(train_temporal, "--scheme", overrides.temporal.init_scheme,
                  [](PipelineConfig &c) -> auto & { return c.temporal.init_scheme; },
                  "static or dynamic initialization");
  override_option(train_temporal, "--epochs", overrides.temporal.epochs,
                  [](PipelineConfig &c) -> auto & { return c.temporal.epochs; },
                  "Epochs per slice");
  override_option(train_temporal, "--threads", overrides.temporal.threads,
                  [](PipelineConfig &c) -> auto & { return c.temporal.threads; },
                  "Worker threads (static scheme)");

  auto *trajectories =
      app.add_subcommand("trajectories", "Distance series and projection into traj/");
  override_option(trajectories, "--anchor", overrides.trajectories.anchor,
                  [](PipelineConfig &c) -> auto & { return c.trajectories.anchor; },
                  "Anchor character (canonical token)");
  trajectories->add_option("--character", flags.characters,
                           "Character to track (repeatable)");
  override_option(trajectories, "--top", overrides.trajectories.top_characters,
                  [](PipelineConfig &c) -> auto & { return c.trajectories.top_characters; },
                  "Track this many most-mentioned characters");

  auto *plot = app.add_subcommand("plot", "Re-render SVG charts from traj/*.csv");
  plot->add_option("--title", flags.title, "Chart title");

  app.add_subcommand("dataset", "Emit the auto-labelled relation dataset into dataset/");

  auto *train_baseline =
      app.add_subcommand("train-baseline", "Train the baseline classifier into models/");
  train_baseline->add_option("--data", flags.data, "Dataset JSONL (default: workspace dataset)");
  train_baseline->add_option("--holdout", flags.holdout, "Source to exclude (repeatable)");

  auto *eval = app.add_subcommand("eval", "Evaluate predictions into reports/");
  eval->add_option("--data", flags.data, "Gold dataset JSONL (default: workspace dataset)");
  eval->add_option("--predictions", flags.predictions,
                   "Exchange-format predictions (default: baseline model)");
  eval->add_option("--source", flags.sources, "Evaluate only this source (repeatable)");

  auto *crossval = app.add_subcommand("crossval", "Leave-one-source-out evaluation");
  crossval->add_option("--data", flags.data, "Dataset JSONL (default: workspace dataset)");
  crossval->add_option("--predictions", flags.predictions,
                       "Exchange-format predictions from an external leave-one-out run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : LoadConfig(config_path);
    for (auto &[opt, set] : apply) {
      if (opt->count() > 0) set(cfg);
    }
    if (seed_opt->count() > 0) cfg.seed = seed;
    if (!flags.characters.empty()) cfg.trajectories.characters = flags.characters;
    for (const auto &a : flags.annotations) {
      const size_t eq = a.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw ConfigError("--annotations expects book_id=path, got '" + a + "'");
      }
      cfg.dealias.annotations[a.substr(0, eq)] = a.substr(eq + 1);
    }
    if (workspace_opt->count() > 0) {
      cfg.workspace = workspace;
    } else if (const char *env = std::getenv(kWorkspaceEnv); env != nullptr && *env) {
      cfg.workspace = env;
    }
    cfg.Validate();

    const Workspace ws(cfg.workspace);
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "ingest") Ingest(cfg, ws, flags, out);
    else if (name == "dealias") Dealias(cfg, ws, out);
    else if (name == "train-static") TrainStaticCommand(cfg, ws, out);
    else if (name == "train-temporal") TrainTemporalCommand(cfg, ws, out);
    else if (name == "trajectories") Trajectories(cfg, ws, out);
    else if (name == "plot") Plot(cfg, ws, flags, out);
    else if (name == "dataset") DatasetCommand(cfg, ws, out);
    else if (name == "train-baseline") TrainBaseline(cfg, ws, flags, out);
    else if (name == "eval") Eval(cfg, ws, flags, out);
    else if (name == "crossval") CrossVal(cfg, ws, flags, out, err);
    return 0;
  } catch (const ConfigError &e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace narrative::cli
