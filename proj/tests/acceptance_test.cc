// Acceptance suite: one PASS/FAIL/SKIP line per criterion. Exits non-zero
// when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "narrative/classifier.h"
#include "narrative/cli.h"
#include "narrative/corpus.h"
#include "narrative/dealias.h"
#include "narrative/io.h"
#include "narrative/random.h"
#include "narrative/relations.h"
#include "narrative/sgns.h"
#include "narrative/synthetic.h"
#include "narrative/temporal.h"
#include "narrative/trajectory.h"
#include "oracles.h"
#include "test_util.h"

namespace narrative {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  enum Kind { kPass, kFail, kSkip } kind;
  std::string detail;
};

Outcome Pass(std::string detail = {}) { return {Outcome::kPass, std::move(detail)}; }
Outcome Fail(std::string detail) { return {Outcome::kFail, std::move(detail)}; }
Outcome Skip(std::string detail) { return {Outcome::kSkip, std::move(detail)}; }

std::string Fmt(const char *format, double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, x);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome GradientCheck() {
  Rng rng(4242);
  const double h = 1e-3;
  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const size_t dim = 2 + UniformIndex(rng, 15);
    const size_t k = 1 + UniformIndex(rng, 10);
    const size_t rows = 12;
    EmbeddingMatricesT<double> m{Matrix<double>(rows, dim), Matrix<double>(rows, dim)};
    for (double &x : m.w.data()) x = 2 * UniformUnit(rng) - 1;
    for (double &x : m.ctx.data()) x = 2 * UniformUnit(rng) - 1;
    const size_t center = UniformIndex(rng, rows);
    const size_t context = UniformIndex(rng, rows);
    std::vector<size_t> negatives;
    while (negatives.size() < k) {
      const size_t n = UniformIndex(rng, rows);
      if (n != context) negatives.push_back(n);
    }
    const auto g = SgnsLossAndGradient<double>(center, context, negatives, m);
    std::vector<double> w(m.w.row(center).begin(), m.w.row(center).end());
    std::vector<std::vector<double>> ctx;
    for (size_t r = 0; r < rows; ++r) ctx.emplace_back(m.ctx.row(r).begin(), m.ctx.row(r).end());

    double diff2 = 0, norm2 = 0;
    auto add = [&](double analytic, double numeric) {
      diff2 += (analytic - numeric) * (analytic - numeric);
      norm2 += analytic * analytic + numeric * numeric;
    };
    for (size_t i = 0; i < dim; ++i) {
      auto wp = w, wm = w;
      wp[i] += h;
      wm[i] -= h;
      add(g.d_center[i], (oracle::SgnsLoss(wp, ctx, context, negatives) -
                          oracle::SgnsLoss(wm, ctx, context, negatives)) / (2 * h));
    }
    const std::set<size_t> touched(g.context_rows.begin(), g.context_rows.end());
    for (size_t row : touched) {
      for (size_t i = 0; i < dim; ++i) {
        double analytic = 0;
        for (size_t r = 0; r < g.context_rows.size(); ++r) {
          if (g.context_rows[r] == row) analytic += g.d_context[r][i];
        }
        auto cp = ctx, cm = ctx;
        cp[row][i] += h;
        cm[row][i] -= h;
        add(analytic, (oracle::SgnsLoss(w, cp, context, negatives) -
                       oracle::SgnsLoss(w, cm, context, negatives)) / (2 * h));
      }
    }
    worst = std::max(worst, std::sqrt(diff2 / norm2));
  }
  const std::string detail = "max relative error " + Fmt("%.2e", worst);
  return worst < 1e-4 ? Pass(detail) : Fail(detail);
}

Outcome DbscanOracle() {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const size_t n = UniformIndex(rng, 13);
    // L1 distances on a small integer lattice: a metric with boundary ties.
    std::vector<double> x(n), y(n);
    for (size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(UniformIndex(rng, 8));
      y[i] = static_cast<double>(UniformIndex(rng, 8));
    }
    DistanceMatrix d(n, std::vector<double>(n));
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < n; ++j) d[i][j] = std::abs(x[i] - x[j]) + std::abs(y[i] - y[j]);
    }
    const double eps = static_cast<double>(UniformIndex(rng, 5));
    const size_t min_pts = 1 + UniformIndex(rng, 4);
    const auto got = Dbscan(d, eps, min_pts);
    const auto want = oracle::Dbscan(d, eps, min_pts);
    if (got.clusters != want.clusters || got.noise != want.noise) {
      return Fail("instance " + std::to_string(trial) + " differs from the oracle");
    }
  }
  return Pass("200 instances");
}

Outcome SequenceMatcher() {
  const double ron = SeqMatchDistance("ron", "ronald");
  if (std::abs(ron - (1.0 - 6.0 / 9.0)) > 1e-9) {
    return Fail("d(ron, ronald) = " + Fmt("%.12f", ron));
  }
  Rng rng(7);
  const std::string alphabet = "abcde ";
  auto random_string = [&] {
    std::string s(UniformIndex(rng, 12), ' ');
    for (char &c : s) c = alphabet[UniformIndex(rng, alphabet.size())];
    return s;
  };
  for (int i = 0; i < 10000; ++i) {
    const std::string a = random_string(), b = random_string();
    if (SeqMatchDistance(a, b) != SeqMatchDistance(b, a)) return Fail("asymmetric on '" + a + "'/'" + b + "'");
    if (SeqMatchDistance(a, a) != 0.0) return Fail("d(a, a) != 0 for '" + a + "'");
    const double d = SeqMatchDistance(a, b);
    if (d < 0 || d > 1) return Fail("distance out of [0, 1]");
  }
  return Pass("d(ron, ronald) = " + Fmt("%.12f", ron));
}

std::vector<std::string> Letters(Rng &rng, size_t n, const std::string &alphabet) {
  std::vector<std::string> out;
  for (size_t i = 0; i < n; ++i) out.emplace_back(1, alphabet[UniformIndex(rng, alphabet.size())]);
  return out;
}

StaticModel SmallStatic(uint64_t seed) {
  Rng rng(seed);
  TrainConfig cfg;
  cfg.dim = 8;
  cfg.min_count = 1;
  cfg.seed = seed;
  return TrainStatic(Letters(rng, 600, "abcdefgh"), cfg);
}

Outcome FrozenContext() {
  Rng rng(5);
  for (uint64_t trial = 0; trial < 20; ++trial) {
    const auto model = SmallStatic(trial + 1);
    TrainConfig cfg = TrainConfig::SliceDefaults();
    cfg.dim = 8;
    cfg.seed = trial;
    // Random sub-alphabet so that some rows are absent from the slice.
    std::string present;
    for (char c : std::string("abcdefgh")) {
      if (UniformUnit(rng) < 0.5) present += c;
    }
    if (present.empty()) present = "a";
    const auto slice = Letters(rng, 50 + UniformIndex(rng, 300), present);
    const WordMatrix ctx_before = model.matrices.ctx;
    const WordMatrix w = TrainSlice(slice, model.vocab, model.matrices.w,
                                    model.matrices.ctx, cfg, trial);
    if (!(model.matrices.ctx == ctx_before)) return Fail("context matrix changed");
    for (size_t r = 0; r < model.vocab.size(); ++r) {
      if (present.find(model.vocab.words[r]) != std::string::npos) continue;
      if (!std::equal(w.row(r).begin(), w.row(r).end(), model.matrices.w.row(r).begin())) {
        return Fail("absent row '" + model.vocab.words[r] + "' changed");
      }
    }
    const auto t = TrainTemporal({slice, Letters(rng, 200, "abcdefgh")}, model,
                                 InitScheme::kDynamic, cfg);
    if (!(t.ctx == model.matrices.ctx)) return Fail("temporal context changed");
  }
  return Pass("20 random slices");
}

Outcome Drift() {
  const std::string raw = ReadFile(testing::DataPath("drift_corpus.txt"));
  const auto doc = MakeDocument("drift", raw);
  const auto clusters = BuildClusters(HeuristicMentions(doc), 0.4, 1);
  const auto resolved = ReplaceMentions(doc, clusters);
  std::vector<std::vector<std::string>> slices;
  for (const auto &s : SliceCorpus(resolved, DriftSliceTokens())) {
    slices.push_back(NormStream(resolved, s.token_range));
  }
  if (slices.size() != 3) return Fail("expected 3 slices");
  std::set<std::string> characters;
  for (const auto &c : clusters) characters.insert(c.canonical);
  const auto full = NormStream(resolved);

  int passed = 0;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    TrainConfig cfg;
    cfg.dim = 20;
    cfg.window = 4;
    cfg.min_count = 1;
    cfg.seed = seed;
    const auto model = TrainStatic(full, cfg, characters);
    TrainConfig slice_cfg = TrainConfig::SliceDefaults();
    slice_cfg.dim = 20;
    slice_cfg.window = 4;
    slice_cfg.min_count = 1;
    slice_cfg.seed = seed;
    const auto t = TrainTemporal(slices, model, InitScheme::kDynamic, slice_cfg);
    const auto d = DistanceSeries("xavier", {"yolanda", "zachary"}, t);
    passed += d[0][0] < d[0][1] && d[0][1] < d[0][2] && d[1][0] > d[1][1] &&
              d[1][1] > d[1][2];
  }
  const std::string detail = std::to_string(passed) + "/10 seeds";
  return passed >= 9 ? Pass(detail) : Fail(detail);
}

Outcome ZeroTraining() {
  const auto model = SmallStatic(3);
  Rng rng(11);
  const std::vector<std::vector<std::string>> slices = {
      Letters(rng, 200, "abc"), Letters(rng, 200, "defgh"), Letters(rng, 200, "abcdefgh")};
  for (auto scheme : {InitScheme::kStatic, InitScheme::kDynamic}) {
    TrainConfig epochs0 = TrainConfig::SliceDefaults();
    epochs0.dim = 8;
    epochs0.epochs = 0;
    TrainConfig lr0 = TrainConfig::SliceDefaults();
    lr0.dim = 8;
    lr0.lr_start = lr0.lr_end = 0.0;
    for (const auto &cfg : {epochs0, lr0}) {
      const auto t = TrainTemporal(slices, model, scheme, cfg);
      for (const auto &w : t.slices) {
        if (!(w == model.matrices.w)) {
          return Fail(std::string(InitSchemeName(scheme)) + " scheme moved W");
        }
      }
    }
  }
  return Pass("epochs=0 and lr=0, both schemes");
}

Outcome PcaFidelity() {
  Rng rng(31);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const size_t d = 50;
    auto random_vec = [&] {
      std::vector<double> v(d);
      for (double &x : v) x = 2 * UniformUnit(rng) - 1;
      return v;
    };
    auto normalize = [](std::vector<double> &v) {
      double n = 0;
      for (double x : v) n += x * x;
      for (double &x : v) x /= std::sqrt(n);
    };
    auto e1 = random_vec(), e2 = random_vec();
    normalize(e1);
    double dot = 0;
    for (size_t i = 0; i < d; ++i) dot += e1[i] * e2[i];
    for (size_t i = 0; i < d; ++i) e2[i] -= dot * e1[i];
    normalize(e2);
    const auto offset = random_vec();
    std::vector<std::vector<double>> points;
    for (int k = 0; k < 15; ++k) {
      const double a = 4 * UniformUnit(rng) - 2, b = 2 * UniformUnit(rng) - 1;
      std::vector<double> p(d);
      for (size_t i = 0; i < d; ++i) p[i] = offset[i] + a * e1[i] + b * e2[i];
      points.push_back(std::move(p));
    }
    const auto proj = PcaProject(points);
    auto euclid = [](const auto &u, const auto &v) {
      double s = 0;
      for (size_t i = 0; i < u.size(); ++i) s += (u[i] - v[i]) * (u[i] - v[i]);
      return std::sqrt(s);
    };
    for (size_t i = 0; i < points.size(); ++i) {
      for (size_t j = i + 1; j < points.size(); ++j) {
        worst = std::max(worst, std::abs(euclid(proj.coords[i], proj.coords[j]) -
                                          euclid(points[i], points[j])));
      }
    }
  }
  const std::string detail = "max distance error " + Fmt("%.2e", worst);
  return worst < 1e-6 ? Pass(detail) : Fail(detail);
}

Outcome MetricsOracle() {
  std::vector<bool> pred, gold;
  oracle::ConfusionVectors({3, 1, 1, 5}, pred, gold);
  const auto m = Evaluate(pred, gold);
  if (m.positive.precision != 0.75 || m.positive.recall != 0.75 || m.positive.f1 != 0.75) {
    return Fail("(3,1,1,5) does not give P=R=F=0.75");
  }
  Rng rng(59);
  for (int trial = 0; trial < 1000; ++trial) {
    oracle::Confusion c{UniformIndex(rng, 20), UniformIndex(rng, 20), UniformIndex(rng, 20),
                        UniformIndex(rng, 20)};
    if (c.tp + c.fp + c.fn + c.tn == 0) c.tn = 1;
    pred.clear();
    gold.clear();
    oracle::ConfusionVectors(c, pred, gold);
    const auto got = Evaluate(pred, gold);
    const auto want = oracle::MetricsFromConfusion(c);
    const double lo = std::min(got.positive.f1, got.negative.f1);
    const double hi = std::max(got.positive.f1, got.negative.f1);
    if (got.weighted.f1 < lo - 1e-12 || got.weighted.f1 > hi + 1e-12 ||
        std::abs(got.weighted.f1 - want.weighted.f1) > 1e-12 ||
        std::abs(got.positive.f1 - want.positive.f1) > 1e-12) {
      return Fail("table " + std::to_string(trial) + " disagrees with the oracle");
    }
  }
  return Pass("(3,1,1,5) exact; 1000 random tables");
}

Outcome BagAggregation() {
  size_t vectors = 0;
  for (size_t len = 1; len <= 10; ++len) {
    for (uint32_t mask = 0; mask < (1u << len); ++mask) {
      std::vector<bool> preds(len);
      for (size_t i = 0; i < len; ++i) preds[i] = (mask >> i) & 1;
      if (BagAggregate({{{"a", "b"}, preds}})[0].pair_label != (mask != 0)) {
        return Fail("length " + std::to_string(len) + " mask " + std::to_string(mask));
      }
      ++vectors;
    }
  }
  return Pass(std::to_string(vectors) + " vectors");
}

// Runs the CLI in-process; returns its exit code.
int Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "narrative");
  std::vector<const char *> argv;
  for (const auto &a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return cli::Run(static_cast<int>(argv.size()), argv.data(), out, err);
}

std::map<std::string, std::string> Snapshot(const std::string &root) {
  std::map<std::string, std::string> files;
  for (const auto &e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) {
      files[fs::relative(e.path(), root).string()] = ReadFile(e.path().string());
    }
  }
  return files;
}

Outcome Baseline() {
  const auto separable = LoadDataset(testing::DataPath("separable.jsonl"));
  std::vector<RelationSample> train, heldout;
  for (const auto &s : separable) (s.source == "heldout" ? heldout : train).push_back(s);
  const auto model = SentenceClassifier::Train(train, 1);
  const auto pred = model.Predict(heldout);
  size_t correct = 0;
  for (size_t i = 0; i < heldout.size(); ++i) correct += pred[i] == heldout[i].label;
  const double accuracy = static_cast<double>(correct) / static_cast<double>(heldout.size());
  if (accuracy < 0.95) return Fail("held-out accuracy " + Fmt("%.3f", accuracy));

  const auto report = CrossValidate(LoadDataset(testing::DataPath("six_sources.jsonl")),
                                    BaselineTrainer(), 1);
  const std::string text = FormatReport(report);
  if (report.folds.size() != 6) return Fail("crossval ran " + std::to_string(report.folds.size()) + " folds");
  for (const char *needle : {"Precision", "Recall", "F-score", "Negative", "Positive", "All", "±"}) {
    if (text.find(needle) == std::string::npos) {
      return Fail(std::string("crossval report lacks '") + needle + "'");
    }
  }

  testing::TempDir dir("acceptance");
  const std::string config = dir / "drift.json";
  WriteFile(config, R"({"books": [")" + testing::DataPath("drift_corpus.txt") + R"("],
    "train": {"dim": 20, "window": 4, "min_count": 1},
    "temporal": {"slice_size": 2400}, "trajectories": {"anchor": "xavier"}})");
  for (const char *ws : {"a", "b"}) {
    for (const char *stage : {"ingest", "dealias", "train-static", "train-temporal",
                              "trajectories", "dataset"}) {
      if (Cli({"--config", config, "--workspace", dir / ws, stage}) != 0) {
        return Fail(std::string("pipeline stage ") + stage + " failed");
      }
    }
    for (const auto &args : std::vector<std::vector<std::string>>{
             {"train-baseline", "--data", testing::DataPath("separable.jsonl")},
             {"eval", "--data", testing::DataPath("separable.jsonl")},
             {"crossval", "--data", testing::DataPath("six_sources.jsonl")}}) {
      auto full = args;
      full.insert(full.begin(), {"--workspace", dir / ws});
      if (Cli(full) != 0) return Fail("relation stage " + args[0] + " failed");
    }
  }
  const auto a = Snapshot(dir / "a"), b = Snapshot(dir / "b");
  if (a != b) return Fail("pipeline artifacts differ between runs");
  return Pass("held-out accuracy " + Fmt("%.3f", accuracy) + ", 6-fold report, " +
              std::to_string(a.size()) + " identical artifacts");
}

Outcome LittleWomen() {
  const char *path = std::getenv("NARR_LITTLE_WOMEN");
  if (path == nullptr || *path == '\0') return Skip("set NARR_LITTLE_WOMEN to the text file");
  const auto doc = MakeDocument("little_women", ReadFile(path));
  const double words = static_cast<double>(doc.WordCount());
  const double rel = std::abs(words - 197524.0) / 197524.0;
  const std::string detail =
      std::to_string(doc.WordCount()) + " words (" + Fmt("%.2f", 100 * rel) + "% off)";
  return rel <= 0.05 ? Pass(detail) : Fail(detail);
}

struct Criterion {
  const char *name;
  double budget_seconds;  // 0: no runtime bound
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace narrative

int main() {
  using narrative::Outcome;
  const std::vector<narrative::Criterion> criteria = {
      {"sgns gradient check", 10, narrative::GradientCheck},
      {"dbscan oracle equivalence", 5, narrative::DbscanOracle},
      {"sequence matcher distance", 0, narrative::SequenceMatcher},
      {"frozen context invariant", 0, narrative::FrozenContext},
      {"drift detection", 60, narrative::Drift},
      {"zero-training identities", 0, narrative::ZeroTraining},
      {"pca fidelity", 0, narrative::PcaFidelity},
      {"metrics oracle", 0, narrative::MetricsOracle},
      {"bag aggregation", 0, narrative::BagAggregation},
      {"baseline classifier and determinism", 0, narrative::Baseline},
      {"little women word count", 0, narrative::LittleWomen},
  };
  int failures = 0;
  for (const auto &c : criteria) {
    const auto start = narrative::Clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception &e) {
      outcome = {Outcome::kFail, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(narrative::Clock::now() - start).count();
    if (outcome.kind == Outcome::kPass && c.budget_seconds > 0 && seconds > c.budget_seconds) {
      outcome = {Outcome::kFail, outcome.detail + "; over the " +
                                     narrative::Fmt("%.0f", c.budget_seconds) + " s budget"};
    }
    const char *tag = outcome.kind == Outcome::kPass   ? "PASS"
                      : outcome.kind == Outcome::kSkip ? "SKIP"
                                                       : "FAIL";
    failures += outcome.kind == Outcome::kFail;
    std::printf("%s  %-38s %6.2fs  %s\n", tag, c.name, seconds, outcome.detail.c_str());
  }
  std::printf("%s\n", failures == 0 ? "all criteria met" : "some criteria FAILED");
  return failures == 0 ? 0 : 1;
}
