#include "narrative/trajectory.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "narrative/error.h"
#include "narrative/io.h"

namespace narrative {
namespace {

template <typename T>
double CosineDistanceImpl(std::span<const T> u, std::span<const T> v) {
  if (u.size() != v.size()) {
    throw ParameterError("cosine distance of vectors with dimensions " +
                         std::to_string(u.size()) + " and " +
                         std::to_string(v.size()));
  }
  double uv = 0.0, uu = 0.0, vv = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    const double a = u[i], b = v[i];
    uv += a * b;
    uu += a * a;
    vv += b * b;
  }
  if (uu == 0.0 || vv == 0.0) {
    throw NumericError("cosine distance is undefined for a zero vector");
  }
  const double d = 1.0 - uv / (std::sqrt(uu) * std::sqrt(vv));
  return std::clamp(d, 0.0, 2.0);
}

using Vec = std::vector<double>;

double DotVec(const Vec &a, const Vec &b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double Norm(const Vec &a) { return std::sqrt(DotVec(a, a)); }

Vec MatVec(const std::vector<Vec> &m, const Vec &v) {
  Vec out(m.size(), 0.0);
  for (size_t i = 0; i < m.size(); ++i) out[i] = DotVec(m[i], v);
  return out;
}

void RemoveComponent(Vec &v, const Vec &unit) {
  const double p = DotVec(v, unit);
  for (size_t i = 0; i < v.size(); ++i) v[i] -= p * unit[i];
}

void FixSign(Vec &v) {
  size_t best = 0;
  for (size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  }
  if (v[best] < 0) {
    for (double &x : v) x = -x;
  }
}

Vec UnitBasisOrthogonalTo(const Vec &u) {
  for (size_t k = 0; k < u.size(); ++k) {
    Vec e(u.size(), 0.0);
    e[k] = 1.0;
    RemoveComponent(e, u);
    const double n = Norm(e);
    if (n > 1e-6) {
      for (double &x : e) x /= n;
      return e;
    }
  }
  return Vec(u.size(), 0.0);
}

// Dominant eigenvector of a symmetric PSD matrix, orthogonal to `against`
// when given. Returns an empty vector when the matrix vanishes on the
// search space.
Vec PowerIteration(const std::vector<Vec> &m, const Vec *against,
                   double zero_scale) {
  const size_t d = m.size();
  Rng rng(0x5eedULL + (against != nullptr ? 1 : 0));
  Vec v(d);
  for (double &x : v) x = UniformUnit(rng) - 0.5;
  if (against != nullptr) RemoveComponent(v, *against);
  double n = Norm(v);
  for (double &x : v) x /= n;

  for (int iter = 0; iter < kPcaMaxIterations; ++iter) {
    Vec next = MatVec(m, v);
    if (against != nullptr) RemoveComponent(next, *against);
    n = Norm(next);
    if (n <= zero_scale) return {};
    for (double &x : next) x /= n;
    double diff = 0.0;
    for (size_t i = 0; i < d; ++i) diff += (next[i] - v[i]) * (next[i] - v[i]);
    v = std::move(next);
    if (std::sqrt(diff) < kPcaTolerance) break;
  }
  return v;
}

std::string Escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string Num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return buf;
}

constexpr std::array<const char *, 10> kPalette = {
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

constexpr double kWidth = 800, kHeight = 400;
constexpr double kLeft = 60, kRight = 640, kTop = 40, kBottom = 360;

struct SvgBuilder {
  std::string out;

  explicit SvgBuilder(const std::string &title) {
    out +=
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" "
        "viewBox=\"0 0 800 400\" width=\"800\" height=\"400\">\n";
    out += "<rect x=\"0\" y=\"0\" width=\"" + Num(kWidth) + "\" height=\"" +
           Num(kHeight) + "\" style=\"fill:#ffffff;stroke:none\"/>\n";
    out += "<text x=\"400.00\" y=\"24.00\" style=\"font-family:sans-serif;"
           "font-size:16px;text-anchor:middle\">" +
           Escape(title) + "</text>\n";
    out += "<rect x=\"" + Num(kLeft) + "\" y=\"" + Num(kTop) + "\" width=\"" +
           Num(kRight - kLeft) + "\" height=\"" + Num(kBottom - kTop) +
           "\" style=\"fill:none;stroke:#444444;stroke-width:1\"/>\n";
  }

  void Text(double x, double y, const std::string &s, const char *anchor) {
    out += "<text x=\"" + Num(x) + "\" y=\"" + Num(y) +
           "\" style=\"font-family:sans-serif;font-size:11px;text-anchor:" +
           anchor + "\">" + Escape(s) + "</text>\n";
  }

  void Polyline(const std::vector<std::array<double, 2>> &pts,
                const char *color) {
    out += "<polyline points=\"";
    for (size_t i = 0; i < pts.size(); ++i) {
      if (i > 0) out.push_back(' ');
      out += Num(pts[i][0]) + "," + Num(pts[i][1]);
    }
    out += "\" style=\"fill:none;stroke:" + std::string(color) +
           ";stroke-width:2\"/>\n";
    for (const auto &p : pts) {
      out += "<circle cx=\"" + Num(p[0]) + "\" cy=\"" + Num(p[1]) +
             "\" r=\"3\" style=\"fill:" + color + ";stroke:none\"/>\n";
    }
  }

  void Legend(const std::vector<std::string> &names) {
    for (size_t i = 0; i < names.size(); ++i) {
      const double y = kTop + 10 + 18.0 * static_cast<double>(i);
      const char *color = kPalette[i % kPalette.size()];
      out += "<line x1=\"" + Num(kRight + 20) + "\" y1=\"" + Num(y) +
             "\" x2=\"" + Num(kRight + 44) + "\" y2=\"" + Num(y) +
             "\" style=\"stroke:" + color + ";stroke-width:2\"/>\n";
      Text(kRight + 50, y + 4, names[i], "start");
    }
  }

  std::string Finish() { return out + "</svg>\n"; }
};

std::vector<std::string_view> SplitCsvLine(std::string_view line) {
  std::vector<std::string_view> out;
  size_t pos = 0;
  while (true) {
    const size_t comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
}

template <typename T>
T ParseCsvNumber(std::string_view field, size_t line_no) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError("invalid number '" + std::string(field) + "'", line_no);
  }
  return value;
}

// Reads `slice,character,<values...>` rows into per-character series.
template <size_t kValues>
void ParseSeriesCsv(std::string_view csv, std::string_view header,
                    std::vector<std::string> &characters,
                    std::vector<std::vector<std::array<double, kValues>>> &series) {
  size_t pos = 0, line_no = 0;
  std::map<std::string, size_t> slot;
  bool saw_header = false;
  while (pos < csv.size()) {
    size_t eol = csv.find('\n', pos);
    if (eol == std::string_view::npos) eol = csv.size();
    std::string_view line = csv.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!saw_header) {
      if (line != header) {
        throw ParseError("expected header '" + std::string(header) + "'", line_no);
      }
      saw_header = true;
      continue;
    }
    if (line.empty()) continue;
    const auto fields = SplitCsvLine(line);
    if (fields.size() != 2 + kValues) {
      throw ParseError("expected " + std::to_string(2 + kValues) + " fields",
                       line_no);
    }
    const auto slice = ParseCsvNumber<size_t>(fields[0], line_no);
    const std::string name(fields[1]);
    auto [it, inserted] = slot.emplace(name, characters.size());
    if (inserted) {
      characters.push_back(name);
      series.emplace_back();
    }
    auto &s = series[it->second];
    if (slice != s.size()) {
      throw ParseError("slices of '" + name + "' are not consecutive from 0",
                       line_no);
    }
    std::array<double, kValues> values{};
    for (size_t k = 0; k < kValues; ++k) {
      values[k] = ParseCsvNumber<double>(fields[2 + k], line_no);
    }
    s.push_back(values);
  }
  if (!saw_header) throw ParseError("empty CSV", 0);
  for (size_t i = 1; i < series.size(); ++i) {
    if (series[i].size() != series[0].size()) {
      throw ParseError("characters have different slice counts", 0);
    }
  }
}

}  // namespace

double CosineDistance(std::span<const double> u, std::span<const double> v) {
  return CosineDistanceImpl(u, v);
}

double CosineDistance(std::span<const float> u, std::span<const float> v) {
  return CosineDistanceImpl(u, v);
}

std::vector<double> CharacterVector(const std::string &canonical,
                                    const WordMatrix &w,
                                    const Vocabulary &vocab) {
  const auto index = vocab.Find(canonical);
  if (!index) {
    throw LookupError("character '" + canonical +
                      "' has no vector in the vocabulary");
  }
  const auto row = w.row(*index);
  return std::vector<double>(row.begin(), row.end());
}

std::vector<std::vector<double>> DistanceSeries(
    const std::string &anchor, const std::vector<std::string> &others,
    const TemporalEmbeddings &t) {
  std::vector<std::vector<double>> out(others.size(),
                                       std::vector<double>(t.slices.size()));
  for (size_t s = 0; s < t.slices.size(); ++s) {
    const auto a = CharacterVector(anchor, t.slices[s], t.vocab);
    for (size_t i = 0; i < others.size(); ++i) {
      out[i][s] = CosineDistance(
          std::span<const double>(CharacterVector(others[i], t.slices[s], t.vocab)),
          std::span<const double>(a));
    }
  }
  return out;
}

Projection2D PcaProject(const std::vector<std::vector<double>> &vectors) {
  if (vectors.size() < 3) {
    throw ParameterError("PCA projection needs at least 3 vectors, got " +
                         std::to_string(vectors.size()));
  }
  const size_t n = vectors.size();
  const size_t d = vectors[0].size();
  if (d < 2) throw ParameterError("PCA projection needs dimension >= 2");
  for (const auto &v : vectors) {
    if (v.size() != d) throw ParameterError("PCA input vectors differ in size");
  }

  Projection2D p;
  p.mean.assign(d, 0.0);
  for (const auto &v : vectors) {
    for (size_t i = 0; i < d; ++i) p.mean[i] += v[i];
  }
  for (double &x : p.mean) x /= static_cast<double>(n);
  p.coords.assign(n, {0.0, 0.0});

  const bool all_equal = std::all_of(vectors.begin(), vectors.end(),
                                     [&](const auto &v) { return v == vectors[0]; });
  std::vector<Vec> centered(n, Vec(d));
  for (size_t r = 0; r < n; ++r) {
    for (size_t i = 0; i < d; ++i) centered[r][i] = vectors[r][i] - p.mean[i];
  }
  std::vector<Vec> cov(d, Vec(d, 0.0));
  for (const auto &x : centered) {
    for (size_t i = 0; i < d; ++i) {
      if (x[i] == 0.0) continue;
      for (size_t j = 0; j < d; ++j) cov[i][j] += x[i] * x[j];
    }
  }
  double trace = 0.0;
  for (size_t i = 0; i < d; ++i) {
    for (size_t j = 0; j < d; ++j) cov[i][j] /= static_cast<double>(n - 1);
    trace += cov[i][i];
  }
  const double zero_scale = 1e-13 * trace;

  Vec first = all_equal || trace <= 0.0 ? Vec{} : PowerIteration(cov, nullptr, zero_scale);
  if (first.empty()) {
    // Rank 0: any orthonormal pair, all points at the origin.
    p.components[0].assign(d, 0.0);
    p.components[1].assign(d, 0.0);
    p.components[0][0] = 1.0;
    p.components[1][1] = 1.0;
    return p;
  }
  FixSign(first);
  p.variances[0] = DotVec(first, MatVec(cov, first));

  // Deflate, then search the orthogonal complement of the first component.
  for (size_t i = 0; i < d; ++i) {
    for (size_t j = 0; j < d; ++j) cov[i][j] -= p.variances[0] * first[i] * first[j];
  }
  Vec second = PowerIteration(cov, &first, zero_scale);
  if (second.empty()) {
    second = UnitBasisOrthogonalTo(first);
  } else {
    // Re-orthogonalize once more against accumulated rounding.
    RemoveComponent(second, first);
    const double norm = Norm(second);
    for (double &x : second) x /= norm;
    p.variances[1] = DotVec(second, MatVec(cov, second));
  }
  FixSign(second);
  p.variances[1] = std::max(0.0, p.variances[1]);

  for (size_t r = 0; r < n; ++r) {
    p.coords[r] = {DotVec(centered[r], first), DotVec(centered[r], second)};
  }
  p.components = {std::move(first), std::move(second)};
  return p;
}

TrajectoryProjection ProjectTrajectories(const std::vector<std::string> &characters,
                                         const TemporalEmbeddings &t) {
  std::vector<std::vector<double>> vectors;
  for (const auto &c : characters) {
    for (const auto &w : t.slices) vectors.push_back(CharacterVector(c, w, t.vocab));
  }
  TrajectoryProjection out;
  out.characters = characters;
  out.slices = t.slices.size();
  out.projection = PcaProject(vectors);
  return out;
}

PointTable ToPointTable(const TrajectoryProjection &p) {
  PointTable table;
  table.characters = p.characters;
  for (size_t c = 0; c < p.characters.size(); ++c) {
    auto &pts = table.points.emplace_back();
    for (size_t s = 0; s < p.slices; ++s) {
      pts.push_back(p.projection.coords[c * p.slices + s]);
    }
  }
  return table;
}

std::string FormatFixed6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", x);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

std::string DistanceCsv(const DistanceTable &table) {
  if (table.characters.empty() || table.series.empty() ||
      table.series[0].empty()) {
    throw ParameterError("no trajectory data to emit");
  }
  if (table.series.size() != table.characters.size()) {
    throw ParameterError("series and character counts differ");
  }
  std::string out = "slice,character,distance\n";
  for (size_t c = 0; c < table.characters.size(); ++c) {
    for (size_t s = 0; s < table.series[c].size(); ++s) {
      out += std::to_string(s) + "," + table.characters[c] + "," +
             FormatFixed6(table.series[c][s]) + "\n";
    }
  }
  return out;
}

std::string ProjectionCsv(const PointTable &table) {
  if (table.characters.empty() || table.points.empty() ||
      table.points[0].empty()) {
    throw ParameterError("no trajectory data to emit");
  }
  if (table.points.size() != table.characters.size()) {
    throw ParameterError("point and character counts differ");
  }
  std::string out = "slice,character,x,y\n";
  for (size_t c = 0; c < table.characters.size(); ++c) {
    for (size_t s = 0; s < table.points[c].size(); ++s) {
      out += std::to_string(s) + "," + table.characters[c] + "," +
             FormatFixed6(table.points[c][s][0]) + "," +
             FormatFixed6(table.points[c][s][1]) + "\n";
    }
  }
  return out;
}

DistanceTable ParseDistanceCsv(std::string_view csv) {
  DistanceTable table;
  std::vector<std::vector<std::array<double, 1>>> raw;
  ParseSeriesCsv<1>(csv, "slice,character,distance", table.characters, raw);
  for (const auto &s : raw) {
    auto &row = table.series.emplace_back();
    for (const auto &v : s) row.push_back(v[0]);
  }
  return table;
}

PointTable ParseProjectionCsv(std::string_view csv) {
  PointTable table;
  ParseSeriesCsv<2>(csv, "slice,character,x,y", table.characters, table.points);
  return table;
}

std::string DistanceSvg(const DistanceTable &table, const std::string &title) {
  if (table.series.empty() || table.series[0].empty()) {
    throw ParameterError("no trajectory data to plot");
  }
  const size_t slices = table.series[0].size();
  double ymax = 0.0;
  for (const auto &s : table.series) {
    for (double v : s) ymax = std::max(ymax, v);
  }
  if (ymax <= 0.0) ymax = 1.0;
  ymax *= 1.1;
  auto sx = [&](size_t s) {
    return slices == 1 ? (kLeft + kRight) / 2
                       : kLeft + (kRight - kLeft) * static_cast<double>(s) /
                                     static_cast<double>(slices - 1);
  };
  auto sy = [&](double v) { return kBottom - (kBottom - kTop) * v / ymax; };

  SvgBuilder svg(title);
  const size_t step = std::max<size_t>(1, (slices + 19) / 20);
  for (size_t s = 0; s < slices; s += step) {
    svg.Text(sx(s), kBottom + 16, std::to_string(s), "middle");
  }
  svg.Text((kLeft + kRight) / 2, kBottom + 34, "slice", "middle");
  for (int k = 0; k <= 4; ++k) {
    const double v = ymax * k / 4.0;
    svg.Text(kLeft - 6, sy(v) + 4, Num(v), "end");
  }
  for (size_t c = 0; c < table.series.size(); ++c) {
    std::vector<std::array<double, 2>> pts;
    for (size_t s = 0; s < table.series[c].size(); ++s) {
      pts.push_back({sx(s), sy(table.series[c][s])});
    }
    svg.Polyline(pts, kPalette[c % kPalette.size()]);
  }
  svg.Legend(table.characters);
  return svg.Finish();
}

std::string ProjectionSvg(const PointTable &table, const std::string &title) {
  if (table.points.empty() || table.points[0].empty()) {
    throw ParameterError("no trajectory data to plot");
  }
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto &pts : table.points) {
    for (const auto &p : pts) {
      xmin = std::min(xmin, p[0]);
      xmax = std::max(xmax, p[0]);
      ymin = std::min(ymin, p[1]);
      ymax = std::max(ymax, p[1]);
    }
  }
  auto pad = [](double &lo, double &hi) {
    const double span = hi - lo;
    const double margin = span > 0 ? 0.05 * span : 1.0;
    lo -= margin;
    hi += margin;
  };
  pad(xmin, xmax);
  pad(ymin, ymax);
  auto sx = [&](double x) { return kLeft + (kRight - kLeft) * (x - xmin) / (xmax - xmin); };
  auto sy = [&](double y) { return kBottom - (kBottom - kTop) * (y - ymin) / (ymax - ymin); };

  SvgBuilder svg(title);
  svg.Text((kLeft + kRight) / 2, kBottom + 34, "component 1", "middle");
  for (size_t c = 0; c < table.points.size(); ++c) {
    std::vector<std::array<double, 2>> pts;
    for (const auto &p : table.points[c]) pts.push_back({sx(p[0]), sy(p[1])});
    svg.Polyline(pts, kPalette[c % kPalette.size()]);
    svg.Text(pts.front()[0] + 5, pts.front()[1] - 5, "0", "start");
  }
  svg.Legend(table.characters);
  return svg.Finish();
}

void EmitTrajectories(const DistanceTable &table, const std::string &stem) {
  const std::string csv = DistanceCsv(table);
  WriteFile(stem + ".csv", csv);
  WriteFile(stem + ".svg", DistanceSvg(table, "Cosine distance to anchor"));
}

void EmitTrajectories(const PointTable &table, const std::string &stem) {
  const std::string csv = ProjectionCsv(table);
  WriteFile(stem + ".csv", csv);
  WriteFile(stem + ".svg", ProjectionSvg(table, "Character trajectories (PCA)"));
}

}  // namespace narrative
