#ifndef NARRATIVE_TRAJECTORY_H_
#define NARRATIVE_TRAJECTORY_H_

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "narrative/sgns.h"
#include "narrative/temporal.h"

namespace narrative {

// 1 - cos(u, v), clamped to [0, 2]. Throws ParameterError on a dimension
// mismatch and NumericError when either vector has zero norm.
double CosineDistance(std::span<const double> u, std::span<const double> v);
double CosineDistance(std::span<const float> u, std::span<const float> v);

// Row of `canonical` in `w`. Throws LookupError naming the character.
std::vector<double> CharacterVector(const std::string &canonical,
                                    const WordMatrix &w, const Vocabulary &vocab);

// One row per character in `others`, one column per slice: the cosine
// distance between that character and the anchor within each slice.
std::vector<std::vector<double>> DistanceSeries(
    const std::string &anchor, const std::vector<std::string> &others,
    const TemporalEmbeddings &t);

struct Projection2D {
  std::vector<std::array<double, 2>> coords;  // one per input vector
  std::array<std::vector<double>, 2> components;
  std::vector<double> mean;
  std::array<double, 2> variances{};  // eigenvalues of the covariance
};

inline constexpr double kPcaTolerance = 1e-9;
inline constexpr int kPcaMaxIterations = 10000;

// Top-2 principal components of the covariance by power iteration with
// deflation. Each component's largest-magnitude entry is made positive.
// Throws ParameterError for fewer than 3 vectors or ragged input.
Projection2D PcaProject(const std::vector<std::vector<double>> &vectors);

// Projects every (character, slice) vector into one shared 2D space. Points
// are ordered character-major.
struct TrajectoryProjection {
  std::vector<std::string> characters;
  size_t slices = 0;
  Projection2D projection;
};
TrajectoryProjection ProjectTrajectories(const std::vector<std::string> &characters,
                                         const TemporalEmbeddings &t);

// Table of (slice, character, value...) rows as read back from CSV.
struct DistanceTable {
  std::vector<std::string> characters;
  std::vector<std::vector<double>> series;  // [character][slice]
};

struct PointTable {
  std::vector<std::string> characters;
  std::vector<std::vector<std::array<double, 2>>> points;  // [character][slice]
};

// CSV with header `slice,character,distance`, character-major rows, six
// decimals, LF endings. Throws ParameterError on empty input.
std::string DistanceCsv(const DistanceTable &table);
// CSV with header `slice,character,x,y`.
std::string ProjectionCsv(const PointTable &table);
PointTable ToPointTable(const TrajectoryProjection &p);

DistanceTable ParseDistanceCsv(std::string_view csv);
PointTable ParseProjectionCsv(std::string_view csv);

// Self-contained SVG 1.1 polyline charts, 800x400 viewBox, with a legend.
std::string DistanceSvg(const DistanceTable &table, const std::string &title);
std::string ProjectionSvg(const PointTable &table, const std::string &title);

// Writes <stem>.csv and <stem>.svg. Throws IoError if the path is unwritable.
void EmitTrajectories(const DistanceTable &table, const std::string &stem);
void EmitTrajectories(const PointTable &table, const std::string &stem);

// "%.6f" without a negative zero.
std::string FormatFixed6(double x);

}  // namespace narrative

#endif  // NARRATIVE_TRAJECTORY_H_
