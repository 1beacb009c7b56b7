#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cvgeo/descriptor.hpp"
#include "cvgeo/kernels.hpp"
#include "cvgeo/map_grid.hpp"
#include "cvgeo/motion.hpp"

namespace cvgeo {

inline constexpr double kDefaultProbabilityFloor = 1e-12;

/// How the four corner probabilities around a state become its likelihood.
///   corner_sum - plain sum of the four corner probabilities
///   bilinear   - area-weighted interpolation of the same four values
enum class MeasurementMode { corner_sum, bilinear };

const char* to_string(MeasurementMode m);
MeasurementMode parse_measurement_mode(const std::string& s);

/// Location probabilities over the map lattice for one ground frame.
/// Sums to 1; `floor` is the likelihood given to states outside the map.
struct ProbabilityField {
  GridMap map;                  // geometry, with every cell's probability set
  std::vector<double> values;   // same probabilities, row-major
  double floor = kDefaultProbabilityFloor;

  double at(std::size_t idx) const { return values[idx]; }
};

struct FieldOptions {
  double floor = kDefaultProbabilityFloor;
  kernels::Exec exec = kernels::Exec::parallel;
};

/// Euclidean descriptor distance from q to every cell's stored descriptor.
/// Throws InvalidArgument if a cell has no descriptor or dimensions differ.
std::vector<double> descriptor_distances(const GridMap& db_map, const GlobalDescriptor& q,
                                         kernels::Exec exec = kernels::Exec::parallel);

/// p_i = exp(-d_i) / sum_j exp(-d_j), evaluated with min-shift for stability.
ProbabilityField location_probabilities(const GridMap& db_map, const GlobalDescriptor& q,
                                        const FieldOptions& options = {});

/// Field from precomputed distances over db_map's lattice.
ProbabilityField field_from_distances(const GridMap& geometry, std::span<const double> distances,
                                      const FieldOptions& options = {});

/// Field that carries no information: every cell 1/N.
ProbabilityField uniform_field(const GridMap& geometry, double floor = kDefaultProbabilityFloor);

/// Likelihood of a state; states outside the map get field.floor.
double measurement_probability(const ProbabilityField& field, const Pose& state,
                               MeasurementMode mode = MeasurementMode::corner_sum) noexcept;

enum class HeatmapContrast { linear, exponential };

/// Per-cell intensity in [0, 1], row-major with row 0 along the south edge.
struct Heatmap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> intensity;
};

/// Linear mode min-max scales the probabilities. Exponential mode first maps
/// p -> exp(gain * p / max p) and then min-max scales. A constant field
/// yields intensity 1 everywhere.
Heatmap emit_heatmap(const ProbabilityField& field, HeatmapContrast contrast,
                     double exponential_gain = 8.0);

/// `x,y,p` rows in cell order.
std::string heatmap_csv(const ProbabilityField& field);
void write_heatmap_csv(const std::filesystem::path& path, const ProbabilityField& field);

struct HeatmapCsvRow {
  double x = 0.0;
  double y = 0.0;
  double p = 0.0;
};
std::vector<HeatmapCsvRow> read_heatmap_csv(const std::filesystem::path& path);

/// Binary PGM (P5), maxval 65535, north-up.
std::vector<std::uint8_t> encode_pgm(const Heatmap& heatmap);
void write_pgm(const std::filesystem::path& path, const Heatmap& heatmap);

}  // namespace cvgeo
