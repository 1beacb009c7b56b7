#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "cvgeo/descriptor.hpp"

namespace cvgeo {

/// Mean Earth radius (IUGG / WGS-84 mean), meters.
inline constexpr double kEarthRadiusM = 6371008.8;

struct GeoPoint {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees

  bool operator==(const GeoPoint&) const = default;
};

/// Axis-aligned geographic rectangle.
struct GeoRect {
  double south = 0.0;
  double west = 0.0;
  double north = 0.0;
  double east = 0.0;
};

/// Metric coordinates in the map-local frame (x east, y north), meters.
struct LocalPoint {
  double x = 0.0;
  double y = 0.0;
};

struct GridCell {
  LocalPoint location;
  std::optional<GlobalDescriptor> descriptor;
  std::optional<double> probability;
};

/// Indices of the four lattice corners around a point, ordered SW, SE, NW, NE,
/// plus the point's fractional position inside that cell (0..1 per axis).
struct CellCorners {
  std::array<std::size_t, 4> index{};
  double fx = 0.0;
  double fy = 0.0;
};

/// Tessellated geo-referenced map. Cell (col, row) sits at
/// origin + (col, row) * cell_interval in local meters; storage is row-major
/// with row 0 along the southern edge.
class GridMap {
 public:
  GridMap(GeoPoint origin, double cell_interval, std::size_t width, std::size_t height);

  const GeoPoint& origin() const { return origin_; }
  double cell_interval() const { return cell_interval_; }
  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return cells_.size(); }

  double extent_x() const { return cell_interval_ * static_cast<double>(width_ - 1); }
  double extent_y() const { return cell_interval_ * static_cast<double>(height_ - 1); }

  std::size_t index(std::size_t col, std::size_t row) const { return row * width_ + col; }
  std::size_t col_of(std::size_t idx) const { return idx % width_; }
  std::size_t row_of(std::size_t idx) const { return idx / width_; }

  const GridCell& cell(std::size_t idx) const { return cells_.at(idx); }
  GridCell& cell(std::size_t idx) { return cells_.at(idx); }
  const std::vector<GridCell>& cells() const { return cells_; }
  std::vector<GridCell>& cells() { return cells_; }

  /// True when p lies inside the closed lattice rectangle.
  bool contains(const LocalPoint& p) const;

  /// Index of the lattice point closest to p (p must be inside the map).
  std::size_t nearest_cell(const LocalPoint& p) const;

 private:
  GeoPoint origin_;
  double cell_interval_;
  std::size_t width_;
  std::size_t height_;
  std::vector<GridCell> cells_;
};

/// Equirectangular projection about the map origin.
LocalPoint geo_to_local(const GridMap& map, double lat, double lon);
GeoPoint local_to_geo(const GridMap& map, const LocalPoint& p);

LocalPoint geo_to_local(const GeoPoint& origin, double lat, double lon);
GeoPoint local_to_geo(const GeoPoint& origin, const LocalPoint& p);

/// Ground distance in meters between two geo points (equirectangular about
/// their mean latitude; accurate for the few-kilometer spans used here).
double geo_distance_m(const GeoPoint& a, const GeoPoint& b);

/// Throws OutOfBounds when p is outside the lattice rectangle.
CellCorners surrounding_corners(const GridMap& map, const LocalPoint& p);

/// Lattice covering bounds with the given spacing, inclusive of both edges:
/// floor(extent / interval) + 1 cells per axis.
GridMap tessellate(const GeoRect& bounds, double interval);

/// Same lattice rule for a metric extent measured from origin.
GridMap tessellate_local(const GeoPoint& origin, double extent_x, double extent_y,
                         double interval);

}  // namespace cvgeo
