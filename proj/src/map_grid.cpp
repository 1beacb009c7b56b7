#include "cvgeo/map_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cvgeo/errors.hpp"

namespace cvgeo {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Lattice counts tolerate projection round-off of a few nanometers.
constexpr double kCountSlack = 1e-9;

void check_geo(double lat, double lon) {
  if (!std::isfinite(lat) || !std::isfinite(lon)) {
    throw InvalidArgument("geo coordinate must be finite");
  }
  if (std::abs(lat) > 90.0 || std::abs(lon) > 180.0) {
    throw InvalidArgument("geo coordinate out of range: lat=" + std::to_string(lat) +
                          " lon=" + std::to_string(lon));
  }
}

std::size_t lattice_count(double extent, double interval) {
  return static_cast<std::size_t>(std::floor(extent / interval + kCountSlack)) + 1;
}

}  // namespace

GridMap::GridMap(GeoPoint origin, double cell_interval, std::size_t width, std::size_t height)
    : origin_(origin), cell_interval_(cell_interval), width_(width), height_(height) {
  check_geo(origin.lat, origin.lon);
  if (!(cell_interval > 0.0) || !std::isfinite(cell_interval)) {
    throw InvalidArgument("cell_interval must be positive and finite");
  }
  if (width < 2 || height < 2) {
    throw InvalidArgument("grid must be at least 2x2, got " + std::to_string(width) + "x" +
                          std::to_string(height));
  }
  cells_.resize(width * height);
  for (std::size_t row = 0; row < height; ++row) {
    for (std::size_t col = 0; col < width; ++col) {
      cells_[index(col, row)].location = {static_cast<double>(col) * cell_interval,
                                          static_cast<double>(row) * cell_interval};
    }
  }
}

bool GridMap::contains(const LocalPoint& p) const {
  return p.x >= 0.0 && p.y >= 0.0 && p.x <= extent_x() && p.y <= extent_y();
}

std::size_t GridMap::nearest_cell(const LocalPoint& p) const {
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !contains(p)) {
    throw OutOfBounds("point outside map");
  }
  const auto col = static_cast<std::size_t>(std::lround(p.x / cell_interval_));
  const auto row = static_cast<std::size_t>(std::lround(p.y / cell_interval_));
  return index(std::min(col, width_ - 1), std::min(row, height_ - 1));
}

LocalPoint geo_to_local(const GeoPoint& origin, double lat, double lon) {
  check_geo(lat, lon);
  const double x = kEarthRadiusM * (lon - origin.lon) * kDegToRad * std::cos(origin.lat * kDegToRad);
  const double y = kEarthRadiusM * (lat - origin.lat) * kDegToRad;
  return {x, y};
}

GeoPoint local_to_geo(const GeoPoint& origin, const LocalPoint& p) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
    throw InvalidArgument("local point must be finite");
  }
  const double lat = origin.lat + p.y / (kEarthRadiusM * kDegToRad);
  const double lon = origin.lon + p.x / (kEarthRadiusM * kDegToRad * std::cos(origin.lat * kDegToRad));
  return {lat, lon};
}

LocalPoint geo_to_local(const GridMap& map, double lat, double lon) {
  return geo_to_local(map.origin(), lat, lon);
}

GeoPoint local_to_geo(const GridMap& map, const LocalPoint& p) {
  return local_to_geo(map.origin(), p);
}

double geo_distance_m(const GeoPoint& a, const GeoPoint& b) {
  const double mean_lat = 0.5 * (a.lat + b.lat) * kDegToRad;
  const double dx = (b.lon - a.lon) * kDegToRad * std::cos(mean_lat);
  const double dy = (b.lat - a.lat) * kDegToRad;
  return kEarthRadiusM * std::hypot(dx, dy);
}

CellCorners surrounding_corners(const GridMap& map, const LocalPoint& p) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !map.contains(p)) {
    throw OutOfBounds("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                      ") outside map");
  }
  const double gx = p.x / map.cell_interval();
  const double gy = p.y / map.cell_interval();
  // Points on the north/east edge belong to the last cell.
  const std::size_t col = std::min(static_cast<std::size_t>(std::floor(gx)), map.width() - 2);
  const std::size_t row = std::min(static_cast<std::size_t>(std::floor(gy)), map.height() - 2);

  CellCorners out;
  out.index = {map.index(col, row), map.index(col + 1, row), map.index(col, row + 1),
               map.index(col + 1, row + 1)};
  out.fx = std::clamp(gx - static_cast<double>(col), 0.0, 1.0);
  out.fy = std::clamp(gy - static_cast<double>(row), 0.0, 1.0);
  return out;
}

GridMap tessellate_local(const GeoPoint& origin, double extent_x, double extent_y,
                         double interval) {
  if (!(interval > 0.0) || !std::isfinite(interval)) {
    throw InvalidArgument("tessellation interval must be positive");
  }
  if (!(extent_x > 0.0) || !(extent_y > 0.0) || !std::isfinite(extent_x) ||
      !std::isfinite(extent_y)) {
    throw InvalidArgument("tessellation bounds are degenerate");
  }
  const std::size_t w = lattice_count(extent_x, interval);
  const std::size_t h = lattice_count(extent_y, interval);
  if (w < 2 || h < 2) {
    throw InvalidArgument("bounds too small for a 2x2 grid at interval " +
                          std::to_string(interval));
  }
  return GridMap(origin, interval, w, h);
}

GridMap tessellate(const GeoRect& bounds, double interval) {
  check_geo(bounds.south, bounds.west);
  check_geo(bounds.north, bounds.east);
  if (!(bounds.north > bounds.south) || !(bounds.east > bounds.west)) {
    throw InvalidArgument("tessellation bounds are degenerate");
  }
  const GeoPoint origin{bounds.south, bounds.west};
  const LocalPoint ne = geo_to_local(origin, bounds.north, bounds.east);
  return tessellate_local(origin, ne.x, ne.y, interval);
}

}  // namespace cvgeo
