#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "cvgeo/errors.hpp"
#include "cvgeo/map_grid.hpp"
#include "cvgeo/rng.hpp"

using namespace cvgeo;

namespace {

// Arc length of one degree on the mean-radius sphere.
double degree_arc() { return 2.0 * std::numbers::pi * 6371008.8 / 360.0; }

}  // namespace

TEST(Projection, OriginMapsToZero) {
  const GridMap map({10.0, 20.0}, 5.0, 3, 3);
  const LocalPoint p = geo_to_local(map, 10.0, 20.0);
  EXPECT_EQ(p.x, 0.0);
  EXPECT_EQ(p.y, 0.0);
}

TEST(Projection, OneDegreeLongitudeAtEquator) {
  const GridMap map({0.0, 0.0}, 5.0, 3, 3);
  const LocalPoint p = geo_to_local(map, 0.0, 1.0);
  EXPECT_NEAR(p.x, 111320.0, 111320.0 * 0.005);
  EXPECT_NEAR(p.x, degree_arc(), 1e-6);
  EXPECT_NEAR(p.y, 0.0, 1e-9);
}

TEST(Projection, MilliDegreeLatitude) {
  const GridMap map({1.0, 103.0}, 5.0, 3, 3);
  const LocalPoint p = geo_to_local(map, 1.001, 103.0);
  EXPECT_NEAR(p.y, 111.32, 111.32 * 0.005);
  EXPECT_NEAR(p.y, degree_arc() / 1000.0, 1e-6);
}

TEST(Projection, RejectsNonFinite) {
  const GridMap map({1.0, 103.0}, 5.0, 3, 3);
  EXPECT_THROW(geo_to_local(map, std::nan(""), 103.0), InvalidArgument);
  EXPECT_THROW(geo_to_local(map, 1.0, INFINITY), InvalidArgument);
  EXPECT_THROW(geo_to_local(map, 91.0, 0.0), InvalidArgument);
}

TEST(Projection, RoundTripInsideBounds) {
  const GridMap map = tessellate_local({1.3521, 103.8198}, 2000.0, 1000.0, 10.0);
  SeededRng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const GeoPoint g = local_to_geo(map, {2000.0 * rng.uniform(), 1000.0 * rng.uniform()});
    const GeoPoint back = local_to_geo(map, geo_to_local(map, g.lat, g.lon));
    EXPECT_NEAR(back.lat, g.lat, 1e-9);
    EXPECT_NEAR(back.lon, g.lon, 1e-9);
    const LocalPoint p{2000.0 * rng.uniform(), 1000.0 * rng.uniform()};
    const GeoPoint pg = local_to_geo(map, p);
    const LocalPoint pl = geo_to_local(map, pg.lat, pg.lon);
    EXPECT_NEAR(pl.x, p.x, 1e-6);
    EXPECT_NEAR(pl.y, p.y, 1e-6);
  }
}

TEST(GridMapTest, RejectsTinyOrBadGrids) {
  EXPECT_THROW(GridMap({0, 0}, 5.0, 1, 3), InvalidArgument);
  EXPECT_THROW(GridMap({0, 0}, 5.0, 3, 1), InvalidArgument);
  EXPECT_THROW(GridMap({0, 0}, 0.0, 3, 3), InvalidArgument);
  EXPECT_THROW(GridMap({0, 0}, -1.0, 3, 3), InvalidArgument);
}

TEST(GridMapTest, CellsLieOnLattice) {
  const GridMap map({0, 0}, 2.5, 4, 3);
  ASSERT_EQ(map.size(), 12u);
  for (std::size_t i = 0; i < map.size(); ++i) {
    const auto& c = map.cell(i);
    EXPECT_DOUBLE_EQ(c.location.x, 2.5 * static_cast<double>(map.col_of(i)));
    EXPECT_DOUBLE_EQ(c.location.y, 2.5 * static_cast<double>(map.row_of(i)));
    EXPECT_FALSE(c.descriptor.has_value());
    EXPECT_FALSE(c.probability.has_value());
  }
  EXPECT_EQ(map.index(3, 2), 11u);
}

TEST(SurroundingCorners, OnLatticePointIsSouthWest) {
  const GridMap map({0, 0}, 10.0, 3, 3);
  const CellCorners c = surrounding_corners(map, {10.0, 0.0});
  EXPECT_EQ(c.index[0], map.index(1, 0));
  EXPECT_EQ(c.fx, 0.0);
  EXPECT_EQ(c.fy, 0.0);
}

TEST(SurroundingCorners, HandCheckedThreeByThree) {
  const GridMap map({0, 0}, 10.0, 3, 3);
  const CellCorners c = surrounding_corners(map, {14.0, 6.0});
  const auto& loc = [&](std::size_t k) { return map.cell(c.index[k]).location; };
  EXPECT_EQ(loc(0).x, 10.0);
  EXPECT_EQ(loc(0).y, 0.0);
  EXPECT_EQ(loc(1).x, 20.0);
  EXPECT_EQ(loc(1).y, 0.0);
  EXPECT_EQ(loc(2).x, 10.0);
  EXPECT_EQ(loc(2).y, 10.0);
  EXPECT_EQ(loc(3).x, 20.0);
  EXPECT_EQ(loc(3).y, 10.0);
  EXPECT_NEAR(c.fx, 0.4, 1e-12);
  EXPECT_NEAR(c.fy, 0.6, 1e-12);
}

TEST(SurroundingCorners, CentroidIsEquidistant) {
  const GridMap map({0, 0}, 10.0, 4, 4);
  const LocalPoint p{15.0, 25.0};
  const CellCorners c = surrounding_corners(map, p);
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& l = map.cell(c.index[k]).location;
    EXPECT_DOUBLE_EQ(std::max(std::abs(l.x - p.x), std::abs(l.y - p.y)), 5.0);
  }
}

TEST(SurroundingCorners, FarEdgesClampIntoLastCell) {
  const GridMap map({0, 0}, 10.0, 3, 3);
  const CellCorners c = surrounding_corners(map, {20.0, 20.0});
  EXPECT_EQ(c.index[3], map.index(2, 2));
  EXPECT_DOUBLE_EQ(c.fx, 1.0);
  EXPECT_DOUBLE_EQ(c.fy, 1.0);
}

TEST(SurroundingCorners, OutsideThrows) {
  const GridMap map({0, 0}, 10.0, 3, 3);
  EXPECT_THROW(surrounding_corners(map, {-0.1, 5.0}), OutOfBounds);
  EXPECT_THROW(surrounding_corners(map, {5.0, 20.01}), OutOfBounds);
}

TEST(SurroundingCorners, AlwaysAUnitCellProperty) {
  const GridMap map({0, 0}, 3.0, 7, 5);
  SeededRng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const LocalPoint p{map.extent_x() * rng.uniform(), map.extent_y() * rng.uniform()};
    const CellCorners c = surrounding_corners(map, p);
    const std::set<std::size_t> distinct(c.index.begin(), c.index.end());
    ASSERT_EQ(distinct.size(), 4u);
    const auto& sw = map.cell(c.index[0]).location;
    const auto& se = map.cell(c.index[1]).location;
    const auto& nw = map.cell(c.index[2]).location;
    const auto& ne = map.cell(c.index[3]).location;
    EXPECT_DOUBLE_EQ(se.x - sw.x, 3.0);
    EXPECT_DOUBLE_EQ(nw.y - sw.y, 3.0);
    EXPECT_DOUBLE_EQ(ne.x, se.x);
    EXPECT_DOUBLE_EQ(ne.y, nw.y);
    for (const auto* l : {&sw, &se, &nw, &ne}) {
      EXPECT_LE(std::abs(l->x - p.x), 3.0);
      EXPECT_LE(std::abs(l->y - p.y), 3.0);
    }
  }
}

TEST(Tessellate, HundredMetersAtTen) {
  const GeoPoint o{0.0, 0.0};
  const GeoPoint ne = local_to_geo(o, {100.0, 100.0});
  const GridMap map = tessellate({o.lat, o.lon, ne.lat, ne.lon}, 10.0);
  EXPECT_EQ(map.width(), 11u);
  EXPECT_EQ(map.height(), 11u);
}

TEST(Tessellate, TwentyByTenAtFive) {
  const GridMap map = tessellate_local({1.0, 2.0}, 20.0, 10.0, 5.0);
  EXPECT_EQ(map.width(), 5u);
  EXPECT_EQ(map.height(), 3u);
}

TEST(Tessellate, DegenerateBoundsThrow) {
  EXPECT_THROW(tessellate({1.0, 2.0, 1.0, 2.0}, 5.0), InvalidArgument);
  EXPECT_THROW(tessellate_local({1.0, 2.0}, 0.0, 0.0, 5.0), InvalidArgument);
  EXPECT_THROW(tessellate_local({1.0, 2.0}, 3.0, 30.0, 5.0), InvalidArgument);
  EXPECT_THROW(tessellate_local({1.0, 2.0}, 30.0, 30.0, 0.0), InvalidArgument);
}

TEST(Tessellate, CountRuleAndSpacing) {
  SeededRng rng(3);
  for (int i = 0; i < 200; ++i) {
    const double interval = 1.0 + 9.0 * rng.uniform();
    const double ex = interval * (1.0 + 40.0 * rng.uniform());
    const double ey = interval * (1.0 + 40.0 * rng.uniform());
    const GridMap map = tessellate_local({0.5, 0.5}, ex, ey, interval);
    EXPECT_EQ(map.width(), static_cast<std::size_t>(std::floor(ex / interval)) + 1);
    EXPECT_EQ(map.height(), static_cast<std::size_t>(std::floor(ey / interval)) + 1);
    const auto& a = map.cell(map.index(0, 0)).location;
    const auto& b = map.cell(map.index(1, 0)).location;
    const auto& c = map.cell(map.index(0, 1)).location;
    EXPECT_DOUBLE_EQ(b.x - a.x, interval);
    EXPECT_DOUBLE_EQ(c.y - a.y, interval);
  }
}

TEST(GeoDistance, MatchesLocalOffsets) {
  const GeoPoint o{1.3521, 103.8198};
  const GeoPoint a = local_to_geo(o, {300.0, 400.0});
  EXPECT_NEAR(geo_distance_m(o, a), 500.0, 0.05);
  EXPECT_EQ(geo_distance_m(a, a), 0.0);
}

TEST(GridMapTest, NearestCellAndContains) {
  const GridMap map({0, 0}, 10.0, 3, 3);
  EXPECT_TRUE(map.contains({20.0, 20.0}));
  EXPECT_FALSE(map.contains({20.0001, 0.0}));
  EXPECT_EQ(map.nearest_cell({14.0, 6.0}), map.index(1, 1));
  EXPECT_EQ(map.nearest_cell({16.0, 4.0}), map.index(2, 0));
}
