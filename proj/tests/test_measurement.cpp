#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "cvgeo/errors.hpp"
#include "cvgeo/measurement.hpp"
#include "cvgeo/rng.hpp"

using namespace cvgeo;

namespace {

// Field whose probabilities are exactly p (p must sum to 1): distances -ln p.
ProbabilityField field_of(const GridMap& map, const std::vector<double>& p) {
  std::vector<double> d;
  for (double x : p) d.push_back(-std::log(x));
  return field_from_distances(map, d);
}

GridMap map_with_descriptors(std::size_t w, std::size_t h, std::size_t dim, SeededRng& rng) {
  GridMap map({1.0, 2.0}, 5.0, w, h);
  for (auto& c : map.cells()) {
    GlobalDescriptor g{std::vector<double>(dim), View::satellite};
    for (double& x : g.values) x = rng.gaussian();
    c.descriptor = g;
  }
  return map;
}

}  // namespace

TEST(LocationProbabilities, EqualDistancesSplitEvenly) {
  const GridMap map({0, 0}, 1.0, 2, 2);
  const std::vector<double> d(4, 3.7);
  const auto f = field_from_distances(map, d);
  for (double p : f.values) EXPECT_NEAR(p, 0.25, 1e-15);
  const std::vector<double> two{1.0, 1.0, 50.0, 50.0};
  const auto g = field_from_distances(map, two);
  EXPECT_EQ(g.values[0], g.values[1]);
}

TEST(LocationProbabilities, HandComputedThreeCells) {
  const GridMap map({0, 0}, 1.0, 2, 2);
  const std::vector<double> d{0.0, 1.0, 2.0, 800.0};
  const auto f = field_from_distances(map, d);
  const double z = 1.0 + std::exp(-1.0) + std::exp(-2.0) + std::exp(-800.0);
  EXPECT_NEAR(f.values[0], 1.0 / z, 1e-15);
  EXPECT_NEAR(f.values[1], std::exp(-1.0) / z, 1e-15);
  EXPECT_NEAR(f.values[2], std::exp(-2.0) / z, 1e-15);
  EXPECT_GE(f.values[3], 0.0);
}

TEST(LocationProbabilities, FromDescriptorsSumsToOneAndIsMonotone) {
  SeededRng rng(1);
  const GridMap map = map_with_descriptors(30, 20, 8, rng);
  GlobalDescriptor q{std::vector<double>(8), View::ground};
  for (double& x : q.values) x = rng.gaussian();
  const auto f = location_probabilities(map, q);
  const auto d = descriptor_distances(map, q);
  EXPECT_NEAR(std::accumulate(f.values.begin(), f.values.end(), 0.0), 1.0, 1e-9);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_DOUBLE_EQ(d[i], euclidean_distance(map.cell(i).descriptor->values, q.values));
    EXPECT_EQ(*f.map.cell(i).probability, f.values[i]);
    for (std::size_t j = i + 1; j < d.size(); j += 37) {
      if (d[i] < d[j]) EXPECT_GT(f.values[i], f.values[j]);
    }
  }
}

TEST(LocationProbabilities, ShiftInvariance) {
  SeededRng rng(2);
  const GridMap map({0, 0}, 1.0, 10, 10);
  std::vector<double> d(100);
  for (double& x : d) x = 5.0 * rng.uniform();
  const auto a = field_from_distances(map, d);
  for (double c : {-3.0, 0.5, 100.0}) {
    std::vector<double> e = d;
    for (double& x : e) x += c;
    const auto b = field_from_distances(map, e);
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-9);
  }
}

TEST(LocationProbabilities, Errors) {
  GridMap map({0, 0}, 1.0, 2, 2);
  GlobalDescriptor q{{1.0, 2.0}, View::ground};
  EXPECT_THROW(location_probabilities(map, q), InvalidArgument);
  for (auto& c : map.cells()) c.descriptor = GlobalDescriptor{{0.0}, View::satellite};
  EXPECT_THROW(location_probabilities(map, q), InvalidArgument);
  EXPECT_THROW(field_from_distances(map, std::vector<double>{1.0}), InvalidArgument);
}

TEST(MeasurementProbability, CornerSumOnLatticePoint) {
  const GridMap map({0, 0}, 10.0, 3, 3);
  const std::vector<double> p{0.01, 0.02, 0.03, 0.04, 0.10, 0.20, 0.05, 0.25, 0.30};
  const auto f = field_of(map, p);
  // point (10, 0): SW = cell (1,0), SE = (2,0), NW = (1,1), NE = (2,1)
  const double v = measurement_probability(f, {10.0, 0.0, 0.0}, MeasurementMode::corner_sum);
  EXPECT_NEAR(v, 0.02 + 0.03 + 0.10 + 0.20, 1e-12);
  const double w = measurement_probability(f, {14.0, 16.0, 1.0}, MeasurementMode::corner_sum);
  EXPECT_NEAR(w, 0.10 + 0.20 + 0.25 + 0.30, 1e-12);
}

TEST(MeasurementProbability, BilinearProperties) {
  const GridMap map({0, 0}, 10.0, 2, 2);
  const auto f = field_of(map, {0.1, 0.2, 0.3, 0.4});
  EXPECT_NEAR(measurement_probability(f, {5, 5, 0}, MeasurementMode::bilinear), 0.25, 1e-12);
  EXPECT_NEAR(measurement_probability(f, {0, 0, 0}, MeasurementMode::bilinear), 0.1, 1e-12);
  EXPECT_NEAR(measurement_probability(f, {10, 10, 0}, MeasurementMode::bilinear), 0.4, 1e-12);
  SeededRng rng(3);
  for (int i = 0; i < 500; ++i) {
    const Pose s{10 * rng.uniform(), 10 * rng.uniform(), 0};
    const double b = measurement_probability(f, s, MeasurementMode::bilinear);
    EXPECT_GE(b, 0.1 - 1e-12);
    EXPECT_LE(b, 0.4 + 1e-12);
  }
  const auto flat = field_of(map, {0.25, 0.25, 0.25, 0.25});
  EXPECT_NEAR(measurement_probability(flat, {3, 7, 0}, MeasurementMode::bilinear), 0.25, 1e-12);
  EXPECT_NEAR(measurement_probability(flat, {3, 7, 0}, MeasurementMode::corner_sum),
              4 * measurement_probability(flat, {3, 7, 0}, MeasurementMode::bilinear), 1e-12);
}

TEST(MeasurementProbability, OffMapGetsFloor) {
  const GridMap map({0, 0}, 10.0, 2, 2);
  FieldOptions opt;
  opt.floor = 1e-7;
  const auto f = field_from_distances(map, std::vector<double>{1, 2, 3, 4}, opt);
  EXPECT_EQ(measurement_probability(f, {-1, 5, 0}), 1e-7);
  EXPECT_EQ(measurement_probability(f, {5, 10.5, 0}, MeasurementMode::bilinear), 1e-7);
  EXPECT_EQ(measurement_probability(f, {NAN, 5, 0}), 1e-7);
  EXPECT_EQ(uniform_field(map).floor, kDefaultProbabilityFloor);
}

TEST(MeasurementModeNames, RoundTrip) {
  for (auto m : {MeasurementMode::corner_sum, MeasurementMode::bilinear}) {
    EXPECT_EQ(parse_measurement_mode(to_string(m)), m);
  }
  EXPECT_THROW(parse_measurement_mode("nearest"), InvalidArgument);
}

TEST(Heatmap, UniformLinearIsConstant) {
  const GridMap map({0, 0}, 1.0, 4, 3);
  const auto h = emit_heatmap(uniform_field(map), HeatmapContrast::linear);
  EXPECT_EQ(h.width, 4u);
  EXPECT_EQ(h.height, 3u);
  for (double v : h.intensity) EXPECT_EQ(v, h.intensity[0]);
}

TEST(Heatmap, SpikeIsBrightest) {
  const GridMap map({0, 0}, 1.0, 5, 5);
  std::vector<double> d(25, 10.0);
  d[13] = 0.0;
  const auto f = field_from_distances(map, d);
  for (auto c : {HeatmapContrast::linear, HeatmapContrast::exponential}) {
    const auto h = emit_heatmap(f, c);
    const auto it = std::max_element(h.intensity.begin(), h.intensity.end());
    EXPECT_EQ(it - h.intensity.begin(), 13);
    EXPECT_DOUBLE_EQ(*it, 1.0);
  }
}

TEST(Heatmap, CsvRoundTrip) {
  const GridMap map({0, 0}, 2.0, 3, 3);
  SeededRng rng(4);
  std::vector<double> d(9);
  for (double& x : d) x = 3 * rng.uniform();
  const auto f = field_from_distances(map, d);
  const auto path = std::filesystem::temp_directory_path() / "cvgeo_heatmap_test.csv";
  write_heatmap_csv(path, f);
  const auto rows = read_heatmap_csv(path);
  ASSERT_EQ(rows.size(), 9u);
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_NEAR(rows[i].p, f.values[i], 1e-6);
    EXPECT_EQ(rows[i].x, map.cell(i).location.x);
    EXPECT_EQ(rows[i].y, map.cell(i).location.y);
  }
  std::filesystem::remove(path);
}

TEST(Heatmap, PgmHeaderAndOrientation) {
  Heatmap h{2, 2, {0.0, 0.0, 1.0, 0.5}};  // row 0 south, row 1 north
  const auto bytes = encode_pgm(h);
  const std::string head(bytes.begin(), bytes.begin() + 15);
  EXPECT_EQ(head, "P5\n2 2\n65535\n\xFF\xFF");
  // first written row is the north row: 65535 then 32768 (rounded)
  ASSERT_EQ(bytes.size(), 13u + 8u);
  EXPECT_EQ(bytes[13], 0xFF);
  EXPECT_EQ(bytes[14], 0xFF);
  const unsigned mid = (bytes[15] << 8) | bytes[16];
  EXPECT_NEAR(mid, 32768.0, 1.0);
  EXPECT_EQ(bytes[17], 0);
  EXPECT_EQ(bytes[20], 0);
}
