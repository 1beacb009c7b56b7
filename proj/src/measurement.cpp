#include "cvgeo/measurement.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cvgeo/binary_io.hpp"
#include "cvgeo/errors.hpp"

namespace cvgeo {
namespace {

GridMap geometry_of(const GridMap& m) {
  return GridMap(m.origin(), m.cell_interval(), m.width(), m.height());
}

void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

const char* to_string(MeasurementMode m) {
  return m == MeasurementMode::corner_sum ? "corner-sum" : "bilinear";
}

MeasurementMode parse_measurement_mode(const std::string& s) {
  if (s == "corner-sum" || s == "corner_sum") return MeasurementMode::corner_sum;
  if (s == "bilinear") return MeasurementMode::bilinear;
  throw InvalidArgument("unknown measurement mode '" + s + "' (corner-sum | bilinear)");
}

std::vector<double> descriptor_distances(const GridMap& db_map, const GlobalDescriptor& q,
                                         kernels::Exec exec) {
  const std::size_t n = db_map.size();
  const std::size_t dim = q.dim();
  std::vector<double> rows;
  rows.reserve(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& desc = db_map.cell(i).descriptor;
    if (!desc) throw InvalidArgument("map cell " + std::to_string(i) + " has no descriptor");
    if (desc->dim() != dim) throw InvalidArgument("map descriptor dimension mismatch");
    rows.insert(rows.end(), desc->values.begin(), desc->values.end());
  }
  std::vector<double> out(n);
  kernels::squared_distances(exec, rows, dim, q.values, out);
  for (double& d : out) d = std::sqrt(d);
  return out;
}

ProbabilityField field_from_distances(const GridMap& geometry, std::span<const double> distances,
                                      const FieldOptions& options) {
  if (distances.size() != geometry.size()) {
    throw InvalidArgument("distance count does not match map size");
  }
  if (!(options.floor >= 0.0) || !std::isfinite(options.floor)) {
    throw InvalidArgument("probability floor must be finite and >= 0");
  }
  for (double d : distances) {
    if (!std::isfinite(d)) throw InvalidArgument("descriptor distance must be finite");
  }
  ProbabilityField field{geometry_of(geometry), {distances.begin(), distances.end()},
                         options.floor};
  kernels::softmax_negated(options.exec, field.values);
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    field.map.cell(i).probability = field.values[i];
  }
  return field;
}

ProbabilityField location_probabilities(const GridMap& db_map, const GlobalDescriptor& q,
                                        const FieldOptions& options) {
  const std::vector<double> d = descriptor_distances(db_map, q, options.exec);
  return field_from_distances(db_map, d, options);
}

ProbabilityField uniform_field(const GridMap& geometry, double floor) {
  const std::vector<double> zeros(geometry.size(), 0.0);
  return field_from_distances(geometry, zeros, {floor, kernels::Exec::serial});
}

double measurement_probability(const ProbabilityField& field, const Pose& state,
                               MeasurementMode mode) noexcept {
  const LocalPoint p{state.x, state.y};
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !field.map.contains(p)) return field.floor;
  const CellCorners c = surrounding_corners(field.map, p);
  const double sw = field.values[c.index[0]];
  const double se = field.values[c.index[1]];
  const double nw = field.values[c.index[2]];
  const double ne = field.values[c.index[3]];
  if (mode == MeasurementMode::corner_sum) return sw + se + nw + ne;
  return (1.0 - c.fx) * (1.0 - c.fy) * sw + c.fx * (1.0 - c.fy) * se + (1.0 - c.fx) * c.fy * nw +
         c.fx * c.fy * ne;
}

Heatmap emit_heatmap(const ProbabilityField& field, HeatmapContrast contrast,
                     double exponential_gain) {
  Heatmap h{field.map.width(), field.map.height(), field.values};
  if (h.intensity.empty()) return h;
  if (contrast == HeatmapContrast::exponential) {
    const double peak = *std::max_element(h.intensity.begin(), h.intensity.end());
    const double scale = peak > 0.0 ? exponential_gain / peak : 0.0;
    for (double& v : h.intensity) v = std::exp(scale * v);
  }
  const auto [lo_it, hi_it] = std::minmax_element(h.intensity.begin(), h.intensity.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  for (double& v : h.intensity) v = range > 0.0 ? (v - lo) / range : 1.0;
  return h;
}

std::string heatmap_csv(const ProbabilityField& field) {
  std::string out = "x,y,p\n";
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    const LocalPoint& loc = field.map.cell(i).location;
    append_double(out, loc.x);
    out += ',';
    append_double(out, loc.y);
    out += ',';
    append_double(out, field.values[i]);
    out += '\n';
  }
  return out;
}

void write_heatmap_csv(const std::filesystem::path& path, const ProbabilityField& field) {
  io::write_text_file(path, heatmap_csv(field));
}

std::vector<HeatmapCsvRow> read_heatmap_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "x,y,p") throw IoError(path.string() + ": missing x,y,p header");
  std::vector<HeatmapCsvRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    HeatmapCsvRow r;
    char c1 = 0;
    char c2 = 0;
    std::istringstream ss(line);
    if (!(ss >> r.x >> c1 >> r.y >> c2 >> r.p) || c1 != ',' || c2 != ',') {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": malformed heatmap row");
    }
    rows.push_back(r);
  }
  return rows;
}

std::vector<std::uint8_t> encode_pgm(const Heatmap& heatmap) {
  const std::string header = "P5\n" + std::to_string(heatmap.width) + " " +
                             std::to_string(heatmap.height) + "\n65535\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + heatmap.intensity.size() * 2);
  for (std::size_t r = heatmap.height; r-- > 0;) {
    for (std::size_t c = 0; c < heatmap.width; ++c) {
      const double v = std::clamp(heatmap.intensity[r * heatmap.width + c], 0.0, 1.0);
      const auto g = static_cast<std::uint16_t>(std::lround(v * 65535.0));
      out.push_back(static_cast<std::uint8_t>(g >> 8));  // PGM samples are big-endian
      out.push_back(static_cast<std::uint8_t>(g & 0xFF));
    }
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const Heatmap& heatmap) {
  io::write_file(path, encode_pgm(heatmap));
}

}  // namespace cvgeo
