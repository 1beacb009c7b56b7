#include "cvgeo/world.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "cvgeo/errors.hpp"
#include "cvgeo/rng.hpp"

namespace cvgeo {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double segment_distance(const LocalPoint& p, const LocalPoint& a, const LocalPoint& b) {
  const double vx = b.x - a.x;
  const double vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.x - a.x) * vx + (p.y - a.y) * vy) / len2, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy));
}

}  // namespace

void WorldConfig::validate() const {
  if (feature_dim == 0 || features_per_view == 0 || fourier_terms == 0) {
    throw InvalidArgument("world feature sizes must be positive");
  }
  if (!(correlation_length > 0.0)) throw InvalidArgument("correlation_length must be positive");
  if (patch_radius < 0.0 || ground_noise < 0.0 || corridor_strength < 0.0) {
    throw InvalidArgument("world noise/patch parameters must be non-negative");
  }
  if (!(corridor_width > 0.0)) throw InvalidArgument("corridor_width must be positive");
  for (const auto& a : aliases) {
    if (!(a.radius > 0.0)) throw InvalidArgument("alias radius must be positive");
  }
}

SyntheticWorld::SyntheticWorld(WorldConfig config)
    : config_(std::move(config)),
      map_(tessellate_local(config_.origin, config_.extent_x, config_.extent_y,
                            config_.cell_interval)) {
  config_.validate();
  SeededRng rng(config_.seed);
  const std::size_t d = config_.feature_dim;
  const std::size_t f = config_.fourier_terms;
  waves_.reserve(d * f);
  for (std::size_t i = 0; i < d * f; ++i) {
    const double wavelength = config_.correlation_length * (0.5 + rng.uniform());
    const double dir = kTwoPi * rng.uniform();
    const double k = kTwoPi / wavelength;
    waves_.push_back({k * std::cos(dir), k * std::sin(dir), kTwoPi * rng.uniform()});
  }
  const std::size_t n = config_.features_per_view;
  for (std::size_t j = 0; j < n; ++j) {
    const double a = kTwoPi * static_cast<double>(j) / static_cast<double>(n);
    patch_offsets_.push_back({config_.patch_radius * std::cos(a), config_.patch_radius * std::sin(a)});
  }
  offroad_.assign(n, std::vector<double>(d));
  for (auto& v : offroad_) {
    for (double& x : v) x = rng.gaussian();
    l2_normalize(v);
  }
}

LocalPoint SyntheticWorld::appearance_point(const LocalPoint& p) const {
  for (const auto& a : config_.aliases) {
    if (std::hypot(p.x - a.target.x, p.y - a.target.y) <= a.radius) {
      return {p.x - a.target.x + a.source.x, p.y - a.target.y + a.source.y};
    }
  }
  return p;
}

double SyntheticWorld::corridor_distance(const LocalPoint& p) const {
  const auto& c = config_.corridor;
  if (c.empty()) return 0.0;
  if (c.size() == 1) return std::hypot(p.x - c[0].x, p.y - c[0].y);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < c.size(); ++i) best = std::min(best, segment_distance(p, c[i], c[i + 1]));
  return best;
}

std::vector<std::vector<double>> SyntheticWorld::base_features(const LocalPoint& p) const {
  const std::size_t n = config_.features_per_view;
  const std::size_t d = config_.feature_dim;
  const std::size_t f = config_.fourier_terms;
  std::vector<std::vector<double>> out(n, std::vector<double>(d, 0.0));
  if (config_.kind == WorldKind::uniform) {
    for (auto& v : out) {
      for (std::size_t i = 0; i < d; ++i) v[i] = (i % 2 == 0) ? 0.5 : -0.5;
    }
    return out;
  }
  const LocalPoint q = appearance_point(p);
  const double amp = std::sqrt(2.0 / static_cast<double>(f));
  for (std::size_t j = 0; j < n; ++j) {
    const double x = q.x + patch_offsets_[j].x;
    const double y = q.y + patch_offsets_[j].y;
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t t = 0; t < f; ++t) {
        const Wave& w = waves_[i * f + t];
        s += std::cos(w.kx * x + w.ky * y + w.phase);
      }
      out[j][i] = amp * s;
    }
  }
  return out;
}

SyntheticWorld build_world(const WorldConfig& config) { return SyntheticWorld(config); }

LocalFeatureSet synth_features(const SyntheticWorld& world, const Pose& pose,
                               std::uint64_t rng_seed, View view) {
  const LocalPoint p{pose.x, pose.y};
  if (!std::isfinite(pose.theta) || !world.map().contains(p)) {
    throw OutOfBounds("pose (" + std::to_string(pose.x) + ", " + std::to_string(pose.y) +
                      ") outside world");
  }
  const WorldConfig& cfg = world.config();
  std::vector<std::vector<double>> feats = world.base_features(p);
  const std::size_t n = feats.size();

  LocalFeatureSet out;
  out.view = view;
  if (view == View::satellite) {
    if (cfg.corridor_strength > 0.0 && !cfg.corridor.empty()) {
      const double off = std::min(1.0, world.corridor_distance(p) / cfg.corridor_width);
      for (std::size_t j = 0; j < n; ++j) {
        const auto& dir = world.offroad_direction(j);
        for (std::size_t i = 0; i < dir.size(); ++i) feats[j][i] += cfg.corridor_strength * off * dir[i];
      }
    }
    out.features = std::move(feats);
    return out;
  }

  // Ground view: the ring of patches is enumerated from the heading direction.
  const double turns = wrap_angle(pose.theta) / (2.0 * std::numbers::pi);
  const auto ni = static_cast<long long>(n);
  const long long steps = static_cast<long long>(std::floor(turns * static_cast<double>(n) + 0.5));
  const auto shift = static_cast<std::size_t>(((steps % ni) + ni) % ni);
  SeededRng noise(SeededRng::derive(cfg.seed, rng_seed));
  out.features.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> v = feats[(j + shift) % n];
    for (double& x : v) x += cfg.ground_noise * noise.gaussian();
    out.features.push_back(std::move(v));
  }
  return out;
}

GridMap populate_descriptors(const SyntheticWorld& world, const PipelineConfig& pipeline) {
  if (pipeline.feature_dim() != world.config().feature_dim) {
    throw InvalidArgument("pipeline feature dim " + std::to_string(pipeline.feature_dim()) +
                          " != world feature dim " + std::to_string(world.config().feature_dim));
  }
  pipeline.validate();
  GridMap out = world.map();
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    GridCell& cell = out.cell(static_cast<std::size_t>(i));
    const Pose at{cell.location.x, cell.location.y, 0.0};
    cell.descriptor = forward(pipeline, synth_features(world, at, 0, View::satellite));
  }
  return out;
}

std::uint64_t world_fingerprint(const SyntheticWorld& world) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const GridCell& cell : world.map().cells()) {
    const Pose at{cell.location.x, cell.location.y, 0.0};
    for (const auto& v : synth_features(world, at, 0, View::satellite).features) {
      for (double x : v) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
        for (int b = 0; b < 8; ++b) {
          h ^= (bits >> (8 * b)) & 0xFF;
          h *= 0x100000001b3ULL;
        }
      }
    }
  }
  return h;
}

}  // namespace cvgeo
