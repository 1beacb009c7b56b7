#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cvgeo/descriptor.hpp"
#include "cvgeo/map_grid.hpp"
#include "cvgeo/motion.hpp"

namespace cvgeo {

enum class WorldKind {
  smooth,   // random smooth feature field; similarity decays with distance
  uniform,  // every location looks the same (no information)
};

/// Region whose appearance copies another region of the map.
struct AliasRegion {
  LocalPoint source;
  LocalPoint target;
  double radius = 0.0;
};

struct WorldConfig {
  std::uint64_t seed = 1;
  GeoPoint origin{1.3521, 103.8198};
  double extent_x = 400.0;  // meters
  double extent_y = 400.0;
  double cell_interval = 5.0;

  WorldKind kind = WorldKind::smooth;
  std::size_t feature_dim = 16;        // D
  std::size_t features_per_view = 24;  // N local features per image
  std::size_t fourier_terms = 8;       // random cosines per feature channel
  double correlation_length = 40.0;    // meters; typical wavelength of the field
  double patch_radius = 8.0;           // meters; ring the local features sample
  double ground_noise = 0.02;          // per-entry std of ground-view noise

  // Optional road prior: satellite features away from the corridor polyline
  // are pushed away from every ground-view feature.
  std::vector<LocalPoint> corridor;
  double corridor_width = 10.0;
  double corridor_strength = 0.0;

  std::vector<AliasRegion> aliases;

  void validate() const;
};

/// Deterministic stand-in for real imagery: a smooth random field that yields
/// the local features a camera would see at any pose.
class SyntheticWorld {
 public:
  explicit SyntheticWorld(WorldConfig config);

  const WorldConfig& config() const { return config_; }
  /// Lattice geometry of the world (no descriptors).
  const GridMap& map() const { return map_; }

  /// Feature channels at a point before view-specific effects, N x D.
  std::vector<std::vector<double>> base_features(const LocalPoint& p) const;

  /// Point whose appearance p shows (identity outside alias regions).
  LocalPoint appearance_point(const LocalPoint& p) const;

  double corridor_distance(const LocalPoint& p) const;

  /// Unit direction that feature j drifts along away from the corridor.
  const std::vector<double>& offroad_direction(std::size_t j) const { return offroad_[j]; }

 private:
  struct Wave {
    double kx, ky, phase;
  };

  WorldConfig config_;
  GridMap map_;
  std::vector<Wave> waves_;                  // D x F
  std::vector<LocalPoint> patch_offsets_;    // N
  std::vector<std::vector<double>> offroad_; // N x D
};

SyntheticWorld build_world(const WorldConfig& config);

/// Local features of the view at `pose`. Satellite views are north-up and
/// noise-free; ground views start the feature ring at the vehicle heading and
/// add seeded noise. Throws OutOfBounds outside the map.
LocalFeatureSet synth_features(const SyntheticWorld& world, const Pose& pose,
                               std::uint64_t rng_seed, View view = View::ground);

/// Copy of the world lattice with every cell's satellite descriptor filled in.
GridMap populate_descriptors(const SyntheticWorld& world, const PipelineConfig& pipeline);

/// FNV-1a hash of the satellite features of every lattice cell.
std::uint64_t world_fingerprint(const SyntheticWorld& world);

}  // namespace cvgeo
