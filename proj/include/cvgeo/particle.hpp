#pragma once

#include <cstddef>
#include <vector>

#include "cvgeo/motion.hpp"

namespace cvgeo {

/// Pose hypothesis with its importance weight.
struct Particle {
  Pose state;
  double weight = 0.0;
};

/// Sampled belief over the vehicle pose at time step `step`.
struct ParticleSet {
  std::vector<Particle> particles;
  std::size_t step = 0;
  // True right after resampling/initialization, when every weight is 1/M.
  bool uniform_weights = true;

  std::size_t size() const { return particles.size(); }
};

}  // namespace cvgeo
