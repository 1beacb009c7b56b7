#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "cvgeo/kernels.hpp"
#include "cvgeo/map_grid.hpp"
#include "cvgeo/measurement.hpp"
#include "cvgeo/motion.hpp"
#include "cvgeo/particle.hpp"
#include "cvgeo/rng.hpp"

namespace cvgeo {

/// Gaussian scatter of the initial particle cloud.
struct InitSpread {
  double sigma_xy = 0.0;     // meters, per axis
  double sigma_theta = 0.0;  // radians
};

struct FilterOptions {
  MeasurementMode mode = MeasurementMode::corner_sum;
  kernels::Exec exec = kernels::Exec::parallel;
  // A step whose largest weight is at or below this is degenerate: weights are
  // reset to uniform and the step is flagged.
  double degenerate_threshold = kDefaultProbabilityFloor;
  // Resample only when ESS < ess_fraction * M. 0 resamples every step.
  double ess_fraction = 0.0;
};

struct StepStatus {
  bool degenerate = false;
  bool resampled = false;
  double ess = 0.0;  // effective sample size of the normalized weights
};

ParticleSet init_particles(const Pose& init_pose, const InitSpread& spread, std::size_t m,
                           SeededRng& rng);

/// Positions (u + m) / M, m = 0..M-1, against the cumulative weights; returns
/// the chosen source index for every output slot. u must lie in [0, 1).
std::vector<std::size_t> systematic_indices(std::span<const double> weights, std::size_t m,
                                            double u);

/// Low-variance resampling with a single uniform draw. Output weights are 1/M.
/// Throws InvalidArgument if the weights do not have a positive finite sum.
ParticleSet resample_systematic(const ParticleSet& weighted, SeededRng& rng);
ParticleSet resample_systematic(const ParticleSet& weighted, double u);

/// Normalizes weights in place and returns the ESS. Sets the degenerate flag
/// and falls back to uniform weights when no weight exceeds the threshold.
StepStatus normalize_weights(ParticleSet& set, double degenerate_threshold);

/// Shared tail of every filter step: normalize, optionally resample.
StepStatus finish_step(ParticleSet& set, SeededRng& rng, const FilterOptions& options);

/// One predict / weight / resample cycle with caller-supplied models.
/// `propagate(std::span<Particle>)` moves the states; `weigh(std::span<Particle>)`
/// writes each particle's measurement likelihood into its weight.
template <class Propagate, class Weigh>
std::pair<ParticleSet, StepStatus> particle_filter_step(const ParticleSet& prev,
                                                        Propagate&& propagate, Weigh&& weigh,
                                                        SeededRng& rng,
                                                        const FilterOptions& options) {
  ParticleSet next = prev;
  next.step = prev.step + 1;
  propagate(std::span<Particle>(next.particles));
  std::vector<double> prior;
  if (!prev.uniform_weights) {
    prior.reserve(next.size());
    for (const Particle& p : next.particles) prior.push_back(p.weight);
  }
  weigh(std::span<Particle>(next.particles));
  // With uniform prior weights the likelihood replaces the weight outright;
  // otherwise (ESS-gated runs) it multiplies the carried weight.
  for (std::size_t i = 0; i < prior.size(); ++i) next.particles[i].weight *= prior[i];
  StepStatus status = finish_step(next, rng, options);
  return {std::move(next), status};
}

/// Motion-model prediction, measurement weighting and systematic resampling.
std::pair<ParticleSet, StepStatus> pf_step(const ParticleSet& prev, const ControlAction& u,
                                           const ProbabilityField& field,
                                           const MotionNoise& noise, SeededRng& rng,
                                           const FilterOptions& options = {});

struct PoseEstimate {
  Pose pose;
  bool heading_defined = true;
};

/// Weighted mean position and circular-mean heading. When the heading vectors
/// cancel, `fallback_heading` is reported and heading_defined is false.
PoseEstimate estimate_pose(const ParticleSet& set, double fallback_heading = 0.0);

/// Inputs of one localization frame: the ground descriptor of the current
/// image and the odometry poses of the previous and current frame.
struct FrameInputs {
  GlobalDescriptor ground_descriptor;
  Pose odom_prev;
  Pose odom_curr;
};

struct LocalizationContext {
  const GridMap* db_map = nullptr;  // lattice with a descriptor in every cell
  MotionNoise noise;
  FilterOptions filter;
  FieldOptions field;
  // False replaces the descriptor field by a uniform one (dead reckoning).
  bool use_measurement = true;
};

struct LocalizeResult {
  PoseEstimate estimate;
  ParticleSet set;
  StepStatus status;
  ProbabilityField field;
};

/// One frame: probability field of the ground descriptor, odometry control,
/// filter step and pose estimate.
LocalizeResult localize_step(const FrameInputs& frame, const ParticleSet& prev_set,
                             const LocalizationContext& ctx, SeededRng& rng,
                             double fallback_heading);

}  // namespace cvgeo
