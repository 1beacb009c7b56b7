#pragma once

#include "cvgeo/rng.hpp"

namespace cvgeo {

/// Planar vehicle state in the map-local frame. theta is kept in (-pi, pi].
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

/// Odometry increment between two consecutive frames.
struct ControlAction {
  double delta_trans = 0.0;  // meters
  double delta_rot = 0.0;    // radians
};

/// Standard deviations of the odometry noise.
///
/// The effective sigma for a given control is
///   sigma_trans + trans_per_meter * |delta_trans|
///   sigma_rot   + rot_per_radian  * |delta_rot|
/// so the proportional terms can be zeroed to get a fixed per-step noise.
struct MotionNoise {
  double sigma_trans = 0.1;
  double sigma_rot = 0.5 * 3.14159265358979323846 / 180.0;
  double trans_per_meter = 0.02;
  double rot_per_radian = 0.01;

  static MotionNoise zero() { return {0.0, 0.0, 0.0, 0.0}; }

  double trans_sigma_for(const ControlAction& u) const;
  double rot_sigma_for(const ControlAction& u) const;
};

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// Draws noisy "true" increments around u and applies the odometry
/// transition: rotate first, then translate along the new heading.
Pose sample_motion(const Pose& prev, const ControlAction& u, const MotionNoise& noise,
                   SeededRng& rng);

/// Noise-free transition; same result as sample_motion with zero noise.
Pose apply_motion(const Pose& prev, const ControlAction& u);

/// Recovers the control that moves gt_prev to gt_curr: translation is the
/// Euclidean step length, rotation the wrapped heading change.
ControlAction simulate_odometry(const Pose& gt_prev, const Pose& gt_curr);

}  // namespace cvgeo
