#include "cvgeo/motion.hpp"

#include <cmath>
#include <numbers>

namespace cvgeo {

double MotionNoise::trans_sigma_for(const ControlAction& u) const {
  return sigma_trans + trans_per_meter * std::abs(u.delta_trans);
}

double MotionNoise::rot_sigma_for(const ControlAction& u) const {
  return sigma_rot + rot_per_radian * std::abs(u.delta_rot);
}

double wrap_angle(double a) {
  constexpr double kPi = std::numbers::pi;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  if (a > -kPi && a <= kPi) return a;
  double r = std::remainder(a, kTwoPi);  // [-pi, pi]
  if (r <= -kPi) r += kTwoPi;
  return r;
}

Pose apply_motion(const Pose& prev, const ControlAction& u) {
  const double heading = prev.theta + u.delta_rot;
  return {prev.x + u.delta_trans * std::cos(heading),
          prev.y + u.delta_trans * std::sin(heading), wrap_angle(heading)};
}

Pose sample_motion(const Pose& prev, const ControlAction& u, const MotionNoise& noise,
                   SeededRng& rng) {
  // Both draws are always consumed so the stream position does not depend on
  // whether the noise is zero.
  const double n_trans = rng.gaussian();
  const double n_rot = rng.gaussian();
  ControlAction truth;
  truth.delta_trans = u.delta_trans - noise.trans_sigma_for(u) * n_trans;
  truth.delta_rot = u.delta_rot - noise.rot_sigma_for(u) * n_rot;
  return apply_motion(prev, truth);
}

ControlAction simulate_odometry(const Pose& gt_prev, const Pose& gt_curr) {
  ControlAction u;
  u.delta_trans = std::hypot(gt_curr.x - gt_prev.x, gt_curr.y - gt_prev.y);
  u.delta_rot = wrap_angle(gt_curr.theta - gt_prev.theta);
  return u;
}

}  // namespace cvgeo
